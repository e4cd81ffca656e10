import itertools
from collections import Counter

import numpy as np
import pytest

from agora.errors import FlagRejected, JuryPoolTooSmall, PermissionDenied, VerdictRejected
from agora.kernel.instance import local_ref
from agora.runtime import dispatcher
from agora.systems.jury.jury import jury_select, jury_verdict
from agora.systems.jury.jury_types import JuryCase
from agora.utils.prng import SplitMix64
from tests.conftest import COMMUNITY

JURY = COMMUNITY + "install jury as mod\n  jury_size 3\n  verdict_window 2\n"


def user(inst, user_id):
    return local_ref(inst, "user", user_id)


def post(inst, resource_id="post1"):
    return local_ref(inst, "resource", resource_id)


def kinds(inst):
    return [e.kind for e in inst.event_log]


def volunteer(inst, *names):
    for name in names:
        dispatcher.invoke(inst, "mod", "volunteer", {"user": user(inst, name)}, user(inst, name))


def flag(inst, flagger="ann"):
    args = {"post": post(inst), "flagger": user(inst, flagger)}
    return dispatcher.invoke(inst, "mod", "flag", args, user(inst, flagger))["case"]


def verdict(inst, case, juror, choice, rules=("spam",)):
    args = {"case": case, "juror": user(inst, juror), "verdict": choice, "rules": list(rules)}
    dispatcher.invoke(inst, "mod", "verdict", args, user(inst, juror))


def case_of(inst, case_id):
    return JuryCase.from_value(inst.modules["mod"].state["case/" + case_id])


def test_select_never_seats_the_flagger():
    pool = ["a", "b", "c", "d"]
    for seed in range(50):
        jurors = jury_select(pool, 3, "b", SplitMix64(seed))
        assert sorted(jurors) == ["a", "c", "d"]
    with pytest.raises(JuryPoolTooSmall):
        jury_select(pool, 4, "a", SplitMix64(0))


def test_select_is_uniform():
    pool = ["a", "b", "c", "d", "e", "f"]
    rng = SplitMix64(2024)
    counts = Counter()
    trials = 3000
    for _ in range(trials):
        counts.update(jury_select(pool, 2, "f", rng))
    assert "f" not in counts
    expected = trials * 2 / 5
    for name in "abcde":
        assert abs(counts[name] - expected) < 0.1 * expected


@pytest.mark.parametrize(
    "verdicts, resolution",
    [
        ({"a": "remove", "b": "remove", "c": "remove"}, "removed"),
        ({"a": "remove", "b": "remove", "c": "object"}, "restored"),
        ({"a": "remove", "b": "remove"}, "restored"),
        ({}, "restored"),
    ],
)
def test_verdict_needs_unanimity(verdicts, resolution):
    case = JuryCase("c1", "p", "z", 0, jurors=["a", "b", "c"])
    case.verdicts = {j: {"verdict": v, "rules": ["spam"]} for j, v in verdicts.items()}
    assert jury_verdict(case) == resolution


def test_remove_must_cite_a_rule():
    verdicts = {"a": {"verdict": "remove", "rules": []}}
    case = JuryCase("c1", "p", "z", 0, jurors=["a"], verdicts=verdicts)
    with pytest.raises(VerdictRejected):
        jury_verdict(case)


def test_flag_hides_and_unanimous_jury_removes(load):
    inst = load(JURY)
    volunteer(inst, "bea", "cal", "dan")
    case = flag(inst)
    assert case == "c1"
    assert inst.resources["post1"].state["hidden"] is True
    seated = case_of(inst, case)
    assert sorted(seated.jurors) == ["bea", "cal", "dan"]
    assert seated.deadline == 2
    with pytest.raises(VerdictRejected):
        verdict(inst, case, "ann", "remove")
    with pytest.raises(VerdictRejected):
        verdict(inst, case, "bea", "remove", rules=())
    for juror in ("bea", "cal", "dan"):
        verdict(inst, case, juror, "remove")
    assert inst.resources["post1"].state["removed"] is True
    assert case_of(inst, case).status == "removed"
    with pytest.raises(FlagRejected):
        flag(inst, "bea")


def test_silence_past_deadline_restores(load):
    inst = load(JURY)
    volunteer(inst, "bea", "cal", "dan")
    case = flag(inst)
    verdict(inst, case, "bea", "remove")
    dispatcher.advance_clock(inst, 1)
    assert case_of(inst, case).status == "open"
    dispatcher.advance_clock(inst, 2)
    assert case_of(inst, case).status == "restored"
    assert inst.resources["post1"].state["hidden"] is False
    resolved = [e for e in inst.event_log if e.kind == "jury.resolved"][0]
    assert sorted(resolved.payload["missing"]) == ["cal", "dan"]


def test_shortfall_waits_for_volunteers(load):
    inst = load(JURY)
    volunteer(inst, "bea", "cal")
    case = flag(inst)
    assert "jury.shortfall" in kinds(inst)
    assert case_of(inst, case).jurors == []
    dispatcher.advance_clock(inst, 1)
    assert "jury.selected" not in kinds(inst)
    volunteer(inst, "dan")
    dispatcher.advance_clock(inst, 2)
    seated = case_of(inst, case)
    assert sorted(seated.jurors) == ["bea", "cal", "dan"]
    assert seated.deadline == 4


def test_one_open_case_per_post(load):
    inst = load(JURY)
    flag(inst)
    with pytest.raises(FlagRejected):
        flag(inst, "bea")


def test_denied_hide_leaves_no_case(load):
    inst = load(JURY + "restrict resource.write\n")
    volunteer(inst, "bea", "cal", "dan")
    before = dict(inst.modules["mod"].state)
    with pytest.raises(PermissionDenied):
        flag(inst)
    assert inst.modules["mod"].state == before
    assert "jury.flagged" not in kinds(inst)
    assert "hidden" not in inst.resources["post1"].state


MASK = 2**64


def splitmix_outputs(seed):
    """splitmix64 written out from its published constants."""
    state = seed % MASK
    while True:
        state = (state + 0x9E3779B97F4A7C15) % MASK
        z = state
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 % MASK
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB % MASK
        yield z ^ (z >> 31)


def reference_jury(pool, k, flagger, seed):
    outputs = splitmix_outputs(seed)
    deck = [u for u in pool if u != flagger]
    for i in range(k):
        bound = len(deck) - i
        floor = (MASK - bound) % bound
        r = next(outputs)
        while r < floor:
            r = next(outputs)
        j = i + r % bound
        deck[i], deck[j] = deck[j], deck[i]
    return deck[:k]


def test_reference_splitmix_vectors():
    outputs = splitmix_outputs(0)
    assert [next(outputs) for _ in range(3)] == [
        0xE220A8397B1DCDAF,
        0x6E789E6AA1B965F4,
        0x06C45D188009454F,
    ]


def test_select_matches_the_reference_shuffle():
    rng = np.random.default_rng(5)
    for _ in range(500):
        size = int(rng.integers(1, 12))
        pool = [f"u{i}" for i in range(size)]
        flagger = pool[int(rng.integers(size))] if rng.random() < 0.5 else "outsider"
        k = int(rng.integers(0, len([u for u in pool if u != flagger]) + 1))
        seed = int(rng.integers(0, 2**63)) * 2 + int(rng.integers(2))
        assert jury_select(pool, k, flagger, SplitMix64(seed)) == reference_jury(
            pool, k, flagger, seed
        )


def test_select_is_uniform_over_many_draws():
    pool = [f"u{i}" for i in range(10)]
    rng = SplitMix64(99)
    counts = Counter()
    draws = 100_000
    for _ in range(draws):
        counts.update(jury_select(pool, 3, "outsider", rng))
    expected = draws * 3 / 10
    for name in pool:
        assert abs(counts[name] - expected) <= 0.02 * expected, (name, counts[name])


@pytest.mark.parametrize("k", range(1, 7))
def test_verdict_over_every_pattern(k):
    jurors = [f"j{i}" for i in range(k)]
    for pattern in itertools.product(("remove", "object"), repeat=k):
        verdicts = {j: {"verdict": v, "rules": ["spam"]} for j, v in zip(jurors, pattern)}
        case = JuryCase("c1", "p", "z", 0, jurors=jurors, verdicts=verdicts)
        unanimous = all(v == "remove" for v in pattern)
        assert jury_verdict(case) == ("removed" if unanimous else "restored"), pattern
