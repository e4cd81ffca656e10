import pytest

from agora.errors import JuryPoolTooSmall, NotClosed, TermNotExpired, UnknownOrg, VoteRejected
from agora.kernel.instance import local_ref
from agora.runtime import dispatcher
from agora.systems.election.election import election_cycle
from agora.systems.election.election_types import TermedOffice
from agora.systems.sortition import sortition_draw
from agora.systems.staking import valid_holders
from agora.systems.voting.ballots import (
    cast_vote,
    count_votes,
    open_ballot,
    referendum_tally,
    tally_passes,
)
from agora.systems.voting.rank import promote
from agora.systems.voting.voting_types import Tally
from agora.utils.prng import SplitMix64
from tests.conftest import COMMUNITY


def user(inst, user_id):
    return local_ref(inst, "user", user_id)


def events_of(inst, kind):
    return [e for e in inst.event_log if e.kind == kind]


def vote(inst, module_id, name, choice="yes", **args):
    voter = user(inst, name)
    return dispatcher.invoke(
        inst, module_id, "vote", {"voter": voter, "choice": choice, **args}, voter
    )


@pytest.mark.parametrize(
    "tally, threshold, quorum, passed",
    [
        (Tally(4, 3, 1, 0, 4), 0.5, 0.0, True),
        (Tally(4, 2, 2, 0, 4), 0.5, 0.0, False),  # strict threshold
        (Tally(4, 1, 0, 3, 4), 0.5, 0.0, True),  # abstentions do not count against
        (Tally(4, 0, 0, 4, 4), 0.0, 0.0, False),  # nobody took a side
        (Tally(10, 2, 0, 0, 2), 0.5, 0.3, False),  # short of quorum
        (Tally(10, 2, 0, 1, 3), 0.5, 0.3, True),  # abstention completes quorum
        (Tally(0, 0, 0, 0, 0), 0.5, 0.0, False),
    ],
)
def test_tally_passes(tally, threshold, quorum, passed):
    assert tally_passes(tally, threshold, quorum) is passed


def test_cast_vote_rules():
    ballot = open_ballot("q1", ["a", "b", "a"], at=1, duration=2, threshold=0.5, quorum=0.0)
    assert ballot.eligible == ["a", "b"]
    cast_vote(ballot, "a", "no", at=1)
    cast_vote(ballot, "a", "yes", at=2)
    assert ballot.votes == {"a": "yes"}
    with pytest.raises(VoteRejected):
        cast_vote(ballot, "c", "yes", at=2)
    with pytest.raises(VoteRejected):
        cast_vote(ballot, "b", "maybe", at=2)
    with pytest.raises(VoteRejected):
        cast_vote(ballot, "b", "yes", at=3)
    with pytest.raises(NotClosed):
        referendum_tally(ballot, at=2)
    decision = referendum_tally(ballot, at=3)
    assert decision.passed
    assert decision.tally["yes"] == 1
    assert count_votes(ballot).participants == 1


def test_referendum_effect_is_enacted_at_close(load):
    inst = load(
        COMMUNITY
        + "install referendum as vote\n  duration 2\n"
        + "install enactor as apply\n"
        + "wire vote.decision -> apply.decision\n"
    )
    dispatcher.advance_clock(inst, 1)
    ann = user(inst, "ann")
    effect = {"op": "set_resource", "resource": "post1", "key": "pinned", "value": True}
    out = dispatcher.invoke(inst, "vote", "propose", {"question": "Pin it?", "effect": effect}, ann)
    assert out == {"ballot": "q1"}
    for name in ("ann", "bea", "cal"):
        vote(inst, "vote", name, ballot="q1")
    with pytest.raises(VoteRejected):
        args = {"ballot": "q1", "voter": ann, "choice": "no"}
        dispatcher.invoke(inst, "vote", "vote", args, user(inst, "dan"))
    dispatcher.advance_clock(inst, 2)
    assert "pinned" not in inst.resources["post1"].state
    dispatcher.advance_clock(inst, 3)
    assert inst.resources["post1"].state["pinned"] is True
    (closed,) = events_of(inst, "ballot.closed")
    assert closed.payload["passed"] is True
    write = events_of(inst, "resource.state_changed")[-1]
    assert write.caused_by is not None


def test_failed_referendum_is_skipped(load):
    inst = load(
        COMMUNITY
        + "install referendum as vote\n  duration 1\n"
        + "install enactor as apply\n"
        + "wire vote.decision -> apply.decision\n"
    )
    effect = {"op": "set_resource", "resource": "post1", "key": "pinned", "value": True}
    dispatcher.invoke(inst, "vote", "propose", {"question": "Pin it?", "effect": effect})
    dispatcher.advance_clock(inst, 1)
    assert "pinned" not in inst.resources["post1"].state
    assert events_of(inst, "enactor.skipped")


def test_petition_reaches_goal_once(load):
    inst = load(COMMUNITY + "install petition as pet\n  signature_goal 2\n")
    out = dispatcher.invoke(inst, "pet", "create", {"title": "More benches"}, user(inst, "ann"))
    petition = out["petition"]

    def sign(name):
        signer = user(inst, name)
        args = {"petition": petition, "signer": signer}
        return dispatcher.invoke(inst, "pet", "sign", args, signer)

    assert sign("ann") == {}
    assert sign("ann") == {}
    decision = sign("bea")["decision"]
    assert decision.passed and decision.tally == {"signatures": 2, "goal": 2}
    assert "decision" not in sign("cal")
    assert len(events_of(inst, "petition.goal_reached")) == 1
    assert dispatcher.invoke(inst, "pet", "query", {"petition": petition}) == {"count": 3}


def test_election_tie_leaves_office_vacant():
    ballots = {}
    for candidate in ("x", "y"):
        ballot = open_ballot(f"e1/{candidate}", ["a", "b", "c", "d"], 0, 5, 0.5, 0.0)
        for voter in ("a", "b", "c"):
            cast_vote(ballot, voter, "yes", 1)
        ballots[candidate] = ballot
    outcome = election_cycle(TermedOffice("seat"), ballots, at=5)
    assert outcome.winner is None
    assert outcome.tied == ["x", "y"]
    assert outcome.support == {"x": 0.75, "y": 0.75}
    assert outcome.office.holder is None


def test_election_threshold_is_strict_and_term_enforced():
    ballot = open_ballot("e1/x", ["a", "b"], 0, 1, 0.5, 0.0)
    cast_vote(ballot, "a", "yes", 0)
    outcome = election_cycle(TermedOffice("seat"), {"x": ballot}, at=1)
    assert outcome.winner is None and outcome.tied == []
    held = TermedOffice("seat", holder="x", term_start=0, term_length=10)
    with pytest.raises(TermNotExpired):
        election_cycle(held, {"x": ballot}, at=9)


def test_election_reballots_a_tie(load):
    inst = load(COMMUNITY + "install election as mayor\n  duration 2\n  seat_org /council\n")
    for name in ("cal", "dan"):
        candidate = user(inst, name)
        dispatcher.invoke(inst, "mayor", "nominate", {"candidate": candidate}, candidate)
    assert dispatcher.invoke(inst, "mayor", "open", {}) == {"election": "e1"}
    for voter in ("ann", "bea", "cal"):
        for candidate in ("cal", "dan"):
            vote(inst, "mayor", voter, candidate=user(inst, candidate))
    dispatcher.advance_clock(inst, 2)
    (reballot,) = events_of(inst, "election.reballot")
    assert reballot.payload["tied"] == ["cal", "dan"]
    state = inst.modules["mayor"].state["election"]
    assert state["election_id"] == "e2" and state["status"] == "open"

    for voter in ("ann", "bea", "cal"):
        vote(inst, "mayor", voter, candidate=user(inst, "dan"))
    dispatcher.advance_clock(inst, 4)
    (seated,) = events_of(inst, "election.seated")
    assert seated.payload["holder"] == "dan"
    assert seated.payload["support"] == 0.75
    assert "user:dan" in inst.orgs["/council"].members


def test_promote_counts_only_high_rank_votes():
    ranks = {"a": 3, "b": 3, "c": 1}
    ballot = open_ballot("q1", ["a", "b", "c"], 0, 1, 0.5, 0.0)
    cast_vote(ballot, "a", "yes", 0)
    cast_vote(ballot, "b", "no", 0)
    cast_vote(ballot, "c", "yes", 0)
    assert promote(1, ranks, 3, ballot, at=1) == 1
    cast_vote(ballot, "b", "yes", 0)
    assert promote(1, ranks, 3, ballot, at=1) == 2


def test_rank_module_promotes(load):
    text = COMMUNITY.replace("user ann\n", "user ann rank=3\n")
    text = text.replace("user bea\n", "user bea rank=3\n")
    inst = load(text + "install rank as ranks\n  duration 1\n")
    dispatcher.invoke(inst, "ranks", "propose", {"candidate": user(inst, "cal")}, user(inst, "ann"))
    with pytest.raises(VoteRejected):
        vote(inst, "ranks", "dan", ballot="q1")
    for name in ("ann", "bea"):
        vote(inst, "ranks", name, ballot="q1")
    dispatcher.advance_clock(inst, 1)
    assert inst.users["cal"].attributes["rank"] == 1
    assert events_of(inst, "rank.promoted")[0].payload["rank"] == 1


def test_sortition_draw():
    pool = ["a", "b", "c", "d", "e"]
    first = sortition_draw(pool, 3, SplitMix64(99))
    assert first == sortition_draw(pool, 3, SplitMix64(99))
    assert len(set(first)) == 3 and set(first) <= set(pool)
    with pytest.raises(JuryPoolTooSmall):
        sortition_draw(pool, 6, SplitMix64(99))


def test_sortition_seats_panel(load):
    text = COMMUNITY.replace("org council\n  members user:ann user:bea\n", "org panel\n")
    inst = load(text + "install sortition as lot\n  panel_size 2\n  panel_org /panel\n")
    for name in ("ann", "bea", "cal"):
        dispatcher.invoke(inst, "lot", "volunteer", {"user": user(inst, name)}, user(inst, name))
    panel = dispatcher.invoke(inst, "lot", "draw", {})["panel"]
    assert len(panel) == 2
    assert {m.id for m in inst.orgs["/panel"].members.values()} == set(panel)


def test_token_window(load):
    inst = load(COMMUNITY + "install staking as contrib\n  validity 10\n")
    dispatcher.invoke(inst, "contrib", "record_contribution", {"contributor": user(inst, "ann")})
    dispatcher.advance_clock(inst, 5)
    dispatcher.invoke(inst, "contrib", "record_contribution", {"contributor": user(inst, "bea")})
    assert valid_holders(inst, "contrib", 9) == ["ann", "bea"]
    assert valid_holders(inst, "contrib", 10) == ["bea"]
    assert valid_holders(inst, "contrib", 15) == []


def test_unknown_seat_org_leaves_the_election_open(load):
    inst = load(COMMUNITY + "install election as mayor\n  duration 2\n  seat_org /nowhere\n")
    candidate = user(inst, "cal")
    dispatcher.invoke(inst, "mayor", "nominate", {"candidate": candidate}, candidate)
    dispatcher.invoke(inst, "mayor", "open", {})
    for voter in ("ann", "bea", "cal"):
        vote(inst, "mayor", voter, candidate=candidate)
    before = dict(inst.modules["mayor"].state)
    with pytest.raises(UnknownOrg):
        dispatcher.invoke(inst, "mayor", "close", {})
    assert inst.modules["mayor"].state == before
    assert inst.modules["mayor"].state["election"]["status"] == "open"
    assert events_of(inst, "election.closed") == []
    assert events_of(inst, "election.seated") == []
