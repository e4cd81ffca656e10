import pytest

from agora.lang import diagnostics as codes
from agora.lang.scenario import parse_scenario

HEADER = "scenario demo\ngovspec a.govspec\n"


def test_full_script():
    result = parse_scenario(
        HEADER
        + "govspec b.govspec\n"
        + "seed 3\n"
        + "max_tick 9\n"
        + "link b a delay 2 duplicate\n"
        + "at 1 ann invoke vote propose as q1 question=\"Adopt?\"\n"
        + "at 2 bob@b invoke vote vote ballot=q1 choice=yes => VoteRejected\n"
        + "expect 3 state:vote.status@b == open\n"
    )
    assert result.ok, [d.render() for d in result.diagnostics]
    script = result.doc
    assert script.name == "demo"
    assert script.govspecs == ("a.govspec", "b.govspec")
    assert script.seed == 3
    assert script.max_tick == 9
    link = script.links[0]
    assert (link.a, link.b, link.delay_ticks) == ("a", "b", 2)
    assert link.duplicate and not link.drop

    first, second = script.steps
    assert first.positional == ("vote", "propose")
    assert first.alias == "q1"
    assert first.args == {"question": "Adopt?"}
    assert first.instance is None
    assert second.instance == "b"
    assert second.expect_error == "VoteRejected"

    (expectation,) = script.expectations
    assert expectation.subject == "state:vote.status"
    assert expectation.instance == "b"
    assert expectation.value == "open"


def test_max_tick_defaults_to_last_tick():
    script = parse_scenario(HEADER + "at 4 ann stats participation\nexpect 6 events:x == 0\n").doc
    assert script.max_tick == 6
    assert script.seed is None


def test_expectation_values_are_literals():
    script = parse_scenario(HEADER + "expect 1 report:r.rows contains {member=ann, votes=2}\n").doc
    assert script.expectations[0].value == {"member": "ann", "votes": 2}


@pytest.mark.parametrize(
    "body, code",
    [
        ("at 5 ann stats participation\nat 4 ann stats participation\n", codes.NON_MONOTONIC_TICK),
        ("at 1 ann dance now\n", codes.UNKNOWN_VERB),
        ("expect 1 weather:today == sunny\n", codes.BAD_EXPECTATION),
        ("expect 1 state:x.y ~= 1\n", codes.BAD_EXPECTATION),
        ("at 1 ann stats participation => NotAnError\n", codes.UNKNOWN_ERROR_NAME),
        ("at 1 ann invoke vote\n", codes.MISSING_ARGUMENT),
        ("at x ann stats participation\n", codes.BAD_VALUE),
        ("  at 1 ann stats participation\n", codes.UNEXPECTED_NESTING),
        ("link a b sideways\n", codes.EXTRA_ARGUMENT),
        ("link a b\nlink b a\n", codes.DUPLICATE_DECLARATION),
    ],
)
def test_bad_lines(body, code):
    result = parse_scenario(HEADER + body)
    assert result.doc is None
    assert code in [d.code for d in result.diagnostics]


def test_header_after_steps_is_rejected():
    result = parse_scenario(HEADER + "at 1 ann stats participation\nseed 4\n")
    assert codes.BAD_SCENARIO_HEADER in [d.code for d in result.diagnostics]


def test_missing_name_and_govspec():
    codes_seen = [d.code for d in parse_scenario("at 1 ann stats participation\n").diagnostics]
    assert codes_seen.count(codes.BAD_SCENARIO_HEADER) == 2


def test_steps_past_max_tick():
    result = parse_scenario(HEADER + "max_tick 2\nat 3 ann stats participation\n")
    assert not result.ok
