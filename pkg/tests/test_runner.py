from pathlib import Path

import pytest
from testfixtures import LogCapture

from agora.runner import RunStatus, compare_values, links_from_value, log_paths, run_scenario

GOLDEN = ["jury_moderation", "oss_election", "contract_restitution"]

TOWN = """\
instance town seed 1
user ann
user bea
members user:ann user:bea
grant members:/ module.invoke:*
install petition as pet
  signature_goal 2
"""


def write(tmp_path: Path, script: str, govspec: str = TOWN) -> Path:
    (tmp_path / "town.govspec").write_text(govspec, encoding="utf-8")
    path = tmp_path / "test.scenario"
    path.write_text("scenario test\ngovspec town.govspec\n" + script, encoding="utf-8")
    return path


@pytest.mark.parametrize("name", GOLDEN)
def test_golden_scenarios_pass(repository, scenario_dir, name):
    result, _ = run_scenario(scenario_dir / f"{name}.scenario", repository)
    failures = [o.render() for o in result.outcomes if not o.passed]
    assert result.status == RunStatus.OK, failures
    assert result.exit_code == 0
    assert result.outcomes


@pytest.mark.parametrize("name", GOLDEN)
def test_runs_are_deterministic(repository, scenario_dir, name):
    first, _ = run_scenario(scenario_dir / f"{name}.scenario", repository)
    second, _ = run_scenario(scenario_dir / f"{name}.scenario", repository)
    assert first.digests == second.digests


def test_seed_override_keeps_the_jury_scenario_passing(repository, scenario_dir):
    result, _ = run_scenario(scenario_dir / "jury_moderation.scenario", repository, seed=99)
    assert result.status == RunStatus.OK, [o.render() for o in result.outcomes if not o.passed]


def test_petition_script(repository, tmp_path):
    path = write(
        tmp_path,
        'at 1 ann invoke pet create as made title="Benches"\n'
        "at 2 ann invoke pet sign petition=p1 signer=ann\n"
        "at 2 bea invoke pet sign petition=p1 signer=bea\n"
        "at 3 bea invoke pet sign petition=p1 signer=ann => VoteRejected\n"
        "at 3 ann invoke pet query as count petition=p1\n"
        "expect 1 report:made.petition == p1\n"
        "expect 3 report:count.count == 2\n"
        "expect 3 events:petition.goal_reached == 1\n"
        "expect 3 members:/ contains bea\n",
    )
    result, runner = run_scenario(path, repository)
    assert result.status == RunStatus.OK, [o.render() for o in result.outcomes]
    assert runner.instances["town"].clock == 3


def test_failed_expectation_is_reported_and_logged(repository, tmp_path):
    path = write(tmp_path, "expect 0 members:/ contains carl\nexpect 0 installed:/ contains pet\n")
    with LogCapture("agora.runner") as capture:
        result, _ = run_scenario(path, repository)
    assert result.status == RunStatus.ASSERTION_FAILED
    assert result.exit_code == 1
    assert result.first_failure.expression == "members:/ contains 'carl'"
    assert [o.passed for o in result.outcomes] == [False, True]
    assert any("FAIL" in r.getMessage() for r in capture.records)


def test_unexpected_step_error_fails_but_run_goes_on(repository, tmp_path):
    path = write(
        tmp_path,
        "at 1 ann invoke pet vanish\n"
        'at 2 ann invoke pet create title="x"\n'
        "expect 2 events:petition.created == 1\n",
    )
    result, _ = run_scenario(path, repository)
    assert result.status == RunStatus.ASSERTION_FAILED
    first, second = result.outcomes
    assert not first.passed and first.observed == "UnknownOp"
    assert second.passed


def test_expected_error_that_does_not_happen(repository, tmp_path):
    path = write(tmp_path, 'at 1 ann invoke pet create title="x" => VoteRejected\n')
    result, _ = run_scenario(path, repository)
    assert result.outcomes[0].observed == "ok"
    assert not result.outcomes[0].passed


def test_short_max_tick_leaves_expectations_unreached(repository, tmp_path):
    path = write(tmp_path, "expect 5 events:petition.created == 0\n")
    result, _ = run_scenario(path, repository, max_tick=3)
    assert result.outcomes[0].observed == "tick not reached"


@pytest.mark.parametrize(
    "script, govspec",
    [
        ("at 1 ann dance\n", TOWN),
        ("", "instance broken\nfrobnicate\n"),
        ("expect 1 events:x@elsewhere == 0\n", TOWN),
    ],
)
def test_load_errors(repository, tmp_path, script, govspec):
    result, runner = run_scenario(write(tmp_path, script, govspec), repository)
    assert result.status == RunStatus.LOAD_ERROR
    assert result.exit_code == 2
    assert runner is None and result.message


def test_missing_files_are_load_errors(repository, tmp_path):
    result, _ = run_scenario(tmp_path / "nope.scenario", repository)
    assert result.status == RunStatus.LOAD_ERROR
    path = tmp_path / "lonely.scenario"
    path.write_text("scenario lonely\ngovspec missing.govspec\n", encoding="utf-8")
    assert run_scenario(path, repository)[0].status == RunStatus.LOAD_ERROR


def test_trace_listener_sees_every_event(repository, tmp_path, mocker):
    listener = mocker.Mock()
    path = write(tmp_path, 'at 1 ann invoke pet create title="x"\n')
    _, runner = run_scenario(path, repository, listener=listener)
    assert listener.call_count == len(runner.instances["town"].event_log)
    instance_id, event = listener.call_args_list[0].args
    assert instance_id == "town" and event.kind == "instance.created"


def test_log_paths(tmp_path):
    assert log_paths(tmp_path / "run.log", ["a"]) == {"a": tmp_path / "run.log"}
    assert log_paths(tmp_path / "run.log", ["a", "b"]) == {
        "a": tmp_path / "run.a.log",
        "b": tmp_path / "run.b.log",
    }


def test_links_from_value():
    (link,) = links_from_value([{"a": "x", "b": "y", "delay_ticks": 3, "duplicate": True}])
    assert (link.a, link.b, link.delay_ticks) == ("x", "y", 3)
    assert link.duplicate and not link.drop


@pytest.mark.parametrize(
    "observed, op, expected, result",
    [
        (1, "==", 1, True),
        ("a", "!=", "b", True),
        ([1, 2], "contains", 2, True),
        (["a"], "lacks", "a", False),
        (None, "<", 1, False),
        (None, "contains", 1, False),
        ("a", "<", 1, False),
        (0.8, ">=", 0.5, True),
    ],
)
def test_compare_values(observed, op, expected, result):
    assert compare_values(observed, op, expected) is result


GHOST_TOWN = """\
instance town seed 1
user ann
user bea
members user:ann user:bea
grant members:/ module.invoke:*
install referendum as vote
  duration 2
install enactor as act
wire vote.decision -> act.decision
"""


def test_failing_tick_hook_is_a_failed_outcome(repository, tmp_path):
    path = write(
        tmp_path,
        'at 1 ann invoke vote propose question="Haunt" '
        "effect={op=set_policy, module=ghost, policy=x, value=1}\n"
        "at 2 ann invoke vote vote ballot=q1 voter=ann choice=yes\n"
        "at 2 bea invoke vote vote ballot=q1 voter=bea choice=yes\n"
        "expect 4 events:ballot.closed == 1\n"
        "expect 4 events:hook.failed == 1\n",
        GHOST_TOWN,
    )
    with LogCapture("agora.runtime.dispatcher") as capture:
        result, runner = run_scenario(path, repository, log=tmp_path / "run.log")
    assert result.status == RunStatus.ASSERTION_FAILED
    failed = [o for o in result.outcomes if not o.passed]
    assert [(o.tick, o.observed) for o in failed] == [(3, "UnknownModule")]
    assert failed[0].expression == "town vote.on_tick => ok"
    assert all(o.passed for o in result.outcomes if o.expression.startswith("events:"))
    assert (tmp_path / "run.log").exists()
    assert runner.instances["town"].clock == 4
    assert any("vote.on_tick failed" in r.getMessage() for r in capture.records)
