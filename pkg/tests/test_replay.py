import pytest

from agora.errors import CorruptLog
from agora.kernel.instance import state_digest, transport_digest
from agora.kernel.replay import export_log, read_log, read_log_file, replay
from agora.runner import run_scenario

SCENARIOS = ["jury_moderation", "oss_election", "contract_restitution"]


@pytest.mark.parametrize("name", SCENARIOS)
def test_replayed_logs_reach_the_live_digest(repository, scenario_dir, tmp_path, name):
    script = scenario_dir / f"{name}.scenario"
    result, runner = run_scenario(script, repository, log=tmp_path / "run.log")
    assert result.log_paths
    for path in result.log_paths:
        replayed = replay(read_log_file(path), repository)
        instance_id = replayed.instance.instance_id
        assert replayed.digest == result.digests[instance_id]
        live = runner.instances[instance_id]
        assert replayed.events == len(live.event_log)
        assert replayed.transport_digest == transport_digest(live)


def test_replay_needs_no_repository_for_plain_state(town):
    replayed = replay(read_log(export_log(town.event_log)))
    assert replayed.digest == state_digest(town)
    assert sorted(replayed.instance.orgs) == ["/", "/council"]


def test_missing_event_names_the_expected_seq(town):
    lines = export_log(town.event_log).splitlines()
    del lines[3]
    with pytest.raises(CorruptLog) as info:
        read_log("\n".join(lines))
    assert info.value.seq == 3


def test_unreadable_line(town):
    text = export_log(town.event_log[:2]) + "{not json\n"
    with pytest.raises(CorruptLog) as info:
        read_log(text)
    assert info.value.seq == 2


def test_log_must_open_with_instance_creation(town):
    with pytest.raises(CorruptLog):
        replay([])
    events = read_log(export_log(town.event_log))
    with pytest.raises(CorruptLog):
        replay([events[1]._replace(seq=0)])
