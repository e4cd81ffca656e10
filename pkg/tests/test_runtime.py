import pytest

from agora.base_types import SYSTEM_ACTOR
from agora.errors import CompositionCycle, PolicyBoundsViolation, PortTypeError, UnknownModule
from agora.kernel.instance import local_ref, state_digest
from agora.kernel.replay import export_log, read_log, replay
from agora.monitors.monitor_types import MonitorSpec
from agora.monitors.query import monitor_query
from agora.runtime import dispatcher
from agora.runtime.dispatcher import WireSpec
from agora.runtime.runtime_types import PolicyChange
from tests.conftest import COMMUNITY

PARTS = """\
instance town seed 5
user ann
members user:ann
install referendum as vote
  duration 4
install comparator as cmp
  threshold 3
install enactor as apply
  target_module vote
  target_policy duration
  outcomes {pass=9}
"""

DECISION_WIRE = WireSpec("cmp", "decision", "apply", "decision")


@pytest.fixture
def town(load):
    return load(PARTS)


def charter(town, wiring=(DECISION_WIRE,), parts=("cmp", "apply")):
    return dispatcher.compose(town, "/", "charter", "1.0", parts, wiring, module_id="charter")


def test_composite_exposes_unwired_ports(town):
    module = charter(town)
    assert [p.name for p in module.manifest.input_ports] == ["cmp.value"]
    assert [p.name for p in module.manifest.output_ports] == ["apply.change"]
    assert [op.name for op in module.manifest.ops] == ["cmp.compare"]
    assert town.modules["cmp"].composite == "charter"
    assert town.modules["apply"].composite == "charter"


def test_composite_runs_parts_along_the_wiring(town):
    charter(town)
    outputs = dispatcher.invoke(town, "charter", "cmp.compare", {"cmp.value": 5}, SYSTEM_ACTOR)
    assert outputs["apply.change"].new_value == 9
    assert town.modules["vote"].policy_values["duration"] == 9


def test_composite_below_threshold_leaves_policy(town):
    charter(town)
    outputs = dispatcher.invoke(town, "charter", "cmp.compare", {"cmp.value": 1}, SYSTEM_ACTOR)
    assert outputs == {}
    assert town.modules["vote"].policy_values["duration"] == 4


def test_bad_wiring_records_nothing(town):
    before = len(town.event_log)
    with pytest.raises(PortTypeError):
        charter(town, wiring=(WireSpec("apply", "change", "cmp", "value"),))
    with pytest.raises(UnknownModule):
        charter(town, wiring=(WireSpec("cmp", "decision", "vote", "decision"),))
    assert len(town.event_log) == before
    assert "charter" not in town.modules


def test_composite_survives_replay(town, repository):
    charter(town)
    dispatcher.invoke(town, "charter", "cmp.compare", {"cmp.value": 5}, SYSTEM_ACTOR)
    replayed = replay(read_log(export_log(town.event_log)), repository)
    assert replayed.digest == state_digest(town)
    assert replayed.instance.modules["charter"].parts == ["cmp", "apply"]


GUILD = (
    COMMUNITY
    + "org a\norg b\norg c\n"
    + "install monitor as mon\n"
    + "  measure members\n"
    + "  targets [/council, /a, /b, /c]\n"
    + "  aggregation ratio\n"
    + "  output_type fraction\n"
    + "install comparator as low\n"
    + "  threshold 0.5\n"
    + '  op "<"\n'
    + "install enactor as act\n"
    + "  target_module brk\n"
    + "  target_policy breaks_allowed\n"
    + "  outcomes {pass=false}\n"
    + "install breaks as brk\n"
)

GUARD_WIRING = (
    WireSpec("mon", "value", "low", "value"),
    WireSpec("low", "decision", "act", "decision"),
)


@pytest.fixture
def guild(load):
    return load(GUILD)


def take_break(inst, name):
    worker = local_ref(inst, "user", name)
    return dispatcher.invoke(inst, "brk", "take_break", {"worker": worker}, worker)


def change_policy(inst, module_id, policy, value):
    return dispatcher.apply_policy_change(
        inst, PolicyChange({"module_id": module_id, "policy": policy}, value, None)
    )


def test_breaks_follow_policy(guild):
    assert take_break(guild, "ann") == {"allowed": True}
    assert guild.users["ann"].attributes["on_break_since"] == 0
    change_policy(guild, "brk", "breaks_allowed", False)
    assert take_break(guild, "bea") == {"allowed": False}
    assert "on_break_since" not in guild.users["bea"].attributes
    requested = [e.payload for e in guild.event_log if e.kind == "breaks.requested"]
    assert requested == [
        {"user_id": "ann", "allowed": True},
        {"user_id": "bea", "allowed": False},
    ]


def test_monitor_composite_switches_breaks_off(guild):
    spec = MonitorSpec.from_value(dict(guild.modules["mon"].policy_values))
    standalone = monitor_query(guild, spec)
    assert standalone.value == 0.25
    dispatcher.compose(
        guild, "/", "break_guard", "1.0", ("mon", "low", "act"), GUARD_WIRING, module_id="guard"
    )
    outputs = dispatcher.invoke(guild, "guard", "mon.evaluate", {})
    assert outputs["mon.report"]["value"] == standalone.value
    assert outputs["mon.report"]["inputs_digest"] == standalone.inputs_digest
    assert outputs["act.change"].new_value is False
    assert guild.modules["brk"].policy_values["breaks_allowed"] is False
    assert take_break(guild, "ann") == {"allowed": False}


def test_wiring_cycles_are_rejected(load):
    inst = load(
        COMMUNITY
        + "install contract as c1\ninstall contract as c2\n"
        + "wire c1.status -> c2.evidence\n"
    )
    before = len(inst.event_log)
    with pytest.raises(CompositionCycle) as info:
        dispatcher.wire(inst, "c2", "status", "c1", "evidence")
    assert info.value.path == ["c2", "c1", "c2"]
    with pytest.raises(CompositionCycle):
        dispatcher.wire(inst, "c1", "status", "c1", "evidence")
    with pytest.raises(CompositionCycle):
        loop = (WireSpec("c2", "status", "c1", "evidence"),)
        dispatcher.compose(inst, "/", "loop", "1.0", ("c1", "c2"), loop)
    assert len(inst.event_log) == before


@pytest.mark.parametrize(
    "policy, value",
    [("duration", 0), ("duration", "long"), ("threshold", 1.5), ("nonexistent", 1)],
)
def test_policy_change_out_of_bounds(town, policy, value):
    with pytest.raises(PolicyBoundsViolation):
        change_policy(town, "vote", policy, value)
    assert town.modules["vote"].policy_values["duration"] == 4
    assert not [e for e in town.event_log if e.kind == "policy.changed"]
