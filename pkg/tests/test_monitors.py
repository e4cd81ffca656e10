from collections import Counter

import pytest

from agora.base_types import SYSTEM_ACTOR
from agora.errors import PermissionDenied, SpecError, UnknownOrg
from agora.kernel.instance import local_ref, set_resource_state, state_digest
from agora.monitors.monitor_types import MonitorSpec
from agora.monitors.query import monitor_query, parse_predicate
from agora.monitors.stats import participation_stats
from agora.runtime import dispatcher
from tests.conftest import COMMUNITY


def spec(**kwargs):
    value = {"measure": "members", "targets": ["/", "/council"], "aggregation": "count"}
    value.update(kwargs)
    return MonitorSpec.from_value(value)


@pytest.mark.parametrize(
    "kwargs, expected",
    [
        # / holds four users and a post, /council two users.
        ({"predicate": ">=7"}, True),
        ({"predicate": ">7"}, False),
        ({"aggregation": "mean", "predicate": ">3"}, True),
        ({"aggregation": "ratio", "predicate": ">=3"}, 0.5),
        ({"aggregation": "percentile_rank", "reference": "/council"}, 0.25),
        ({"aggregation": "percentile_rank", "reference": "/"}, 0.75),
        ({"targets": ["/*"], "predicate": "==2"}, True),
        ({"targets": ["/**"], "aggregation": "ratio", "predicate": "<3"}, 0.5),
    ],
)
def test_aggregations(town, kwargs, expected):
    assert monitor_query(town, spec(**kwargs)).value == expected


def test_list_reports_every_org(town):
    rows = monitor_query(town, spec(aggregation="list")).value
    assert [r["org"] for r in rows] == ["/", "/council"]
    assert rows[1]["value"] == 2.0
    assert set(rows[1]["entries"]) == {"user:ann", "user:bea"}


def test_queries_leave_the_digest_alone(town):
    before = state_digest(town)
    report = monitor_query(town, spec(predicate=">0"))
    participation_stats(town, "/")
    assert state_digest(town) == before
    assert town.event_log[-1].kind == "monitor.queried"
    assert report.inputs_digest == monitor_query(town, spec(predicate=">0")).inputs_digest


def test_resource_measure_and_window(town):
    resource_spec = spec(measure="resource:likes", targets=["/"], aggregation="list")
    assert monitor_query(town, resource_spec).value[0]["entries"] == {}
    dispatcher.advance_clock(town, 3)
    set_resource_state(town, "post1", "likes", 4, SYSTEM_ACTOR)
    assert monitor_query(town, resource_spec).value[0]["value"] == 4.0

    windowed = resource_spec._replace(window=2)
    assert monitor_query(town, windowed).value[0]["value"] == 1.0
    dispatcher.advance_clock(town, 5)
    assert monitor_query(town, windowed).value[0]["value"] == 0.0


@pytest.mark.parametrize(
    "kwargs",
    [
        {"aggregation": "median", "predicate": ">1"},
        {"output_type": "array", "predicate": ">1"},
        {"predicate": "about 3"},
        {"predicate": ""},
        {"measure": "weather"},
        {"measure": "policy:noDot", "predicate": ">1"},
        {"aggregation": "list", "predicate": ">1"},
        {"aggregation": "percentile_rank"},
        {"window": -1, "predicate": ">1"},
    ],
)
def test_bad_specs(town, kwargs):
    with pytest.raises(SpecError):
        monitor_query(town, spec(**kwargs))


def test_unknown_target(town):
    with pytest.raises(UnknownOrg):
        monitor_query(town, spec(targets=["/nowhere"], predicate=">0"))


def test_needs_query_permission(load):
    inst = load(COMMUNITY.replace("grant members:/ monitor.query\n", ""))
    with pytest.raises(PermissionDenied):
        monitor_query(inst, spec(predicate=">0"), actor=local_ref(inst, "user", "ann"))
    with pytest.raises(PermissionDenied):
        participation_stats(inst, "/", actor=local_ref(inst, "user", "ann"))


def test_predicates():
    assert parse_predicate(">= 2")(2)
    assert not parse_predicate("!=2")(2.0)
    assert parse_predicate("<-1.5")(-2)


def test_participation_matches_a_log_scan(load):
    inst = load(COMMUNITY + "install referendum as vote\n  duration 5\n")
    users = {name: local_ref(inst, "user", name) for name in ("ann", "bea", "cal", "dan")}
    dispatcher.invoke(inst, "vote", "propose", {"question": "a"}, users["ann"])
    dispatcher.invoke(inst, "vote", "propose", {"question": "b"}, users["bea"])
    for ballot, voters in (("q1", ("ann", "bea", "cal")), ("q2", ("cal",))):
        for name in voters:
            args = {"ballot": ballot, "voter": users[name], "choice": "yes"}
            dispatcher.invoke(inst, "vote", "vote", args, users[name])
    args = {"ballot": "q1", "voter": users["ann"], "choice": "no"}
    dispatcher.invoke(inst, "vote", "vote", args, users["ann"])

    rows = participation_stats(inst, "/").value
    votes = Counter(e.payload["voter"] for e in inst.event_log if e.kind == "ballot.vote_cast")
    proposals = Counter(e.payload["proposer"] for e in inst.event_log if e.kind == "ballot.opened")
    assert [r["member"] for r in rows[:-1]] == ["ann", "bea", "cal", "dan"]
    for row in rows[:-1]:
        assert row["votes"] == votes[row["member"]]
        assert row["proposals"] == proposals[row["member"]]
    assert rows[0]["votes"] == 2
    moderation = {"flagged": 0, "removed": 0, "restored": 0, "removals_by_rule": {}}
    assert rows[-1] == {"moderation": moderation}

    council = participation_stats(inst, "/council").value
    assert [r.get("member") for r in council[:-1]] == ["ann", "bea"]
    assert all(r["votes"] == 0 for r in council[:-1])
    assert participation_stats(inst, "/", window=0).value[0]["votes"] == 0
