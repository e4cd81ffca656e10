"""Read-only evaluation of Instance state.

A query touches a set of Orgs (its targets plus the percentile reference), reads one measure per
Org and folds the per-Org scores with the MonitorSpec's aggregation. The only write is the
"monitor.queried" annotation, which has no reducer, so the state digest never moves.
"""
import operator
import re
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from agora.base_types import SYSTEM_ACTOR, Actor, EntityKind, Event, OrgPath
from agora.errors import SpecError, UnknownOrg
from agora.kernel.events import record
from agora.kernel.kernel_types import Instance
from agora.kernel.paths import match_pattern
from agora.kernel.permissions import require, require_module_authority
from agora.monitors.monitor_types import AGGREGATION_OUTPUT, Aggregation, MonitorReport, MonitorSpec
from agora.runtime.runtime_types import GovModuleInstance
from agora.utils.hashing import fnv1a64_hex
from agora.utils.serialization import canonical_json

MONITOR_QUERY = "monitor.query"
_PREDICATE = re.compile(r"^(>=|<=|==|!=|>|<)(-?\d+(?:\.\d+)?)$")
_OPS: Dict[str, Callable[[float, float], bool]] = {
    ">=": operator.ge,
    "<=": operator.le,
    "==": operator.eq,
    "!=": operator.ne,
    ">": operator.gt,
    "<": operator.lt,
}
MEASURE_KINDS = ("installed", "members", "resource", "user", "policy", "module", "events")

Predicate = Callable[[float], bool]


def parse_predicate(text: str) -> Predicate:
    match = _PREDICATE.match(text.replace(" ", ""))
    if match is None:
        raise SpecError(f"bad predicate {text!r}; expected e.g. '>=1'")
    op, bound = _OPS[match.group(1)], float(match.group(2))
    return lambda value: op(value, bound)


def check_spec(spec: MonitorSpec) -> Optional[Predicate]:
    """Raise SpecError unless the MonitorSpec is self-consistent; returns its predicate if any."""
    expected = AGGREGATION_OUTPUT.get(spec.aggregation)
    if expected is None:
        raise SpecError(f"unknown aggregation {spec.aggregation!r}")
    if spec.output_type != expected:
        raise SpecError(f"{spec.aggregation} produces {expected}, not {spec.output_type}")
    kind = spec.measure.partition(":")[0]
    if kind not in MEASURE_KINDS:
        raise SpecError(f"unknown measure {spec.measure!r}")
    if kind in ("policy", "module") and "." not in spec.measure.partition(":")[2]:
        raise SpecError(f"{spec.measure!r} must name <module>.<key>")
    if kind in ("resource", "user", "events") and not spec.measure.partition(":")[2]:
        raise SpecError(f"{spec.measure!r} needs an argument")
    if spec.window < 0:
        raise SpecError("window must be >= 0")
    if not spec.targets:
        raise SpecError("a monitor needs at least one target")
    predicated = (Aggregation.COUNT.value, Aggregation.MEAN.value, Aggregation.RATIO.value)
    if spec.aggregation in predicated:
        return parse_predicate(spec.predicate)
    if spec.predicate:
        raise SpecError(f"{spec.aggregation} takes no predicate")
    if spec.aggregation == Aggregation.PERCENTILE_RANK.value and not spec.reference:
        raise SpecError("percentile_rank needs a reference org")
    return None


def target_paths(instance: Instance, spec: MonitorSpec) -> List[OrgPath]:
    """Orgs matched by the targets, in creation order."""
    for pattern in spec.targets:
        if "*" not in pattern and pattern not in instance.orgs:
            raise UnknownOrg(pattern)
    return [path for path in instance.orgs if any(match_pattern(path, p) for p in spec.targets)]


def _in_window(instance: Instance, event: Event, window: int) -> bool:
    return event.tick > instance.clock - window


def _module_in(instance: Instance, module_id: Any, path: OrgPath) -> bool:
    module = instance.modules.get(module_id) if isinstance(module_id, str) else None
    return module is not None and module.host_org == path


def _event_entries(instance: Instance, path: OrgPath, kind: str, window: int) -> Dict[str, Any]:
    members = instance.orgs[path].members
    entries: Dict[str, Any] = {}
    for event in instance.event_log:
        if event.kind != kind or (window and not _in_window(instance, event, window)):
            continue
        if event.actor in members or _module_in(instance, event.payload.get("module_id"), path):
            entries[str(event.seq)] = True
    return entries


def _windowed_entries(
    instance: Instance, path: OrgPath, measure: str, window: int
) -> Dict[str, Any]:
    """Change events over the window that would have moved the snapshot sample."""
    kind, _, arg = measure.partition(":")
    org = instance.orgs[path]
    entries: Dict[str, Any] = {}
    for event in instance.event_log:
        if not _in_window(instance, event, window):
            continue
        p = event.payload
        hit = False
        if kind == "installed":
            hit = event.kind == "module.installed" and p["org"] == path
        elif kind == "members":
            hit = event.kind == "member.added" and p["org"] == path
        elif kind == "resource":
            hit = (
                event.kind == "resource.state_changed"
                and p["key"] == arg
                and f"resource:{p['resource_id']}" in org.members
            )
        elif kind == "user":
            hit = (
                event.kind == "user.attribute_changed"
                and p["key"] == arg
                and f"user:{p['user_id']}" in org.members
            )
        elif kind == "policy":
            module_id, _, name = arg.partition(".")
            target = p.get("target", {}) if event.kind == "policy.changed" else {}
            hit = (
                target.get("module_id") == module_id
                and target.get("policy") == name
                and _module_in(instance, module_id, path)
            )
        elif kind == "module":
            module_id, _, key = arg.partition(".")
            hit = (
                event.kind == "module.state_changed"
                and p["module_id"] == module_id
                and p["key"] == key
                and _module_in(instance, module_id, path)
            )
        if hit:
            entries[str(event.seq)] = True
    return entries


def sample(instance: Instance, path: OrgPath, measure: str, window: int = 0) -> Dict[str, Any]:
    """Raw entries one Org contributes to a measure, keyed by entity / module / event seq."""
    kind, _, arg = measure.partition(":")
    if kind == "events":
        return _event_entries(instance, path, arg, window)
    if window:
        return _windowed_entries(instance, path, measure, window)
    org = instance.orgs[path]
    if kind == "installed":
        return {m: instance.modules[m].manifest.module_kind for m in org.installed}
    if kind == "members":
        return {ref: True for ref in org.members}
    if kind == "resource":
        held = [r.id for r in org.members.values() if r.kind == EntityKind.RESOURCE.value]
        return {
            rid: instance.resources[rid].state[arg]
            for rid in held
            if arg in instance.resources[rid].state
        }
    if kind == "user":
        users = [r.id for r in org.members.values() if r.kind == EntityKind.USER.value]
        return {
            uid: instance.users[uid].attributes[arg]
            for uid in users
            if arg in instance.users[uid].attributes
        }
    module_id, _, key = arg.partition(".")
    if not _module_in(instance, module_id, path):
        return {}
    module = instance.modules[module_id]
    source = module.policy_values if kind == "policy" else module.state
    return {module_id: source[key]} if key in source else {}


def score(entries: Dict[str, Any]) -> float:
    """Numbers add up; every other truthy entry counts one (a list counts its length)."""
    total = 0.0
    for value in entries.values():
        if isinstance(value, bool):
            total += 1.0 if value else 0.0
        elif isinstance(value, (int, float)):
            total += float(value)
        elif isinstance(value, (list, dict)):
            total += float(len(value))
        elif value:
            total += 1.0
    return total


def aggregate(
    spec: MonitorSpec,
    predicate: Optional[Predicate],
    rows: List[Tuple[OrgPath, Dict[str, Any]]],
    reference_score: float = 0.0,
) -> Any:
    scores = np.array([score(entries) for _, entries in rows], dtype=float)
    if spec.aggregation == Aggregation.COUNT.value:
        assert predicate is not None
        return bool(predicate(float(scores.sum())))
    if spec.aggregation == Aggregation.MEAN.value:
        assert predicate is not None
        return bool(predicate(float(scores.mean()) if len(scores) else 0.0))
    if spec.aggregation == Aggregation.RATIO.value:
        assert predicate is not None
        if not len(scores):
            return 0.0
        return sum(1 for s in scores if predicate(float(s))) / len(scores)
    if spec.aggregation == Aggregation.PERCENTILE_RANK.value:
        if not len(scores):
            return 0.0
        below = float(np.count_nonzero(scores < reference_score))
        equal = float(np.count_nonzero(scores == reference_score))
        return (below + 0.5 * equal) / len(scores)
    return [{"org": path, "value": score(entries), "entries": entries} for path, entries in rows]


def _authorize(
    instance: Instance, actor: Actor, path: OrgPath, via_module: Optional[GovModuleInstance]
) -> None:
    if via_module is not None:
        require_module_authority(instance, via_module, MONITOR_QUERY, path)
    else:
        require(instance, actor, MONITOR_QUERY, path)


def monitor_query(
    instance: Instance,
    spec: MonitorSpec,
    actor: Actor = SYSTEM_ACTOR,
    via_module: Optional[GovModuleInstance] = None,
    caused_by: Optional[int] = None,
) -> MonitorReport:
    predicate = check_spec(spec)
    paths = target_paths(instance, spec)
    touched = list(paths)
    if spec.reference:
        if spec.reference not in instance.orgs:
            raise UnknownOrg(spec.reference)
        if spec.reference not in touched:
            touched.append(spec.reference)
    for path in touched:
        _authorize(instance, actor, path, via_module)

    rows = [(path, sample(instance, path, spec.measure, spec.window)) for path in paths]
    reference_score = 0.0
    if spec.reference:
        reference_score = score(sample(instance, spec.reference, spec.measure, spec.window))
    value = aggregate(spec, predicate, rows, reference_score)
    read = [{"org": path, "entries": entries} for path, entries in rows]
    if spec.reference:
        read.append({"reference": spec.reference, "score": reference_score})
    digest = fnv1a64_hex(canonical_json(read).encode("utf-8"))
    report = MonitorReport(instance.clock, value, digest, spec.to_value())
    record(
        instance,
        "monitor.queried",
        {"spec": spec.to_value(), "value": value, "inputs_digest": digest, "paths": touched},
        actor,
        caused_by,
    )
    return report
