"""Participation statistics for an Org's governance process.

Counts come from the annotation Events the voting, petition and jury modules emit; only modules
hosted inside the Org's subtree count.
"""
from collections import Counter
from typing import Any, Dict, List, Optional

from agora.base_types import SYSTEM_ACTOR, Actor, EntityKind, OrgPath
from agora.kernel.events import record
from agora.kernel.instance import get_org
from agora.kernel.kernel_types import Instance
from agora.kernel.paths import is_within
from agora.kernel.permissions import require
from agora.monitors.monitor_types import MonitorReport
from agora.monitors.query import MONITOR_QUERY
from agora.utils.hashing import fnv1a64_hex
from agora.utils.serialization import canonical_json

# event kind -> (column, payload field naming the member)
COUNTED = {
    "ballot.vote_cast": ("votes", "voter"),
    "ballot.opened": ("proposals", "proposer"),
    "petition.created": ("proposals", "creator"),
    "election.nominated": ("proposals", "candidate"),
    "jury.verdict_given": ("verdicts", "juror"),
    "jury.flagged": ("flags", "flagger"),
    "petition.signed": ("signatures", "signer"),
}
COLUMNS = ("votes", "proposals", "verdicts", "flags", "signatures")


def participation_stats(
    instance: Instance,
    org_path: OrgPath,
    window: Optional[int] = None,
    actor: Actor = SYSTEM_ACTOR,
    rank_floor: Optional[int] = None,
    rank_attribute: str = "rank",
) -> MonitorReport:
    """Per-member activity counts plus a final moderation summary row.

    window: None reads the whole log; n reads ticks in (clock - n, clock] (0 is empty).
    rank_floor: when set, only members whose rank attribute reaches it get a row.
    """
    org = get_org(instance, org_path)
    require(instance, actor, MONITOR_QUERY, org_path)

    members: List[str] = []
    for ref in org.members.values():
        if ref.kind != EntityKind.USER.value:
            continue
        rank = instance.users[ref.id].attributes.get(rank_attribute, 0)
        if rank_floor is not None and not (isinstance(rank, int) and rank >= rank_floor):
            continue
        members.append(ref.id)

    counts: Dict[str, Counter] = {m: Counter() for m in members}
    flagged = removed = restored = 0
    removals_by_rule: Counter = Counter()
    for event in instance.event_log:
        if window is not None and event.tick <= instance.clock - window:
            continue
        module = instance.modules.get(event.payload.get("module_id", ""))
        if module is None or not is_within(module.host_org, org_path):
            continue
        if event.kind in COUNTED:
            column, field = COUNTED[event.kind]
            who = event.payload.get(field)
            if who in counts:
                counts[who][column] += 1
        if event.kind == "jury.flagged":
            flagged += 1
        elif event.kind == "jury.resolved":
            if event.payload["resolution"] == "removed":
                removed += 1
                removals_by_rule.update(event.payload["rules"])
            else:
                restored += 1

    rows: List[Dict[str, Any]] = [
        {"member": m, **{c: counts[m][c] for c in COLUMNS}} for m in members
    ]
    rows.append(
        {
            "moderation": {
                "flagged": flagged,
                "removed": removed,
                "restored": restored,
                "removals_by_rule": dict(sorted(removals_by_rule.items())),
            }
        }
    )
    method = {
        "measure": "participation",
        "org": org_path,
        "window": window,
        "rank_floor": rank_floor,
        "rank_attribute": rank_attribute,
    }
    digest = fnv1a64_hex(canonical_json(rows).encode("utf-8"))
    record(
        instance,
        "monitor.queried",
        {"spec": method, "value": rows, "inputs_digest": digest, "paths": [org_path]},
        actor,
    )
    return MonitorReport(instance.clock, rows, digest, method)
