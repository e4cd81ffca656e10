import json
from enum import Enum
from typing import Any, Dict, Optional

from agora.base_types import DecisionValue, EntityRef, Event, OrgRef

EVENT_FIELDS = ("seq", "tick", "actor", "kind", "payload", "caused_by")


def to_value(obj: Any) -> Any:
    """Convert engine objects (refs, decisions, enums, tuples) into plain serializable Values."""
    if isinstance(obj, EntityRef) or isinstance(obj, OrgRef):
        return obj.render()
    if isinstance(obj, DecisionValue):
        return to_value(obj.to_value())
    if isinstance(obj, Enum):
        return obj.value
    if hasattr(obj, "to_value"):
        return to_value(obj.to_value())
    if isinstance(obj, dict):
        return {str(k): to_value(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [to_value(v) for v in items]
    return obj


def canonical_json(obj: Any) -> str:
    """Byte-stable JSON: insertion-ordered keys, no whitespace, no NaN."""
    return json.dumps(to_value(obj), separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def event_to_line(event: Event) -> str:
    record: Dict[str, Any] = {name: getattr(event, name) for name in EVENT_FIELDS}
    return canonical_json(record)


def event_from_line(line: str) -> Event:
    record = json.loads(line)
    caused_by: Optional[int] = record.get("caused_by")
    return Event(
        seq=int(record["seq"]),
        tick=int(record["tick"]),
        actor=str(record["actor"]),
        kind=str(record["kind"]),
        payload=dict(record["payload"]),
        caused_by=caused_by,
    )
