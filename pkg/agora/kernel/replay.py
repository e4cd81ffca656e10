"""Event log files and replay.

A log is UTF-8, one canonical JSON Event per line. Replaying it on a fresh Instance goes
through the same reducer as the live run, so the final digest must match.
"""
from pathlib import Path
from typing import Iterable, List, Optional, Union

from typing_extensions import NamedTuple

from agora.base_types import ROOT_PATH, Event
from agora.errors import CorruptLog
from agora.kernel.events import apply_event
from agora.kernel.instance import ROOT_ORG_ID, state_digest, transport_digest
from agora.kernel.kernel_types import DEDUP_CACHE_SIZE, Instance, Org, PlatformBinding
from agora.runtime.repository import ModuleRepository
from agora.utils.serialization import event_from_line, event_to_line


class ReplayResult(NamedTuple):
    instance: Instance
    digest: int
    events: int
    transport_digest: int = 0


def export_log(events: Iterable[Event]) -> str:
    return "".join(event_to_line(e) + "\n" for e in events)


def write_log(instance: Instance, path: Union[str, Path]) -> None:
    Path(path).write_text(export_log(instance.event_log), encoding="utf-8", newline="\n")


def read_log(text: str) -> List[Event]:
    """Parse a log; a missing or out-of-order seq raises CorruptLog naming the expected seq."""
    events: List[Event] = []
    for line in text.split("\n"):
        if not line.strip():
            continue
        try:
            event = event_from_line(line)
        except (ValueError, KeyError, TypeError) as exc:
            message = f"unreadable event after seq {len(events) - 1}: {exc}"
            raise CorruptLog(len(events), message) from exc
        if event.seq != len(events):
            raise CorruptLog(len(events))
        events.append(event)
    return events


def read_log_file(path: Union[str, Path]) -> List[Event]:
    return read_log(Path(path).read_text(encoding="utf-8"))


def _fresh_instance(created: Event) -> Instance:
    p = created.payload
    instance = Instance(
        instance_id=p["instance_id"],
        platform_binding=PlatformBinding(p["platform"]["name"], p["platform"]["version"]),
        rng_seed=int(p["seed"]),
        external_api_enabled=bool(p["external_api"]),
        dedup_cache_size=int(p.get("dedup_cache_size", DEDUP_CACHE_SIZE)),
    )
    instance.orgs[ROOT_PATH] = Org(org_id=ROOT_ORG_ID, path=ROOT_PATH, parent=None)
    return instance


def replay(events: List[Event], repository: Optional[ModuleRepository] = None) -> ReplayResult:
    """Rebuild an Instance from its log alone."""
    if not events or events[0].kind != "instance.created":
        raise CorruptLog(0, "log does not start with instance.created")
    instance = _fresh_instance(events[0])
    instance.repository = repository
    for event in events:
        if event.kind == "module.installed" and repository is not None:
            # Source text is not in the log; recover it by hash from the repository.
            manifest = repository.by_hash(event.payload["source_hash"])
            if manifest is not None:
                instance.sources[manifest.source_ref.hash] = manifest.source_ref.text
        apply_event(instance, event)
        instance.event_log.append(event)
    return ReplayResult(
        instance, state_digest(instance), len(events), transport_digest(instance)
    )
