from collections import OrderedDict
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

from typing_extensions import NamedTuple

from agora.base_types import (
    EntityRef,
    Event,
    EventListener,
    InstanceId,
    OrgPath,
    Tick,
    Value,
)
from agora.runtime.runtime_types import GovModuleInstance

# Answered requests remembered per peer.
DEDUP_CACHE_SIZE = 1024


class SelectorKind(str, Enum):
    USER = "user"
    MEMBERS_OF = "members_of"
    HOLDERS_OF = "holders_of"
    EVERYONE = "everyone"


class Scope(str, Enum):
    SUBTREE = "subtree"
    SELF = "self"


class Selector(NamedTuple):
    """Who a grant applies to.

    kind: user(arg=user_id), members_of(arg=org path), holders_of(arg=attribute, value), everyone.
    """

    kind: str
    arg: str = ""
    value: Value = ""

    def to_value(self) -> Dict[str, Any]:
        return {"kind": self.kind, "arg": self.arg, "value": self.value}


class Grant(NamedTuple):
    subject: Selector
    action: str
    scope: str = Scope.SUBTREE.value

    def to_value(self) -> Dict[str, Any]:
        return {"subject": self.subject.to_value(), "action": self.action, "scope": self.scope}


class Restriction(NamedTuple):
    # Restrictions are absolute downward; scope is kept for the table format only.
    action: str
    scope: str = Scope.SUBTREE.value

    def to_value(self) -> Dict[str, Any]:
        return {"action": self.action, "scope": self.scope}


@dataclass
class PermissionTable:
    grants: List[Grant] = field(default_factory=list)
    restrictions: List[Restriction] = field(default_factory=list)

    def to_value(self) -> Dict[str, Any]:
        return {
            "grants": [g.to_value() for g in self.grants],
            "restrictions": [r.to_value() for r in self.restrictions],
        }


class PlatformBinding(NamedTuple):
    """Adapter descriptor of the Platform an Instance is embedded in."""

    name: str
    version: str


class Decision(NamedTuple):
    """Outcome of resolve_permission.

    reason: None when allowed, else "no-grant" or "ancestor-restriction".
    level: where the outcome was decided ("instance" or an org path).
    """

    allowed: bool
    reason: Optional[str] = None
    level: Optional[str] = None


@dataclass
class User:
    user_id: str
    kind: str
    attributes: Dict[str, Value] = field(default_factory=dict)


@dataclass
class Resource:
    resource_id: str
    resource_type: str
    state: Dict[str, Value] = field(default_factory=dict)
    platform_handle: Optional[str] = None


@dataclass
class Org:
    org_id: str
    path: OrgPath
    parent: Optional[OrgPath]
    children: List[OrgPath] = field(default_factory=list)
    # Keyed by rendered EntityRef, insertion ordered.
    members: Dict[str, EntityRef] = field(default_factory=dict)
    installed: List[str] = field(default_factory=list)
    permission_table: PermissionTable = field(default_factory=PermissionTable)


@dataclass
class Instance:
    """Root governance domain: the single-writer state machine every other package mutates."""

    instance_id: InstanceId
    platform_binding: PlatformBinding
    rng_seed: int
    external_api_enabled: bool = True
    orgs: Dict[OrgPath, Org] = field(default_factory=dict)
    users: Dict[str, User] = field(default_factory=dict)
    resources: Dict[str, Resource] = field(default_factory=dict)
    permission_policy: PermissionTable = field(default_factory=PermissionTable)
    modules: Dict[str, GovModuleInstance] = field(default_factory=dict)
    event_log: List[Event] = field(default_factory=list)
    clock: Tick = 0
    rng_states: Dict[str, int] = field(default_factory=dict)
    # Module source text by content hash.
    sources: Dict[str, str] = field(default_factory=dict)
    # Outstanding federation requests: message_id -> {"module_id", "to", "op", ...}.
    pending: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    # Per-peer FIFO of answered message ids -> response record.
    dedup: Dict[str, "OrderedDict[str, Dict[str, Any]]"] = field(default_factory=dict)
    dedup_cache_size: int = DEDUP_CACHE_SIZE
    fed_counter: int = 0
    # Permissive build flag: when False, permission checks always pass (static/dynamic tests).
    enforce_permissions: bool = True
    listeners: List[EventListener] = field(default_factory=list)
    # Set by the federation layer when the Instance joins a network.
    federation: Any = None
    # Module repository used when a module installs another (an enacted proposal).
    repository: Any = None
