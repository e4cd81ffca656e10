from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Union

from typing_extensions import NamedTuple, TypeAlias

# Scalar (str, int, float, bool) plus homogeneous lists and string-keyed ordered maps.
Value: TypeAlias = Union[str, int, float, bool, List[Any], Dict[str, Any]]
Tick: TypeAlias = int
OrgPath: TypeAlias = str
InstanceId: TypeAlias = str
Payload: TypeAlias = Dict[str, Any]

ROOT_PATH: OrgPath = "/"
SYSTEM_ACTOR = "system"
REMOTE_PREFIX = "remote:"
INSTANCE_LEVEL = "instance"
INVOKE_PREFIX = "module.invoke:"
U64_MASK = (1 << 64) - 1


class EntityKind(str, Enum):
    USER = "user"
    RESOURCE = "resource"


class UserKind(str, Enum):
    HUMAN = "human"
    BOT = "bot"


class EntityRef(NamedTuple):
    """A reference to a User or Resource living in some Instance.

    kind: user or resource.
    id: the entity id, unique within its home Instance.
    home_instance: the Instance holding the entity ("" while the Instance is implicit).
    """

    kind: str
    id: str
    home_instance: str = ""

    def render(self) -> str:
        if self.id.startswith(REMOTE_PREFIX):
            return self.id
        return f"{self.kind}:{self.id}"

    @property
    def is_remote(self) -> bool:
        return self.id.startswith(REMOTE_PREFIX)

    @classmethod
    def parse(cls, text: str, home_instance: str = "") -> "EntityRef":
        """Parse "user:alice" / "resource:post1" / "remote:guild-b"."""
        if text.startswith(REMOTE_PREFIX):
            return cls(EntityKind.USER.value, text, text[len(REMOTE_PREFIX) :])
        kind, _, ident = text.partition(":")
        if kind not in (EntityKind.USER.value, EntityKind.RESOURCE.value) or not ident:
            raise ValueError(f"not an entity reference: {text!r}")
        return cls(kind, ident, home_instance)


def user_ref(user_id: str, home_instance: str = "") -> EntityRef:
    return EntityRef(EntityKind.USER.value, user_id, home_instance)


def resource_ref(resource_id: str, home_instance: str = "") -> EntityRef:
    return EntityRef(EntityKind.RESOURCE.value, resource_id, home_instance)


def remote_principal(instance_id: InstanceId) -> EntityRef:
    """The synthetic actor that stands for every caller from another Instance."""
    return EntityRef(EntityKind.USER.value, f"{REMOTE_PREFIX}{instance_id}", instance_id)


class OrgRef(NamedTuple):
    """A reference to an Org by its path."""

    path: OrgPath

    def render(self) -> str:
        return f"org:{self.path}"


class DecisionValue(NamedTuple):
    """The value carried on a decision port.

    passed: whether the decision went through.
    tally: the counts behind the decision.
    subject: what was being decided (a proposal's effect), empty when not applicable.
    """

    passed: bool
    tally: Dict[str, Any]
    subject: Optional[Dict[str, Any]] = None

    def to_value(self) -> Dict[str, Any]:
        return {"passed": self.passed, "tally": dict(self.tally), "subject": self.subject or {}}


Actor: TypeAlias = Union[EntityRef, str]


def render_actor(actor: Actor) -> str:
    if isinstance(actor, EntityRef):
        return actor.render()
    return actor


class Event(NamedTuple):
    """An immutable, totally ordered record of one state transition.

    seq: dense position in the Instance's log, starting at 0.
    tick: logical clock at which the Event happened.
    actor: rendered EntityRef, "system", "module:<id>" or "remote:<instance_id>".
    kind: dotted event kind, e.g. "org.created".
    payload: fully serializable ordered map.
    caused_by: seq of the triggering Event, always smaller than seq.
    """

    seq: int
    tick: Tick
    actor: str
    kind: str
    payload: Payload
    caused_by: Optional[int] = None


EventListener = Callable[[Event], None]
