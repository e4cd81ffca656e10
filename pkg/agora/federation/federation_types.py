from enum import Enum
from typing import Any, Dict, Optional

from typing_extensions import NamedTuple

from agora.base_types import InstanceId, Tick

MESSAGE_FIELDS = (
    "message_id",
    "from_instance",
    "to_instance",
    "kind",
    "target",
    "op",
    "args",
    "in_reply_to",
    "status",
    "payload",
)


class MessageKind(str, Enum):
    QUERY = "query"
    INVOKE = "invoke"
    FETCH_SOURCE = "fetch_source"
    RESPONSE = "response"


class Status(str, Enum):
    OK = "ok"
    DENIED = "denied"
    UNAVAILABLE = "unavailable"
    ERROR = "error"


class Gate(str, Enum):
    INSTANCE = "instance"
    MODULE = "module"
    PERMISSION = "permission"


class FedMessage(NamedTuple):
    """One message between Instances.

    target: {"org": org path, "module_id": module id or ""}.
    status: set on responses only.
    """

    message_id: str
    from_instance: InstanceId
    to_instance: InstanceId
    kind: str
    target: Dict[str, Any]
    op: str
    args: Dict[str, Any]
    in_reply_to: Optional[str] = None
    status: Optional[str] = None
    payload: Any = None

    def to_value(self) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in MESSAGE_FIELDS}


class LinkSpec(NamedTuple):
    delay_ticks: int = 0
    drop: bool = False
    duplicate: bool = False


class EnqueueReceipt(NamedTuple):
    message_id: str
    deliver_tick: Optional[Tick]
    copies: int
