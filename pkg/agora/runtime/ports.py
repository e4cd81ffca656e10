from typing import Any

from agora.base_types import DecisionValue, EntityKind, EntityRef, OrgRef
from agora.errors import PortTypeError
from agora.runtime.runtime_types import PolicyChange, PortType


def port_type_of(value: Any) -> str:
    """The port type a value would travel as."""
    if isinstance(value, EntityRef):
        if value.kind == EntityKind.USER.value:
            return PortType.USER_REF.value
        return PortType.RESOURCE_REF.value
    if isinstance(value, OrgRef):
        return PortType.ORG_REF.value
    if isinstance(value, DecisionValue):
        return PortType.DECISION.value
    if isinstance(value, PolicyChange):
        return PortType.POLICY_CHANGE.value
    if isinstance(value, (str, int, float, bool, list, dict)):
        return PortType.VALUE.value
    raise PortTypeError(f"not a port value: {value!r}")


def check_port_value(port_name: str, port_type: str, value: Any) -> None:
    actual = port_type_of(value)
    if actual != port_type:
        raise PortTypeError(f"port {port_name} expects {port_type}, got {actual}")


def coerce_port_value(port_type: str, value: Any, home_instance: str = "") -> Any:
    """Turn plain wire/script values into typed port values where the text form is unambiguous."""
    entity_port = port_type in (PortType.USER_REF.value, PortType.RESOURCE_REF.value)
    if entity_port and isinstance(value, str):
        try:
            return EntityRef.parse(value, home_instance)
        except ValueError:
            return value
    if port_type == PortType.ORG_REF.value and isinstance(value, str):
        return OrgRef(value[len("org:") :] if value.startswith("org:") else value)
    if port_type == PortType.DECISION.value and isinstance(value, dict) and "passed" in value:
        return DecisionValue(
            bool(value["passed"]), dict(value.get("tally", {})), value.get("subject") or None
        )
    return value
