import operator
from typing import Any, Callable, Dict

from agora.base_types import DecisionValue
from agora.errors import PortTypeError
from agora.runtime.behavior import GovBehavior, register_behavior
from agora.runtime.context import InvocationContext
from agora.runtime.runtime_types import OutputBundle

COMPARISONS: Dict[str, Callable[[Any, Any], bool]] = {
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
    "==": operator.eq,
    "!=": operator.ne,
}


def as_number(value: Any) -> float:
    """Monitor outputs as numbers: binary -> 0/1, array -> length."""
    if isinstance(value, bool):
        return 1.0 if value else 0.0
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, list):
        return float(len(value))
    raise PortTypeError(f"cannot compare {value!r}")


@register_behavior("comparator")
class Comparator(GovBehavior):
    """value -> decision: passed iff `value <op> threshold`."""

    def op_compare(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        value = args["value"]
        threshold = ctx.policy("threshold")
        passed = COMPARISONS[ctx.policy("op")](as_number(value), threshold)
        ctx.emit("comparator.compared", {"value": value, "threshold": threshold, "passed": passed})
        return {"decision": DecisionValue(passed, {"value": value, "threshold": threshold})}
