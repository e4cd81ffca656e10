from typing import Any, Dict

from agora.monitors.monitor_types import MonitorSpec
from agora.monitors.query import monitor_query
from agora.runtime.behavior import GovBehavior, register_behavior
from agora.runtime.context import InvocationContext
from agora.runtime.runtime_types import OutputBundle


@register_behavior("monitor")
class Monitor(GovBehavior):
    """A monitor installed as a module; its policies are the MonitorSpec fields.

    It reads with its host Org's authority, so a composite can feed its value to a comparator.
    """

    def op_evaluate(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        spec = MonitorSpec.from_value(dict(ctx.module.policy_values))
        report = monitor_query(
            ctx.instance, spec, ctx.module_actor, via_module=ctx.module, caused_by=ctx.last_seq
        )
        ctx.adopt(ctx.instance.event_log[-1])
        return {"value": report.value, "report": report.to_value()}
