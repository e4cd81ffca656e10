from typing import Any, Dict

from agora.runtime.behavior import GovBehavior, register_behavior
from agora.runtime.context import InvocationContext
from agora.runtime.runtime_types import OutputBundle
from agora.systems.voting.ballots import acting_user


@register_behavior("breaks")
class Breaks(GovBehavior):
    """Work-break policy of a guild: members may go on break while `breaks_allowed` holds."""

    def op_take_break(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        worker = acting_user(ctx.actor, args["worker"])
        allowed = bool(ctx.policy("breaks_allowed")) and worker in ctx.members()
        ctx.emit("breaks.requested", {"user_id": worker, "allowed": allowed})
        if allowed:
            ctx.set_user_attribute(worker, "on_break_since", ctx.tick)
        return {"allowed": allowed}
