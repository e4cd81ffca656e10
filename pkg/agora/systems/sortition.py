from typing import Any, Dict, List, Sequence

from agora.errors import JuryPoolTooSmall, MembershipPreconditionFailed
from agora.runtime.behavior import GovBehavior, register_behavior
from agora.runtime.context import InvocationContext
from agora.runtime.runtime_types import OutputBundle
from agora.systems.voting.ballots import acting_user
from agora.utils.prng import SplitMix64, partial_fisher_yates


def sortition_draw(pool: Sequence[str], k: int, rng: SplitMix64) -> List[str]:
    if k > len(pool):
        raise JuryPoolTooSmall(f"cannot draw {k} from a pool of {len(pool)}")
    return partial_fisher_yates(pool, k, rng)


@register_behavior("sortition")
class Sortition(GovBehavior):
    """Panels drawn by lot from a volunteer pool; optionally seated in `panel_org`."""

    def op_volunteer(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        user = acting_user(ctx.actor, args["user"])
        if user not in ctx.members():
            raise MembershipPreconditionFailed(f"{user} is not a member of {ctx.module.host_org}")
        pool: List[str] = ctx.get("pool", [])
        if user not in pool:
            pool.append(user)
            ctx.put("pool", pool)
        return {}

    def op_draw(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        rng = ctx.rng()
        k = int(args.get("size", ctx.policy("panel_size")))
        panel = sortition_draw(ctx.get("pool", []), k, rng)
        ctx.commit_rng(rng)
        ctx.emit("sortition.drawn", {"panel": panel})
        ctx.put("panel", panel)
        panel_org = ctx.policy("panel_org")
        if panel_org:
            for user in panel:
                ctx.add_member(panel_org, user)
        return {"panel": panel}
