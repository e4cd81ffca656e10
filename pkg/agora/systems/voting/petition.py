from typing import Any, Dict, Optional

from agora.base_types import DecisionValue, EntityRef
from agora.errors import UnknownEntity, VoteRejected
from agora.runtime.behavior import GovBehavior, register_behavior
from agora.runtime.context import InvocationContext
from agora.runtime.runtime_types import OutputBundle
from agora.systems.voting.ballots import acting_user
from agora.systems.voting.eligibility import eligible_voters

PETITION_PREFIX = "petition/"


@register_behavior("petition")
class Petition(GovBehavior):
    """Signature collection. Reaching the goal emits a passed decision exactly once."""

    def _load(self, ctx: InvocationContext, petition_id: str) -> Dict[str, Any]:
        petition: Optional[Dict[str, Any]] = ctx.get(PETITION_PREFIX + petition_id)
        if petition is None:
            raise UnknownEntity(f"petition {petition_id}")
        return petition

    def op_create(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        n = ctx.get("next", 1)
        petition_id = f"p{n}"
        ctx.put("next", n + 1)
        creator = ctx.actor.id if isinstance(ctx.actor, EntityRef) else str(ctx.actor)
        ctx.emit(
            "petition.created",
            {"petition": petition_id, "title": args["title"], "creator": creator},
        )
        ctx.put(
            PETITION_PREFIX + petition_id,
            {
                "title": args["title"],
                "creator": creator,
                "eligible": eligible_voters(ctx, ctx.policy("eligibility")),
                "signatures": [],
                "goal_reached": False,
                "effect": args.get("effect", {}),
            },
        )
        return {"petition": petition_id}

    def op_sign(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        petition_id = str(args["petition"])
        petition = self._load(ctx, petition_id)
        signer = acting_user(ctx.actor, args["signer"])
        if signer not in petition["eligible"]:
            raise VoteRejected(f"{signer} may not sign petition {petition_id}")
        if signer in petition["signatures"]:
            return {}
        petition["signatures"].append(signer)
        ctx.emit("petition.signed", {"petition": petition_id, "signer": signer})
        count = len(petition["signatures"])
        outputs: OutputBundle = {}
        if not petition["goal_reached"] and count >= ctx.policy("signature_goal"):
            petition["goal_reached"] = True
            ctx.emit("petition.goal_reached", {"petition": petition_id, "signatures": count})
            outputs["decision"] = DecisionValue(
                True,
                {"signatures": count, "goal": ctx.policy("signature_goal")},
                petition["effect"] or None,
            )
        ctx.put(PETITION_PREFIX + petition_id, petition)
        return outputs

    def op_query(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        return {"count": len(self._load(ctx, str(args["petition"]))["signatures"])}
