"""Contribution-based staking tokens.

Each recorded contribution (re)issues a token to the contributor; a token is valid for
`validity` ticks after its latest contribution. Ballots use the holders as an electorate.
"""
from typing import Any, Dict, List, Optional

from agora.base_types import EntityRef
from agora.errors import UnknownModule
from agora.kernel.kernel_types import Instance
from agora.runtime.behavior import GovBehavior, register_behavior
from agora.runtime.context import InvocationContext
from agora.runtime.runtime_types import OutputBundle

TOKEN_PREFIX = "token/"


def valid_holders(instance: Instance, module_id: str, at: int) -> List[str]:
    """Users whose latest contribution to `module_id` lies within its validity window."""
    module = instance.modules.get(module_id)
    if module is None:
        raise UnknownModule(module_id)
    validity = int(module.policy_values["validity"])
    holders = []
    for key, token in module.state.items():
        if key.startswith(TOKEN_PREFIX) and 0 <= at - token["granted_at"] < validity:
            holders.append(key[len(TOKEN_PREFIX) :])
    return sorted(holders)


@register_behavior("staking")
class Staking(GovBehavior):
    def op_record_contribution(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        contributor: EntityRef = args["contributor"]
        key = TOKEN_PREFIX + contributor.id
        token: Optional[Dict[str, Any]] = ctx.get(key)
        count = token["contributions"] + 1 if token else 1
        ctx.put(key, {"granted_at": ctx.tick, "contributions": count})
        ctx.emit(
            "staking.token_granted",
            {"user_id": contributor.id, "contributions": count, "note": args.get("note", "")},
        )
        return {"token": contributor.id}

    def op_holders(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        return {"holders": valid_holders(ctx.instance, ctx.module.module_id, ctx.tick)}
