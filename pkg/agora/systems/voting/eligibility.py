"""Electorates: who may vote on a ballot opened by a module.

The eligibility policy is one of
  members          every user member of the host Org
  active           members who acted within the module's activity_window
  token:<module>   members holding a valid staking token from that staking module
  rank:<n>         members whose rank attribute is at least n
"""
from typing import List

from agora.errors import PolicyBoundsViolation
from agora.runtime.context import InvocationContext
from agora.systems.staking import valid_holders
from agora.systems.voting.voting_types import Eligibility

DEFAULT_ACTIVITY_WINDOW = 30


def recently_active(ctx: InvocationContext, window: int) -> List[str]:
    since = ctx.tick - window
    active = set()
    for event in reversed(ctx.instance.event_log):
        if event.tick <= since:
            break
        if event.actor.startswith("user:"):
            active.add(event.actor[len("user:") :])
    return sorted(active)


def rank_of(ctx: InvocationContext, user_id: str, attribute: str = "rank") -> int:
    user = ctx.user(user_id)
    value = user.attributes.get(attribute, 0) if user is not None else 0
    return value if isinstance(value, int) and not isinstance(value, bool) else 0


def eligible_voters(ctx: InvocationContext, rule: str) -> List[str]:
    members = ctx.members()
    kind, _, arg = rule.partition(":")
    if kind == Eligibility.MEMBERS.value:
        return members
    if kind == Eligibility.ACTIVE.value:
        window = ctx.module.policy_values.get("activity_window", DEFAULT_ACTIVITY_WINDOW)
        active = set(recently_active(ctx, int(window)))
        return [m for m in members if m in active]
    if kind == Eligibility.TOKEN.value and arg:
        holders = set(valid_holders(ctx.instance, arg, ctx.tick))
        return [m for m in members if m in holders]
    if kind == Eligibility.RANK.value and arg.isdigit():
        return [m for m in members if rank_of(ctx, m) >= int(arg)]
    raise PolicyBoundsViolation("eligibility", rule, f"unknown eligibility rule {rule!r}")
