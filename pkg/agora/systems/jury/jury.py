"""Flag-and-jury moderation.

A flag hides the post and seats a jury drawn from the volunteer pool (the flagger never serves).
The post is removed only if every juror votes to remove, citing at least one rule; any objection,
or a juror staying silent past the deadline, restores it. While the pool is smaller than the jury
size the case stays open and the draw is retried every tick.
"""
import logging
from typing import Any, Dict, List, Optional, Sequence

from agora.base_types import EntityRef
from agora.errors import (
    FlagRejected,
    JuryPoolTooSmall,
    MembershipPreconditionFailed,
    UnknownEntity,
    VerdictRejected,
)
from agora.runtime.behavior import GovBehavior, register_behavior
from agora.runtime.context import InvocationContext
from agora.runtime.runtime_types import OutputBundle
from agora.systems.jury.jury_types import CaseStatus, JuryCase, Verdict
from agora.systems.voting.ballots import acting_user
from agora.utils.prng import SplitMix64, partial_fisher_yates

logger = logging.getLogger(__name__)

CASE_PREFIX = "case/"
FLAGGERS_PREFIX = "flaggers/"


def jury_select(pool: Sequence[str], k: int, flagger: str, rng: SplitMix64) -> List[str]:
    candidates = [u for u in pool if u != flagger]
    if len(candidates) < k:
        raise JuryPoolTooSmall(f"need {k} jurors, {len(candidates)} volunteers available")
    return partial_fisher_yates(candidates, k, rng)


def check_verdict(verdict: str, rules: Sequence[str]) -> None:
    if verdict not in (Verdict.REMOVE.value, Verdict.OBJECT.value):
        raise VerdictRejected(f"verdict must be remove or object, got {verdict!r}")
    if verdict == Verdict.REMOVE.value and not rules:
        raise VerdictRejected("a remove verdict must cite at least one rule")


def jury_verdict(case: JuryCase) -> str:
    """removed iff every juror gave a rule-citing remove verdict; silence counts as object."""
    for entry in case.verdicts.values():
        check_verdict(entry["verdict"], entry.get("rules", []))
    removed = bool(case.jurors) and all(
        case.verdicts.get(juror, {}).get("verdict") == Verdict.REMOVE.value for juror in case.jurors
    )
    return CaseStatus.REMOVED.value if removed else CaseStatus.RESTORED.value


@register_behavior("jury")
class Jury(GovBehavior):
    def load(self, ctx: InvocationContext, case_id: str) -> JuryCase:
        value: Optional[Dict[str, Any]] = ctx.get(CASE_PREFIX + case_id)
        if value is None:
            raise UnknownEntity(f"case {case_id}")
        return JuryCase.from_value(value)

    def save(self, ctx: InvocationContext, case: JuryCase) -> None:
        ctx.put(CASE_PREFIX + case.case_id, case.to_value())

    def op_volunteer(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        user = acting_user(ctx.actor, args["user"])
        if user not in ctx.members():
            raise MembershipPreconditionFailed(f"{user} is not a member of {ctx.module.host_org}")
        pool: List[str] = ctx.get("volunteers", [])
        if user not in pool:
            pool.append(user)
            ctx.emit("jury.volunteered", {"user_id": user})
            ctx.put("volunteers", pool)
        return {}

    def op_withdraw(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        user = acting_user(ctx.actor, args["user"])
        pool: List[str] = ctx.get("volunteers", [])
        if user in pool:
            pool.remove(user)
            ctx.emit("jury.withdrew", {"user_id": user})
            ctx.put("volunteers", pool)
        return {}

    def op_flag(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        post: EntityRef = args["post"]
        flagger = acting_user(ctx.actor, args["flagger"])
        resource = ctx.instance.resources.get(post.id)
        if resource is None:
            raise UnknownEntity(post.render())
        if resource.state.get("removed") is True:
            raise FlagRejected(f"{post.id} has already been removed")
        for key in ctx.keys(CASE_PREFIX):
            other = JuryCase.from_value(ctx.get(key))
            if other.target == post.id and other.status == CaseStatus.OPEN.value:
                raise FlagRejected(f"{post.id} is already under review in {other.case_id}")
        flaggers: List[str] = ctx.get(FLAGGERS_PREFIX + post.id, [])
        if flagger in flaggers:
            raise FlagRejected(f"{flagger} has already flagged {post.id}")
        flaggers.append(flagger)
        ctx.put(FLAGGERS_PREFIX + post.id, flaggers)

        n = ctx.get("next", 1)
        ctx.put("next", n + 1)
        case = JuryCase(case_id=f"c{n}", target=post.id, flagger=flagger, opened_at=ctx.tick)
        ctx.set_resource_state(post.id, "hidden", True)
        ctx.emit("jury.flagged", {"case": case.case_id, "post": post.id, "flagger": flagger})
        self.seat(ctx, case, announce_shortfall=True)
        self.save(ctx, case)
        return {"case": case.case_id}

    def seat(self, ctx: InvocationContext, case: JuryCase, announce_shortfall: bool) -> bool:
        rng = ctx.rng()
        try:
            jurors = jury_select(
                ctx.get("volunteers", []), ctx.policy("jury_size"), case.flagger, rng
            )
        except JuryPoolTooSmall as exc:
            if announce_shortfall:
                ctx.emit("jury.shortfall", {"case": case.case_id, "reason": str(exc)})
            return False
        ctx.commit_rng(rng)
        case.jurors = jurors
        case.deadline = ctx.tick + ctx.policy("verdict_window")
        ctx.emit(
            "jury.selected", {"case": case.case_id, "jurors": jurors, "deadline": case.deadline}
        )
        return True

    def op_verdict(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        case = self.load(ctx, str(args["case"]))
        juror = acting_user(ctx.actor, args["juror"])
        if case.status != CaseStatus.OPEN.value:
            raise VerdictRejected(f"case {case.case_id} is closed")
        if juror not in case.jurors:
            raise VerdictRejected(f"{juror} does not sit on the jury of {case.case_id}")
        if juror in case.verdicts:
            raise VerdictRejected(f"{juror} has already given a verdict on {case.case_id}")
        verdict = str(args["verdict"])
        rules = [str(r) for r in args.get("rules", [])]
        check_verdict(verdict, rules)
        rulebook = self.rulebook(ctx)
        unknown = [r for r in rules if rulebook is not None and r not in rulebook]
        if unknown:
            raise VerdictRejected(f"{', '.join(unknown)} not in the rulebook")
        case.verdicts[juror] = {"verdict": verdict, "rules": rules}
        ctx.emit(
            "jury.verdict_given",
            {"case": case.case_id, "juror": juror, "verdict": verdict, "rules": rules},
        )
        if len(case.verdicts) == len(case.jurors):
            self.resolve(ctx, case)
        self.save(ctx, case)
        return {}

    def rulebook(self, ctx: InvocationContext) -> Optional[List[str]]:
        name = ctx.policy("rules_resource")
        if not name:
            return None
        resource = ctx.instance.resources.get(name)
        rules = resource.state.get("rules", []) if resource is not None else []
        return [str(r) for r in rules] if isinstance(rules, list) else []

    def resolve(self, ctx: InvocationContext, case: JuryCase) -> None:
        resolution = jury_verdict(case)
        missing = [j for j in case.jurors if j not in case.verdicts]
        cited = sorted({r for v in case.verdicts.values() for r in v.get("rules", [])})
        ctx.emit(
            "jury.resolved",
            {
                "case": case.case_id,
                "post": case.target,
                "resolution": resolution,
                "verdicts": case.verdicts,
                "missing": missing,
                "rules": cited if resolution == CaseStatus.REMOVED.value else [],
            },
        )
        if resolution == CaseStatus.REMOVED.value:
            ctx.set_resource_state(case.target, "removed", True)
        else:
            ctx.set_resource_state(case.target, "hidden", False)
        case.status = resolution
        logger.debug("case %s resolved: %s", case.case_id, resolution)

    def op_status(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        return {"status": self.load(ctx, str(args["case"])).to_value()}

    def on_tick(self, ctx: InvocationContext) -> None:
        for key in ctx.keys(CASE_PREFIX):
            case = JuryCase.from_value(ctx.get(key))
            if case.status != CaseStatus.OPEN.value:
                continue
            ctx.begin()
            if not case.jurors:
                if self.seat(ctx, case, announce_shortfall=False):
                    self.save(ctx, case)
            elif case.deadline is not None and ctx.tick >= case.deadline:
                self.resolve(ctx, case)
                self.save(ctx, case)
