"""Yes/no questions put to an electorate, closed by deadline.

A ballot carries an optional `effect`; the decision emitted at close repeats it as its subject so
a wired enactor can apply it when the ballot passes.
"""
from typing import Any, Dict, List, Optional

from agora.base_types import DecisionValue, EntityRef
from agora.errors import UnknownEntity, VoteRejected
from agora.runtime.behavior import GovBehavior, register_behavior
from agora.runtime.context import InvocationContext
from agora.runtime.runtime_types import OutputBundle
from agora.systems.voting.ballots import acting_user, cast_vote, open_ballot, referendum_tally
from agora.systems.voting.eligibility import eligible_voters
from agora.systems.voting.voting_types import BallotState, BallotStatus

BALLOT_PREFIX = "ballot/"


class BallotBehavior(GovBehavior):
    """Shared propose/vote/close cycle; subclasses choose the electorate and the follow-up."""

    def electorate(self, ctx: InvocationContext) -> List[str]:
        return eligible_voters(ctx, ctx.policy("eligibility"))

    def on_closed(
        self, ctx: InvocationContext, ballot: BallotState, decision: DecisionValue
    ) -> None:
        """Hook run after a ballot closes, before its decision is emitted."""

    def load(self, ctx: InvocationContext, ballot_id: str) -> BallotState:
        value: Optional[Dict[str, Any]] = ctx.get(BALLOT_PREFIX + ballot_id)
        if value is None:
            raise UnknownEntity(f"ballot {ballot_id}")
        return BallotState.from_value(value)

    def open(
        self,
        ctx: InvocationContext,
        question: str,
        subject: Optional[Dict[str, Any]] = None,
    ) -> BallotState:
        n = ctx.get("next", 1)
        ctx.put("next", n + 1)
        ballot = open_ballot(
            f"q{n}",
            self.electorate(ctx),
            ctx.tick,
            ctx.policy("duration"),
            ctx.policy("threshold"),
            ctx.policy("quorum"),
            question=question,
            subject=subject,
        )
        proposer = ctx.actor.id if isinstance(ctx.actor, EntityRef) else str(ctx.actor)
        ctx.emit(
            "ballot.opened",
            {
                "ballot": ballot.question_id,
                "question": question,
                "proposer": proposer,
                "eligible": ballot.eligible,
                "closes_at": ballot.closes_at,
                "subject": ballot.subject or {},
            },
        )
        ctx.put(BALLOT_PREFIX + ballot.question_id, ballot.to_value())
        return ballot

    def op_vote(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        ballot = self.load(ctx, str(args["ballot"]))
        voter = acting_user(ctx.actor, args["voter"])
        cast_vote(ballot, voter, str(args["choice"]), ctx.tick)
        ctx.emit(
            "ballot.vote_cast",
            {"ballot": ballot.question_id, "voter": voter, "choice": str(args["choice"])},
        )
        ctx.put(BALLOT_PREFIX + ballot.question_id, ballot.to_value())
        return {}

    def close(self, ctx: InvocationContext, ballot_id: str) -> OutputBundle:
        ballot = self.load(ctx, ballot_id)
        if ballot.status != BallotStatus.OPEN.value:
            raise VoteRejected(f"ballot {ballot_id} is already closed")
        decision = referendum_tally(ballot, ctx.tick)
        ballot.status = BallotStatus.CLOSED.value
        ctx.emit(
            "ballot.closed",
            {
                "ballot": ballot_id,
                "passed": decision.passed,
                "tally": decision.tally,
                "subject": ballot.subject or {},
            },
        )
        ctx.put(BALLOT_PREFIX + ballot_id, ballot.to_value())
        self.on_closed(ctx, ballot, decision)
        return {"decision": decision}

    def op_close(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        return self.close(ctx, str(args["ballot"]))

    def op_status(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        return {"status": self.load(ctx, str(args["ballot"])).to_value()}

    def on_tick(self, ctx: InvocationContext) -> None:
        for key in ctx.keys(BALLOT_PREFIX):
            ballot = BallotState.from_value(ctx.get(key))
            if ballot.status == BallotStatus.OPEN.value and ctx.tick >= ballot.closes_at:
                ctx.begin()
                ctx.output(self.close(ctx, ballot.question_id))


@register_behavior("referendum")
class Referendum(BallotBehavior):
    def op_propose(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        ballot = self.open(ctx, str(args["question"]), args.get("effect") or None)
        return {"ballot": ballot.question_id}
