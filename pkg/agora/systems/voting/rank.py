"""Promotion by the votes of high-ranked members only."""
from typing import Any, Dict, List, Mapping

from agora.base_types import DecisionValue
from agora.errors import VoteRejected
from agora.runtime.behavior import register_behavior
from agora.runtime.context import InvocationContext
from agora.runtime.runtime_types import OutputBundle
from agora.systems.voting.ballots import referendum_tally
from agora.systems.voting.eligibility import rank_of
from agora.systems.voting.referendum import BallotBehavior
from agora.systems.voting.voting_types import BallotState


def promote(
    candidate_rank: int, ranks: Mapping[str, int], rank_floor: int, ballot: BallotState, at: int
) -> int:
    """The candidate's rank after the ballot: one higher iff the tally over high-rank voters passes.

    Votes by members below `rank_floor` are dropped before counting.
    """
    electorate = [u for u in ballot.eligible if ranks.get(u, 0) >= rank_floor]
    filtered = BallotState(
        question_id=ballot.question_id,
        eligible=electorate,
        opened_at=ballot.opened_at,
        closes_at=ballot.closes_at,
        threshold=ballot.threshold,
        quorum=ballot.quorum,
        votes={u: c for u, c in ballot.votes.items() if u in electorate},
    )
    return candidate_rank + 1 if referendum_tally(filtered, at).passed else candidate_rank


@register_behavior("rank")
class RankPromotion(BallotBehavior):
    def electorate(self, ctx: InvocationContext) -> List[str]:
        attribute = ctx.policy("attribute")
        return [m for m in ctx.members() if rank_of(ctx, m, attribute) >= ctx.policy("rank_floor")]

    def op_propose(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        candidate = args["candidate"]
        if candidate.id not in ctx.members():
            raise VoteRejected(f"{candidate.render()} is not a member of {ctx.module.host_org}")
        ballot = self.open(ctx, f"promote {candidate.id}", {"candidate": candidate.id})
        return {"ballot": ballot.question_id}

    def op_vote(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        voter = args["voter"].id
        if rank_of(ctx, voter, ctx.policy("attribute")) < ctx.policy("rank_floor"):
            raise VoteRejected(f"{voter} is below rank {ctx.policy('rank_floor')}")
        return super().op_vote(ctx, args)

    def on_closed(
        self, ctx: InvocationContext, ballot: BallotState, decision: DecisionValue
    ) -> None:
        if not decision.passed or not ballot.subject:
            return
        candidate = ballot.subject["candidate"]
        attribute = ctx.policy("attribute")
        new_rank = rank_of(ctx, candidate, attribute) + 1
        ctx.set_user_attribute(candidate, attribute, new_rank)
        ctx.emit(
            "rank.promoted",
            {"user_id": candidate, "rank": new_rank, "ballot": ballot.question_id},
        )
