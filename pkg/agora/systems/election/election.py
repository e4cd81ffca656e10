"""Termed offices filled by election.

Each candidate gets a yes/no/abstain ballot over the same electorate; support is yes votes over
the electorate size. The winner is the candidate with the highest support strictly above the
support threshold. A tie at the top leaves the office vacant and opens a re-ballot between the
tied candidates.
"""
import logging
from typing import Any, Dict, List, Mapping, Optional

from agora.errors import (
    AgoraError,
    MembershipPreconditionFailed,
    NotClosed,
    TermNotExpired,
    VoteRejected,
)
from agora.runtime.behavior import GovBehavior, register_behavior
from agora.runtime.context import InvocationContext
from agora.runtime.runtime_types import OutputBundle
from agora.systems.election.election_types import ElectionOutcome, TermedOffice
from agora.systems.voting.ballots import acting_user, cast_vote, count_votes, open_ballot
from agora.systems.voting.eligibility import eligible_voters
from agora.systems.voting.voting_types import BallotState

logger = logging.getLogger(__name__)


def election_cycle(
    office: TermedOffice, ballots: Mapping[str, BallotState], at: int
) -> ElectionOutcome:
    if office.holder is not None and not office.expired(at):
        until = office.term_start + office.term_length
        raise TermNotExpired(f"{office.office_id} is held until {until}")
    for ballot in ballots.values():
        if at < ballot.closes_at:
            raise NotClosed(f"ballot {ballot.question_id} closes at tick {ballot.closes_at}")
    support = {
        candidate: (count_votes(b).yes / len(b.eligible) if b.eligible else 0.0)
        for candidate, b in sorted(ballots.items())
    }
    qualified = {c: s for c, s in support.items() if s > office.support_threshold}
    vacant = office._replace(holder=None, support=0.0, threshold_at_seating=0.0)
    if not qualified:
        return ElectionOutcome(vacant, None, support, [])
    best = max(qualified.values())
    top = sorted(c for c, s in qualified.items() if s == best)
    if len(top) > 1:
        return ElectionOutcome(vacant, None, support, top)
    seated = office._replace(
        holder=top[0],
        term_start=at,
        support=best,
        threshold_at_seating=office.support_threshold,
    )
    return ElectionOutcome(seated, top[0], support, [])


@register_behavior("election")
class Election(GovBehavior):
    def office(self, ctx: InvocationContext) -> TermedOffice:
        value = ctx.get("office")
        base = TermedOffice(ctx.module.module_id, term_length=ctx.policy("term_length"))
        office = TermedOffice(**value) if value else base
        return office._replace(
            term_length=ctx.policy("term_length"), support_threshold=ctx.policy("support_threshold")
        )

    def op_nominate(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        candidate = acting_user(ctx.actor, args["candidate"])
        if candidate not in ctx.members():
            raise MembershipPreconditionFailed(
                f"{candidate} is not a member of {ctx.module.host_org}"
            )
        candidates: List[str] = ctx.get("candidates", [])
        if candidate not in candidates:
            candidates.append(candidate)
            ctx.emit("election.nominated", {"candidate": candidate})
            ctx.put("candidates", candidates)
        return {}

    def op_open(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        office = self.office(ctx)
        if office.holder is not None and not office.expired(ctx.tick):
            until = office.term_start + office.term_length
            raise TermNotExpired(f"{office.holder} holds the office until {until}")
        current = ctx.get("election")
        if current is not None and current["status"] == "open":
            raise VoteRejected(f"election {current['election_id']} is already open")
        candidates: List[str] = ctx.get("candidates", [])
        if not candidates:
            raise VoteRejected("no candidates have been nominated")
        return {"election": self.open_election(ctx, candidates)}

    def open_election(self, ctx: InvocationContext, candidates: List[str]) -> str:
        n = ctx.get("next", 1)
        ctx.put("next", n + 1)
        election_id = f"e{n}"
        eligible = eligible_voters(ctx, ctx.policy("eligibility"))
        ballots = {
            c: open_ballot(
                f"{election_id}/{c}",
                eligible,
                ctx.tick,
                ctx.policy("duration"),
                ctx.policy("support_threshold"),
                0.0,
                question=f"{c} for {ctx.module.module_id}",
            )
            for c in sorted(candidates)
        }
        closes_at = ctx.tick + ctx.policy("duration")
        ctx.emit(
            "election.opened",
            {
                "election": election_id,
                "candidates": sorted(candidates),
                "eligible": sorted(set(eligible)),
                "closes_at": closes_at,
            },
        )
        ctx.put(
            "election",
            {
                "election_id": election_id,
                "status": "open",
                "closes_at": closes_at,
                "ballots": {c: b.to_value() for c, b in ballots.items()},
            },
        )
        ctx.put("candidates", [])
        return election_id

    def op_vote(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        election = ctx.get("election")
        if election is None or election["status"] != "open":
            raise VoteRejected("no election is open")
        voter = acting_user(ctx.actor, args["voter"])
        candidate = args["candidate"].id
        if candidate not in election["ballots"]:
            raise VoteRejected(f"{candidate} is not standing in {election['election_id']}")
        ballot = BallotState.from_value(election["ballots"][candidate])
        cast_vote(ballot, voter, str(args["choice"]), ctx.tick)
        election["ballots"][candidate] = ballot.to_value()
        ctx.emit(
            "ballot.vote_cast",
            {"ballot": ballot.question_id, "voter": voter, "choice": str(args["choice"])},
        )
        ctx.put("election", election)
        return {}

    def op_close(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        return self.close(ctx)

    def close(self, ctx: InvocationContext) -> OutputBundle:
        election = ctx.get("election")
        if election is None or election["status"] != "open":
            raise VoteRejected("no election is open")
        ballots = {c: BallotState.from_value(b) for c, b in election["ballots"].items()}
        outcome = election_cycle(self.office(ctx), ballots, ctx.tick)
        seat_org = ctx.policy("seat_org")
        if seat_org and outcome.winner is not None and not outcome.tied:
            ctx.check_add_member(seat_org, outcome.winner)
        election["status"] = "closed"
        ctx.emit(
            "election.closed",
            {
                "election": election["election_id"],
                "support": outcome.support,
                "winner": outcome.winner,
                "threshold": outcome.office.support_threshold,
            },
        )
        ctx.put("election", election)
        ctx.put("office", outcome.office.to_value())
        if outcome.tied:
            ctx.emit(
                "election.reballot", {"election": election["election_id"], "tied": outcome.tied}
            )
            self.open_election(ctx, outcome.tied)
        elif outcome.winner is not None:
            ctx.emit(
                "election.seated",
                {
                    "holder": outcome.winner,
                    "support": outcome.office.support,
                    "threshold": outcome.office.threshold_at_seating,
                    "term_start": outcome.office.term_start,
                },
            )
            if seat_org:
                ctx.add_member(seat_org, outcome.winner)
        return {"holder": outcome.winner or ""}

    def op_status(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        election: Optional[Dict[str, Any]] = ctx.get("election")
        return {
            "status": {
                "office": self.office(ctx).to_value(),
                "election": election or {},
                "candidates": ctx.get("candidates", []),
            }
        }

    def on_tick(self, ctx: InvocationContext) -> None:
        office = self.office(ctx)
        if office.expired(ctx.tick):
            ctx.begin()
            ctx.emit("election.term_expired", {"holder": office.holder})
            vacant = office._replace(holder=None, support=0.0, threshold_at_seating=0.0)
            ctx.put("office", vacant.to_value())
            seat_org = ctx.policy("seat_org")
            if seat_org and office.holder is not None:
                try:
                    ctx.remove_member(seat_org, office.holder)
                except AgoraError as exc:
                    logger.warning(
                        "%s could not unseat %s: %s", ctx.module.module_id, office.holder, exc
                    )
        election = ctx.get("election")
        if (
            election is not None
            and election["status"] == "open"
            and ctx.tick >= election["closes_at"]
        ):
            ctx.begin()
            ctx.output(self.close(ctx))
