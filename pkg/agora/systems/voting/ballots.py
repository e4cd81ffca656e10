"""Ballot arithmetic shared by every voting module.

Pure functions over BallotState; modules persist ballots through their context.
"""
from typing import Any, Dict, Optional

from agora.base_types import DecisionValue, EntityRef
from agora.errors import NotClosed, VoteRejected
from agora.systems.voting.voting_types import BallotState, BallotStatus, Tally, VoteChoice

_CHOICES = {c.value for c in VoteChoice}


def open_ballot(
    question_id: str,
    eligible: Any,
    at: int,
    duration: int,
    threshold: float,
    quorum: float,
    question: str = "",
    subject: Optional[Dict[str, Any]] = None,
) -> BallotState:
    return BallotState(
        question_id=question_id,
        eligible=sorted(set(eligible)),
        opened_at=at,
        closes_at=at + duration,
        threshold=float(threshold),
        quorum=float(quorum),
        question=question,
        subject=subject,
    )


def cast_vote(ballot: BallotState, voter: str, choice: str, at: int) -> BallotState:
    """Record a vote; a second vote by the same voter overwrites the first."""
    if ballot.status != BallotStatus.OPEN.value or at >= ballot.closes_at:
        raise VoteRejected(f"ballot {ballot.question_id} is closed")
    if choice not in _CHOICES:
        raise VoteRejected(f"{choice!r} is not one of {sorted(_CHOICES)}")
    if voter not in ballot.eligible:
        raise VoteRejected(f"{voter} is not eligible to vote on {ballot.question_id}")
    ballot.votes[voter] = choice
    return ballot


def count_votes(ballot: BallotState) -> Tally:
    counted = [c for v, c in ballot.votes.items() if v in ballot.eligible]
    yes = counted.count(VoteChoice.YES.value)
    no = counted.count(VoteChoice.NO.value)
    abstain = counted.count(VoteChoice.ABSTAIN.value)
    return Tally(len(ballot.eligible), yes, no, abstain, yes + no + abstain)


def tally_passes(tally: Tally, threshold: float, quorum: float) -> bool:
    """Quorum over participants (abstentions included); threshold over yes / (yes + no), strict."""
    if tally.eligible == 0 or tally.yes + tally.no == 0:
        return False
    if tally.participants / tally.eligible < quorum:
        return False
    return tally.yes / (tally.yes + tally.no) > threshold


def referendum_tally(ballot: BallotState, at: int) -> DecisionValue:
    if at < ballot.closes_at:
        raise NotClosed(f"ballot {ballot.question_id} closes at tick {ballot.closes_at}")
    tally = count_votes(ballot)
    passed = tally_passes(tally, ballot.threshold, ballot.quorum)
    return DecisionValue(passed, dict(tally._asdict()), ballot.subject)


def acting_user(actor: Any, claimed: EntityRef) -> str:
    """The user an op acts for; a user actor may only act as themself."""
    if isinstance(actor, EntityRef) and actor.id != claimed.id:
        raise VoteRejected(f"{actor.render()} cannot act as {claimed.render()}")
    return claimed.id
