from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

from typing_extensions import NamedTuple


class VoteChoice(str, Enum):
    YES = "yes"
    NO = "no"
    ABSTAIN = "abstain"


class BallotStatus(str, Enum):
    OPEN = "open"
    CLOSED = "closed"


class Eligibility(str, Enum):
    MEMBERS = "members"
    ACTIVE = "active"
    TOKEN = "token"
    RANK = "rank"


class Tally(NamedTuple):
    eligible: int
    yes: int
    no: int
    abstain: int
    participants: int


@dataclass
class BallotState:
    """One question put to a fixed electorate.

    eligible: snapshot of the electorate taken when the ballot opened.
    votes: voter -> choice, in first-vote order; a re-vote overwrites in place.
    subject: the effect enacted if the ballot passes (empty for plain questions).
    """

    question_id: str
    eligible: List[str]
    opened_at: int
    closes_at: int
    threshold: float
    quorum: float
    votes: Dict[str, str] = field(default_factory=dict)
    status: str = BallotStatus.OPEN.value
    question: str = ""
    subject: Optional[Dict[str, Any]] = None

    def to_value(self) -> Dict[str, Any]:
        return {
            "question_id": self.question_id,
            "eligible": list(self.eligible),
            "opened_at": self.opened_at,
            "closes_at": self.closes_at,
            "threshold": self.threshold,
            "quorum": self.quorum,
            "votes": dict(self.votes),
            "status": self.status,
            "question": self.question,
            "subject": self.subject or {},
        }

    @classmethod
    def from_value(cls, value: Dict[str, Any]) -> "BallotState":
        return cls(
            question_id=value["question_id"],
            eligible=list(value["eligible"]),
            opened_at=value["opened_at"],
            closes_at=value["closes_at"],
            threshold=value["threshold"],
            quorum=value["quorum"],
            votes=dict(value["votes"]),
            status=value["status"],
            question=value.get("question", ""),
            subject=value.get("subject") or None,
        )
