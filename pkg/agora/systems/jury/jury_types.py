from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional


class CaseStatus(str, Enum):
    OPEN = "open"
    REMOVED = "removed"
    RESTORED = "restored"


class Verdict(str, Enum):
    REMOVE = "remove"
    OBJECT = "object"


@dataclass
class JuryCase:
    """A flagged post awaiting its jury.

    jurors: selection order; empty while the volunteer pool is too small.
    verdicts: juror -> {"verdict": remove|object, "rules": [...]}.
    deadline: tick by which verdicts are due (None until a jury is seated).
    """

    case_id: str
    target: str
    flagger: str
    opened_at: int
    jurors: List[str] = field(default_factory=list)
    verdicts: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    status: str = CaseStatus.OPEN.value
    deadline: Optional[int] = None

    def to_value(self) -> Dict[str, Any]:
        return {
            "case_id": self.case_id,
            "target": self.target,
            "flagger": self.flagger,
            "opened_at": self.opened_at,
            "jurors": list(self.jurors),
            "verdicts": {k: dict(v) for k, v in self.verdicts.items()},
            "status": self.status,
            "deadline": self.deadline,
        }

    @classmethod
    def from_value(cls, value: Dict[str, Any]) -> "JuryCase":
        return cls(
            case_id=value["case_id"],
            target=value["target"],
            flagger=value["flagger"],
            opened_at=value["opened_at"],
            jurors=list(value["jurors"]),
            verdicts={k: dict(v) for k, v in value["verdicts"].items()},
            status=value["status"],
            deadline=value["deadline"],
        )
