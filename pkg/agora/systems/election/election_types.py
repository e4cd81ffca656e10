from typing import Any, Dict, List, Optional

from typing_extensions import NamedTuple


class TermedOffice(NamedTuple):
    """An elected seat.

    support: the winning support (yes / eligible) recorded when the holder was seated.
    threshold_at_seating: the support_threshold in force at that moment.
    """

    office_id: str
    holder: Optional[str] = None
    term_start: int = 0
    term_length: int = 30
    support_threshold: float = 0.5
    support: float = 0.0
    threshold_at_seating: float = 0.0

    def expired(self, at: int) -> bool:
        return self.holder is not None and at >= self.term_start + self.term_length

    def to_value(self) -> Dict[str, Any]:
        return dict(self._asdict())


class ElectionOutcome(NamedTuple):
    office: TermedOffice
    winner: Optional[str]
    support: Dict[str, float]
    tied: List[str]
