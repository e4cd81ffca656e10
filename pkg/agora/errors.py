"""Exceptions raised by the agora engine.

Every failure a caller can act on has its own class so that tests and the scenario runner can
match on the name (scenario steps may expect a specific error by class name).
"""
from typing import List, Optional, Sequence


class AgoraError(Exception):
    """Base class for every engine error."""


class PermissionDenied(AgoraError):
    """An action was refused by the permission lattice.

    `reason` is either "no-grant" or "ancestor-restriction"; `level` is the org path (or
    "instance") where the blocking restriction sits, or the target path when no grant matched.
    """

    def __init__(self, actor: str, action: str, path: str, reason: str, level: str) -> None:
        self.actor = actor
        self.action = action
        self.path = path
        self.reason = reason
        self.level = level
        super().__init__(f"{actor} may not {action} on {path}: {reason} at {level}")


class UnknownAction(AgoraError):
    """The action id is not one the kernel knows about."""


class MembershipPreconditionFailed(AgoraError):
    """The entity is not a member of the parent Org."""


class MemberRemovalRejected(AgoraError):
    """The entity still belongs to a child Org."""


class DuplicateInstance(AgoraError):
    pass


class DuplicateOrg(AgoraError):
    pass


class DuplicateEntity(AgoraError):
    pass


class UnknownEntity(AgoraError):
    pass


class UnknownOrg(AgoraError):
    pass


class ConfigReferenceError(AgoraError):
    """A configuration refers to something it never declared."""

    def __init__(self, reference: str, message: str = "") -> None:
        self.reference = reference
        super().__init__(message or f"undeclared reference: {reference}")


class UnknownModule(AgoraError):
    pass


class UnknownOp(AgoraError):
    pass


class PolicyBoundsViolation(AgoraError):
    def __init__(self, policy: str, value: object, message: str = "") -> None:
        self.policy = policy
        self.value = value
        super().__init__(message or f"policy {policy} out of bounds: {value!r}")


class PortTypeError(AgoraError):
    pass


class CompositionCycle(AgoraError):
    def __init__(self, path: Sequence[str]) -> None:
        self.path = list(path)
        super().__init__("wiring cycle: " + " -> ".join(self.path))


class IntegrityError(AgoraError):
    """Stored module source no longer matches the hash recorded at install time."""


class NotClosed(AgoraError):
    pass


class JuryPoolTooSmall(AgoraError):
    pass


class VerdictRejected(AgoraError):
    pass


class TermNotExpired(AgoraError):
    pass


class VoteRejected(AgoraError):
    pass


class FlagRejected(AgoraError):
    pass


class EnforcementBlocked(AgoraError):
    def __init__(self, side: str, message: str = "") -> None:
        self.side = side
        super().__init__(message or f"contract enforcement blocked on the {side} side")


class AlreadySettled(AgoraError):
    pass


class SpecError(AgoraError):
    """A monitor spec is inconsistent (output type does not fit the aggregation, bad measure)."""


class CompareUnavailable(AgoraError):
    pass


class SendBlocked(AgoraError):
    pass


class StaleResponse(AgoraError):
    pass


class CorruptLog(AgoraError):
    def __init__(self, seq: int, message: str = "") -> None:
        self.seq = seq
        super().__init__(message or f"event log is missing seq {seq}")


class GovSpecError(AgoraError):
    """Raised by loaders that need a valid document but got diagnostics instead."""

    def __init__(self, diagnostics: List, source: Optional[str] = None) -> None:
        self.diagnostics = diagnostics
        first = diagnostics[0] if diagnostics else None
        where = f"{source}:" if source else ""
        super().__init__(f"{where}{first}" if first is not None else "invalid document")
