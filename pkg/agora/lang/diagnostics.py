from enum import Enum
from typing import List

from typing_extensions import NamedTuple


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


# Stable codes: GS0xx lexical, GS1xx syntactic, GS2xx reference, GS3xx type,
# GS4xx permission consistency, SC5xx scenario specific.
BAD_ENCODING = "GS001"
TAB_INDENT = "GS002"
BAD_INDENT = "GS003"
UNTERMINATED_STRING = "GS004"
BAD_TOKEN = "GS005"

UNKNOWN_KEYWORD = "GS101"
MISSING_ARGUMENT = "GS102"
UNEXPECTED_NESTING = "GS103"
BAD_HEADER = "GS104"
EXTRA_ARGUMENT = "GS105"
BAD_SELECTOR = "GS106"
BAD_WIRE = "GS107"

UNDECLARED_REFERENCE = "GS201"
DUPLICATE_DECLARATION = "GS202"
UNDECLARED_MODULE = "GS203"
UNKNOWN_MODULE_KIND = "GS204"
REPEATED_ORG_ID = "GS205"
PARENT_MEMBERSHIP = "GS206"

BAD_VALUE = "GS301"
UNKNOWN_ACTION = "GS302"
POLICY_VIOLATION = "GS303"
PORT_MISMATCH = "GS304"
BAD_SCOPE = "GS305"

RESTRICTED_GRANT = "GS401"

NON_MONOTONIC_TICK = "SC501"
UNKNOWN_VERB = "SC502"
BAD_EXPECTATION = "SC503"
BAD_SCENARIO_HEADER = "SC504"
UNKNOWN_ERROR_NAME = "SC505"

IO_ERROR = "IO001"


class Diagnostic(NamedTuple):
    """A located problem in a text document; line and column are 1-based."""

    line: int
    column: int
    code: str
    severity: str
    message: str

    def render(self, source: str = "") -> str:
        where = f"{source}:" if source else ""
        return f"{where}{self.line}:{self.column}: {self.severity} {self.code}: {self.message}"

    def __str__(self) -> str:
        return self.render()


def has_errors(diagnostics: List[Diagnostic]) -> bool:
    return any(d.severity == Severity.ERROR.value for d in diagnostics)


class DiagnosticSink:
    """Collects diagnostics so parsing can continue past the first problem."""

    def __init__(self) -> None:
        self.items: List[Diagnostic] = []

    def error(self, line: int, column: int, code: str, message: str) -> None:
        self.items.append(Diagnostic(line, column, code, Severity.ERROR.value, message))

    def warning(self, line: int, column: int, code: str, message: str) -> None:
        self.items.append(Diagnostic(line, column, code, Severity.WARNING.value, message))

    @property
    def failed(self) -> bool:
        return has_errors(self.items)

    def sorted(self) -> List[Diagnostic]:
        return sorted(self.items, key=lambda d: (d.line, d.column, d.code))
