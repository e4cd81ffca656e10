from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Tuple

from typing_extensions import NamedTuple

from agora.base_types import EntityRef, OrgPath
from agora.kernel.kernel_types import Grant, PlatformBinding, Restriction
from agora.lang.diagnostics import Diagnostic, has_errors

DEFAULT_PLATFORM = PlatformBinding("generic", "1")


@dataclass(frozen=True)
class UserDecl:
    user_id: str
    kind: str
    attributes: Dict[str, Any]
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ResourceDecl:
    resource_id: str
    resource_type: str
    state: Dict[str, Any]
    platform_handle: Optional[str] = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class InstallDecl:
    """install <kind> [as <module_id>] with indented `<policy> <value>` lines."""

    kind: str
    module_id: Optional[str]
    policies: Dict[str, Any]
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class WireDecl:
    source_module: str
    output: str
    target_module: str
    input: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class OrgBlock:
    """One Org with everything declared inside its block; children nest the same way."""

    org_id: str
    path: OrgPath
    members: Tuple[EntityRef, ...] = ()
    grants: Tuple[Grant, ...] = ()
    restrictions: Tuple[Restriction, ...] = ()
    installs: Tuple[InstallDecl, ...] = ()
    children: Tuple["OrgBlock", ...] = ()
    wires: Tuple[WireDecl, ...] = ()
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class GovSpecDoc:
    """A parsed configuration. Top-level grant/restrict lines form the instance-level table."""

    instance_id: str
    seed: int
    external_api: bool
    platform: PlatformBinding
    users: Tuple[UserDecl, ...]
    resources: Tuple[ResourceDecl, ...]
    grants: Tuple[Grant, ...]
    restrictions: Tuple[Restriction, ...]
    root: OrgBlock

    def orgs(self) -> Iterator[OrgBlock]:
        """Org blocks in preorder, root first."""
        stack = [self.root]
        while stack:
            block = stack.pop()
            yield block
            stack.extend(reversed(block.children))


class ParseResult(NamedTuple):
    doc: Optional[Any]
    diagnostics: List[Diagnostic]

    @property
    def ok(self) -> bool:
        return self.doc is not None and not has_errors(self.diagnostics)


def grant_sort_key(grant: Grant) -> Tuple[str, str, str, str, str]:
    s = grant.subject
    return (grant.action, s.kind, s.arg, str(s.value), grant.scope)


def restriction_sort_key(restriction: Restriction) -> Tuple[str, str]:
    return (restriction.action, restriction.scope)


@dataclass(frozen=True)
class LinkDecl:
    a: str
    b: str
    delay_ticks: int = 0
    drop: bool = False
    duplicate: bool = False


@dataclass(frozen=True)
class ScenarioStep:
    """One timed action.

    `at <tick> <actor>[@<instance>] <verb> <positional...> [as <id>] [key=value ...] [=> Error]`
    """

    tick: int
    actor: str
    instance: Optional[str]
    verb: str
    positional: Tuple[str, ...]
    args: Dict[str, Any]
    alias: Optional[str] = None
    expect_error: Optional[str] = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Expectation:
    """`expect <tick> <subject>[@<instance>] <op> <value>`, checked once tick has fully run."""

    tick: int
    subject: str
    instance: Optional[str]
    op: str
    value: Any
    line: int = field(default=0, compare=False)

    @property
    def text(self) -> str:
        where = f"@{self.instance}" if self.instance else ""
        return f"{self.subject}{where} {self.op} {self.value!r}"


@dataclass(frozen=True)
class ScenarioScript:
    name: str
    govspecs: Tuple[str, ...]
    seed: Optional[int]
    max_tick: int
    links: Tuple[LinkDecl, ...]
    steps: Tuple[ScenarioStep, ...]
    expectations: Tuple[Expectation, ...]
