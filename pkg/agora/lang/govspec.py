"""The govspec configuration language.

    instance <id> [seed <u64>] [external_api on|off]
    platform <name> <version>
    user <id> [human|bot] [<attr>=<value> ...]
    resource <id> <type> [platform_handle=<h>] [<key>=<value> ...]
    grant <selector> <action> [subtree|self]      # top level: instance table
    restrict <action> [subtree|self]
    members <user:id|resource:id> ...              # top level: root org
    install <kind> [as <module_id>]
      <policy> <value>
    org <id>
      members ... / grant ... / restrict ... / install ... / org ... / wire ...
    wire <module>.<output> -> <module>.<input>

Selectors: everyone, user:<id>, members:<org path>, holders:<attr>=<value>.

Where a line sits in the document does not decide when it takes effect. The loader builds in
fixed phases: users, resources, orgs (preorder), members, grants and restrictions (instance
table first, then each org in preorder), installs (org preorder, then declaration order within
an org) and finally wires. A `members` line may therefore name a user declared further down, and
a `wire` may name a module installed in a later org block.
"""
from typing import Any, Dict, List, Optional, Set, Tuple, Union

from agora.base_types import REMOTE_PREFIX, ROOT_PATH, EntityRef, UserKind
from agora.errors import PolicyBoundsViolation, UnknownModule
from agora.kernel.kernel_types import (
    Grant,
    PlatformBinding,
    Restriction,
    Scope,
    Selector,
    SelectorKind,
)
from agora.kernel.paths import ancestry, child_path
from agora.kernel.permissions import EXTERNAL_CALL, action_matches, is_action_pattern
from agora.lang import diagnostics as codes
from agora.lang.diagnostics import DiagnosticSink
from agora.lang.lang_types import (
    DEFAULT_PLATFORM,
    GovSpecDoc,
    InstallDecl,
    OrgBlock,
    ParseResult,
    ResourceDecl,
    UserDecl,
    WireDecl,
    grant_sort_key,
    restriction_sort_key,
)
from agora.lang.tokenizer import (
    IDENT,
    STRING,
    WORD,
    Line,
    Token,
    ValueReader,
    decode,
    render_value,
    scan,
    word_value,
)
from agora.runtime.dispatcher import resolve_policies

HANDLE_KEY = "platform_handle"
_SCOPES = (Scope.SUBTREE.value, Scope.SELF.value)


def _strip_remote(arg: str) -> str:
    return arg[len(REMOTE_PREFIX) :] if arg.startswith(REMOTE_PREFIX) else arg


def parse_selector(token: Token, value_token: Optional[Token] = None) -> Optional[Selector]:
    """Parse a subject selector word; `value_token` carries a quoted holders value."""
    text = token.text
    if text == SelectorKind.EVERYONE.value:
        return Selector(SelectorKind.EVERYONE.value)
    kind, _, arg = text.partition(":")
    if kind == "user" and IDENT.match(_strip_remote(arg)):
        return Selector(SelectorKind.USER.value, arg)
    if kind == "members" and arg.startswith("/"):
        return Selector(SelectorKind.MEMBERS_OF.value, arg)
    if kind == "holders":
        attr, eq, raw = arg.partition("=")
        if not eq or not IDENT.match(attr):
            return None
        if raw:
            return Selector(SelectorKind.HOLDERS_OF.value, attr, word_value(raw))
        if value_token is not None:
            return Selector(SelectorKind.HOLDERS_OF.value, attr, value_token.value)
    return None


def selector_from_text(text: str) -> Optional[Selector]:
    return parse_selector(Token(WORD, text, 1, text))


def render_selector(selector: Selector) -> str:
    if selector.kind == SelectorKind.EVERYONE.value:
        return "everyone"
    if selector.kind == SelectorKind.USER.value:
        return f"user:{selector.arg}"
    if selector.kind == SelectorKind.MEMBERS_OF.value:
        return f"members:{selector.arg}"
    return f"holders:{selector.arg}={render_value(selector.value)}"


class _Block:
    """Mutable accumulator for one org block while its lines are read."""

    def __init__(self, org_id: str, path: str, line: int) -> None:
        self.org_id = org_id
        self.path = path
        self.line = line
        self.members: List[EntityRef] = []
        self.grants: List[Grant] = []
        self.restrictions: List[Restriction] = []
        self.installs: List[InstallDecl] = []
        self.children: List["_Block"] = []
        self.wires: List[WireDecl] = []

    def freeze(self) -> OrgBlock:
        return OrgBlock(
            org_id=self.org_id,
            path=self.path,
            members=tuple(self.members),
            grants=tuple(sorted(self.grants, key=grant_sort_key)),
            restrictions=tuple(sorted(self.restrictions, key=restriction_sort_key)),
            installs=tuple(self.installs),
            children=tuple(c.freeze() for c in self.children),
            wires=tuple(self.wires),
            line=self.line,
        )


class GovSpecParser:
    def __init__(self, lines: List[Line], sink: DiagnosticSink) -> None:
        self.lines = lines
        self.pos = 0
        self.sink = sink
        self.instance_id = ""
        self.seed = 0
        self.external_api = True
        self.platform = DEFAULT_PLATFORM
        self.users: List[UserDecl] = []
        self.resources: List[ResourceDecl] = []
        self.instance_grants: List[Grant] = []
        self.instance_restrictions: List[Restriction] = []
        self.declared: Set[str] = set()

    def parse(self) -> GovSpecDoc:
        self._header()
        root = _Block("root", ROOT_PATH, 1)
        self._block(root, depth=0)
        return GovSpecDoc(
            instance_id=self.instance_id,
            seed=self.seed,
            external_api=self.external_api,
            platform=self.platform,
            users=tuple(self.users),
            resources=tuple(self.resources),
            grants=tuple(sorted(self.instance_grants, key=grant_sort_key)),
            restrictions=tuple(sorted(self.instance_restrictions, key=restriction_sort_key)),
            root=root.freeze(),
        )

    # -- helpers --------------------------------------------------------------------------------

    def _error(self, line: Line, token: Optional[Token], code: str, message: str) -> None:
        self.sink.error(
            line.number, token.column if token is not None else line.column, code, message
        )

    def _skip_children(self, depth: int) -> None:
        while self.pos < len(self.lines) and self.lines[self.pos].depth > depth:
            self.pos += 1

    def _no_extra(self, line: Line, used: int) -> None:
        if len(line.tokens) > used:
            self._error(
                line,
                line.tokens[used],
                codes.EXTRA_ARGUMENT,
                f"unexpected {line.tokens[used].text!r}",
            )

    def _word(self, line: Line, index: int, what: str) -> Optional[Token]:
        if index >= len(line.tokens):
            self.sink.error(
                line.number,
                line.tokens[-1].column + len(line.tokens[-1].text),
                codes.MISSING_ARGUMENT,
                f"missing {what}",
            )
            return None
        token = line.tokens[index]
        if token.kind != WORD:
            self._error(line, token, codes.BAD_TOKEN, f"expected {what}, got {token.text!r}")
            return None
        return token

    def _ident(self, line: Line, index: int, what: str) -> Optional[str]:
        token = self._word(line, index, what)
        if token is None:
            return None
        if not IDENT.match(token.text):
            self._error(
                line, token, codes.BAD_TOKEN, f"{what} must be an identifier: {token.text!r}"
            )
            return None
        return token.text

    # -- header ---------------------------------------------------------------------------------

    def _header(self) -> None:
        if not self.lines or self.lines[0].keyword != "instance" or self.lines[0].depth != 0:
            where = self.lines[0] if self.lines else None
            self.sink.error(
                where.number if where else 1,
                1,
                codes.BAD_HEADER,
                "document must start with 'instance <id>'",
            )
            return
        line = self.lines[0]
        self.pos = 1
        ident = self._ident(line, 1, "instance id")
        self.instance_id = ident or ""
        i = 2
        while i < len(line.tokens):
            key = line.tokens[i]
            if i + 1 >= len(line.tokens):
                self._error(line, key, codes.MISSING_ARGUMENT, f"missing value for {key.text}")
                break
            value = line.tokens[i + 1]
            if key.text == "seed":
                parsed = word_value(value.text) if value.kind == WORD else None
                if (
                    not isinstance(parsed, int)
                    or isinstance(parsed, bool)
                    or not 0 <= parsed < 1 << 64
                ):
                    self._error(
                        line, value, codes.BAD_VALUE, "seed must be an unsigned 64-bit integer"
                    )
                else:
                    self.seed = parsed
            elif key.text == "external_api":
                if value.text not in ("on", "off"):
                    self._error(line, value, codes.BAD_VALUE, "external_api must be on or off")
                else:
                    self.external_api = value.text == "on"
            else:
                self._error(line, key, codes.UNKNOWN_KEYWORD, f"unknown header key {key.text!r}")
            i += 2

    # -- blocks ---------------------------------------------------------------------------------

    def _block(self, block: _Block, depth: int) -> None:
        seen_children: Set[str] = set()
        while self.pos < len(self.lines):
            line = self.lines[self.pos]
            if line.depth < depth:
                return
            self.pos += 1
            if line.depth > depth:
                self._error(
                    line, None, codes.UNEXPECTED_NESTING, "line is indented deeper than its block"
                )
                self._skip_children(line.depth - 1)
                continue
            keyword = line.keyword
            top = depth == 0
            if keyword in ("instance", "platform", "user", "resource") and not top:
                self._error(
                    line,
                    line.tokens[0],
                    codes.UNEXPECTED_NESTING,
                    f"{keyword} is only allowed at the top level",
                )
                self._skip_children(depth)
            elif keyword == "instance":
                self._error(line, line.tokens[0], codes.BAD_HEADER, "duplicate instance header")
            elif keyword == "platform":
                self._platform(line)
            elif keyword == "user":
                self._user(line)
            elif keyword == "resource":
                self._resource(line)
            elif keyword == "members":
                self._members(line, block)
            elif keyword == "grant":
                self._grant(line, self.instance_grants if top else block.grants)
            elif keyword == "restrict":
                self._restrict(line, self.instance_restrictions if top else block.restrictions)
            elif keyword == "install":
                self._install(line, block, depth)
                continue
            elif keyword == "org":
                self._org(line, block, depth, seen_children)
                continue
            elif keyword == "wire":
                self._wire(line, block)
            else:
                first = line.tokens[0]
                self._error(line, first, codes.UNKNOWN_KEYWORD, f"unknown statement {first.text!r}")
            self._nested_not_allowed(depth)

    def _nested_not_allowed(self, depth: int) -> None:
        if self.pos < len(self.lines) and self.lines[self.pos].depth > depth:
            line = self.lines[self.pos]
            self._error(
                line, None, codes.UNEXPECTED_NESTING, "this statement takes no indented block"
            )
            self._skip_children(depth)

    def _platform(self, line: Line) -> None:
        name = self._word(line, 1, "platform name")
        version = self._word(line, 2, "platform version")
        if name is not None and version is not None:
            self.platform = PlatformBinding(name.text, version.text)
        self._no_extra(line, 3)

    def _pairs(self, line: Line, start: int) -> Dict[str, Any]:
        reader = ValueReader(line.tokens[start:], line.number, self.sink)
        pairs: Dict[str, Any] = {}
        while not reader.at_end():
            ok, key, value = reader.pair()
            if not ok:
                break
            if not IDENT.match(key):
                self.sink.error(
                    line.number,
                    reader.column(),
                    codes.BAD_TOKEN,
                    f"key must be an identifier: {key!r}",
                )
                break
            pairs[key] = value
        return pairs

    def _declare(self, line: Line, token: Token, key: str) -> bool:
        if key in self.declared:
            self._error(line, token, codes.DUPLICATE_DECLARATION, f"{key} is already declared")
            return False
        self.declared.add(key)
        return True

    def _user(self, line: Line) -> None:
        user_id = self._ident(line, 1, "user id")
        if user_id is None:
            return
        start = 2
        kind = UserKind.HUMAN.value
        kinds = (UserKind.HUMAN.value, UserKind.BOT.value)
        if len(line.tokens) > 2 and line.tokens[2].text in kinds:
            kind = line.tokens[2].text
            start = 3
        attributes = self._pairs(line, start)
        if self._declare(line, line.tokens[1], f"user:{user_id}"):
            self.users.append(UserDecl(user_id, kind, attributes, line.number))

    def _resource(self, line: Line) -> None:
        resource_id = self._ident(line, 1, "resource id")
        rtype = self._ident(line, 2, "resource type") if resource_id is not None else None
        if resource_id is None or rtype is None:
            return
        state = self._pairs(line, 3)
        handle = state.pop(HANDLE_KEY, None)
        if self._declare(line, line.tokens[1], f"resource:{resource_id}"):
            handle = None if handle is None else str(handle)
            self.resources.append(ResourceDecl(resource_id, rtype, state, handle, line.number))

    def _members(self, line: Line, block: _Block) -> None:
        if len(line.tokens) < 2:
            self._word(line, 1, "member reference")
        for token in line.tokens[1:]:
            try:
                ref = EntityRef.parse(token.value) if token.kind in (WORD, STRING) else None
            except ValueError:
                ref = None
            if ref is None or ref.is_remote:
                self._error(
                    line,
                    token,
                    codes.BAD_TOKEN,
                    f"expected user:<id> or resource:<id>, got {token.text!r}",
                )
                continue
            if ref.render() not in self.declared:
                self._error(
                    line, token, codes.UNDECLARED_REFERENCE, f"{ref.render()} is not declared"
                )
                continue
            if ref not in block.members:
                block.members.append(ref)

    def _scope(self, line: Line, index: int) -> str:
        if index >= len(line.tokens):
            return Scope.SUBTREE.value
        token = line.tokens[index]
        if token.text not in _SCOPES:
            self._error(
                line, token, codes.BAD_SCOPE, f"scope must be subtree or self, got {token.text!r}"
            )
            return Scope.SUBTREE.value
        self._no_extra(line, index + 1)
        return token.text

    def _action(self, line: Line, index: int) -> Optional[str]:
        token = self._word(line, index, "action")
        if token is None:
            return None
        if not is_action_pattern(token.text):
            self._error(line, token, codes.UNKNOWN_ACTION, f"unknown action {token.text!r}")
            return None
        return token.text

    def _grant(self, line: Line, into: List[Grant]) -> None:
        subject = self._word(line, 1, "subject selector")
        if subject is None:
            return
        index = 2
        value_token = None
        if subject.text.endswith("=") and len(line.tokens) > 2 and line.tokens[2].kind == STRING:
            value_token = line.tokens[2]
            index = 3
        selector = parse_selector(subject, value_token)
        if selector is None:
            self._error(line, subject, codes.BAD_SELECTOR, f"bad selector {subject.text!r}")
            return
        action = self._action(line, index)
        if action is None:
            return
        grant = Grant(selector, action, self._scope(line, index + 1))
        if grant not in into:
            into.append(grant)

    def _restrict(self, line: Line, into: List[Restriction]) -> None:
        action = self._action(line, 1)
        if action is None:
            return
        restriction = Restriction(action, self._scope(line, 2))
        if restriction not in into:
            into.append(restriction)

    def _install(self, line: Line, block: _Block, depth: int) -> None:
        kind = self._ident(line, 1, "module kind")
        module_id = None
        if len(line.tokens) > 2:
            if line.tokens[2].text != "as":
                self._error(line, line.tokens[2], codes.EXTRA_ARGUMENT, "expected 'as <module_id>'")
            else:
                module_id = self._ident(line, 3, "module id")
                self._no_extra(line, 4)
        policies: Dict[str, Any] = {}
        while self.pos < len(self.lines) and self.lines[self.pos].depth > depth:
            child = self.lines[self.pos]
            self.pos += 1
            if child.depth != depth + 1:
                self._error(
                    child, None, codes.UNEXPECTED_NESTING, "policy lines take no indented block"
                )
                continue
            name = self._ident(child, 0, "policy name")
            if name is None:
                continue
            reader = ValueReader(child.tokens[1:], child.number, self.sink)
            ok, value = reader.value()
            if not ok:
                continue
            if not reader.at_end():
                self._error(child, reader.peek(), codes.EXTRA_ARGUMENT, "one value per policy line")
                continue
            if name in policies:
                self._error(
                    child, child.tokens[0], codes.DUPLICATE_DECLARATION, f"policy {name} set twice"
                )
                continue
            policies[name] = value
        if kind is None:
            return
        if module_id is not None and not self._declare(line, line.tokens[3], f"module:{module_id}"):
            return
        block.installs.append(InstallDecl(kind, module_id, policies, line.number))

    def _org(self, line: Line, parent: _Block, depth: int, seen: Set[str]) -> None:
        org_id = self._ident(line, 1, "org id")
        self._no_extra(line, 2)
        if org_id is None:
            self._skip_children(depth)
            return
        path = child_path(parent.path, org_id)
        ok = True
        if org_id in seen:
            self._error(
                line, line.tokens[1], codes.DUPLICATE_DECLARATION, f"org {path} is already declared"
            )
            ok = False
        elif org_id == "root" or org_id in [
            p.rsplit("/", 1)[-1] for p in ancestry(parent.path)[1:]
        ]:
            self._error(
                line, line.tokens[1], codes.REPEATED_ORG_ID, f"org id {org_id} repeats along {path}"
            )
            ok = False
        seen.add(org_id)
        child = _Block(org_id, path, line.number)
        self._block(child, depth + 1)
        if ok:
            parent.children.append(child)

    def _wire(self, line: Line, block: _Block) -> None:
        texts = [t.text for t in line.tokens[1:]]
        if len(texts) != 3 or texts[1] != "->" or any(t.kind != WORD for t in line.tokens[1:]):
            self._error(
                line,
                line.tokens[0],
                codes.BAD_WIRE,
                "expected wire <module>.<output> -> <module>.<input>",
            )
            return
        source, _, output = texts[0].partition(".")
        target, _, input_port = texts[2].partition(".")
        if not all(IDENT.match(p) for p in (source, output, target, input_port)):
            self._error(line, line.tokens[1], codes.BAD_WIRE, "wire endpoints are <module>.<port>")
            return
        block.wires.append(WireDecl(source, output, target, input_port, line.number))


# ---------------------------------------------------------------------------------------------
# Whole-document checks
# ---------------------------------------------------------------------------------------------


def module_ids(doc: GovSpecDoc) -> Dict[str, Tuple[str, InstallDecl, str]]:
    """module_id -> (kind, decl, org path), assigning ids the way the loader does."""
    ids: Dict[str, Tuple[str, InstallDecl, str]] = {}
    explicit = {i.module_id for b in doc.orgs() for i in b.installs if i.module_id}
    for block in doc.orgs():
        for decl in block.installs:
            module_id = decl.module_id
            if module_id is None:
                n = 1
                while f"{decl.kind}-{n}" in ids or f"{decl.kind}-{n}" in explicit:
                    n += 1
                module_id = f"{decl.kind}-{n}"
            ids[module_id] = (decl.kind, decl, block.path)
    return ids


def check_document(doc: GovSpecDoc, sink: DiagnosticSink, repository: Any = None) -> None:
    """Reference, type and permission-consistency checks over a parsed document."""
    _check_membership(doc, sink)
    paths = {b.path for b in doc.orgs()}
    for block in doc.orgs():
        for grant in block.grants:
            _check_selector_org(grant, block.line, paths, sink)
    for grant in doc.grants:
        _check_selector_org(grant, 1, paths, sink)
    modules = module_ids(doc)
    manifests: Dict[str, Any] = {}
    if repository is not None:
        for module_id, (kind, decl, _) in modules.items():
            try:
                manifest = repository.manifest(kind)
            except UnknownModule:
                sink.error(
                    decl.line,
                    1,
                    codes.UNKNOWN_MODULE_KIND,
                    f"no module kind {kind!r} in the repository",
                )
                continue
            manifests[module_id] = manifest
            _check_policies(manifest, decl, sink)
    for block in doc.orgs():
        for wire in block.wires:
            _check_wire(wire, modules, manifests, sink)
    lint_permissions(doc, sink)


def _check_membership(doc: GovSpecDoc, sink: DiagnosticSink) -> None:
    for block in doc.orgs():
        for child in block.children:
            for ref in child.members:
                if ref not in block.members:
                    sink.error(
                        child.line,
                        1,
                        codes.PARENT_MEMBERSHIP,
                        f"{ref.render()} joins {child.path} without belonging to {block.path}",
                    )


def _check_selector_org(grant: Grant, line: int, paths: Set[str], sink: DiagnosticSink) -> None:
    subject = grant.subject
    if subject.kind == SelectorKind.MEMBERS_OF.value and subject.arg not in paths:
        sink.error(
            line, 1, codes.UNDECLARED_REFERENCE, f"selector names undeclared org {subject.arg}"
        )


def _check_policies(manifest: Any, decl: InstallDecl, sink: DiagnosticSink) -> None:
    try:
        resolve_policies(manifest, decl.policies)
    except PolicyBoundsViolation as exc:
        sink.error(decl.line, 1, codes.POLICY_VIOLATION, str(exc))


def _check_wire(
    wire: WireDecl,
    modules: Dict[str, Tuple[str, InstallDecl, str]],
    manifests: Dict[str, Any],
    sink: DiagnosticSink,
) -> None:
    for module_id in (wire.source_module, wire.target_module):
        if module_id not in modules:
            sink.error(
                wire.line, 1, codes.UNDECLARED_MODULE, f"wire names undeclared module {module_id}"
            )
            return
    source = manifests.get(wire.source_module)
    target = manifests.get(wire.target_module)
    if source is None or target is None:
        return
    out_port = source.output_port(wire.output)
    in_port = target.input_port(wire.input)
    if out_port is None or in_port is None:
        missing = wire.output if out_port is None else wire.input
        sink.error(wire.line, 1, codes.PORT_MISMATCH, f"no port {missing} on the wired module")
    elif out_port.port_type != in_port.port_type:
        sink.error(
            wire.line,
            1,
            codes.PORT_MISMATCH,
            f"{wire.source_module}.{wire.output} is {out_port.port_type} but "
            f"{wire.target_module}.{wire.input} takes {in_port.port_type}",
        )


def lint_permissions(doc: GovSpecDoc, sink: DiagnosticSink) -> None:
    """A grant below a restriction of an overlapping action can never take effect."""
    instance_level = list(doc.restrictions)
    if not doc.external_api:
        instance_level.append(Restriction(EXTERNAL_CALL))

    def walk(block: OrgBlock, above: List[Tuple[str, Restriction]]) -> None:
        for grant in block.grants:
            for level, restriction in above:
                if action_matches(restriction.action, grant.action) or action_matches(
                    grant.action, restriction.action
                ):
                    sink.error(
                        block.line,
                        1,
                        codes.RESTRICTED_GRANT,
                        f"{block.path} grants {grant.action} "
                        f"but {level} restricts {restriction.action}",
                    )
                    break
        below = above + [(block.path, r) for r in block.restrictions]
        for child in block.children:
            walk(child, below)

    # Root's own table sits below the instance table.
    walk(doc.root, [("instance", r) for r in instance_level])


def parse_govspec(source: Union[str, bytes], repository: Any = None) -> ParseResult:
    """Parse and check a govspec document. Never raises on bad input."""
    sink = DiagnosticSink()
    text = decode(source, sink)
    doc = GovSpecParser(scan(text, sink), sink).parse()
    if not sink.failed:
        check_document(doc, sink, repository)
    return ParseResult(None if sink.failed else doc, sink.sorted())


# ---------------------------------------------------------------------------------------------
# Canonical form
# ---------------------------------------------------------------------------------------------


def _render_pairs(pairs: Dict[str, Any]) -> List[str]:
    return [f"{k}={render_value(v)}" for k, v in pairs.items()]


def _render_grant(grant: Grant) -> str:
    scope = "" if grant.scope == Scope.SUBTREE.value else f" {grant.scope}"
    return f"grant {render_selector(grant.subject)} {grant.action}{scope}"


def _render_restriction(restriction: Restriction) -> str:
    scope = "" if restriction.scope == Scope.SUBTREE.value else f" {restriction.scope}"
    return f"restrict {restriction.action}{scope}"


def _render_block(block: OrgBlock, depth: int, out: List[str], with_permissions: bool) -> None:
    pad = "  " * depth
    if block.members:
        out.append(pad + "members " + " ".join(m.render() for m in block.members))
    if with_permissions:
        out += [pad + _render_grant(g) for g in block.grants]
        out += [pad + _render_restriction(r) for r in block.restrictions]
    for decl in block.installs:
        alias = f" as {decl.module_id}" if decl.module_id else ""
        out.append(f"{pad}install {decl.kind}{alias}")
        out += [f"{pad}  {name} {render_value(value)}" for name, value in decl.policies.items()]
    for child in block.children:
        out.append(f"{pad}org {child.org_id}")
        _render_block(child, depth + 1, out, True)
    out += [
        f"{pad}wire {w.source_module}.{w.output} -> {w.target_module}.{w.input}"
        for w in block.wires
    ]


def canonicalize(doc: GovSpecDoc) -> str:
    """Deterministic text form; parsing it gives back a structurally equal document."""
    external = "on" if doc.external_api else "off"
    header = f"instance {doc.instance_id} seed {doc.seed} external_api {external}"
    out = [header, f"platform {doc.platform.name} {doc.platform.version}"]
    for user in doc.users:
        out.append(" ".join([f"user {user.user_id} {user.kind}", *_render_pairs(user.attributes)]))
    for resource in doc.resources:
        state = dict(resource.state)
        if resource.platform_handle is not None:
            state = {HANDLE_KEY: resource.platform_handle, **state}
        head = f"resource {resource.resource_id} {resource.resource_type}"
        out.append(" ".join([head, *_render_pairs(state)]))
    out += [_render_grant(g) for g in doc.grants]
    out += [_render_restriction(r) for r in doc.restrictions]
    _render_block(doc.root, 0, out, False)
    return "\n".join(out) + "\n"
