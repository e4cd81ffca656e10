"""Module manifest files: one govspec-style `module` block per module kind.

    module <kind> <version>
      behavior <behaviour kind>
      description "<text>"
      allow_external true|false
      policy <name> <int|float|bool|str|list|map> <default> [range <lo> <hi>] [choices <a> ...]
      input <port> <port type> [handler <op>]
      output <port> <port type>
      op <name> [in <port>[?] ...] [out <port> ...]
"""
from typing import List, Optional, Tuple, Union

from agora.errors import PolicyBoundsViolation
from agora.lang import diagnostics as codes
from agora.lang.diagnostics import DiagnosticSink
from agora.lang.lang_types import ParseResult
from agora.lang.tokenizer import IDENT, WORD, Line, ValueReader, decode, scan
from agora.runtime.dispatcher import check_policy
from agora.runtime.runtime_types import (
    ModuleManifest,
    OpDecl,
    PolicyDecl,
    PolicyType,
    PortDecl,
    PortType,
    SourceRef,
)
from agora.utils.hashing import sha256_hex

ALLOW_EXTERNAL = "allow_external"
_PORT_TYPES = {t.value for t in PortType}
_POLICY_TYPES = {t.value for t in PolicyType}


def _number(text: str) -> Optional[float]:
    try:
        return float(text)
    except ValueError:
        return None


class _ManifestReader:
    def __init__(self, lines: List[Line], sink: DiagnosticSink) -> None:
        self.lines = lines
        self.sink = sink
        self.behavior = ""
        self.description = ""
        self.allow_external = False
        self.policies: List[PolicyDecl] = []
        self.inputs: List[PortDecl] = []
        self.outputs: List[PortDecl] = []
        self.ops: List[OpDecl] = []

    def error(self, line: Line, column: int, code: str, message: str) -> None:
        self.sink.error(line.number, column, code, message)

    def read(self) -> Optional[Tuple[str, str]]:
        if not self.lines or self.lines[0].keyword != "module" or self.lines[0].depth != 0:
            self.sink.error(
                self.lines[0].number if self.lines else 1,
                1,
                codes.BAD_HEADER,
                "expected 'module <kind> <version>'",
            )
            return None
        head = self.lines[0]
        if len(head.tokens) != 3 or not IDENT.match(head.tokens[1].text):
            self.error(head, head.column, codes.BAD_HEADER, "expected 'module <kind> <version>'")
            return None
        for line in self.lines[1:]:
            if line.depth != 1:
                self.error(
                    line,
                    line.column,
                    codes.UNEXPECTED_NESTING,
                    "manifest entries sit one level under 'module'",
                )
                continue
            handler = getattr(self, f"_{line.keyword}", None) if line.keyword else None
            if handler is None:
                self.error(
                    line,
                    line.column,
                    codes.UNKNOWN_KEYWORD,
                    f"unknown manifest entry {line.tokens[0].text!r}",
                )
                continue
            handler(line)
        self._check_ops()
        return head.tokens[1].text, head.tokens[2].text

    def _words(self, line: Line, count: int) -> Optional[List[str]]:
        words = [t.text for t in line.tokens[1 : count + 1] if t.kind == WORD]
        if len(words) < count:
            self.error(
                line, line.column, codes.MISSING_ARGUMENT, f"{line.keyword} needs {count} arguments"
            )
            return None
        return words

    def _behavior(self, line: Line) -> None:
        words = self._words(line, 1)
        if words:
            self.behavior = words[0]

    def _description(self, line: Line) -> None:
        self.description = " ".join(t.value for t in line.tokens[1:])

    def _allow_external(self, line: Line) -> None:
        words = self._words(line, 1)
        if words and words[0] in ("true", "false"):
            self.allow_external = words[0] == "true"
        elif words:
            self.error(
                line, line.tokens[1].column, codes.BAD_VALUE, "allow_external is true or false"
            )

    def _policy(self, line: Line) -> None:
        words = self._words(line, 2)
        if words is None:
            return
        name, value_type = words
        if value_type not in _POLICY_TYPES:
            self.error(
                line, line.tokens[2].column, codes.BAD_VALUE, f"unknown policy type {value_type!r}"
            )
            return
        reader = ValueReader(line.tokens[3:], line.number, self.sink)
        ok, default = reader.value()
        if not ok:
            return
        is_int = isinstance(default, int) and not isinstance(default, bool)
        if value_type == PolicyType.FLOAT.value and is_int:
            default = float(default)
        lower = upper = None
        choices: Tuple[str, ...] = ()
        while not reader.at_end():
            key = reader.next()
            assert key is not None
            if key.text == "range":
                lo, hi = reader.next(), reader.next()
                lower = _number(lo.text) if lo is not None else None
                upper = _number(hi.text) if hi is not None else None
                if lower is None or upper is None or lower > upper:
                    self.error(line, key.column, codes.BAD_VALUE, "range takes two ordered numbers")
                    return
            elif key.text == "choices":
                choices = tuple(t.value for t in line.tokens[reader.pos :])
                reader.pos = len(reader.tokens)
            else:
                self.error(line, key.column, codes.EXTRA_ARGUMENT, f"unexpected {key.text!r}")
                return
        decl = PolicyDecl(name, value_type, default, lower, upper, choices)
        try:
            check_policy(decl, default)
        except PolicyBoundsViolation as exc:
            self.error(line, line.column, codes.POLICY_VIOLATION, f"default out of bounds: {exc}")
            return
        if any(p.name == name for p in self.policies):
            self.error(
                line,
                line.tokens[1].column,
                codes.DUPLICATE_DECLARATION,
                f"policy {name} declared twice",
            )
            return
        self.policies.append(decl)

    def _port(self, line: Line, into: List[PortDecl], direction: str) -> None:
        words = self._words(line, 2)
        if words is None:
            return
        name, port_type = words
        if port_type not in _PORT_TYPES:
            self.error(
                line, line.tokens[2].column, codes.BAD_VALUE, f"unknown port type {port_type!r}"
            )
            return
        handler = ""
        rest = [t.text for t in line.tokens[3:]]
        if rest:
            if direction != "input" or len(rest) != 2 or rest[0] != "handler":
                self.error(
                    line, line.tokens[3].column, codes.EXTRA_ARGUMENT, f"unexpected {rest[0]!r}"
                )
                return
            handler = rest[1]
        if any(p.name == name for p in into):
            self.error(
                line,
                line.tokens[1].column,
                codes.DUPLICATE_DECLARATION,
                f"{direction} {name} declared twice",
            )
            return
        into.append(PortDecl(name, port_type, handler))

    def _input(self, line: Line) -> None:
        self._port(line, self.inputs, "input")

    def _output(self, line: Line) -> None:
        self._port(line, self.outputs, "output")

    def _op(self, line: Line) -> None:
        words = self._words(line, 1)
        if words is None:
            return
        inputs: List[str] = []
        outputs: List[str] = []
        optional: List[str] = []
        into: Optional[List[str]] = None
        for token in line.tokens[2:]:
            if token.text == "in":
                into = inputs
            elif token.text == "out":
                into = outputs
            elif into is None:
                self.error(line, token.column, codes.BAD_TOKEN, "op ports follow 'in' or 'out'")
                return
            else:
                name = token.text
                if name.endswith("?") and into is inputs:
                    name = name[:-1]
                    optional.append(name)
                into.append(name)
        if any(o.name == words[0] for o in self.ops):
            self.error(
                line,
                line.tokens[1].column,
                codes.DUPLICATE_DECLARATION,
                f"op {words[0]} declared twice",
            )
            return
        self.ops.append(OpDecl(words[0], tuple(inputs), tuple(outputs), tuple(optional)))

    def _check_ops(self) -> None:
        inputs = {p.name for p in self.inputs}
        outputs = {p.name for p in self.outputs}
        ops = {o.name for o in self.ops}
        line = self.lines[0]
        for op in self.ops:
            for name in op.inputs:
                if name not in inputs:
                    self.error(
                        line,
                        1,
                        codes.UNDECLARED_REFERENCE,
                        f"op {op.name} reads undeclared input {name}",
                    )
            for name in op.outputs:
                if name not in outputs:
                    self.error(
                        line,
                        1,
                        codes.UNDECLARED_REFERENCE,
                        f"op {op.name} fills undeclared output {name}",
                    )
        for port in self.inputs:
            if port.handler and port.handler not in ops:
                self.error(
                    line,
                    1,
                    codes.UNDECLARED_REFERENCE,
                    f"input {port.name} names unknown op {port.handler}",
                )


def parse_manifest(source: Union[str, bytes], source_text: Optional[str] = None) -> ParseResult:
    """Parse one manifest.

    `source_text` is the inspectable source and defaults to the manifest text.
    """
    sink = DiagnosticSink()
    text = decode(source, sink)
    reader = _ManifestReader(scan(text, sink), sink)
    head = reader.read()
    if head is None or sink.failed:
        return ParseResult(None, sink.sorted())
    kind, version = head
    policies = list(reader.policies)
    if all(p.name != ALLOW_EXTERNAL for p in policies):
        policies.append(PolicyDecl(ALLOW_EXTERNAL, PolicyType.BOOL.value, reader.allow_external))
    body = text if source_text is None else source_text
    manifest = ModuleManifest(
        module_kind=kind,
        version=version,
        behavior=reader.behavior or kind,
        policies=tuple(policies),
        input_ports=tuple(reader.inputs),
        output_ports=tuple(reader.outputs),
        ops=tuple(reader.ops),
        source_ref=SourceRef(sha256_hex(body), body),
        allow_external=reader.allow_external,
        description=reader.description,
    )
    return ParseResult(manifest, sink.sorted())
