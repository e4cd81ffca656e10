"""Line scanner shared by the govspec, manifest and scenario formats.

Documents are line oriented. Indentation is two spaces per nesting level, `#` starts a comment
outside strings, and a line is a run of tokens: bare words, double-quoted strings, and the
bracket punctuation used by list and map literals.
"""
import re
from typing import Any, Dict, List, Optional, Tuple, Union

from typing_extensions import NamedTuple

from agora.lang import diagnostics as codes
from agora.lang.diagnostics import DiagnosticSink

INDENT_WIDTH = 2
WORD = "word"
STRING = "string"
PUNCT = "punct"
_PUNCT = "[]{},"
_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}
_INT = re.compile(r"^-?\d+$")
_FLOAT = re.compile(r"^-?\d+\.\d+(?:[eE][-+]?\d+)?$")
IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-]*$")
_BARE = re.compile(r"^[^\s\"#\[\]{},=]+$")


class Token(NamedTuple):
    kind: str
    text: str
    column: int
    # Decoded text for strings, same as text otherwise.
    value: str


class Line(NamedTuple):
    number: int
    depth: int
    tokens: Tuple[Token, ...]

    @property
    def column(self) -> int:
        return self.tokens[0].column if self.tokens else 1

    @property
    def keyword(self) -> str:
        first = self.tokens[0]
        return first.text if first.kind == WORD else ""


def decode(source: Union[str, bytes], sink: DiagnosticSink) -> str:
    if isinstance(source, str):
        return source
    try:
        return source.decode("utf-8")
    except UnicodeDecodeError as exc:
        prefix = source[: exc.start]
        line = prefix.count(b"\n") + 1
        column = exc.start - (prefix.rfind(b"\n") + 1) + 1
        sink.error(line, column, codes.BAD_ENCODING, "input is not valid UTF-8")
        return source.decode("utf-8", errors="replace")


def scan(text: str, sink: DiagnosticSink) -> List[Line]:
    """Split a document into non-blank lines of tokens with their nesting depth."""
    lines: List[Line] = []
    for number, raw in enumerate(text.split("\n"), start=1):
        raw = raw.rstrip("\r")
        stripped = raw.lstrip(" \t")
        if not stripped or stripped.startswith("#"):
            continue
        lead = raw[: len(raw) - len(stripped)]
        if "\t" in lead:
            message = "tabs are not allowed in indentation"
            sink.error(number, lead.index("\t") + 1, codes.TAB_INDENT, message)
            continue
        if len(lead) % INDENT_WIDTH:
            message = f"indentation must be a multiple of {INDENT_WIDTH} spaces"
            sink.error(number, 1, codes.BAD_INDENT, message)
            continue
        tokens = _tokenize(raw, number, len(lead), sink)
        if tokens is not None and tokens:
            lines.append(Line(number, len(lead) // INDENT_WIDTH, tuple(tokens)))
    return lines


def _tokenize(raw: str, number: int, start: int, sink: DiagnosticSink) -> Optional[List[Token]]:
    tokens: List[Token] = []
    i = start
    n = len(raw)
    while i < n:
        ch = raw[i]
        if ch in " \t":
            i += 1
        elif ch == "#":
            break
        elif ch in _PUNCT:
            tokens.append(Token(PUNCT, ch, i + 1, ch))
            i += 1
        elif ch == '"':
            out: List[str] = []
            j = i + 1
            while j < n and raw[j] != '"':
                if raw[j] == "\\" and j + 1 < n:
                    escaped = _ESCAPES.get(raw[j + 1])
                    if escaped is None:
                        sink.error(number, j + 1, codes.BAD_TOKEN, f"unknown escape \\{raw[j + 1]}")
                        return None
                    out.append(escaped)
                    j += 2
                else:
                    out.append(raw[j])
                    j += 1
            if j >= n:
                sink.error(number, i + 1, codes.UNTERMINATED_STRING, "unterminated string")
                return None
            tokens.append(Token(STRING, raw[i : j + 1], i + 1, "".join(out)))
            i = j + 1
        else:
            j = i
            while j < n and raw[j] not in ' \t"#' + _PUNCT:
                if not raw[j].isprintable():
                    sink.error(number, j + 1, codes.BAD_TOKEN, f"unexpected character {raw[j]!r}")
                    return None
                j += 1
            tokens.append(Token(WORD, raw[i:j], i + 1, raw[i:j]))
            i = j
    return tokens


def word_value(text: str) -> Any:
    """Bare words: integers, floats, booleans, otherwise the word itself."""
    if _INT.match(text):
        return int(text)
    if _FLOAT.match(text):
        return float(text)
    if text in ("true", "false"):
        return text == "true"
    return text


class ValueReader:
    """Reads literal values (scalars, [lists], {key=value maps}) from a token sequence."""

    def __init__(self, tokens: Tuple[Token, ...], line: int, sink: DiagnosticSink) -> None:
        self.tokens = tokens
        self.pos = 0
        self.line = line
        self.sink = sink

    def at_end(self) -> bool:
        return self.pos >= len(self.tokens)

    def peek(self) -> Optional[Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> Optional[Token]:
        token = self.peek()
        if token is not None:
            self.pos += 1
        return token

    def column(self) -> int:
        token = self.peek()
        if token is not None:
            return token.column
        return self.tokens[-1].column + len(self.tokens[-1].text) if self.tokens else 1

    def fail(self, message: str, code: str = codes.BAD_VALUE) -> None:
        self.sink.error(self.line, self.column(), code, message)

    def value(self) -> Tuple[bool, Any]:
        """(ok, value). On failure a diagnostic has been recorded."""
        token = self.next()
        if token is None:
            self.pos = len(self.tokens)
            self.fail("expected a value", codes.MISSING_ARGUMENT)
            return False, None
        if token.kind == STRING:
            return True, token.value
        if token.kind == WORD:
            return True, word_value(token.text)
        if token.text == "[":
            return self._list()
        if token.text == "{":
            return self._map()
        self.pos -= 1
        self.fail(f"unexpected {token.text!r}", codes.BAD_TOKEN)
        return False, None

    def _list(self) -> Tuple[bool, Any]:
        items: List[Any] = []
        if self.peek() is not None and self.peek().text == "]":  # type: ignore[union-attr]
            self.pos += 1
            return True, items
        while True:
            ok, item = self.value()
            if not ok:
                return False, None
            items.append(item)
            token = self.next()
            if token is None or token.text not in (",", "]"):
                self.fail("expected ',' or ']'", codes.BAD_TOKEN)
                return False, None
            if token.text == "]":
                return True, items

    def _map(self) -> Tuple[bool, Any]:
        items: Dict[str, Any] = {}
        if self.peek() is not None and self.peek().text == "}":  # type: ignore[union-attr]
            self.pos += 1
            return True, items
        while True:
            key_token = self.next()
            if key_token is None or key_token.kind != WORD or "=" not in key_token.text:
                self.fail("expected key=value inside a map", codes.BAD_TOKEN)
                return False, None
            key, _, rest = key_token.text.partition("=")
            if rest:
                value: Any = word_value(rest)
            else:
                ok, value = self.value()
                if not ok:
                    return False, None
            items[key] = value
            token = self.next()
            if token is None or token.text not in (",", "}"):
                self.fail("expected ',' or '}'", codes.BAD_TOKEN)
                return False, None
            if token.text == "}":
                return True, items

    def pair(self) -> Tuple[bool, str, Any]:
        """A `key=value` argument; the value may follow as its own token(s)."""
        token = self.next()
        if (
            token is None
            or token.kind != WORD
            or "=" not in token.text
            or token.text.startswith("=")
        ):
            if token is not None:
                self.pos -= 1
            self.fail("expected key=value", codes.BAD_TOKEN)
            return False, "", None
        key, _, rest = token.text.partition("=")
        if rest:
            return True, key, word_value(rest)
        ok, value = self.value()
        return ok, key, value


def render_value(value: Any) -> str:
    """Canonical text of a literal value (inverse of ValueReader.value)."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        text = repr(value)
        mantissa, e, exponent = text.partition("e")
        if e and "." not in mantissa:
            text = f"{mantissa}.0e{exponent}"
        return text
    if isinstance(value, list):
        return "[" + ", ".join(render_value(v) for v in value) + "]"
    if isinstance(value, dict):
        return "{" + ", ".join(f"{k}={render_value(v)}" for k, v in value.items()) + "}"
    text = str(value)
    if _BARE.match(text) and text.isprintable() and word_value(text) == text:
        return text
    escaped = (
        text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    )
    return f'"{escaped}"'
