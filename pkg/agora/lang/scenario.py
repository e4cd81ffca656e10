"""Scenario scripts: a timed stream of actions against one or more Instances.

    scenario <name>
    govspec <path>                       # one per Instance, relative to the script
    seed <u64>                           # overrides every govspec seed
    max_tick <u64>
    link <instance> <instance> [delay <n>] [drop] [duplicate]

    at <tick> <actor>[@<instance>] <verb> <positional ...> [as <id>] [key=value ...] [=> <Error>]
    expect <tick> <subject>[@<instance>] <op> <value>

Steps run in file order; their ticks may not decrease. Expectations are checked after every
step of their tick has run.
"""
from typing import Any, Dict, List, Optional, Set, Tuple, Union

from agora import errors
from agora.lang import diagnostics as codes
from agora.lang.diagnostics import DiagnosticSink
from agora.lang.lang_types import Expectation, LinkDecl, ParseResult, ScenarioScript, ScenarioStep
from agora.lang.tokenizer import IDENT, WORD, Line, ValueReader, decode, scan, word_value

# verb -> number of positional arguments
VERBS = {
    "invoke": 2,
    "create_org": 2,
    "add_member": 2,
    "remove_member": 2,
    "install": 2,
    "wire": 2,
    "compose": 2,
    "set_resource": 1,
    "monitor": 1,
    "stats": 1,
    "compare": 1,
    "fetch_source": 2,
    "send": 4,
}
SUBJECTS = ("resource", "user", "policy", "state", "members", "installed", "report", "events")
OPERATORS = ("==", "!=", "<", "<=", ">", ">=", "contains", "lacks")
HEADER_KEYWORDS = ("scenario", "govspec", "seed", "max_tick", "link")
ARROW = "=>"


def known_error(name: str) -> bool:
    cls = getattr(errors, name, None)
    return isinstance(cls, type) and issubclass(cls, errors.AgoraError)


def _tick(text: str) -> Optional[int]:
    value = word_value(text)
    if isinstance(value, int) and not isinstance(value, bool) and 0 <= value < 1 << 64:
        return value
    return None


def _split_instance(text: str) -> Tuple[str, Optional[str]]:
    head, at, instance = text.rpartition("@")
    return (head, instance) if at else (text, None)


class ScenarioParser:
    def __init__(self, lines: List[Line], sink: DiagnosticSink) -> None:
        self.lines = lines
        self.sink = sink
        self.name = ""
        self.govspecs: List[str] = []
        self.seed: Optional[int] = None
        self.max_tick: Optional[int] = None
        self.links: List[LinkDecl] = []
        self.steps: List[ScenarioStep] = []
        self.expectations: List[Expectation] = []
        self.last_tick = 0
        self.linked: Set[Tuple[str, str]] = set()

    def error(self, line: Line, column: int, code: str, message: str) -> None:
        self.sink.error(line.number, column, code, message)

    def parse(self) -> ScenarioScript:
        if not self.lines or self.lines[0].keyword != "scenario":
            where = self.lines[0].number if self.lines else 1
            self.sink.error(
                where, 1, codes.BAD_SCENARIO_HEADER, "script must start with 'scenario <name>'"
            )
        body_started = False
        for line in self.lines:
            if line.depth:
                self.error(
                    line, line.column, codes.UNEXPECTED_NESTING, "scenario lines are not indented"
                )
                continue
            keyword = line.keyword
            if keyword in HEADER_KEYWORDS:
                if body_started:
                    self.error(
                        line,
                        line.column,
                        codes.BAD_SCENARIO_HEADER,
                        f"{keyword} must come before the steps",
                    )
                    continue
                getattr(self, f"_{keyword}")(line)
            elif keyword == "at":
                body_started = True
                self._step(line)
            elif keyword == "expect":
                body_started = True
                self._expect(line)
            else:
                self.error(
                    line,
                    line.column,
                    codes.UNKNOWN_KEYWORD,
                    f"unknown scenario line {line.tokens[0].text!r}",
                )
        last = max([s.tick for s in self.steps] + [e.tick for e in self.expectations] + [0])
        if self.max_tick is not None and last > self.max_tick:
            self.sink.error(
                1, 1, codes.BAD_SCENARIO_HEADER, f"tick {last} is past max_tick {self.max_tick}"
            )
        if not self.govspecs and self.lines:
            self.sink.error(
                self.lines[0].number, 1, codes.BAD_SCENARIO_HEADER, "no govspec declared"
            )
        return ScenarioScript(
            name=self.name,
            govspecs=tuple(self.govspecs),
            seed=self.seed,
            max_tick=last if self.max_tick is None else self.max_tick,
            links=tuple(self.links),
            steps=tuple(self.steps),
            expectations=tuple(self.expectations),
        )

    # -- header ---------------------------------------------------------------------------------

    def _words(self, line: Line, count: int) -> Optional[List[str]]:
        if len(line.tokens) != count + 1:
            self.error(
                line,
                line.column,
                codes.MISSING_ARGUMENT,
                f"{line.keyword} takes {count} argument(s)",
            )
            return None
        return [t.value for t in line.tokens[1:]]

    def _scenario(self, line: Line) -> None:
        words = self._words(line, 1)
        if words:
            self.name = words[0]

    def _govspec(self, line: Line) -> None:
        words = self._words(line, 1)
        if words:
            self.govspecs.append(words[0])

    def _number(self, line: Line) -> Optional[int]:
        words = self._words(line, 1)
        if words is None:
            return None
        value = _tick(words[0])
        if value is None:
            self.error(
                line,
                line.tokens[1].column,
                codes.BAD_VALUE,
                f"{line.keyword} must be an unsigned integer",
            )
        return value

    def _seed(self, line: Line) -> None:
        self.seed = self._number(line)

    def _max_tick(self, line: Line) -> None:
        self.max_tick = self._number(line)

    def _link(self, line: Line) -> None:
        texts = [t.text for t in line.tokens[1:]]
        if len(texts) < 2 or not all(IDENT.match(t) for t in texts[:2]):
            self.error(line, line.column, codes.MISSING_ARGUMENT, "link takes two instance ids")
            return
        a, b = sorted(texts[:2])
        delay, drop, duplicate = 0, False, False
        i = 2
        while i < len(texts):
            if texts[i] == "delay" and i + 1 < len(texts) and _tick(texts[i + 1]) is not None:
                delay = _tick(texts[i + 1]) or 0
                i += 2
                continue
            if texts[i] == "drop":
                drop = True
            elif texts[i] == "duplicate":
                duplicate = True
            else:
                self.error(
                    line,
                    line.tokens[i + 1].column,
                    codes.EXTRA_ARGUMENT,
                    f"unexpected {texts[i]!r}",
                )
                return
            i += 1
        if (a, b) in self.linked:
            self.error(
                line, line.column, codes.DUPLICATE_DECLARATION, f"link {a} {b} declared twice"
            )
            return
        self.linked.add((a, b))
        self.links.append(LinkDecl(a, b, delay, drop, duplicate))

    # -- body -----------------------------------------------------------------------------------

    def _line_tick(self, line: Line) -> Optional[int]:
        if len(line.tokens) < 2 or _tick(line.tokens[1].text) is None:
            self.error(line, line.column, codes.BAD_VALUE, f"{line.keyword} needs a tick")
            return None
        return _tick(line.tokens[1].text)

    def _step(self, line: Line) -> None:
        tick = self._line_tick(line)
        if tick is None:
            return
        if tick < self.last_tick:
            self.error(
                line,
                line.tokens[1].column,
                codes.NON_MONOTONIC_TICK,
                f"non-monotonic tick {tick} after {self.last_tick}",
            )
            return
        self.last_tick = tick
        tokens = list(line.tokens[2:])
        expect_error = None
        if len(tokens) >= 2 and tokens[-2].text == ARROW:
            expect_error = tokens[-1].text
            if not known_error(expect_error):
                self.error(
                    line,
                    tokens[-1].column,
                    codes.UNKNOWN_ERROR_NAME,
                    f"unknown error {expect_error!r}",
                )
                return
            tokens = tokens[:-2]
        if len(tokens) < 2:
            self.error(
                line, line.column, codes.MISSING_ARGUMENT, "a step needs an actor and a verb"
            )
            return
        actor, instance = _split_instance(tokens[0].text)
        if not IDENT.match(actor) or (instance is not None and not IDENT.match(instance)):
            self.error(line, tokens[0].column, codes.BAD_TOKEN, f"bad actor {tokens[0].text!r}")
            return
        verb = tokens[1].text
        arity = VERBS.get(verb)
        if arity is None:
            self.error(line, tokens[1].column, codes.UNKNOWN_VERB, f"unknown verb {verb!r}")
            return
        rest = tokens[2:]
        positional = [t.value for t in rest[:arity] if t.kind != WORD or "=" not in t.text]
        if len(positional) < arity:
            self.error(
                line,
                tokens[1].column,
                codes.MISSING_ARGUMENT,
                f"{verb} takes {arity} positional argument(s)",
            )
            return
        rest = rest[arity:]
        alias = None
        if len(rest) >= 2 and rest[0].text == "as":
            alias = rest[1].text
            if not IDENT.match(alias):
                self.error(line, rest[1].column, codes.BAD_TOKEN, f"bad id {alias!r}")
                return
            rest = rest[2:]
        args = self._pairs(line, tuple(rest))
        if args is None:
            return
        self.steps.append(
            ScenarioStep(
                tick,
                actor,
                instance,
                verb,
                tuple(positional),
                args,
                alias,
                expect_error,
                line.number,
            )
        )

    def _pairs(self, line: Line, tokens: Tuple[Any, ...]) -> Optional[Dict[str, Any]]:
        reader = ValueReader(tokens, line.number, self.sink)
        pairs: Dict[str, Any] = {}
        while not reader.at_end():
            ok, key, value = reader.pair()
            if not ok:
                return None
            pairs[key] = value
        return pairs

    def _expect(self, line: Line) -> None:
        tick = self._line_tick(line)
        if tick is None:
            return
        if len(line.tokens) < 5:
            self.error(
                line, line.column, codes.BAD_EXPECTATION, "expect <tick> <subject> <op> <value>"
            )
            return
        subject, instance = _split_instance(line.tokens[2].text)
        prefix, colon, rest = subject.partition(":")
        if prefix not in SUBJECTS or not colon or not rest:
            self.error(
                line, line.tokens[2].column, codes.BAD_EXPECTATION, f"unknown subject {subject!r}"
            )
            return
        op = line.tokens[3].text
        if op not in OPERATORS:
            self.error(
                line, line.tokens[3].column, codes.BAD_EXPECTATION, f"unknown operator {op!r}"
            )
            return
        reader = ValueReader(line.tokens[4:], line.number, self.sink)
        ok, value = reader.value()
        if not ok:
            return
        if not reader.at_end():
            self.error(line, reader.column(), codes.EXTRA_ARGUMENT, "one value per expectation")
            return
        self.expectations.append(Expectation(tick, subject, instance, op, value, line.number))


def parse_scenario(source: Union[str, bytes]) -> ParseResult:
    """Parse a scenario script. Never raises on bad input."""
    sink = DiagnosticSink()
    text = decode(source, sink)
    script = ScenarioParser(scan(text, sink), sink).parse()
    return ParseResult(None if sink.failed else script, sink.sorted())
