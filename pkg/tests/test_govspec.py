import numpy as np
import pytest

from agora.lang import diagnostics as codes
from agora.lang.govspec import canonicalize, module_ids, parse_govspec

BASE = """\
instance demo seed 9 external_api off
platform forum 2.1
user ann role=admin
user bot1 bot
resource wiki page title="Front page" platform_handle=w-1
members user:ann user:bot1
grant members:/ module.invoke:*
install referendum as vote
  duration 4
install enactor
wire vote.decision -> enactor-1.decision
org mods
  members user:ann
  grant user:ann org.view self
"""


def codes_of(result):
    return [d.code for d in result.diagnostics]


def test_parses_a_full_document(repository):
    result = parse_govspec(BASE, repository)
    assert result.ok, [d.render() for d in result.diagnostics]
    doc = result.doc
    assert doc.instance_id == "demo"
    assert doc.seed == 9
    assert doc.external_api is False
    assert doc.platform.name == "forum"
    assert doc.users[0].attributes == {"role": "admin"}
    assert doc.users[1].kind == "bot"
    assert doc.resources[0].platform_handle == "w-1"
    assert doc.resources[0].state == {"title": "Front page"}
    assert [b.path for b in doc.orgs()] == ["/", "/mods"]
    assert set(module_ids(doc)) == {"vote", "enactor-1"}


def test_canonical_form_is_a_fixed_point(repository):
    doc = parse_govspec(BASE, repository).doc
    text = canonicalize(doc)
    again = parse_govspec(text, repository)
    assert again.ok
    assert again.doc == doc
    assert canonicalize(again.doc) == text


def test_canonical_form_ignores_comments_and_grant_order(repository):
    reordered = BASE.replace(
        "grant members:/ module.invoke:*",
        "# who may act\ngrant members:/ org.view\ngrant members:/ module.invoke:*",
    )
    swapped = BASE.replace(
        "grant members:/ module.invoke:*",
        "grant members:/ module.invoke:*   # trailing\ngrant members:/ org.view",
    )
    a = parse_govspec(reordered, repository).doc
    b = parse_govspec(swapped, repository).doc
    assert canonicalize(a) == canonicalize(b)


@pytest.mark.parametrize(
    "text, code",
    [
        ("user ann\n", codes.BAD_HEADER),
        ("instance x\n\tuser ann\n", codes.TAB_INDENT),
        ("instance x\n   user ann\n", codes.BAD_INDENT),
        ('instance x\nuser ann name="open\n', codes.UNTERMINATED_STRING),
        ("instance x\nfrobnicate\n", codes.UNKNOWN_KEYWORD),
        ("instance x\nmembers user:ghost\n", codes.UNDECLARED_REFERENCE),
        ("instance x\nuser a\nuser a\n", codes.DUPLICATE_DECLARATION),
        ("instance x\ninstall nosuchkind\n", codes.UNKNOWN_MODULE_KIND),
        ("instance x\ninstall referendum\n  duration 0\n", codes.POLICY_VIOLATION),
        (
            "instance x\ninstall referendum as r\nwire r.decision -> q.decision\n",
            codes.UNDECLARED_MODULE,
        ),
        (
            "instance x\ninstall referendum as r\ninstall jury as j\nwire r.decision -> j.user\n",
            codes.PORT_MISMATCH,
        ),
        ("instance x seed -1\n", codes.BAD_VALUE),
        ("instance x\ngrant everyone org.view sideways\n", codes.BAD_SCOPE),
        ("instance x\nuser a\norg o\n  members user:a\n", codes.PARENT_MEMBERSHIP),
        (
            "instance x\nrestrict org.view\norg o\n  grant everyone org.view\n",
            codes.RESTRICTED_GRANT,
        ),
    ],
)
def test_diagnostic_codes(repository, text, code):
    result = parse_govspec(text, repository)
    assert not result.ok
    assert code in codes_of(result), [d.render() for d in result.diagnostics]


def test_diagnostics_are_located_and_sorted(repository):
    result = parse_govspec("instance x\nuser ok\nfrobnicate\nwhatever\n", repository)
    lines = [d.line for d in result.diagnostics]
    assert lines == sorted(lines)
    assert result.diagnostics[0].line == 3
    assert result.diagnostics[0].render("f.govspec").startswith("f.govspec:3:1: error GS101")


def test_invalid_utf8_is_reported_not_raised(repository):
    result = parse_govspec(b"instance x\nuser \xff\n", repository)
    assert codes.BAD_ENCODING in codes_of(result)


def test_parse_never_raises_on_garbage(repository):
    garbage = ["", "{", "instance", "instance x\ninstall", "instance x\norg\n  org\n", "]]]] ==="]
    for text in garbage:
        result = parse_govspec(text, repository)
        assert isinstance(result.diagnostics, list)


FRAGMENTS = b"{ } [ ] = -> \" \\ # * : install wire grant restrict members seed -1".split(b" ") + [
    b"\t", b"  ", b"\n", b"\r\n", b"org x", b"\x00", b"\xff", "é".encode("utf-8"), b"9" * 23
]


def mutate(text, rng):
    data = bytearray(text)
    for _ in range(int(rng.integers(1, 4))):
        at = int(rng.integers(len(data) + 1))
        op = int(rng.integers(4))
        if op == 0:
            del data[at : at + int(rng.integers(1, 12))]
        elif op == 1:
            data[at:at] = FRAGMENTS[int(rng.integers(len(FRAGMENTS)))]
        elif op == 2 and data:
            data[min(at, len(data) - 1)] = int(rng.integers(256))
        else:
            lines = bytes(data).split(b"\n")
            i, j = (int(v) for v in rng.integers(len(lines), size=2))
            lines[i], lines[j] = lines[j], lines[i]
            data = bytearray(b"\n".join(lines))
    return bytes(data)


def test_parse_survives_random_mutations(repository):
    rng = np.random.default_rng(1337)
    source = BASE.encode("utf-8")
    accepted = 0
    for _ in range(10_000):
        result = parse_govspec(mutate(source, rng), repository)
        assert result.doc is not None or result.diagnostics
        accepted += result.ok
    assert 0 < accepted < 10_000
