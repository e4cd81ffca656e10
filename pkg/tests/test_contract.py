import pytest

from agora.errors import AlreadySettled, EnforcementBlocked, PolicyBoundsViolation
from agora.federation.network import SimNetwork
from agora.runtime import dispatcher


def condition(at_least):
    spec = "measure=installed, targets=[/], aggregation=count, output_type=binary"
    return f'{{condition={{{spec}, predicate=">={at_least}"}}}}'


def owed(amount):
    return f"{{obligation={{resource=treasury, key=balance, amount={amount}}}}}"


def enforcer_spec(terms):
    return (
        "instance enforcer seed 3 external_api on\n"
        "user ada\n"
        "resource treasury ledger balance=0\n"
        "members user:ada\n"
        "grant members:/ module.invoke:*\n"
        "install contract as pact\n"
        "  counterparty payer\n"
        "  counterparty_module pact\n"
        "  credit {resource=treasury, key=balance}\n"
        f"  terms [{', '.join(terms)}]\n"
    )


def payer_spec(terms):
    return (
        "instance payer seed 4 external_api on\n"
        "user bo\n"
        "resource treasury ledger balance=100\n"
        "members user:bo\n"
        "grant members:/ module.invoke:*\n"
        "grant user:remote:enforcer module.invoke:pay_restitution\n"
        "install contract as pact\n"
        "  counterparty enforcer\n"
        "  counterparty_module pact\n"
        "  obligation {resource=treasury, key=balance, amount=7}\n"
        f"  terms [{', '.join(terms)}]\n"
    )


ENFORCER = enforcer_spec([condition(1), condition(9), condition(1)])
PAYER = payer_spec([owed(10), owed(20), owed(5)])


@pytest.fixture
def parties(load):
    def _parties(enforcer_text=ENFORCER, payer_text=PAYER):
        enforcer, payer = load(enforcer_text), load(payer_text)
        network = SimNetwork()
        network.join(enforcer)
        network.join(payer)
        return enforcer, payer, network

    return _parties


def kinds(instance, kind):
    return [e for e in instance.event_log if e.kind == kind]


def test_check_enforces_every_breached_term(parties):
    enforcer, payer, network = parties()
    assert dispatcher.invoke(enforcer, "pact", "check") == {"status": "breached"}
    breached = kinds(enforcer, "contract.breached")
    assert [(e.payload["breach"], e.payload["term"]) for e in breached] == [
        ("pact@0", 0),
        ("pact@0.2", 2),
    ]
    assert len(kinds(enforcer, "monitor.queried")) == 3
    network.pump(0)
    assert payer.resources["treasury"].state["balance"] == 85
    assert enforcer.resources["treasury"].state["balance"] == 15
    assert payer.modules["pact"].state["paid"] == ["pact@0", "pact@0.2"]
    assert enforcer.modules["pact"].state["status"] == "settled"


def test_check_twice_in_a_tick_sends_nothing_new(parties):
    enforcer, _, _ = parties()
    dispatcher.invoke(enforcer, "pact", "check")
    with pytest.raises(AlreadySettled):
        dispatcher.invoke(enforcer, "pact", "check")
    assert len(kinds(enforcer, "federation.sent")) == 2


def test_empty_terms_fall_back_to_the_plain_policies(parties):
    enforcer, payer, network = parties(enforcer_spec([]), payer_spec([]))
    dispatcher.invoke(enforcer, "pact", "check")
    network.pump(0)
    assert [e.payload["breach"] for e in kinds(enforcer, "contract.breached")] == ["pact@0"]
    assert payer.resources["treasury"].state["balance"] == 93


def test_unfederated_contract_is_blocked(load):
    enforcer = load(ENFORCER)
    with pytest.raises(EnforcementBlocked) as info:
        dispatcher.invoke(enforcer, "pact", "check")
    assert info.value.side == "local"
    assert "status" not in enforcer.modules["pact"].state
    assert not kinds(enforcer, "contract.breached")


def test_unknown_term_is_out_of_bounds(parties):
    enforcer, payer, _ = parties()
    with pytest.raises(PolicyBoundsViolation):
        dispatcher.invoke(enforcer, "pact", "enforce", {"evidence": True, "term": 3})
    with pytest.raises(PolicyBoundsViolation):
        dispatcher.invoke(payer, "pact", "pay_restitution", {"breach": "x@1", "term": 9})
    assert payer.resources["treasury"].state["balance"] == 100
