"""Cross-instance contracts with automatic restitution.

Both parties install a contract module. When the enforcing side sees breach evidence it asks
the counterparty's contract, over federation, to pay restitution; the payer debits its
obligation resource once per breach and the enforcer credits its own resource once the payment
is confirmed.

A contract holds a list of terms, each a condition (a monitor spec) and an obligation (a
resource debit on the payer). An empty `terms` policy means a single term built from the
`condition` and `obligation` policies. Term 0 breaches are named `<module>@<tick>`; later terms
add `.<index>`.
"""
import logging
from enum import Enum
from typing import Any, Dict, List, Optional

from agora.errors import AlreadySettled, EnforcementBlocked, PolicyBoundsViolation, SendBlocked
from agora.federation.federation_types import MessageKind, Status
from agora.federation.protocol import send
from agora.monitors.monitor_types import MonitorSpec
from agora.monitors.query import monitor_query
from agora.runtime.behavior import GovBehavior, register_behavior
from agora.runtime.context import InvocationContext
from agora.runtime.runtime_types import OutputBundle

logger = logging.getLogger(__name__)

BREACH_PREFIX = "breach/"


class ContractStatus(str, Enum):
    ACTIVE = "active"
    BREACHED = "breached"
    SETTLED = "settled"
    BLOCKED = "blocked"


def _add(current: Any, amount: Any) -> Any:
    base = current if isinstance(current, (int, float)) and not isinstance(current, bool) else 0
    return base + amount


def breach_name(module_id: str, tick: int, term: int) -> str:
    return f"{module_id}@{tick}" + (f".{term}" if term else "")


@register_behavior("contract")
class Contract(GovBehavior):
    def terms(self, ctx: InvocationContext) -> List[Dict[str, Any]]:
        """Each term as {condition, obligation}; missing parts fall back to the module policies."""
        declared: List[Any] = ctx.policy("terms") or [{}]
        terms = []
        for index, term in enumerate(declared):
            if not isinstance(term, dict):
                raise PolicyBoundsViolation("terms", term, f"term {index} is not a map")
            terms.append(
                {
                    "condition": term.get("condition", ctx.policy("condition")),
                    "obligation": term.get("obligation", ctx.policy("obligation")),
                }
            )
        return terms

    def term(self, ctx: InvocationContext, index: Any) -> Dict[str, Any]:
        terms = self.terms(ctx)
        if isinstance(index, bool) or not isinstance(index, int) or not 0 <= index < len(terms):
            raise PolicyBoundsViolation("terms", index, f"no term {index!r}")
        return terms[index]

    def op_check(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        """Evaluate every term's condition monitor and enforce each one that comes out true."""
        breached = []
        for index, term in enumerate(self.terms(ctx)):
            report = monitor_query(
                ctx.instance,
                MonitorSpec.from_value(term["condition"]),
                ctx.module_actor,
                via_module=ctx.module,
                caused_by=ctx.last_seq,
            )
            ctx.adopt(ctx.instance.event_log[-1])
            if report.value:
                breached.append((index, report.value))
        for index, _ in breached:
            self.check_unseen(ctx, index)
        for index, evidence in breached:
            self.enforce(ctx, evidence, index)
        return {"status": ctx.get("status", ContractStatus.ACTIVE.value)}

    def op_enforce(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        return self.enforce(ctx, args["evidence"], args.get("term", 0))

    def check_unseen(self, ctx: InvocationContext, term: int) -> str:
        breach_id = breach_name(ctx.module.module_id, ctx.tick, term)
        if ctx.get(BREACH_PREFIX + breach_id) is not None:
            raise AlreadySettled(f"breach {breach_id} is already being enforced")
        return breach_id

    def enforce(self, ctx: InvocationContext, evidence: Any, term: int = 0) -> OutputBundle:
        if not evidence:
            return {"status": ctx.get("status", ContractStatus.ACTIVE.value)}
        self.term(ctx, term)
        breach_id = self.check_unseen(ctx, term)
        network = ctx.instance.federation
        if network is None:
            raise EnforcementBlocked("local", f"{ctx.instance.instance_id} is not federated")
        try:
            sent = send(
                ctx.instance,
                network,
                ctx.policy("counterparty"),
                MessageKind.INVOKE.value,
                {
                    "org": ctx.policy("counterparty_org"),
                    "module_id": ctx.policy("counterparty_module"),
                },
                "pay_restitution",
                {"breach": breach_id, "term": term},
                ctx.module_actor,
                module_id=ctx.module.module_id,
                caused_by=ctx.last_seq,
            )
        except SendBlocked as exc:
            raise EnforcementBlocked("local", str(exc)) from exc
        ctx.adopt(sent.event)
        ctx.emit(
            "contract.breached",
            {
                "breach": breach_id,
                "term": term,
                "evidence": evidence,
                "message_id": sent.message.message_id,
            },
        )
        ctx.put(
            BREACH_PREFIX + breach_id,
            {"status": ContractStatus.BREACHED.value, "message_id": sent.message.message_id},
        )
        ctx.put("status", ContractStatus.BREACHED.value)
        return {"status": ContractStatus.BREACHED.value}

    def op_pay_restitution(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        breach_id = str(args["breach"])
        paid: List[str] = ctx.get("paid", [])
        if breach_id in paid:
            raise AlreadySettled(f"restitution for {breach_id} has already been paid")
        obligation = self.term(ctx, args.get("term", 0))["obligation"]
        resource_id, key, amount = obligation["resource"], obligation["key"], obligation["amount"]
        current = ctx.instance.resources[resource_id].state.get(key, 0)
        ctx.set_resource_state(resource_id, key, _add(current, -amount))
        ctx.emit("contract.restitution_paid", {"breach": breach_id, "amount": amount})
        paid.append(breach_id)
        ctx.put("paid", paid)
        return {"paid": amount}

    def op_status(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        return {"status": ctx.get("status", ContractStatus.ACTIVE.value)}

    def _breach_for(self, ctx: InvocationContext, message_id: str) -> Optional[str]:
        for key in ctx.keys(BREACH_PREFIX):
            if ctx.get(key)["message_id"] == message_id:
                return key[len(BREACH_PREFIX) :]
        return None

    def on_response(self, ctx: InvocationContext, response: Dict[str, Any]) -> None:
        breach_id = self._breach_for(ctx, response["in_reply_to"])
        if breach_id is None:
            return
        breach = ctx.get(BREACH_PREFIX + breach_id)
        if breach["status"] == ContractStatus.SETTLED.value:
            raise AlreadySettled(f"breach {breach_id} is already settled")
        payload = response["payload"] if isinstance(response["payload"], dict) else {}
        if response["status"] == Status.OK.value:
            amount = payload.get("paid", 0)
            credit = ctx.policy("credit")
            current = ctx.instance.resources[credit["resource"]].state.get(credit["key"], 0)
            ctx.set_resource_state(credit["resource"], credit["key"], _add(current, amount))
            ctx.emit("contract.settled", {"breach": breach_id, "amount": amount})
            breach["status"] = ContractStatus.SETTLED.value
        else:
            ctx.emit(
                "contract.enforcement_blocked",
                {
                    "breach": breach_id,
                    "side": "remote",
                    "status": response["status"],
                    "detail": payload,
                },
            )
            breach["status"] = ContractStatus.BLOCKED.value
            logger.warning(
                "%s: enforcement of %s blocked remotely", ctx.module.module_id, breach_id
            )
        ctx.put(BREACH_PREFIX + breach_id, breach)
        ctx.put("status", breach["status"])
