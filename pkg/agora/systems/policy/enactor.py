"""Turns decisions into changes.

A passed decision whose subject names an effect (`op=...`) is enacted as that effect. Any other
decision is mapped through the `outcomes` policy onto `target_module.target_policy`.

Effects:
  set_policy  module policy value
  grant       level subject action [scope]
  restrict    level action
  revoke      level action [subject scope]
  install     org kind [as] [policies]
  set_resource resource key value
"""
import logging
from typing import Any, Dict, Optional

from agora.base_types import DecisionValue
from agora.errors import ConfigReferenceError, PolicyBoundsViolation
from agora.kernel.kernel_types import Grant, Restriction, Scope
from agora.lang.govspec import selector_from_text
from agora.runtime import dispatcher
from agora.runtime.behavior import GovBehavior, register_behavior
from agora.runtime.context import InvocationContext
from agora.runtime.ports import coerce_port_value
from agora.runtime.runtime_types import OutputBundle, PolicyChange, PortType

logger = logging.getLogger(__name__)


def permission_change(effect: Dict[str, Any], authorized_by: Optional[int]) -> PolicyChange:
    op = effect["op"]
    level = str(effect.get("level", "/"))
    scope = str(effect.get("scope", Scope.SUBTREE.value))
    if op == "restrict" or (op == "revoke" and "subject" not in effect):
        value = Restriction(str(effect["action"]), scope).to_value()
    else:
        selector = selector_from_text(str(effect.get("subject", "")))
        if selector is None:
            raise PolicyBoundsViolation("subject", effect.get("subject"), "bad selector in effect")
        value = Grant(selector, str(effect["action"]), scope).to_value()
    return PolicyChange({"level": level, "entry": op}, value, authorized_by)


@register_behavior("enactor")
class Enactor(GovBehavior):
    def op_enact(self, ctx: InvocationContext, args: Dict[str, Any]) -> OutputBundle:
        decision: DecisionValue = args["decision"]
        subject = decision.subject or {}
        if "op" in subject:
            if not decision.passed:
                ctx.emit("enactor.skipped", {"reason": "not passed", "effect": subject})
                return {}
            change = self.enact_effect(ctx, subject)
        else:
            change = self.apply_outcome(ctx, decision)
        return {"change": change} if change is not None else {}

    def on_response(self, ctx: InvocationContext, response: Dict[str, Any]) -> None:
        """A decision answered by another Instance is enacted like a wired one."""
        payload = response.get("payload")
        if response.get("status") != "ok" or not isinstance(payload, dict):
            return
        decision = coerce_port_value(PortType.DECISION.value, payload.get("decision"))
        if not isinstance(decision, DecisionValue):
            return
        outputs = self.op_enact(ctx, {"decision": decision})
        if outputs and ctx.last_seq is not None:
            ctx.output(outputs)

    def apply_outcome(
        self, ctx: InvocationContext, decision: DecisionValue
    ) -> Optional[PolicyChange]:
        outcome_key = "pass" if decision.passed else "fail"
        outcomes: Dict[str, Any] = ctx.policy("outcomes")
        target = ctx.policy("target_module")
        if not target or outcome_key not in outcomes:
            ctx.emit("enactor.skipped", {"reason": f"no outcome for {outcome_key}"})
            return None
        change = PolicyChange(
            {"module_id": target, "policy": ctx.policy("target_policy")},
            outcomes[outcome_key],
            ctx.last_seq,
        )
        self.apply(ctx, change)
        return change

    def apply(self, ctx: InvocationContext, change: PolicyChange) -> None:
        event = dispatcher.apply_policy_change(
            ctx.instance, change, ctx.module_actor, ctx.last_seq, via_module=ctx.module
        )
        ctx.adopt(event)

    def enact_effect(
        self, ctx: InvocationContext, effect: Dict[str, Any]
    ) -> Optional[PolicyChange]:
        op = effect["op"]
        if op == "set_policy":
            change = PolicyChange(
                {"module_id": str(effect["module"]), "policy": str(effect["policy"])},
                effect["value"],
                ctx.last_seq,
            )
            self.apply(ctx, change)
            return change
        if op in ("grant", "restrict", "revoke"):
            change = permission_change(effect, ctx.last_seq)
            self.apply(ctx, change)
            return change
        if op == "install":
            self.install(ctx, effect)
            return None
        if op == "set_resource":
            ctx.set_resource_state(str(effect["resource"]), str(effect["key"]), effect["value"])
            return None
        raise PolicyBoundsViolation("effect", op, f"unknown effect {op!r}")

    def install(self, ctx: InvocationContext, effect: Dict[str, Any]) -> None:
        repository = ctx.instance.repository
        if repository is None:
            raise ConfigReferenceError(str(effect["kind"]), "no module repository to install from")
        module = dispatcher.install(
            ctx.instance,
            str(effect.get("org", ctx.module.host_org)),
            repository.manifest(str(effect["kind"])),
            effect.get("policies", {}),
            ctx.module_actor,
            module_id=effect.get("as") or None,
            caused_by=ctx.last_seq,
            via_module=ctx.module,
        )
        ctx.adopt(ctx.instance.event_log[-1])
        logger.info("%s installed %s", ctx.module.module_id, module.module_id)
