"""Cross-instance requests: send, gated receive, responses.

Inbound requests pass three gates in order: the Instance accepts external calls, the target
module allows them, and the permission lattice grants the action to the remote principal
"remote:<sender>". Only then is the request dispatched, with that principal as the actor.
Answered requests are cached per peer, so a redelivered message is answered again from the
cache and never dispatched twice.
"""
import json
import logging
from typing import Any, Dict, Optional, Tuple

from typing_extensions import NamedTuple

from agora.base_types import (
    INVOKE_PREFIX,
    ROOT_PATH,
    SYSTEM_ACTOR,
    Actor,
    Event,
    OrgPath,
    remote_principal,
)
from agora.errors import AgoraError, PermissionDenied, SendBlocked, StaleResponse
from agora.federation.codec import MalformedMessage, decode_message
from agora.federation.federation_types import EnqueueReceipt, FedMessage, Gate, MessageKind, Status
from agora.kernel.events import record
from agora.kernel.kernel_types import Instance
from agora.kernel.permissions import (
    EXTERNAL_CALL,
    action_matches,
    levels,
    resolve_permission,
    restrictions_in_effect,
)
from agora.monitors.monitor_types import MonitorSpec
from agora.monitors.query import monitor_query
from agora.runtime import dispatcher
from agora.runtime.ports import coerce_port_value
from agora.runtime.runtime_types import GovModuleInstance, PortType, manifest_to_value
from agora.utils.hashing import message_id
from agora.utils.serialization import to_value

logger = logging.getLogger(__name__)

UNKNOWN_TARGET = "unknown_target"
MALFORMED = "malformed"
QUERY_OPS = {"installed": "org.view", "monitor": "monitor.query"}


class Sent(NamedTuple):
    message: FedMessage
    event: Event
    receipt: EnqueueReceipt


def _next_id(instance: Instance) -> str:
    return message_id(instance.instance_id, instance.fed_counter)


def send(
    instance: Instance,
    network: Any,
    to_instance: str,
    kind: str,
    target: Dict[str, Any],
    op: str,
    args: Optional[Dict[str, Any]] = None,
    actor: Actor = SYSTEM_ACTOR,
    module_id: str = "",
    caused_by: Optional[int] = None,
) -> Sent:
    """Build a request from `instance` and put it on the wire.

    module_id names the local module whose on_response hook receives the answer.
    """
    if not instance.external_api_enabled:
        raise SendBlocked(f"{instance.instance_id} does not allow external calls")
    MessageKind(kind)
    message = FedMessage(
        message_id=_next_id(instance),
        from_instance=instance.instance_id,
        to_instance=to_instance,
        kind=kind,
        target={
            "org": str(target.get("org", ROOT_PATH)),
            "module_id": str(target.get("module_id", "")),
        },
        op=op,
        args=to_value(args or {}),
    )
    event = record(
        instance,
        "federation.sent",
        {
            "message_id": message.message_id,
            "to": to_instance,
            "kind": kind,
            "op": op,
            "target": message.target,
            "args": message.args,
            "module_id": module_id,
        },
        actor,
        caused_by,
    )
    receipt = network.transmit(message, instance.clock)
    return Sent(message, event, receipt)


def required_action(message: FedMessage) -> Optional[str]:
    if message.kind == MessageKind.QUERY.value:
        return QUERY_OPS.get(message.op)
    if message.kind == MessageKind.INVOKE.value:
        return INVOKE_PREFIX + message.op
    if message.kind == MessageKind.FETCH_SOURCE.value:
        return "org.view"
    return None


def _external_restricted(instance: Instance, path: OrgPath) -> bool:
    return any(
        action_matches(r.action, EXTERNAL_CALL)
        for level in levels(path)
        for r in restrictions_in_effect(instance, level)
    )


def evaluate_gates(
    instance: Instance, message: FedMessage
) -> Tuple[Dict[str, Optional[bool]], Optional[str], Optional[str]]:
    """Returns (gate results, blocking stage, error code); a gate not reached is None."""
    gates: Dict[str, Optional[bool]] = {g.value: None for g in Gate}
    gates[Gate.INSTANCE.value] = instance.external_api_enabled
    if not instance.external_api_enabled:
        return gates, Gate.INSTANCE.value, None
    module_id = message.target.get("module_id", "")
    module: Optional[GovModuleInstance] = instance.modules.get(module_id) if module_id else None
    path = module.host_org if module is not None else message.target.get("org", ROOT_PATH)
    action = required_action(message)
    if (module_id and module is None) or path not in instance.orgs or action is None:
        return gates, None, UNKNOWN_TARGET
    needs_module = message.kind in (MessageKind.INVOKE.value, MessageKind.FETCH_SOURCE.value)
    if needs_module and module is None:
        return gates, None, UNKNOWN_TARGET
    if module is not None:
        allowed = bool(module.policy_values.get("allow_external", module.manifest.allow_external))
        gates[Gate.MODULE.value] = allowed
        if not allowed:
            return gates, Gate.MODULE.value, None
    decision = resolve_permission(instance, remote_principal(message.from_instance), action, path)
    permitted = decision.allowed and not _external_restricted(instance, path)
    gates[Gate.PERMISSION.value] = permitted
    if not permitted:
        return gates, Gate.PERMISSION.value, None
    return gates, None, None


def dispatch(instance: Instance, message: FedMessage, cause: int) -> Any:
    """Run an admitted request as the remote principal; returns the response payload."""
    actor = remote_principal(message.from_instance)
    module_id = message.target.get("module_id", "")
    if message.kind == MessageKind.INVOKE.value:
        module = instance.modules[module_id]
        args = {}
        for name, value in message.args.items():
            port = module.manifest.input_port(name)
            if port is not None:
                value = coerce_port_value(port.port_type, value, instance.instance_id)
            args[name] = value
        outputs = dispatcher.invoke(instance, module_id, message.op, args, actor, caused_by=cause)
        return to_value(outputs)
    if message.kind == MessageKind.FETCH_SOURCE.value:
        bundle = dispatcher.fetch_source(instance, module_id, actor)
        return {"manifest": manifest_to_value(bundle.manifest), "text": bundle.text}
    if message.op == "monitor":
        spec = MonitorSpec.from_value(message.args.get("spec", {}))
        return monitor_query(instance, spec, actor, caused_by=cause).to_value()
    org = instance.orgs[message.target.get("org", ROOT_PATH)]
    return [
        {
            "module_id": m,
            "kind": instance.modules[m].manifest.module_kind,
            "version": instance.modules[m].manifest.version,
            "source_hash": instance.modules[m].manifest.source_ref.hash,
        }
        for m in org.installed
    ]


def _respond(
    instance: Instance,
    network: Any,
    request: FedMessage,
    status: str,
    payload: Any,
    cause: int,
    stage: Optional[str] = None,
) -> FedMessage:
    response = FedMessage(
        message_id=_next_id(instance),
        from_instance=instance.instance_id,
        to_instance=request.from_instance,
        kind=MessageKind.RESPONSE.value,
        target=dict(request.target),
        op=request.op,
        args={},
        in_reply_to=request.message_id,
        status=status,
        payload=payload,
    )
    record(
        instance,
        "federation.responded",
        {
            "message_id": response.message_id,
            "to": request.from_instance,
            "in_reply_to": request.message_id,
            "status": status,
            "stage": stage,
            "payload": payload,
        },
        SYSTEM_ACTOR,
        cause,
    )
    if network is not None:
        network.transmit(response, instance.clock)
    return response


def receive(instance: Instance, message: FedMessage, network: Any = None) -> Optional[FedMessage]:
    """Handle one inbound message; returns the response sent (None for inbound responses)."""
    if message.kind == MessageKind.RESPONSE.value:
        handle_response(instance, message)
        return None
    cached = instance.dedup.get(message.from_instance, {}).get(message.message_id)
    if cached is not None:
        logger.debug(
            "%s: duplicate %s answered from cache", instance.instance_id, message.message_id
        )
        response = FedMessage(
            message_id=cached["message_id"],
            from_instance=instance.instance_id,
            to_instance=message.from_instance,
            kind=MessageKind.RESPONSE.value,
            target=dict(message.target),
            op=message.op,
            args={},
            in_reply_to=message.message_id,
            status=cached["status"],
            payload=cached["payload"],
        )
        if network is not None:
            network.transmit(response, instance.clock)
        return response

    gates, stage, error = evaluate_gates(instance, message)
    received = record(
        instance,
        "federation.received",
        {
            "message_id": message.message_id,
            "from": message.from_instance,
            "kind": message.kind,
            "op": message.op,
            "target": dict(message.target),
            "gates": gates,
            "stage": stage,
        },
        SYSTEM_ACTOR,
    )
    if error is not None:
        return _respond(
            instance, network, message, Status.ERROR.value, {"error": error}, received.seq
        )
    if stage is not None:
        return _respond(
            instance, network, message, Status.DENIED.value, {"stage": stage}, received.seq, stage
        )
    try:
        payload = dispatch(instance, message, received.seq)
    except PermissionDenied as exc:
        return _respond(
            instance,
            network,
            message,
            Status.DENIED.value,
            {"stage": Gate.PERMISSION.value, "message": str(exc)},
            received.seq,
            Gate.PERMISSION.value,
        )
    except AgoraError as exc:
        payload = {"error": type(exc).__name__, "message": str(exc)}
        return _respond(instance, network, message, Status.ERROR.value, payload, received.seq)
    return _respond(instance, network, message, Status.OK.value, payload, received.seq)


def receive_frame(instance: Instance, body: bytes, network: Any = None) -> Optional[FedMessage]:
    """Decode and handle one frame body; malformed input gets error(malformed) when answerable."""
    try:
        message = decode_message(body)
    except MalformedMessage as exc:
        logger.warning("%s: malformed message: %s", instance.instance_id, exc)
        sender, mid = _salvage(body)
        if sender is None or mid is None:
            return None
        stub = FedMessage(mid, sender, instance.instance_id, MessageKind.QUERY.value, {}, "", {})
        received = record(
            instance,
            "federation.received",
            {
                "message_id": mid,
                "from": sender,
                "kind": "malformed",
                "op": "",
                "target": {},
                "gates": {},
                "stage": None,
            },
            SYSTEM_ACTOR,
        )
        error = {"error": MALFORMED}
        return _respond(instance, network, stub, Status.ERROR.value, error, received.seq)
    return receive(instance, message, network)


def _salvage(body: bytes) -> Tuple[Optional[str], Optional[str]]:
    try:
        value = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, ValueError):
        return None, None
    if not isinstance(value, dict):
        return None, None
    sender, mid = value.get("from_instance"), value.get("message_id")
    if isinstance(sender, str) and isinstance(mid, str):
        return sender, mid
    return None, None


def handle_response(instance: Instance, response: FedMessage, run_hooks: bool = True) -> Event:
    """Accept the answer to one of our requests and hand it to the module that asked."""
    pending = instance.pending.get(response.in_reply_to or "")
    if pending is None or pending["to"] != response.from_instance:
        raise StaleResponse(f"{instance.instance_id} is not waiting for {response.in_reply_to}")
    event = record(
        instance,
        "federation.received",
        {
            "message_id": response.message_id,
            "from": response.from_instance,
            "kind": MessageKind.RESPONSE.value,
            "op": response.op,
            "in_reply_to": response.in_reply_to,
            "status": response.status,
            "payload": response.payload,
        },
        SYSTEM_ACTOR,
    )
    module = instance.modules.get(pending["module_id"]) if pending["module_id"] else None
    if run_hooks and module is not None and not module.parts:
        dispatcher.run_hook_guarded(
            instance, module, "on_response", response.to_value(), cause=event.seq
        )
    return event


def remote_decision_to_policy(instance: Instance, response: FedMessage, translator_id: str) -> Any:
    """Feed a remote decision to a local translator; returns the PolicyChange made, if any."""
    event = handle_response(instance, response, run_hooks=False)
    if response.status != Status.OK.value or not isinstance(response.payload, dict):
        return None
    raw = response.payload.get("decision")
    if not isinstance(raw, dict):
        return None
    decision = coerce_port_value(PortType.DECISION.value, raw)
    if not decision.passed:
        return None
    outputs = dispatcher.invoke(
        instance, translator_id, "enact", {"decision": decision}, SYSTEM_ACTOR, caused_by=event.seq
    )
    return outputs.get("change")
