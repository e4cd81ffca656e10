from typing import Any, Dict, List, Sequence

from agora.base_types import SYSTEM_ACTOR, Actor
from agora.errors import CompareUnavailable, SendBlocked
from agora.federation.federation_types import MessageKind, Status
from agora.federation.network import SimNetwork
from agora.federation.protocol import send
from agora.kernel.events import record
from agora.monitors.monitor_types import MonitorReport, MonitorSpec
from agora.monitors.query import monitor_query
from agora.utils.hashing import fnv1a64_hex
from agora.utils.serialization import canonical_json

UNAVAILABLE = "unavailable"


def cross_instance_compare(
    network: SimNetwork,
    origin: str,
    spec: MonitorSpec,
    instance_ids: Sequence[str],
    actor: Actor = SYSTEM_ACTOR,
) -> MonitorReport:
    """Run `spec` on each listed Instance, in instance_id order, and gather the values.

    Remote Instances are asked one at a time over the network; a remote that refuses, fails or
    does not answer within the current tick shows up as {"status": "unavailable"}.
    """
    instance = network.instances[origin]
    rows: List[Dict[str, Any]] = []
    remotes = 0
    answered = 0
    for instance_id in sorted(set(instance_ids)):
        if instance_id == origin:
            report = monitor_query(instance, spec, actor)
            rows.append({"instance": instance_id, "value": report.value})
            continue
        remotes += 1
        try:
            sent = send(
                instance,
                network,
                instance_id,
                MessageKind.QUERY.value,
                {"org": "/"},
                "monitor",
                {"spec": spec.to_value()},
                actor,
            )
        except SendBlocked:
            rows.append({"instance": instance_id, "status": UNAVAILABLE})
            continue
        network.pump(instance.clock)
        response = network.take_response(sent.message.message_id)
        if response is None or response.status != Status.OK.value:
            rows.append({"instance": instance_id, "status": UNAVAILABLE})
            continue
        answered += 1
        rows.append({"instance": instance_id, "value": response.payload["value"]})
    if remotes and not answered:
        raise CompareUnavailable(f"none of {remotes} remote instances answered")
    method = {"compare": spec.to_value(), "instances": sorted(set(instance_ids))}
    digest = fnv1a64_hex(canonical_json(rows).encode("utf-8"))
    record(
        instance,
        "monitor.compared",
        {"spec": method, "value": rows, "inputs_digest": digest},
        actor,
    )
    return MonitorReport(instance.clock, rows, digest, method)
