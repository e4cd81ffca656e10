"""The event reducer.

Every state transition of an Instance is an Event applied by exactly one reducer function here.
Live operations call `record`, replay calls `apply_event` on a fresh Instance, so both paths share
the same code and a log always rebuilds the state it came from.
"""
import copy
from collections import OrderedDict
from typing import Any, Callable, Dict, Optional

from agora.base_types import INSTANCE_LEVEL, Actor, EntityRef, Event, Payload, render_actor
from agora.kernel.kernel_types import (
    Grant,
    Instance,
    Org,
    PermissionTable,
    Resource,
    Restriction,
    Selector,
    User,
)
from agora.runtime.runtime_types import GovModuleInstance, Wire, manifest_from_value
from agora.utils.serialization import canonical_json, to_value


def record(
    instance: Instance,
    kind: str,
    payload: Payload,
    actor: Actor = "system",
    caused_by: Optional[int] = None,
) -> Event:
    """Append one Event to the Instance log and apply it."""
    seq = len(instance.event_log)
    assert caused_by is None or 0 <= caused_by < seq, "caused_by must point backwards"
    event = Event(
        seq=seq,
        tick=instance.clock,
        actor=render_actor(actor),
        kind=kind,
        payload=to_value(payload),
        caused_by=caused_by,
    )
    # Fails loudly on anything that is not a plain Value.
    canonical_json(event.payload)
    apply_event(instance, event)
    instance.event_log.append(event)
    for listener in instance.listeners:
        listener(event)
    return event


def apply_event(instance: Instance, event: Event) -> None:
    instance.clock = max(instance.clock, event.tick)
    reducer = _REDUCERS.get(event.kind)
    # Kinds without a reducer are annotations (jury.selected, ballot.closed, ...).
    if reducer is not None:
        reducer(instance, event.payload)


def permission_table(instance: Instance, level: str) -> PermissionTable:
    if level == INSTANCE_LEVEL:
        return instance.permission_policy
    return instance.orgs[level].permission_table


def grant_from_value(value: Dict[str, Any]) -> Grant:
    subject = value["subject"]
    selector = Selector(subject["kind"], subject["arg"], subject["value"])
    return Grant(selector, value["action"], value["scope"])


def restriction_from_value(value: Dict[str, Any]) -> Restriction:
    return Restriction(value["action"], value["scope"])


def _user_created(instance: Instance, p: Payload) -> None:
    instance.users[p["user_id"]] = User(p["user_id"], p["kind"], copy.deepcopy(p["attributes"]))


def _resource_created(instance: Instance, p: Payload) -> None:
    instance.resources[p["resource_id"]] = Resource(
        p["resource_id"], p["resource_type"], copy.deepcopy(p["state"]), p.get("platform_handle")
    )


def _org_created(instance: Instance, p: Payload) -> None:
    instance.orgs[p["path"]] = Org(org_id=p["org_id"], path=p["path"], parent=p["parent"])
    if p["parent"] is not None:
        instance.orgs[p["parent"]].children.append(p["path"])


def _member_added(instance: Instance, p: Payload) -> None:
    ref = EntityRef(p["entity_kind"], p["entity_id"], instance.instance_id)
    instance.orgs[p["org"]].members[ref.render()] = ref


def _member_removed(instance: Instance, p: Payload) -> None:
    ref = EntityRef(p["entity_kind"], p["entity_id"], instance.instance_id)
    instance.orgs[p["org"]].members.pop(ref.render(), None)


def _permission_granted(instance: Instance, p: Payload) -> None:
    permission_table(instance, p["level"]).grants.append(grant_from_value(p["grant"]))


def _permission_restricted(instance: Instance, p: Payload) -> None:
    permission_table(instance, p["level"]).restrictions.append(
        restriction_from_value(p["restriction"])
    )


def _permission_revoked(instance: Instance, p: Payload) -> None:
    _revoke(permission_table(instance, p["level"]), p["entry"], p["value"])


def _revoke(table: PermissionTable, entry: str, value: Dict[str, Any]) -> None:
    if entry == "grant":
        grant = grant_from_value(value)
        if grant in table.grants:
            table.grants.remove(grant)
    else:
        restriction = restriction_from_value(value)
        if restriction in table.restrictions:
            table.restrictions.remove(restriction)


def _module_installed(instance: Instance, p: Payload) -> None:
    if "source_text" in p:
        instance.sources[p["source_hash"]] = p["source_text"]
    manifest_value = p["manifest"]
    manifest = manifest_from_value(
        manifest_value, instance.sources.get(manifest_value["source_hash"], "")
    )
    instance.modules[p["module_id"]] = GovModuleInstance(
        module_id=p["module_id"],
        manifest=manifest,
        policy_values=copy.deepcopy(p["policies"]),
        host_org=p["org"],
        parts=list(p.get("parts", [])),
    )
    for part in p.get("parts", []):
        instance.modules[part].composite = p["module_id"]
    instance.orgs[p["org"]].installed.append(p["module_id"])


def _module_wired(instance: Instance, p: Payload) -> None:
    instance.modules[p["source_module"]].wiring.append(
        Wire(p["output"], p["target_module"], p["input"])
    )


def _module_state_changed(instance: Instance, p: Payload) -> None:
    instance.modules[p["module_id"]].state[p["key"]] = copy.deepcopy(p["value"])


def _policy_changed(instance: Instance, p: Payload) -> None:
    target = p["target"]
    if "module_id" in target:
        module = instance.modules[target["module_id"]]
        module.policy_values[target["policy"]] = copy.deepcopy(p["new"])
        return
    table = permission_table(instance, target["level"])
    entry = target["entry"]
    if entry == "grant":
        table.grants.append(grant_from_value(p["new"]))
    elif entry == "restrict":
        table.restrictions.append(restriction_from_value(p["new"]))
    else:
        _revoke(table, target["revoke"], p["new"])


def _resource_state_changed(instance: Instance, p: Payload) -> None:
    instance.resources[p["resource_id"]].state[p["key"]] = copy.deepcopy(p["new"])


def _user_attribute_changed(instance: Instance, p: Payload) -> None:
    instance.users[p["user_id"]].attributes[p["key"]] = copy.deepcopy(p["new"])


def _rng_advanced(instance: Instance, p: Payload) -> None:
    instance.rng_states[p["stream"]] = int(p["state"])


def _federation_sent(instance: Instance, p: Payload) -> None:
    instance.fed_counter += 1
    if p["kind"] != "response":
        instance.pending[p["message_id"]] = {
            "to": p["to"],
            "kind": p["kind"],
            "op": p["op"],
            "module_id": p.get("module_id", ""),
        }


def _federation_received(instance: Instance, p: Payload) -> None:
    if p["kind"] == "response":
        instance.pending.pop(p.get("in_reply_to", ""), None)
        _remember(instance, p["from"], p["message_id"], {"status": "handled"})


def _federation_responded(instance: Instance, p: Payload) -> None:
    instance.fed_counter += 1
    _remember(
        instance,
        p["to"],
        p["in_reply_to"],
        {
            "message_id": p["message_id"],
            "status": p["status"],
            "payload": copy.deepcopy(p["payload"]),
        },
    )


def _remember(instance: Instance, peer: str, message_id: str, response: Dict[str, Any]) -> None:
    cache = instance.dedup.setdefault(peer, OrderedDict())
    cache[message_id] = response
    while len(cache) > instance.dedup_cache_size:
        cache.popitem(last=False)


_REDUCERS: Dict[str, Callable[[Instance, Payload], None]] = {
    "user.created": _user_created,
    "resource.created": _resource_created,
    "org.created": _org_created,
    "member.added": _member_added,
    "member.removed": _member_removed,
    "permission.granted": _permission_granted,
    "permission.restricted": _permission_restricted,
    "permission.revoked": _permission_revoked,
    "module.installed": _module_installed,
    "module.wired": _module_wired,
    "module.state_changed": _module_state_changed,
    "policy.changed": _policy_changed,
    "resource.state_changed": _resource_state_changed,
    "user.attribute_changed": _user_attribute_changed,
    "rng.advanced": _rng_advanced,
    "federation.sent": _federation_sent,
    "federation.received": _federation_received,
    "federation.responded": _federation_responded,
}

STATEFUL_KINDS = frozenset(_REDUCERS) | {"instance.created"}
