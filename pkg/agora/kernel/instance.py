"""State-transition primitives of the kernel.

Every function here checks its preconditions, then records exactly the Events that describe the
change. Nothing mutates an Instance except through `record`.
"""
import re
from typing import Any, Dict, List, Optional, Set, Tuple

from typing_extensions import NamedTuple

from agora.base_types import (
    INSTANCE_LEVEL,
    ROOT_PATH,
    SYSTEM_ACTOR,
    Actor,
    EntityKind,
    EntityRef,
    Event,
    OrgPath,
    UserKind,
    Value,
)
from agora.errors import (
    DuplicateEntity,
    DuplicateInstance,
    DuplicateOrg,
    MemberRemovalRejected,
    MembershipPreconditionFailed,
    UnknownAction,
    UnknownEntity,
    UnknownOrg,
)
from agora.kernel.events import record
from agora.kernel.kernel_types import (
    DEDUP_CACHE_SIZE,
    Grant,
    Instance,
    Org,
    PlatformBinding,
    Restriction,
)
from agora.kernel.paths import ancestry, child_path, depth
from agora.kernel.permissions import is_action_pattern, require, require_module_authority
from agora.runtime.runtime_types import GovModuleInstance
from agora.utils.hashing import fnv1a64
from agora.utils.serialization import canonical_json

ROOT_ORG_ID = "root"
_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-]*$")


class Membership(NamedTuple):
    org: OrgPath
    entity: EntityRef
    seq: Optional[int]


def new_instance(
    instance_id: str,
    seed: int,
    binding: PlatformBinding,
    external_api_enabled: bool = True,
    registry: Optional[Set[str]] = None,
    dedup_cache_size: int = DEDUP_CACHE_SIZE,
) -> Instance:
    """Create a bare Instance (root org only) and record "instance.created" at seq 0."""
    if registry is not None:
        if instance_id in registry:
            raise DuplicateInstance(instance_id)
        registry.add(instance_id)
    instance = Instance(
        instance_id=instance_id,
        platform_binding=binding,
        rng_seed=seed,
        external_api_enabled=external_api_enabled,
        dedup_cache_size=dedup_cache_size,
    )
    instance.orgs[ROOT_PATH] = Org(org_id=ROOT_ORG_ID, path=ROOT_PATH, parent=None)
    record(
        instance,
        "instance.created",
        {
            "instance_id": instance_id,
            "platform": {"name": binding.name, "version": binding.version},
            "seed": seed,
            "external_api": external_api_enabled,
            "dedup_cache_size": dedup_cache_size,
        },
    )
    return instance


def get_org(instance: Instance, path: OrgPath) -> Org:
    org = instance.orgs.get(path)
    if org is None:
        raise UnknownOrg(path)
    return org


def local_ref(instance: Instance, kind: str, entity_id: str) -> EntityRef:
    return EntityRef(kind, entity_id, instance.instance_id)


def create_org(instance: Instance, parent_path: OrgPath, org_id: str, actor: Actor) -> Org:
    parent = get_org(instance, parent_path)
    require(instance, actor, "org.create", parent_path)
    path = child_path(parent_path, org_id)
    if path in instance.orgs:
        raise DuplicateOrg(path)
    if org_id in [instance.orgs[p].org_id for p in ancestry(parent_path)]:
        raise DuplicateOrg(f"{org_id} already appears on the path {parent_path}")
    record(
        instance,
        "org.created",
        {"path": path, "parent": parent.path, "org_id": org_id},
        actor,
    )
    return instance.orgs[path]


def create_user(
    instance: Instance,
    user_id: str,
    kind: str = UserKind.HUMAN.value,
    attributes: Optional[Dict[str, Value]] = None,
    actor: Actor = SYSTEM_ACTOR,
) -> EntityRef:
    if user_id in instance.users:
        raise DuplicateEntity(f"user {user_id}")
    UserKind(kind)
    record(
        instance,
        "user.created",
        {"user_id": user_id, "kind": kind, "attributes": dict(attributes or {})},
        actor,
    )
    return local_ref(instance, EntityKind.USER.value, user_id)


def create_resource(
    instance: Instance,
    resource_id: str,
    resource_type: str,
    state: Optional[Dict[str, Value]] = None,
    platform_handle: Optional[str] = None,
    actor: Actor = SYSTEM_ACTOR,
) -> EntityRef:
    if resource_id in instance.resources:
        raise DuplicateEntity(f"resource {resource_id}")
    for key in state or {}:
        if not _IDENT.match(key):
            raise ValueError(f"resource state key is not an identifier: {key!r}")
    require(instance, actor, "resource.create", ROOT_PATH)
    record(
        instance,
        "resource.created",
        {
            "resource_id": resource_id,
            "resource_type": resource_type,
            "state": dict(state or {}),
            "platform_handle": platform_handle,
        },
        actor,
    )
    return local_ref(instance, EntityKind.RESOURCE.value, resource_id)


def resolve_entity(instance: Instance, entity: EntityRef) -> EntityRef:
    """Check the entity exists in this Instance and return its local reference."""
    known = instance.users if entity.kind == EntityKind.USER.value else instance.resources
    if entity.home_instance not in ("", instance.instance_id) or entity.id not in known:
        raise UnknownEntity(entity.render())
    return local_ref(instance, entity.kind, entity.id)


def add_member(
    instance: Instance,
    org_path: OrgPath,
    entity: EntityRef,
    actor: Actor,
    via_module: Optional[GovModuleInstance] = None,
    caused_by: Optional[int] = None,
) -> Membership:
    org, entity = check_add_member(instance, org_path, entity, actor, via_module)
    if entity.render() in org.members:
        return Membership(org_path, entity, None)
    event = record(
        instance,
        "member.added",
        {"org": org_path, "entity_kind": entity.kind, "entity_id": entity.id},
        actor,
        caused_by,
    )
    return Membership(org_path, entity, event.seq)


def check_add_member(
    instance: Instance,
    org_path: OrgPath,
    entity: EntityRef,
    actor: Actor,
    via_module: Optional[GovModuleInstance] = None,
) -> Tuple[Org, EntityRef]:
    """Raise whatever `add_member` would raise; records nothing."""
    org = get_org(instance, org_path)
    entity = resolve_entity(instance, entity)
    if org.parent is not None and entity.render() not in instance.orgs[org.parent].members:
        raise MembershipPreconditionFailed(
            f"{entity.render()} must belong to {org.parent} before joining {org_path}"
        )
    _authorize(instance, actor, "org.add_member", org_path, via_module)
    return org, entity


def remove_member(
    instance: Instance,
    org_path: OrgPath,
    entity: EntityRef,
    actor: Actor,
    via_module: Optional[GovModuleInstance] = None,
    caused_by: Optional[int] = None,
) -> Event:
    org = get_org(instance, org_path)
    entity = resolve_entity(instance, entity)
    if entity.render() not in org.members:
        raise UnknownEntity(f"{entity.render()} is not a member of {org_path}")
    still_in = [c for c in org.children if entity.render() in instance.orgs[c].members]
    if still_in:
        raise MemberRemovalRejected(f"{entity.render()} is still a member of {still_in[0]}")
    _authorize(instance, actor, "org.remove_member", org_path, via_module)
    return record(
        instance,
        "member.removed",
        {"org": org_path, "entity_kind": entity.kind, "entity_id": entity.id},
        actor,
        caused_by,
    )


def _authorize(
    instance: Instance,
    actor: Actor,
    action: str,
    path: OrgPath,
    via_module: Optional[GovModuleInstance],
) -> None:
    if via_module is not None:
        require_module_authority(instance, via_module, action, path)
    else:
        require(instance, actor, action, path)


def member_orgs(instance: Instance, entity: EntityRef) -> List[OrgPath]:
    """Orgs the entity belongs to, in org creation order."""
    key = entity.render()
    return [path for path, org in instance.orgs.items() if key in org.members]


def governing_modules(instance: Instance, entity: EntityRef) -> List[str]:
    """Module scope: the union of modules installed on every Org the entity belongs to."""
    seen: List[str] = []
    for path in member_orgs(instance, entity):
        for module_id in instance.orgs[path].installed:
            if module_id not in seen:
                seen.append(module_id)
    return seen


def deepest_org(instance: Instance, entity: EntityRef) -> OrgPath:
    """The deepest Org the entity belongs to (first created wins a tie); root if none."""
    best = ROOT_PATH
    for path in member_orgs(instance, entity):
        if depth(path) > depth(best):
            best = path
    return best


def holding_org(instance: Instance, resource_id: str) -> OrgPath:
    return deepest_org(instance, local_ref(instance, EntityKind.RESOURCE.value, resource_id))


def set_resource_state(
    instance: Instance,
    resource_id: str,
    key: str,
    value: Value,
    actor: Actor,
    via_module: Optional[GovModuleInstance] = None,
    caused_by: Optional[int] = None,
) -> Event:
    resource = instance.resources.get(resource_id)
    if resource is None:
        raise UnknownEntity(f"resource:{resource_id}")
    if not _IDENT.match(key):
        raise ValueError(f"resource state key is not an identifier: {key!r}")
    scope = holding_org(instance, resource_id)
    if via_module is not None:
        require_module_authority(instance, via_module, "resource.write", scope)
    else:
        require(instance, actor, "resource.write", scope)
    return record(
        instance,
        "resource.state_changed",
        {
            "resource_id": resource_id,
            "key": key,
            "old": resource.state.get(key),
            "new": value,
            "via_module": via_module.module_id if via_module is not None else None,
        },
        actor,
        caused_by,
    )


def set_user_attribute(
    instance: Instance,
    user_id: str,
    key: str,
    value: Value,
    actor: Actor,
    via_module: Optional[GovModuleInstance] = None,
    caused_by: Optional[int] = None,
) -> Event:
    user = instance.users.get(user_id)
    if user is None:
        raise UnknownEntity(f"user:{user_id}")
    scope = deepest_org(instance, local_ref(instance, EntityKind.USER.value, user_id))
    if via_module is not None:
        require_module_authority(instance, via_module, "user.write", scope)
    else:
        require(instance, actor, "user.write", scope)
    return record(
        instance,
        "user.attribute_changed",
        {
            "user_id": user_id,
            "key": key,
            "old": user.attributes.get(key),
            "new": value,
            "via_module": via_module.module_id if via_module is not None else None,
        },
        actor,
        caused_by,
    )


def _check_level(instance: Instance, level: str) -> OrgPath:
    if level == INSTANCE_LEVEL:
        return ROOT_PATH
    get_org(instance, level)
    return level


def grant(
    instance: Instance, level: str, entry: Grant, actor: Actor = SYSTEM_ACTOR
) -> Event:
    """Add a grant to the instance table ("instance") or an Org table (its path)."""
    if not is_action_pattern(entry.action):
        raise UnknownAction(entry.action)
    require(instance, actor, "permission.change", _check_level(instance, level))
    return record(
        instance, "permission.granted", {"level": level, "grant": entry.to_value()}, actor
    )


def restrict(
    instance: Instance, level: str, entry: Restriction, actor: Actor = SYSTEM_ACTOR
) -> Event:
    if not is_action_pattern(entry.action):
        raise UnknownAction(entry.action)
    require(instance, actor, "permission.change", _check_level(instance, level))
    return record(
        instance,
        "permission.restricted",
        {"level": level, "restriction": entry.to_value()},
        actor,
    )


def revoke(
    instance: Instance, level: str, entry: Any, actor: Actor = SYSTEM_ACTOR
) -> Event:
    """Remove a grant or restriction (first equal entry) from a table."""
    require(instance, actor, "permission.change", _check_level(instance, level))
    kind = "grant" if isinstance(entry, Grant) else "restriction"
    return record(
        instance,
        "permission.revoked",
        {"level": level, "entry": kind, "value": entry.to_value()},
        actor,
    )


def set_clock(instance: Instance, tick: int) -> None:
    """Move the logical clock forward; it never goes back."""
    if tick > instance.clock:
        instance.clock = tick


def state_snapshot(instance: Instance) -> Dict[str, Any]:
    """Canonical view of all durable state (clock and the log itself excluded)."""
    return {
        "instance_id": instance.instance_id,
        "platform": list(instance.platform_binding),
        "seed": instance.rng_seed,
        "external_api": instance.external_api_enabled,
        "users": {
            u.user_id: {"kind": u.kind, "attributes": u.attributes}
            for u in instance.users.values()
        },
        "resources": {
            r.resource_id: {
                "type": r.resource_type,
                "state": r.state,
                "handle": r.platform_handle,
            }
            for r in instance.resources.values()
        },
        "permissions": instance.permission_policy.to_value(),
        "orgs": {
            org.path: {
                "org_id": org.org_id,
                "parent": org.parent,
                "children": org.children,
                "members": list(org.members),
                "installed": org.installed,
                "permissions": org.permission_table.to_value(),
            }
            for org in instance.orgs.values()
        },
        "modules": {
            m.module_id: {
                "kind": m.manifest.module_kind,
                "source_hash": m.manifest.source_ref.hash,
                "org": m.host_org,
                "policies": m.policy_values,
                "wiring": [list(w) for w in m.wiring],
                "state": m.state,
                "parts": m.parts,
            }
            for m in instance.modules.values()
        },
        "rng": instance.rng_states,
    }


def transport_snapshot(instance: Instance) -> Dict[str, Any]:
    """Federation bookkeeping: message counter, open requests and the answered-request cache.

    Not part of `state_digest`: exchanging messages (a monitor comparison, say) moves only these.
    """
    return {
        "pending": instance.pending,
        "dedup": {peer: dict(cache) for peer, cache in instance.dedup.items()},
        "fed_counter": instance.fed_counter,
        "dedup_cache_size": instance.dedup_cache_size,
    }


def state_digest(instance: Instance) -> int:
    """64-bit FNV-1a of the canonical governance state snapshot."""
    return fnv1a64(canonical_json(state_snapshot(instance)).encode("utf-8"))


def transport_digest(instance: Instance) -> int:
    return fnv1a64(canonical_json(transport_snapshot(instance)).encode("utf-8"))
