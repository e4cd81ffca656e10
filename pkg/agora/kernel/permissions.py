"""Deny-by-default permission lattice.

Grants accumulate downward from the instance level through every ancestor; restrictions veto
downward and defeat any grant below them. Resolution is a pure function of current state.
"""
import re
from typing import List

from agora.base_types import (
    INSTANCE_LEVEL,
    INVOKE_PREFIX,
    ROOT_PATH,
    SYSTEM_ACTOR,
    Actor,
    EntityRef,
    OrgPath,
)
from agora.errors import PermissionDenied, UnknownAction, UnknownOrg
from agora.kernel.kernel_types import Decision, Instance, Restriction, Scope, Selector, SelectorKind
from agora.kernel.paths import ancestry, is_within
from agora.runtime.runtime_types import GovModuleInstance

KNOWN_ACTIONS = frozenset(
    {
        "org.create",
        "org.add_member",
        "org.remove_member",
        "org.view",
        "module.install",
        "module.wire",
        "resource.create",
        "resource.write",
        "user.write",
        "monitor.query",
        "policy.change",
        "permission.change",
        "external.call",
    }
)
WILDCARD = "*"
_OP_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
INVOKE_WILDCARD = INVOKE_PREFIX + WILDCARD
EXTERNAL_CALL = "external.call"

NO_GRANT = "no-grant"
ANCESTOR_RESTRICTION = "ancestor-restriction"


def is_known_action(action_id: str) -> bool:
    if action_id in KNOWN_ACTIONS:
        return True
    if action_id.startswith(INVOKE_PREFIX):
        op = action_id[len(INVOKE_PREFIX) :]
        return bool(_OP_NAME.match(op))
    return False


def is_action_pattern(pattern: str) -> bool:
    """Actions as they may appear in a grant or restriction (wildcards allowed)."""
    return pattern in (WILDCARD, INVOKE_WILDCARD) or is_known_action(pattern)


def action_matches(pattern: str, action_id: str) -> bool:
    if pattern == WILDCARD or pattern == action_id:
        return True
    return pattern == INVOKE_WILDCARD and action_id.startswith(INVOKE_PREFIX)


def selector_matches(instance: Instance, selector: Selector, actor: EntityRef) -> bool:
    if selector.kind == SelectorKind.USER.value:
        return actor.id == selector.arg
    if actor.is_remote:
        # Remote principals are only ever matched by name.
        return False
    if selector.kind == SelectorKind.EVERYONE.value:
        return True
    if selector.kind == SelectorKind.MEMBERS_OF.value:
        org = instance.orgs.get(selector.arg)
        return org is not None and actor.render() in org.members
    if selector.kind == SelectorKind.HOLDERS_OF.value:
        user = instance.users.get(actor.id) if actor.kind == "user" else None
        return user is not None and user.attributes.get(selector.arg) == selector.value
    return False


def levels(path: OrgPath) -> List[str]:
    """The instance level followed by every org on the root-to-path walk."""
    return [INSTANCE_LEVEL] + ancestry(path)


def restrictions_in_effect(instance: Instance, level: str) -> List[Restriction]:
    if level == INSTANCE_LEVEL:
        implicit = [] if instance.external_api_enabled else [Restriction(EXTERNAL_CALL)]
        return implicit + list(instance.permission_policy.restrictions)
    return list(instance.orgs[level].permission_table.restrictions)


def resolve_permission(
    instance: Instance, actor: Actor, action_id: str, target_path: OrgPath
) -> Decision:
    """allowed iff some grant on the ancestry walk matches and no restriction on it does."""
    if not is_known_action(action_id):
        raise UnknownAction(action_id)
    if target_path not in instance.orgs:
        raise UnknownOrg(target_path)
    if actor == SYSTEM_ACTOR or not instance.enforce_permissions:
        return Decision(True)
    assert isinstance(actor, EntityRef), f"actor must be an EntityRef, got {actor!r}"

    walk = levels(target_path)
    for level in walk:
        for restriction in restrictions_in_effect(instance, level):
            if action_matches(restriction.action, action_id):
                return Decision(False, ANCESTOR_RESTRICTION, level)

    for level in walk:
        table = (
            instance.permission_policy
            if level == INSTANCE_LEVEL
            else instance.orgs[level].permission_table
        )
        here = ROOT_PATH if level == INSTANCE_LEVEL else level
        for grant in table.grants:
            if grant.scope == Scope.SELF.value and here != target_path:
                continue
            if action_matches(grant.action, action_id) and selector_matches(
                instance, grant.subject, actor
            ):
                return Decision(True, None, level)
    return Decision(False, NO_GRANT, target_path)


def require(instance: Instance, actor: Actor, action_id: str, target_path: OrgPath) -> None:
    """Raise PermissionDenied unless resolve_permission allows."""
    decision = resolve_permission(instance, actor, action_id, target_path)
    if not decision.allowed:
        rendered = actor.render() if isinstance(actor, EntityRef) else str(actor)
        raise PermissionDenied(
            rendered, action_id, target_path, decision.reason or NO_GRANT, decision.level or ""
        )


def require_module_authority(
    instance: Instance, module: GovModuleInstance, action_id: str, target_path: OrgPath
) -> None:
    """Modules act with their host Org's authority over its subtree; restrictions still apply."""
    if not is_known_action(action_id):
        raise UnknownAction(action_id)
    if target_path not in instance.orgs:
        raise UnknownOrg(target_path)
    actor = f"module:{module.module_id}"
    if not instance.enforce_permissions:
        return
    if not is_within(target_path, module.host_org):
        raise PermissionDenied(actor, action_id, target_path, NO_GRANT, target_path)
    for level in levels(target_path):
        for restriction in restrictions_in_effect(instance, level):
            if action_matches(restriction.action, action_id):
                raise PermissionDenied(actor, action_id, target_path, ANCESTOR_RESTRICTION, level)
