import itertools

import numpy as np
import pytest

from agora.base_types import INSTANCE_LEVEL, SYSTEM_ACTOR, remote_principal, user_ref
from agora.errors import PermissionDenied, UnknownAction, UnknownOrg
from agora.kernel import instance as kernel
from agora.kernel.kernel_types import (
    Grant,
    PlatformBinding,
    Restriction,
    Scope,
    Selector,
    SelectorKind,
)
from agora.kernel.permissions import (
    ANCESTOR_RESTRICTION,
    NO_GRANT,
    action_matches,
    is_action_pattern,
    is_known_action,
    require,
    resolve_permission,
)


@pytest.fixture
def tree():
    """/ -> /a -> /a/b with user u in every org and user v only at the root."""
    inst = kernel.new_instance("perm", 1, PlatformBinding("test", "1"))
    kernel.create_user(inst, "u")
    kernel.create_user(inst, "v", attributes={"role": "mod"})
    kernel.create_org(inst, "/", "a", SYSTEM_ACTOR)
    kernel.create_org(inst, "/a", "b", SYSTEM_ACTOR)
    for path in ("/", "/a", "/a/b"):
        kernel.add_member(inst, path, user_ref("u"), SYSTEM_ACTOR)
    kernel.add_member(inst, "/", user_ref("v"), SYSTEM_ACTOR)
    return inst


def user(inst, user_id):
    return kernel.local_ref(inst, "user", user_id)


def test_deny_by_default(tree):
    decision = resolve_permission(tree, user(tree, "u"), "org.create", "/a")
    assert not decision.allowed
    assert decision.reason == NO_GRANT


def test_system_actor_bypasses_checks(tree):
    kernel.restrict(tree, INSTANCE_LEVEL, Restriction("org.create"))
    assert resolve_permission(tree, SYSTEM_ACTOR, "org.create", "/a/b").allowed


def test_grants_inherit_downward_but_not_upward(tree):
    kernel.grant(tree, "/a", Grant(Selector(SelectorKind.USER.value, "u"), "org.create"))
    assert resolve_permission(tree, user(tree, "u"), "org.create", "/a").allowed
    assert resolve_permission(tree, user(tree, "u"), "org.create", "/a/b").allowed
    assert not resolve_permission(tree, user(tree, "u"), "org.create", "/").allowed


def test_self_scope_grant_does_not_reach_children(tree):
    grant = Grant(Selector(SelectorKind.EVERYONE.value), "org.view", Scope.SELF.value)
    kernel.grant(tree, "/a", grant)
    assert resolve_permission(tree, user(tree, "u"), "org.view", "/a").allowed
    assert not resolve_permission(tree, user(tree, "u"), "org.view", "/a/b").allowed


def test_restriction_vetoes_every_grant_below_it(tree):
    kernel.grant(tree, "/a/b", Grant(Selector(SelectorKind.USER.value, "u"), "resource.write"))
    kernel.restrict(tree, "/a", Restriction("resource.write"))
    decision = resolve_permission(tree, user(tree, "u"), "resource.write", "/a/b")
    assert not decision.allowed
    assert decision.reason == ANCESTOR_RESTRICTION
    assert decision.level == "/a"


def test_wildcard_restriction_blocks_invocations(tree):
    kernel.grant(tree, INSTANCE_LEVEL, Grant(Selector(SelectorKind.EVERYONE.value), "*"))
    kernel.restrict(tree, "/a", Restriction("module.invoke:*"))
    assert not resolve_permission(tree, user(tree, "u"), "module.invoke:vote", "/a/b").allowed
    assert resolve_permission(tree, user(tree, "u"), "module.invoke:vote", "/").allowed
    assert resolve_permission(tree, user(tree, "u"), "org.view", "/a/b").allowed


def test_members_and_holders_selectors(tree):
    members = Selector(SelectorKind.MEMBERS_OF.value, "/a")
    holders = Selector(SelectorKind.HOLDERS_OF.value, "role", "mod")
    kernel.grant(tree, INSTANCE_LEVEL, Grant(members, "org.view"))
    kernel.grant(tree, INSTANCE_LEVEL, Grant(holders, "org.create"))
    assert resolve_permission(tree, user(tree, "u"), "org.view", "/").allowed
    assert not resolve_permission(tree, user(tree, "v"), "org.view", "/").allowed
    assert resolve_permission(tree, user(tree, "v"), "org.create", "/a").allowed
    assert not resolve_permission(tree, user(tree, "u"), "org.create", "/a").allowed


def test_remote_principals_only_match_by_name(tree):
    kernel.grant(tree, INSTANCE_LEVEL, Grant(Selector(SelectorKind.EVERYONE.value), "org.view"))
    remote = remote_principal("peer")
    assert not resolve_permission(tree, remote, "org.view", "/").allowed
    by_name = Selector(SelectorKind.USER.value, "remote:peer")
    kernel.grant(tree, INSTANCE_LEVEL, Grant(by_name, "org.view"))
    assert resolve_permission(tree, remote, "org.view", "/").allowed


def test_require_raises_with_reason_and_level(tree):
    with pytest.raises(PermissionDenied) as info:
        require(tree, user(tree, "u"), "org.create", "/a")
    assert "org.create" in str(info.value)


def test_unknown_action_and_org(tree):
    with pytest.raises(UnknownAction):
        resolve_permission(tree, user(tree, "u"), "org.explode", "/")
    with pytest.raises(UnknownOrg):
        resolve_permission(tree, user(tree, "u"), "org.view", "/nowhere")


def test_resolution_is_pure(tree):
    before = kernel.state_digest(tree)
    length = len(tree.event_log)
    resolve_permission(tree, user(tree, "u"), "org.view", "/a/b")
    assert kernel.state_digest(tree) == before
    assert len(tree.event_log) == length


def test_permission_oracle_over_grant_and_restriction_placements(tree):
    """Allowed iff some grant sits on the target's ancestry and no restriction does."""
    levels = [INSTANCE_LEVEL, "/", "/a", "/a/b"]
    targets = ["/", "/a", "/a/b"]
    ancestry = {"/": [INSTANCE_LEVEL, "/"], "/a": [INSTANCE_LEVEL, "/", "/a"]}
    ancestry["/a/b"] = ancestry["/a"] + ["/a/b"]
    for grant_at, restrict_at in itertools.product(levels + [None], levels + [None]):
        inst = kernel.new_instance("oracle", 1, PlatformBinding("test", "1"))
        kernel.create_user(inst, "u")
        kernel.create_org(inst, "/", "a", SYSTEM_ACTOR)
        kernel.create_org(inst, "/a", "b", SYSTEM_ACTOR)
        if grant_at is not None:
            kernel.grant(inst, grant_at, Grant(Selector(SelectorKind.USER.value, "u"), "org.view"))
        if restrict_at is not None:
            kernel.restrict(inst, restrict_at, Restriction("org.view"))
        for target in targets:
            expected = grant_at in ancestry[target] and restrict_at not in ancestry[target]
            actual = resolve_permission(inst, user(inst, "u"), "org.view", target).allowed
            assert actual == expected, (grant_at, restrict_at, target)


def test_action_vocabulary():
    assert is_known_action("module.invoke:vote")
    assert not is_known_action("module.invoke:")
    assert is_action_pattern("*")
    assert is_action_pattern("module.invoke:*")
    assert action_matches("module.invoke:*", "module.invoke:flag")
    assert not action_matches("module.invoke:*", "org.view")


ORACLE_ACTIONS = ["org.view", "org.create", "resource.write"]
ORACLE_USERS = ["u0", "u1", "u2"]


def walk_of(path):
    """Instance level, root, then each path prefix; worked out from the string alone."""
    walk = [INSTANCE_LEVEL, "/"]
    prefix = ""
    for part in [p for p in path.split("/") if p]:
        prefix += "/" + part
        walk.append(prefix)
    return walk


def random_tree(rng):
    inst = kernel.new_instance("oracle", 1, PlatformBinding("test", "1"))
    paths = ["/"]
    for i in range(int(rng.integers(1, 7))):
        parent = paths[int(rng.integers(len(paths)))]
        paths.append(kernel.create_org(inst, parent, f"o{i}", SYSTEM_ACTOR).path)
    members = {path: set() for path in paths}
    roles = {}
    for user_id in ORACLE_USERS:
        roles[user_id] = ["mod", "dev"][int(rng.integers(2))]
        kernel.create_user(inst, user_id, attributes={"role": roles[user_id]})
        for path in paths:
            parent = walk_of(path)[-2]
            if (path == "/" or user_id in members[parent]) and rng.random() < 0.6:
                kernel.add_member(inst, path, user_ref(user_id), SYSTEM_ACTOR)
                members[path].add(user_id)
    levels = [INSTANCE_LEVEL] + paths
    actions = ORACLE_ACTIONS + ["*"]
    grants = []
    for _ in range(int(rng.integers(0, 6))):
        level = levels[int(rng.integers(len(levels)))]
        pick = int(rng.integers(4))
        if pick == 0:
            selector = Selector(SelectorKind.USER.value, ORACLE_USERS[int(rng.integers(3))])
        elif pick == 1:
            selector = Selector(SelectorKind.MEMBERS_OF.value, paths[int(rng.integers(len(paths)))])
        elif pick == 2:
            selector = Selector(SelectorKind.HOLDERS_OF.value, "role", "mod")
        else:
            selector = Selector(SelectorKind.EVERYONE.value)
        scope = [Scope.SUBTREE.value, Scope.SELF.value][int(rng.integers(2))]
        grant = Grant(selector, actions[int(rng.integers(len(actions)))], scope)
        kernel.grant(inst, level, grant)
        grants.append((level, grant))
    restrictions = []
    for _ in range(int(rng.integers(0, 3))):
        level = levels[int(rng.integers(len(levels)))]
        action = actions[int(rng.integers(len(actions)))]
        kernel.restrict(inst, level, Restriction(action))
        restrictions.append((level, action))
    return inst, paths, members, roles, grants, restrictions


def oracle_allows(user_id, action, target, members, roles, grants, restrictions):
    walk = walk_of(target)

    def selects(selector):
        if selector.kind == SelectorKind.USER.value:
            return selector.arg == user_id
        if selector.kind == SelectorKind.MEMBERS_OF.value:
            return user_id in members[selector.arg]
        if selector.kind == SelectorKind.HOLDERS_OF.value:
            return roles[user_id] == selector.value
        return True

    granted = [
        grant
        for level, grant in grants
        if level in walk
        and (grant.scope == Scope.SUBTREE.value or target == _home(level))
        and grant.action in ("*", action)
        and selects(grant.subject)
    ]
    vetoed = [a for level, a in restrictions if level in walk and a in ("*", action)]
    return bool(granted) and not vetoed


def _home(level):
    return "/" if level == INSTANCE_LEVEL else level


def test_randomized_trees_match_the_two_pass_oracle():
    rng = np.random.default_rng(20240611)
    checked = 0
    for _ in range(1000):
        inst, paths, members, roles, grants, restrictions = random_tree(rng)
        for user_id, action, target in itertools.product(ORACLE_USERS, ORACLE_ACTIONS, paths):
            expected = oracle_allows(user_id, action, target, members, roles, grants, restrictions)
            actual = resolve_permission(inst, user(inst, user_id), action, target).allowed
            assert actual == expected, (grants, restrictions, user_id, action, target)
            checked += 1
    assert checked >= 1000 * 3 * 3 * 2
