"""Module lifecycle and dispatch: install, invoke, wire, compose, fetch_source, policy changes.

Wired deliveries run in the same tick as the invocation that produced them, in a topological
order of the wiring graph with ties broken by module_id.
"""
import heapq
import logging
from typing import Any, Dict, List, Mapping, Optional, Sequence, Set, Tuple

from typing_extensions import NamedTuple

from agora.base_types import (
    INSTANCE_LEVEL,
    INVOKE_PREFIX,
    ROOT_PATH,
    SYSTEM_ACTOR,
    Actor,
    Event,
    OrgPath,
    Value,
)
from agora.errors import (
    AgoraError,
    CompositionCycle,
    DuplicateEntity,
    IntegrityError,
    PolicyBoundsViolation,
    PortTypeError,
    UnknownAction,
    UnknownModule,
    UnknownOp,
)
from agora.kernel.events import record
from agora.kernel.instance import get_org, set_clock
from agora.kernel.kernel_types import Instance
from agora.kernel.permissions import is_action_pattern, require, require_module_authority
from agora.runtime.behavior import get_behavior
from agora.runtime.context import InvocationContext
from agora.runtime.ports import check_port_value
from agora.runtime.runtime_types import (
    GovModuleInstance,
    ModuleManifest,
    OpDecl,
    OutputBundle,
    PolicyChange,
    PolicyDecl,
    PolicyType,
    PortDecl,
    SourceRef,
    Wire,
    manifest_to_value,
)
from agora.utils.hashing import sha256_hex

logger = logging.getLogger(__name__)

COMPOSITE_BEHAVIOR = "composite"


class SourceBundle(NamedTuple):
    manifest: ModuleManifest
    text: str


class WireSpec(NamedTuple):
    """source_module.output -> target_module.input, as given to compose."""

    source_module: str
    output: str
    target_module: str
    input: str


def get_module(instance: Instance, module_id: str) -> GovModuleInstance:
    module = instance.modules.get(module_id)
    if module is None:
        raise UnknownModule(module_id)
    return module


# ---------------------------------------------------------------------------------------------
# Policies
# ---------------------------------------------------------------------------------------------


def check_policy(decl: PolicyDecl, value: Any) -> None:
    """Raise PolicyBoundsViolation unless `value` fits the declared type, bounds and choices."""
    kind = decl.value_type
    is_number = isinstance(value, (int, float)) and not isinstance(value, bool)
    ok = {
        PolicyType.INT.value: isinstance(value, int) and not isinstance(value, bool),
        PolicyType.FLOAT.value: is_number,
        PolicyType.BOOL.value: isinstance(value, bool),
        PolicyType.STR.value: isinstance(value, str),
        PolicyType.LIST.value: isinstance(value, list),
        PolicyType.MAP.value: isinstance(value, dict),
    }.get(kind, False)
    if not ok:
        raise PolicyBoundsViolation(decl.name, value, f"policy {decl.name} expects {kind}")
    if is_number:
        if decl.lower is not None and value < decl.lower:
            raise PolicyBoundsViolation(decl.name, value)
        if decl.upper is not None and value > decl.upper:
            raise PolicyBoundsViolation(decl.name, value)
    if decl.choices and value not in decl.choices:
        raise PolicyBoundsViolation(
            decl.name, value, f"policy {decl.name} must be one of {decl.choices}"
        )


def resolve_policies(manifest: ModuleManifest, values: Mapping[str, Value]) -> Dict[str, Value]:
    """Declared defaults overlaid with `values`, every entry bounds-checked."""
    for name in values:
        if manifest.policy(name) is None:
            raise PolicyBoundsViolation(
                name, values[name], f"{manifest.module_kind} has no policy {name}"
            )
    resolved: Dict[str, Value] = {}
    for decl in manifest.policies:
        value = values.get(decl.name, decl.default)
        if isinstance(value, int) and not isinstance(value, bool) and decl.value_type == "float":
            value = float(value)
        check_policy(decl, value)
        resolved[decl.name] = value
    return resolved


def apply_policy_change(
    instance: Instance,
    change: PolicyChange,
    actor: Actor = SYSTEM_ACTOR,
    caused_by: Optional[int] = None,
    via_module: Optional[GovModuleInstance] = None,
) -> Event:
    """Apply a PolicyChange; records exactly one "policy.changed" Event."""
    target = dict(change.target)
    if "module_id" in target:
        module = get_module(instance, target["module_id"])
        decl = module.manifest.policy(target["policy"])
        if decl is None:
            raise PolicyBoundsViolation(target["policy"], change.new_value, "no such policy")
        new_value = change.new_value
        is_int = isinstance(new_value, int) and not isinstance(new_value, bool)
        if is_int and decl.value_type == "float":
            new_value = float(new_value)
        check_policy(decl, new_value)
        scope = module.host_org
        action_id = "policy.change"
        old: Any = module.policy_values.get(decl.name)
    else:
        level = target["level"]
        scope = ROOT_PATH if level == INSTANCE_LEVEL else get_org(instance, level).path
        new_value = change.new_value
        action = new_value.get("action", "") if isinstance(new_value, dict) else ""
        if not is_action_pattern(action):
            raise UnknownAction(action)
        entry = target["entry"]
        if entry == "revoke":
            target["revoke"] = "grant" if "subject" in new_value else "restriction"
        elif entry not in ("grant", "restrict"):
            raise ValueError(f"unknown permission entry {entry!r}")
        action_id = "permission.change"
        old = None
    if via_module is not None:
        require_module_authority(instance, via_module, action_id, scope)
    else:
        require(instance, actor, action_id, scope)
    return record(
        instance,
        "policy.changed",
        {
            "target": target,
            "old": old,
            "new": new_value,
            "authorized_by": change.authorized_by,
            "via_module": via_module.module_id if via_module is not None else None,
        },
        actor if via_module is None else f"module:{via_module.module_id}",
        caused_by if caused_by is not None else change.authorized_by,
    )


# ---------------------------------------------------------------------------------------------
# Install
# ---------------------------------------------------------------------------------------------


def next_module_id(instance: Instance, kind: str) -> str:
    n = 1
    while f"{kind}-{n}" in instance.modules:
        n += 1
    return f"{kind}-{n}"


def verify_source(manifest: ModuleManifest) -> None:
    if sha256_hex(manifest.source_ref.text) != manifest.source_ref.hash:
        raise IntegrityError(
            f"{manifest.module_kind}: source does not match {manifest.source_ref.hash}"
        )


def install(
    instance: Instance,
    org_path: OrgPath,
    manifest: ModuleManifest,
    policy_values: Optional[Mapping[str, Value]] = None,
    actor: Actor = SYSTEM_ACTOR,
    module_id: Optional[str] = None,
    caused_by: Optional[int] = None,
    via_module: Optional[GovModuleInstance] = None,
) -> GovModuleInstance:
    get_org(instance, org_path)
    if via_module is not None:
        require_module_authority(instance, via_module, "module.install", org_path)
    else:
        require(instance, actor, "module.install", org_path)
    get_behavior(manifest.behavior)
    verify_source(manifest)
    values = resolve_policies(manifest, policy_values or {})
    module_id = module_id or next_module_id(instance, manifest.module_kind)
    if module_id in instance.modules:
        raise DuplicateEntity(f"module {module_id}")
    instance.sources[manifest.source_ref.hash] = manifest.source_ref.text
    record(
        instance,
        "module.installed",
        {
            "module_id": module_id,
            "org": org_path,
            "kind": manifest.module_kind,
            "version": manifest.version,
            "source_hash": manifest.source_ref.hash,
            "policies": values,
            "manifest": manifest_to_value(manifest),
        },
        actor if via_module is None else f"module:{via_module.module_id}",
        caused_by,
    )
    return instance.modules[module_id]


# ---------------------------------------------------------------------------------------------
# Invoke and delivery
# ---------------------------------------------------------------------------------------------


def check_args(manifest: ModuleManifest, op: OpDecl, args: Mapping[str, Any]) -> None:
    for name in args:
        if name not in op.inputs:
            raise PortTypeError(f"{manifest.module_kind}.{op.name} has no input {name}")
    for name in op.inputs:
        if name not in args:
            if name in op.optional:
                continue
            raise PortTypeError(f"{manifest.module_kind}.{op.name} is missing input {name}")
        port = manifest.input_port(name)
        assert port is not None, f"op {op.name} reads undeclared port {name}"
        check_port_value(name, port.port_type, args[name])


def check_outputs(manifest: ModuleManifest, op_name: str, outputs: Mapping[str, Any]) -> None:
    op = manifest.op(op_name)
    allowed = op.outputs if op is not None else ()
    for name, value in outputs.items():
        port = manifest.output_port(name)
        if port is None or name not in allowed:
            raise PortTypeError(f"{manifest.module_kind}.{op_name} cannot emit on {name}")
        check_port_value(name, port.port_type, value)


def invoke(
    instance: Instance,
    module_id: str,
    op_name: str,
    args: Optional[Mapping[str, Any]] = None,
    actor: Actor = SYSTEM_ACTOR,
    caused_by: Optional[int] = None,
) -> OutputBundle:
    """Run one op of a module under the actor's permissions and deliver its outputs."""
    args = dict(args or {})
    module = get_module(instance, module_id)
    if module.parts:
        return _invoke_composite(instance, module, op_name, args, actor, caused_by)
    op = module.manifest.op(op_name)
    if op is None:
        raise UnknownOp(f"{module_id} has no op {op_name}")
    require(instance, actor, INVOKE_PREFIX + op_name, module.host_org)
    check_args(module.manifest, op, args)
    event = record(
        instance,
        "module.invoked",
        {"module_id": module_id, "op": op_name, "args": args},
        actor,
        caused_by,
    )
    outputs, _ = _run_and_deliver(instance, module, op_name, args, actor, event.seq)
    return outputs


def _run_op(
    instance: Instance,
    module: GovModuleInstance,
    op_name: str,
    args: Dict[str, Any],
    actor: Actor,
    cause: int,
) -> Tuple[OutputBundle, Optional[int]]:
    behavior = get_behavior(module.manifest.behavior)
    ctx = InvocationContext(instance, module, actor, cause)
    outputs = behavior.handler(op_name)(ctx, args) or {}
    check_outputs(module.manifest, op_name, outputs)
    ctx.commit()
    flush_outbox(instance, ctx)
    return outputs, ctx.last_seq


def flush_outbox(instance: Instance, ctx: InvocationContext) -> None:
    for bundle, cause in ctx.outbox:
        check_outputs_any(ctx.module.manifest, bundle)
        deliver(instance, ctx.module, bundle, cause)
    ctx.outbox.clear()


def run_hook(
    instance: Instance,
    module: GovModuleInstance,
    hook: str,
    *args: Any,
    cause: Optional[int] = None,
) -> InvocationContext:
    """Run a behaviour hook (on_tick, on_response) as the system and deliver what it pushed."""
    behavior = get_behavior(module.manifest.behavior)
    ctx = InvocationContext(instance, module, SYSTEM_ACTOR, cause)
    getattr(behavior, hook)(ctx, *args)
    ctx.commit()
    flush_outbox(instance, ctx)
    return ctx


def run_hook_guarded(
    instance: Instance,
    module: GovModuleInstance,
    hook: str,
    *args: Any,
    cause: Optional[int] = None,
) -> Optional[InvocationContext]:
    """Run a hook; an engine error is recorded as "hook.failed" instead of propagating.

    A hook that raises has its staged state writes dropped; a failure while delivering its
    outputs leaves the hook's own writes in place.
    """
    try:
        return run_hook(instance, module, hook, *args, cause=cause)
    except AgoraError as exc:
        logger.warning("%s.%s failed: %s", module.module_id, hook, exc)
        record(
            instance,
            "hook.failed",
            {
                "module_id": module.module_id,
                "hook": hook,
                "error": type(exc).__name__,
                "message": str(exc),
            },
            SYSTEM_ACTOR,
            cause,
        )
        return None


def _run_and_deliver(
    instance: Instance,
    module: GovModuleInstance,
    op_name: str,
    args: Dict[str, Any],
    actor: Actor,
    cause: int,
) -> Tuple[OutputBundle, Dict[str, OutputBundle]]:
    outputs, last = _run_op(instance, module, op_name, args, actor, cause)
    emitted = deliver(instance, module, outputs, last if last is not None else cause)
    return outputs, emitted


def deliver(
    instance: Instance, source: GovModuleInstance, outputs: OutputBundle, cause: int
) -> Dict[str, OutputBundle]:
    """Push `outputs` along the wiring graph; returns every module's outputs keyed by module_id."""
    emitted: Dict[str, OutputBundle] = {source.module_id: dict(outputs)}
    if not outputs:
        return emitted
    reachable = _reachable(instance, source.module_id)
    indegree: Dict[str, int] = {m: 0 for m in reachable}
    for m in [source.module_id, *reachable]:
        for wire in instance.modules[m].wiring:
            if wire.target_module in indegree:
                indegree[wire.target_module] += 1
    inbox: Dict[str, List[Tuple[str, Any, str, int]]] = {}
    causes: Dict[str, int] = {source.module_id: cause}

    def push(module: GovModuleInstance, bundle: OutputBundle) -> List[str]:
        for wire in module.wiring:
            if wire.output_port in bundle:
                value = bundle[wire.output_port]
                target = instance.modules[wire.target_module]
                port = target.manifest.input_port(wire.input_port)
                assert port is not None, f"wire into undeclared port {wire.input_port}"
                check_port_value(wire.input_port, port.port_type, value)
                inbox.setdefault(wire.target_module, []).append(
                    (wire.input_port, value, module.module_id, causes[module.module_id])
                )
        ready = []
        for wire in module.wiring:
            if wire.target_module in indegree:
                indegree[wire.target_module] -= 1
                if indegree[wire.target_module] == 0:
                    ready.append(wire.target_module)
        return ready

    heap: List[str] = []
    for m in push(source, outputs):
        heapq.heappush(heap, m)
    while heap:
        module_id = heapq.heappop(heap)
        module = instance.modules[module_id]
        bundle: OutputBundle = {}
        for port_name, value, from_module, from_cause in inbox.pop(module_id, []):
            port = module.manifest.input_port(port_name)
            assert port is not None
            event = record(
                instance,
                "module.invoked",
                {
                    "module_id": module_id,
                    "op": port.handler,
                    "args": {port_name: value},
                    "via": from_module,
                },
                f"module:{from_module}",
                from_cause,
            )
            out, last = _run_op(
                instance,
                module,
                port.handler,
                {port_name: value},
                f"module:{from_module}",
                event.seq,
            )
            causes[module_id] = last if last is not None else event.seq
            bundle.update(out)
        causes.setdefault(module_id, cause)
        if bundle:
            emitted[module_id] = bundle
        for m in push(module, bundle):
            heapq.heappush(heap, m)
    return emitted


def _reachable(instance: Instance, start: str) -> Set[str]:
    seen: Set[str] = set()
    stack = [w.target_module for w in instance.modules[start].wiring]
    while stack:
        m = stack.pop()
        if m in seen or m == start:
            continue
        seen.add(m)
        stack.extend(w.target_module for w in instance.modules[m].wiring)
    return seen


# ---------------------------------------------------------------------------------------------
# Wiring and composition
# ---------------------------------------------------------------------------------------------


def find_cycle(edges: Mapping[str, Sequence[str]], source: str, target: str) -> Optional[List[str]]:
    """The path closing a cycle if the edge source -> target were added, else None."""
    if source == target:
        return [source, source]
    parents: Dict[str, str] = {}
    stack = [target]
    seen = {target}
    while stack:
        node = stack.pop()
        if node == source:
            path = [node]
            while path[-1] != target:
                path.append(parents[path[-1]])
            return [source, *reversed(path)]
        for nxt in sorted(edges.get(node, ())):
            if nxt not in seen:
                seen.add(nxt)
                parents[nxt] = node
                stack.append(nxt)
    return None


def _edges(instance: Instance) -> Dict[str, List[str]]:
    return {m.module_id: [w.target_module for w in m.wiring] for m in instance.modules.values()}


def _resolve_port(
    instance: Instance, module_id: str, port: str, outgoing: bool
) -> Tuple[GovModuleInstance, PortDecl]:
    """Map a (possibly composite) module port to the concrete module and port declaration."""
    module = get_module(instance, module_id)
    if module.parts:
        inner, _, inner_port = port.partition(".")
        if inner not in module.parts:
            raise PortTypeError(f"{module_id} has no port {port}")
        return _resolve_port(instance, inner, inner_port, outgoing)
    decl = module.manifest.output_port(port) if outgoing else module.manifest.input_port(port)
    if decl is None:
        side = "output" if outgoing else "input"
        raise PortTypeError(f"{module_id} has no {side} port {port}")
    return module, decl


def wire(
    instance: Instance,
    source_module: str,
    output_port: str,
    target_module: str,
    input_port: str,
    actor: Actor = SYSTEM_ACTOR,
    caused_by: Optional[int] = None,
) -> Wire:
    source, out_decl = _resolve_port(instance, source_module, output_port, outgoing=True)
    target, in_decl = _resolve_port(instance, target_module, input_port, outgoing=False)
    require(instance, actor, "module.wire", source.host_org)
    if out_decl.port_type != in_decl.port_type:
        raise PortTypeError(
            f"{source.module_id}.{out_decl.name} ({out_decl.port_type}) cannot feed "
            f"{target.module_id}.{in_decl.name} ({in_decl.port_type})"
        )
    if not in_decl.handler:
        raise PortTypeError(f"{target.module_id}.{in_decl.name} does not accept deliveries")
    cycle = find_cycle(_edges(instance), source.module_id, target.module_id)
    if cycle is not None:
        raise CompositionCycle(cycle)
    record(
        instance,
        "module.wired",
        {
            "source_module": source.module_id,
            "output": out_decl.name,
            "target_module": target.module_id,
            "input": in_decl.name,
        },
        actor,
        caused_by,
    )
    return Wire(out_decl.name, target.module_id, in_decl.name)


def composite_manifest(
    instance: Instance,
    module_kind: str,
    version: str,
    parts: Sequence[str],
    wiring: Sequence[WireSpec],
) -> ModuleManifest:
    """A manifest whose ports are the unwired ports of `parts`, named "<part>.<port>"."""
    fed = {(w.target_module, w.input) for w in wiring}
    used = {(w.source_module, w.output) for w in wiring}
    inputs: List[PortDecl] = []
    outputs: List[PortDecl] = []
    ops: List[OpDecl] = []
    lines = [f"composite {module_kind} {version}"]
    for part in parts:
        manifest = get_module(instance, part).manifest
        lines.append(f"part {part} {manifest.module_kind} {manifest.source_ref.hash}")
        open_in = [p for p in manifest.input_ports if (part, p.name) not in fed]
        open_out = [p for p in manifest.output_ports if (part, p.name) not in used]
        inputs += [
            PortDecl(f"{part}.{p.name}", p.port_type, p.handler and f"{part}.{p.handler}")
            for p in open_in
        ]
        outputs += [PortDecl(f"{part}.{p.name}", p.port_type) for p in open_out]
        open_in_names = {p.name for p in open_in}
        open_out_names = {p.name for p in open_out}
        for op in manifest.ops:
            if not set(op.inputs) - set(op.optional) <= open_in_names:
                continue
            ops.append(
                OpDecl(
                    f"{part}.{op.name}",
                    tuple(f"{part}.{i}" for i in op.inputs if i in open_in_names),
                    tuple(f"{part}.{o}" for o in op.outputs if o in open_out_names),
                    tuple(f"{part}.{i}" for i in op.optional),
                )
            )
    lines += [f"wire {w.source_module}.{w.output} -> {w.target_module}.{w.input}" for w in wiring]
    text = "\n".join(lines) + "\n"
    return ModuleManifest(
        module_kind=module_kind,
        version=version,
        behavior=COMPOSITE_BEHAVIOR,
        policies=(PolicyDecl("allow_external", PolicyType.BOOL.value, False),),
        input_ports=tuple(inputs),
        output_ports=tuple(outputs),
        ops=tuple(ops),
        source_ref=SourceRef(sha256_hex(text), text),
    )


def compose(
    instance: Instance,
    org_path: OrgPath,
    module_kind: str,
    version: str,
    parts: Sequence[str],
    wiring: Sequence[WireSpec],
    actor: Actor = SYSTEM_ACTOR,
    module_id: Optional[str] = None,
    policy_values: Optional[Mapping[str, Value]] = None,
) -> GovModuleInstance:
    """Wire `parts` together and install the composite that fronts them."""
    require(instance, actor, "module.install", org_path)
    for part in parts:
        module = get_module(instance, part)
        if module.composite:
            raise DuplicateEntity(f"{part} already belongs to {module.composite}")
        if module.host_org != org_path:
            raise PortTypeError(f"{part} is hosted at {module.host_org}, not {org_path}")
    # Check the whole wiring up front so that a bad spec records nothing.
    edges = _edges(instance)
    for spec in wiring:
        if spec.source_module not in parts or spec.target_module not in parts:
            raise UnknownModule(
                f"{spec.source_module} -> {spec.target_module} leaves the composite"
            )
        _, out_decl = _resolve_port(instance, spec.source_module, spec.output, outgoing=True)
        _, in_decl = _resolve_port(instance, spec.target_module, spec.input, outgoing=False)
        if out_decl.port_type != in_decl.port_type:
            raise PortTypeError(
                f"{spec.source_module}.{spec.output} ({out_decl.port_type}) cannot feed "
                f"{spec.target_module}.{spec.input} ({in_decl.port_type})"
            )
        cycle = find_cycle(edges, spec.source_module, spec.target_module)
        if cycle is not None:
            raise CompositionCycle(cycle)
        edges.setdefault(spec.source_module, []).append(spec.target_module)
    manifest = composite_manifest(instance, module_kind, version, parts, wiring)
    values = resolve_policies(manifest, policy_values or {})
    module_id = module_id or next_module_id(instance, module_kind)
    if module_id in instance.modules:
        raise DuplicateEntity(f"module {module_id}")
    for spec in wiring:
        wire(instance, spec.source_module, spec.output, spec.target_module, spec.input, actor)
    instance.sources[manifest.source_ref.hash] = manifest.source_ref.text
    record(
        instance,
        "module.installed",
        {
            "module_id": module_id,
            "org": org_path,
            "kind": module_kind,
            "version": version,
            "source_hash": manifest.source_ref.hash,
            "policies": values,
            "manifest": manifest_to_value(manifest),
            "parts": list(parts),
            "source_text": manifest.source_ref.text,
        },
        actor,
    )
    return instance.modules[module_id]


def _invoke_composite(
    instance: Instance,
    composite: GovModuleInstance,
    op_name: str,
    args: Dict[str, Any],
    actor: Actor,
    caused_by: Optional[int],
) -> OutputBundle:
    op = composite.manifest.op(op_name)
    if op is None:
        raise UnknownOp(f"{composite.module_id} has no op {op_name}")
    part, _, inner_op = op_name.partition(".")
    require(instance, actor, INVOKE_PREFIX + inner_op, composite.host_org)
    check_args(composite.manifest, op, args)
    prefix = part + "."
    inner_args = {k[len(prefix) :]: v for k, v in args.items()}
    event = record(
        instance,
        "module.invoked",
        {"module_id": composite.module_id, "op": op_name, "args": args},
        actor,
        caused_by,
    )
    inner = get_module(instance, part)
    _, emitted = _run_and_deliver(instance, inner, inner_op, inner_args, actor, event.seq)
    open_ports = {p.name for p in composite.manifest.output_ports}
    outputs: OutputBundle = {}
    for module_id, bundle in emitted.items():
        for port, value in bundle.items():
            name = f"{module_id}.{port}"
            if name in open_ports:
                outputs[name] = value
    return outputs


# ---------------------------------------------------------------------------------------------
# Source transparency, clock
# ---------------------------------------------------------------------------------------------


def fetch_source(instance: Instance, module_id: str, actor: Actor = SYSTEM_ACTOR) -> SourceBundle:
    module = get_module(instance, module_id)
    require(instance, actor, "org.view", module.host_org)
    expected = module.manifest.source_ref.hash
    text = instance.sources.get(expected)
    if text is None or sha256_hex(text) != expected:
        raise IntegrityError(f"{module_id}: stored source does not match {expected}")
    return SourceBundle(module.manifest._replace(source_ref=SourceRef(expected, text)), text)


def advance_clock(instance: Instance, tick: int) -> None:
    """Move the clock to `tick` and run every module's tick hook in module_id order."""
    if tick < instance.clock:
        return
    set_clock(instance, tick)
    for module_id in sorted(instance.modules):
        module = instance.modules[module_id]
        if module.parts:
            continue
        run_hook_guarded(instance, module, "on_tick")
    logger.debug("instance %s advanced to tick %d", instance.instance_id, tick)


def check_outputs_any(manifest: ModuleManifest, outputs: Mapping[str, Any]) -> None:
    for name, value in outputs.items():
        port = manifest.output_port(name)
        if port is None:
            raise PortTypeError(f"{manifest.module_kind} cannot emit on {name}")
        check_port_value(name, port.port_type, value)
