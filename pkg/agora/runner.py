"""Deterministic scenario runner.

Each tick runs in a fixed order: every Instance advances its clock (module tick hooks run in
module_id order, Instances in instance_id order), the network delivers what is due, the tick's
steps run in file order with a network pump after each, and then the tick's expectations are
checked.
"""
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

from typing_extensions import NamedTuple

from agora.base_types import SYSTEM_ACTOR, Actor, EntityKind, EntityRef, Event
from agora.errors import AgoraError, ConfigReferenceError, GovSpecError
from agora.federation.federation_types import LinkSpec
from agora.federation.network import SimNetwork
from agora.federation.protocol import send
from agora.kernel import instance as kernel
from agora.kernel.kernel_types import DEDUP_CACHE_SIZE, Instance
from agora.kernel.loader import create_instance
from agora.kernel.replay import write_log
from agora.lang.govspec import parse_govspec
from agora.lang.lang_types import Expectation, GovSpecDoc, LinkDecl, ScenarioScript, ScenarioStep
from agora.lang.scenario import parse_scenario
from agora.monitors.compare import cross_instance_compare
from agora.monitors.monitor_types import MonitorSpec
from agora.monitors.query import monitor_query
from agora.monitors.stats import participation_stats
from agora.runtime import dispatcher
from agora.runtime.ports import coerce_port_value
from agora.runtime.repository import ModuleRepository
from agora.runtime.runtime_types import PortType
from agora.utils.serialization import to_value

logger = logging.getLogger(__name__)

TraceListener = Callable[[str, Event], None]


class RunStatus(str, Enum):
    OK = "ok"
    ASSERTION_FAILED = "assertion_failed"
    LOAD_ERROR = "load_error"


EXIT_CODES = {RunStatus.OK: 0, RunStatus.ASSERTION_FAILED: 1, RunStatus.LOAD_ERROR: 2}


class AssertionOutcome(NamedTuple):
    tick: int
    expression: str
    passed: bool
    observed: Any
    line: int = 0

    def render(self) -> str:
        verdict = "pass" if self.passed else "FAIL"
        return (
            f"line {self.line} tick {self.tick}: {verdict} {self.expression} "
            f"(observed {self.observed!r})"
        )


class RunResult(NamedTuple):
    status: RunStatus
    digests: Dict[str, int]
    log_paths: List[str]
    outcomes: List[AssertionOutcome]
    message: str = ""

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]

    @property
    def first_failure(self) -> Optional[AssertionOutcome]:
        return next((o for o in self.outcomes if not o.passed), None)


class LoadedScenario(NamedTuple):
    script: ScenarioScript
    docs: List[GovSpecDoc]


def load_scenario(path: Union[str, Path], repository: ModuleRepository) -> LoadedScenario:
    """Read and check a script and every govspec it names; GovSpecError carries diagnostics."""
    path = Path(path)
    result = parse_scenario(path.read_bytes())
    if not result.ok:
        raise GovSpecError(result.diagnostics, str(path))
    script: ScenarioScript = result.doc
    docs = []
    for name in script.govspecs:
        spec_path = path.parent / name
        parsed = parse_govspec(spec_path.read_bytes(), repository)
        if not parsed.ok:
            raise GovSpecError(parsed.diagnostics, str(spec_path))
        docs.append(parsed.doc)
    return LoadedScenario(script, docs)


def links_from_value(value: Sequence[Dict[str, Any]]) -> List[LinkDecl]:
    """Link specs as read from a --net file: [{a, b, delay_ticks, drop, duplicate}]."""
    return [
        LinkDecl(
            str(item["a"]),
            str(item["b"]),
            int(item.get("delay_ticks", 0)),
            bool(item.get("drop", False)),
            bool(item.get("duplicate", False)),
        )
        for item in value
    ]


def log_paths(base: Union[str, Path], instance_ids: Sequence[str]) -> Dict[str, Path]:
    """One log per Instance: the path itself, or `<stem>.<instance_id><suffix>` for several."""
    base = Path(base)
    if len(instance_ids) == 1:
        return {instance_ids[0]: base}
    return {i: base.with_name(f"{base.stem}.{i}{base.suffix}") for i in instance_ids}


def _link_spec(link: LinkDecl) -> LinkSpec:
    return LinkSpec(link.delay_ticks, link.drop, link.duplicate)


def _walk(value: Any, segments: Sequence[str]) -> Any:
    for segment in segments:
        if isinstance(value, dict):
            value = value.get(segment)
        elif isinstance(value, list) and segment.isdigit() and int(segment) < len(value):
            value = value[int(segment)]
        else:
            return None
    return value


def compare_values(observed: Any, op: str, expected: Any) -> bool:
    try:
        if op == "==":
            return bool(observed == expected)
        if op == "!=":
            return bool(observed != expected)
        if op == "contains":
            return expected in observed
        if op == "lacks":
            return expected not in observed
        if observed is None:
            return False
        return bool(
            {
                "<": observed < expected,
                "<=": observed <= expected,
                ">": observed > expected,
                ">=": observed >= expected,
            }[op]
        )
    except TypeError:
        return False


class ScenarioRunner:
    def __init__(
        self,
        script: ScenarioScript,
        docs: Sequence[GovSpecDoc],
        repository: ModuleRepository,
        seed: Optional[int] = None,
        extra_links: Sequence[LinkDecl] = (),
        default_link: LinkSpec = LinkSpec(),
        dedup_cache_size: int = DEDUP_CACHE_SIZE,
        max_tick: Optional[int] = None,
        listener: Optional[TraceListener] = None,
    ) -> None:
        self.script = script
        self.repository = repository
        self.max_tick = script.max_tick if max_tick is None else max_tick
        links = {(link.a, link.b): _link_spec(link) for link in script.links}
        links.update({(link.a, link.b): _link_spec(link) for link in extra_links})
        self.network = SimNetwork(links, default_link, history=dedup_cache_size)
        self.instances: Dict[str, Instance] = {}
        self.reports: Dict[str, Dict[str, Any]] = {}
        self.outcomes: List[AssertionOutcome] = []
        registry: set = set()
        override = seed if seed is not None else script.seed
        for doc in docs:
            instance = create_instance(
                doc, repository, seed=override, registry=registry, dedup_cache_size=dedup_cache_size
            )
            instance.listeners.append(lambda event, i=instance.instance_id: self._watch(i, event))
            if listener is not None:
                instance.listeners.append(lambda event, i=instance.instance_id: listener(i, event))
                for event in instance.event_log:
                    listener(instance.instance_id, event)
            self.instances[instance.instance_id] = instance
            self.network.join(instance)
        self.default_instance = docs[0].instance_id if docs else ""
        self._check_references()

    def _watch(self, instance_id: str, event: Event) -> None:
        """A hook that failed during the run is a failed outcome at its tick."""
        if event.kind != "hook.failed":
            return
        p = event.payload
        expression = f"{instance_id} {p['module_id']}.{p['hook']} => ok"
        self.outcomes.append(AssertionOutcome(event.tick, expression, False, p["error"]))

    def _check_references(self) -> None:
        named = [s.instance for s in self.script.steps]
        named += [e.instance for e in self.script.expectations]
        named += [i for link in self.script.links for i in (link.a, link.b)]
        for instance_id in named:
            if instance_id is not None and instance_id not in self.instances:
                raise ConfigReferenceError(
                    instance_id, f"scenario names unknown instance {instance_id}"
                )

    def instance(self, instance_id: Optional[str]) -> Instance:
        return self.instances[instance_id or self.default_instance]

    # -- main loop ------------------------------------------------------------------------------

    def run(self) -> List[AssertionOutcome]:
        steps = list(self.script.steps)
        expectations = sorted(self.script.expectations, key=lambda e: e.tick)
        for tick in range(self.max_tick + 1):
            for instance_id in sorted(self.instances):
                dispatcher.advance_clock(self.instances[instance_id], tick)
            self.network.pump(tick)
            while steps and steps[0].tick == tick:
                self.run_step(steps.pop(0))
                self.network.pump(tick)
            while expectations and expectations[0].tick <= tick:
                self.check(expectations.pop(0))
        for expectation in expectations:
            self.outcomes.append(
                AssertionOutcome(
                    expectation.tick,
                    expectation.text,
                    False,
                    "tick not reached",
                    expectation.line,
                )
            )
        return self.outcomes

    def digests(self) -> Dict[str, int]:
        return {i: kernel.state_digest(self.instances[i]) for i in sorted(self.instances)}

    def write_logs(self, base: Union[str, Path]) -> List[str]:
        paths = log_paths(base, sorted(self.instances))
        for instance_id, path in paths.items():
            path.parent.mkdir(parents=True, exist_ok=True)
            write_log(self.instances[instance_id], path)
        return [str(p) for p in paths.values()]

    # -- steps ----------------------------------------------------------------------------------

    def run_step(self, step: ScenarioStep) -> None:
        label = f"at {step.tick} {step.actor} {step.verb} {' '.join(step.positional)}".rstrip()
        try:
            self.execute(step)
        except AgoraError as exc:
            name = type(exc).__name__
            passed = step.expect_error == name
            expression = f"{label} => {step.expect_error or 'ok'}"
            self.outcomes.append(AssertionOutcome(step.tick, expression, passed, name, step.line))
            if not passed:
                logger.info("step on line %d raised %s: %s", step.line, name, exc)
            return
        if step.expect_error is not None:
            expression = f"{label} => {step.expect_error}"
            self.outcomes.append(AssertionOutcome(step.tick, expression, False, "ok", step.line))

    def actor(self, instance: Instance, name: str) -> Actor:
        if name == SYSTEM_ACTOR:
            return SYSTEM_ACTOR
        return kernel.local_ref(instance, EntityKind.USER.value, name)

    def entity(self, instance: Instance, text: str) -> EntityRef:
        if ":" in text:
            return EntityRef.parse(text, instance.instance_id)
        return kernel.local_ref(instance, EntityKind.USER.value, text)

    def execute(self, step: ScenarioStep) -> None:
        instance = self.instance(step.instance)
        actor = self.actor(instance, step.actor)
        handler = getattr(self, f"_{step.verb}")
        handler(instance, actor, step)

    def _invoke(self, instance: Instance, actor: Actor, step: ScenarioStep) -> None:
        module_id, op = step.positional
        module = dispatcher.get_module(instance, module_id)
        args = {}
        for name, value in step.args.items():
            port = module.manifest.input_port(name)
            args[name] = self.port_value(instance, port.port_type if port else "", value)
        outputs = dispatcher.invoke(instance, module_id, op, args, actor)
        if step.alias:
            self.reports[step.alias] = {"value": to_value(outputs)}

    def port_value(self, instance: Instance, port_type: str, value: Any) -> Any:
        kinds = {PortType.USER_REF.value: "user", PortType.RESOURCE_REF.value: "resource"}
        if port_type in kinds and isinstance(value, str) and ":" not in value:
            value = f"{kinds[port_type]}:{value}"
        return coerce_port_value(port_type, value, instance.instance_id)

    def _create_org(self, instance: Instance, actor: Actor, step: ScenarioStep) -> None:
        parent, org_id = step.positional
        kernel.create_org(instance, parent, org_id, actor)

    def _add_member(self, instance: Instance, actor: Actor, step: ScenarioStep) -> None:
        org, entity = step.positional
        kernel.add_member(instance, org, self.entity(instance, entity), actor)

    def _remove_member(self, instance: Instance, actor: Actor, step: ScenarioStep) -> None:
        org, entity = step.positional
        kernel.remove_member(instance, org, self.entity(instance, entity), actor)

    def _install(self, instance: Instance, actor: Actor, step: ScenarioStep) -> None:
        org, kind = step.positional
        manifest = self.repository.manifest(kind)
        dispatcher.install(instance, org, manifest, step.args, actor, module_id=step.alias)

    def _wire(self, instance: Instance, actor: Actor, step: ScenarioStep) -> None:
        source, target = step.positional
        source_module, _, output = source.partition(".")
        target_module, _, input_port = target.partition(".")
        dispatcher.wire(instance, source_module, output, target_module, input_port, actor)

    def _compose(self, instance: Instance, actor: Actor, step: ScenarioStep) -> None:
        org, kind = step.positional
        wiring = []
        for text in step.args.get("wiring", []):
            left, _, right = str(text).partition("->")
            source_module, _, output = left.strip().partition(".")
            target_module, _, input_port = right.strip().partition(".")
            wiring.append(dispatcher.WireSpec(source_module, output, target_module, input_port))
        dispatcher.compose(
            instance,
            org,
            kind,
            str(step.args.get("version", "1.0")),
            [str(p) for p in step.args.get("parts", [])],
            wiring,
            actor,
            module_id=step.alias,
        )

    def _set_resource(self, instance: Instance, actor: Actor, step: ScenarioStep) -> None:
        (resource_id,) = step.positional
        for key, value in step.args.items():
            kernel.set_resource_state(instance, resource_id, key, value, actor)

    def _monitor(self, instance: Instance, actor: Actor, step: ScenarioStep) -> None:
        (name,) = step.positional
        report = monitor_query(instance, MonitorSpec.from_value(step.args), actor)
        self.reports[name] = report.to_value()

    def _stats(self, instance: Instance, actor: Actor, step: ScenarioStep) -> None:
        (name,) = step.positional
        args = step.args
        report = participation_stats(
            instance,
            str(args.get("org", "/")),
            args.get("window"),
            actor,
            args.get("rank_floor"),
            str(args.get("rank_attribute", "rank")),
        )
        self.reports[name] = report.to_value()

    def _compare(self, instance: Instance, actor: Actor, step: ScenarioStep) -> None:
        (name,) = step.positional
        spec = {k: v for k, v in step.args.items() if k != "instances"}
        ids = [str(i) for i in step.args.get("instances", [])]
        report = cross_instance_compare(
            self.network, instance.instance_id, MonitorSpec.from_value(spec), ids, actor
        )
        self.reports[name] = report.to_value()

    def _fetch_source(self, instance: Instance, actor: Actor, step: ScenarioStep) -> None:
        name, module_id = step.positional
        bundle = dispatcher.fetch_source(instance, module_id, actor)
        self.reports[name] = {"value": bundle.manifest.source_ref.hash, "size": len(bundle.text)}

    def _send(self, instance: Instance, actor: Actor, step: ScenarioStep) -> None:
        to_instance, kind, target, op = step.positional
        org, _, module_id = target.partition(":")
        send(
            instance,
            self.network,
            to_instance,
            kind,
            {"org": org or "/", "module_id": module_id},
            op,
            step.args,
            actor,
            module_id=step.alias or "",
        )

    # -- expectations ---------------------------------------------------------------------------

    def observe(self, expectation: Expectation) -> Any:
        instance = self.instance(expectation.instance)
        prefix, _, rest = expectation.subject.partition(":")
        if prefix in ("members", "installed"):
            org = instance.orgs.get(rest)
            if org is None:
                return None
            if prefix == "installed":
                return list(org.installed)
            return [ref.id for ref in org.members.values()]
        if prefix == "events":
            return sum(1 for e in instance.event_log if e.kind == rest)
        if prefix == "report":
            name, *segments = rest.split(".")
            report = self.reports.get(name)
            return _walk(report.get("value") if report else None, segments)
        owner, _, path = rest.partition(".")
        key, *segments = path.split(".")
        if prefix == "resource":
            resource = instance.resources.get(owner)
            return _walk(resource.state.get(key) if resource else None, segments)
        if prefix == "user":
            user = instance.users.get(owner)
            return _walk(user.attributes.get(key) if user else None, segments)
        module = instance.modules.get(owner)
        if module is None:
            return None
        if prefix == "policy":
            return _walk(module.policy_values.get(key), segments)
        return _walk(to_value(module.state.get(key)), segments)

    def check(self, expectation: Expectation) -> None:
        observed = self.observe(expectation)
        passed = compare_values(observed, expectation.op, expectation.value)
        outcome = AssertionOutcome(
            expectation.tick, expectation.text, passed, observed, expectation.line
        )
        self.outcomes.append(outcome)
        if not passed:
            logger.info("%s", outcome.render())


def run_scenario(
    path: Union[str, Path],
    repository: ModuleRepository,
    seed: Optional[int] = None,
    log: Optional[Union[str, Path]] = None,
    extra_links: Sequence[LinkDecl] = (),
    default_link: LinkSpec = LinkSpec(),
    dedup_cache_size: int = DEDUP_CACHE_SIZE,
    max_tick: Optional[int] = None,
    listener: Optional[TraceListener] = None,
) -> Tuple[RunResult, Optional[ScenarioRunner]]:
    """Load, run and (optionally) write logs. Load problems become a load_error result."""
    try:
        loaded = load_scenario(path, repository)
        runner = ScenarioRunner(
            loaded.script,
            loaded.docs,
            repository,
            seed,
            extra_links,
            default_link,
            dedup_cache_size,
            max_tick,
            listener,
        )
    except (OSError, AgoraError) as exc:
        return RunResult(RunStatus.LOAD_ERROR, {}, [], [], str(exc)), None
    outcomes = runner.run()
    paths = runner.write_logs(log) if log else []
    failed = any(not o.passed for o in outcomes)
    status = RunStatus.ASSERTION_FAILED if failed else RunStatus.OK
    return RunResult(status, runner.digests(), paths, outcomes), runner
