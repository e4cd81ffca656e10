import copy
from typing import Any, Dict, List, Optional, Tuple

from agora.base_types import Actor, EntityKind, Event, OrgPath, Tick, Value
from agora.kernel import instance as kernel
from agora.kernel.events import record
from agora.kernel.kernel_types import Instance
from agora.runtime.runtime_types import GovModuleInstance, OutputBundle
from agora.utils.prng import SplitMix64, substream_seed


class InvocationContext:
    """The only door through which a behaviour touches the world.

    Every write becomes an Event caused by the invocation (or by the last Event the behaviour
    emitted when it chains effects), so the log reads as a causality tree. Module state writes
    (`put`) are staged and only recorded by `commit`, once the op or hook has returned; an op
    that raises leaves the module state as it found it.
    """

    def __init__(
        self,
        instance: Instance,
        module: GovModuleInstance,
        actor: Actor,
        cause: Optional[int] = None,
    ) -> None:
        self.instance = instance
        self.module = module
        self.actor = actor
        self.cause = cause
        self.last_event: Optional[Event] = None
        # Bundles pushed from hooks, delivered along the wiring after the hook returns.
        self.outbox: List[Tuple[OutputBundle, int]] = []
        self._staged: Dict[str, Any] = {}
        self._staged_rng: Dict[str, int] = {}

    @property
    def tick(self) -> Tick:
        return self.instance.clock

    @property
    def module_actor(self) -> str:
        return f"module:{self.module.module_id}"

    @property
    def last_seq(self) -> Optional[int]:
        return self.last_event.seq if self.last_event is not None else self.cause

    def output(self, bundle: OutputBundle) -> None:
        cause = self.last_seq
        assert cause is not None, "record why before emitting outputs"
        self.outbox.append((dict(bundle), cause))

    def begin(self) -> None:
        """Start a new causal chain; hooks that handle several items call this per item."""
        self.last_event = None

    def adopt(self, event: Event) -> Event:
        """Continue the causal chain from an Event recorded outside the context."""
        self.last_event = event
        return event

    def policy(self, name: str) -> Any:
        return self.module.policy_values[name]

    def get(self, key: str, default: Any = None) -> Any:
        if key in self._staged:
            return copy.deepcopy(self._staged[key])
        return copy.deepcopy(self.module.state.get(key, default))

    def keys(self, prefix: str = "") -> List[str]:
        return sorted(k for k in {**self.module.state, **self._staged} if k.startswith(prefix))

    def put(self, key: str, value: Any) -> None:
        self._staged[key] = copy.deepcopy(value)

    def commit(self) -> List[Event]:
        """Record the staged state writes, in the order their keys were first written."""
        events = [
            self._record("rng.advanced", {"stream": name, "state": state}, chain=False)
            for name, state in self._staged_rng.items()
        ]
        events += [
            self._record(
                "module.state_changed",
                {"module_id": self.module.module_id, "key": key, "value": value},
                chain=False,
            )
            for key, value in self._staged.items()
        ]
        self._staged.clear()
        self._staged_rng.clear()
        return events

    def emit(self, kind: str, payload: Dict[str, Any], caused_by: Optional[int] = None) -> Event:
        """Record an annotation Event (kinds without a reducer change no state)."""
        payload = {"module_id": self.module.module_id, **payload}
        return self._record(kind, payload, caused_by)

    def rng(self, stream: Optional[str] = None) -> SplitMix64:
        """The module's named PRNG sub-stream at its current position."""
        name = stream or self.module.module_id
        state = self._staged_rng.get(name, self.instance.rng_states.get(name))
        if state is None:
            state = substream_seed(self.instance.rng_seed, name)
        return SplitMix64(state)

    def commit_rng(self, rng: SplitMix64, stream: Optional[str] = None) -> None:
        """Stage the stream position; recorded with the state writes by `commit`."""
        self._staged_rng[stream or self.module.module_id] = rng.state

    def set_resource_state(self, resource_id: str, key: str, value: Value) -> Event:
        event = kernel.set_resource_state(
            self.instance,
            resource_id,
            key,
            value,
            self.module_actor,
            via_module=self.module,
            caused_by=self.last_seq,
        )
        self.last_event = event
        return event

    def set_user_attribute(self, user_id: str, key: str, value: Value) -> Event:
        event = kernel.set_user_attribute(
            self.instance,
            user_id,
            key,
            value,
            self.module_actor,
            via_module=self.module,
            caused_by=self.last_seq,
        )
        self.last_event = event
        return event

    def add_member(self, path: OrgPath, user_id: str) -> Optional[Event]:
        membership = kernel.add_member(
            self.instance,
            path,
            kernel.local_ref(self.instance, EntityKind.USER.value, user_id),
            self.module_actor,
            via_module=self.module,
            caused_by=self.last_seq,
        )
        if membership.seq is None:
            return None
        return self.adopt(self.instance.event_log[membership.seq])

    def check_add_member(self, path: OrgPath, user_id: str) -> None:
        """Raise whatever `add_member` would raise for this user, recording nothing."""
        kernel.check_add_member(
            self.instance,
            path,
            kernel.local_ref(self.instance, EntityKind.USER.value, user_id),
            self.module_actor,
            via_module=self.module,
        )

    def remove_member(self, path: OrgPath, user_id: str) -> Event:
        event = kernel.remove_member(
            self.instance,
            path,
            kernel.local_ref(self.instance, EntityKind.USER.value, user_id),
            self.module_actor,
            via_module=self.module,
            caused_by=self.last_seq,
        )
        return self.adopt(event)

    def members(self, path: Optional[OrgPath] = None) -> List[str]:
        """User ids of the host Org (or `path`), in join order."""
        org = kernel.get_org(self.instance, path or self.module.host_org)
        return [ref.id for ref in org.members.values() if ref.kind == EntityKind.USER.value]

    def user(self, user_id: str) -> Optional[Any]:
        return self.instance.users.get(user_id)

    def _record(
        self,
        kind: str,
        payload: Dict[str, Any],
        caused_by: Optional[int] = None,
        chain: bool = True,
    ) -> Event:
        if caused_by is None:
            caused_by = self.last_seq if chain else self.cause
        event = record(self.instance, kind, payload, self.module_actor, caused_by)
        # Bookkeeping writes hang off the invocation; effects chain on each other.
        if chain:
            self.last_event = event
        return event
