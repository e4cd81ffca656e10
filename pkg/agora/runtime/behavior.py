import abc
import inspect
import sys
from typing import Any, Callable, Dict, Optional, Type

from agora.errors import UnknownModule, UnknownOp
from agora.runtime.runtime_types import OutputBundle

Handler = Callable[[Any, Dict[str, Any]], Optional[OutputBundle]]

_BEHAVIORS: Dict[str, "GovBehavior"] = {}


class GovBehavior(abc.ABC):
    """Compiled-in behaviour of a module kind.

    Ops are methods named `op_<name>` taking (ctx, args) and returning an output bundle. State
    never lives on the behaviour object: it is read and written through the context so that
    every change is an Event.
    """

    kind: str = ""

    def handler(self, op_name: str) -> Handler:
        fn = getattr(self, f"op_{op_name}", None)
        if fn is None:
            raise UnknownOp(f"{self.kind} has no op {op_name}")
        return fn  # type: ignore[no-any-return]

    def on_tick(self, ctx: Any) -> None:
        """Called once per clock advance, in module_id order. Outputs go through ctx.output."""

    def on_response(self, ctx: Any, response: Dict[str, Any]) -> None:
        """Called when a federation response to a request this module sent arrives."""


def register_behavior(kind: str) -> Callable[[Type[GovBehavior]], Type[GovBehavior]]:
    def wrap(cls: Type[GovBehavior]) -> Type[GovBehavior]:
        cls.kind = kind
        _BEHAVIORS[kind] = cls()
        return cls

    return wrap


def get_behavior(kind: str) -> GovBehavior:
    _load_builtins()
    behavior = _BEHAVIORS.get(kind)
    if behavior is None:
        raise UnknownModule(f"no behaviour registered for kind {kind!r}")
    return behavior


def behavior_source(kind: str) -> str:
    """Source text of the Python module implementing a behaviour."""
    behavior = get_behavior(kind)
    return inspect.getsource(sys.modules[type(behavior).__module__])


def _load_builtins() -> None:
    # Importing the package registers every built-in behaviour.
    import agora.systems  # noqa: F401
