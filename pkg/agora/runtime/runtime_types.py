from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from typing_extensions import NamedTuple

from agora.base_types import OrgPath, Value


class PortType(str, Enum):
    USER_REF = "user_ref"
    RESOURCE_REF = "resource_ref"
    ORG_REF = "org_ref"
    VALUE = "value"
    DECISION = "decision"
    POLICY_CHANGE = "policy_change"


class PolicyType(str, Enum):
    INT = "int"
    FLOAT = "float"
    BOOL = "bool"
    STR = "str"
    LIST = "list"
    MAP = "map"


class PortDecl(NamedTuple):
    """A typed port.

    name: port name, unique per direction within a manifest.
    port_type: one of the closed PortType variants.
    handler: for input ports, the op run when a wired delivery lands on the port.
    """

    name: str
    port_type: str
    handler: str = ""


class PolicyDecl(NamedTuple):
    """An editable configuration option of a module."""

    name: str
    value_type: str
    default: Value
    lower: Optional[float] = None
    upper: Optional[float] = None
    choices: Tuple[str, ...] = ()


class OpDecl(NamedTuple):
    """An operation of a module: the input ports it reads and the output ports it fills."""

    name: str
    inputs: Tuple[str, ...]
    outputs: Tuple[str, ...]
    optional: Tuple[str, ...] = ()


class SourceRef(NamedTuple):
    hash: str
    text: str


class ModuleManifest(NamedTuple):
    """Everything needed to install a module kind, plus its inspectable source."""

    module_kind: str
    version: str
    behavior: str
    policies: Tuple[PolicyDecl, ...]
    input_ports: Tuple[PortDecl, ...]
    output_ports: Tuple[PortDecl, ...]
    ops: Tuple[OpDecl, ...]
    source_ref: SourceRef
    allow_external: bool = False
    description: str = ""

    def policy(self, name: str) -> Optional[PolicyDecl]:
        return next((p for p in self.policies if p.name == name), None)

    def op(self, name: str) -> Optional[OpDecl]:
        return next((o for o in self.ops if o.name == name), None)

    def input_port(self, name: str) -> Optional[PortDecl]:
        return next((p for p in self.input_ports if p.name == name), None)

    def output_port(self, name: str) -> Optional[PortDecl]:
        return next((p for p in self.output_ports if p.name == name), None)


class Wire(NamedTuple):
    """this.output_port -> target_module.input_port."""

    output_port: str
    target_module: str
    input_port: str


@dataclass
class GovModuleInstance:
    """An installed, policy-configured module."""

    module_id: str
    manifest: ModuleManifest
    policy_values: Dict[str, Value]
    host_org: OrgPath
    wiring: List[Wire] = field(default_factory=list)
    state: Dict[str, Any] = field(default_factory=dict)
    # Inner module ids for composites, empty otherwise.
    parts: List[str] = field(default_factory=list)
    # Set on the inner modules of a composite.
    composite: str = ""


class PolicyChange(NamedTuple):
    """A change to a module policy or to an Org permission table.

    target: {"module_id", "policy"} or {"level", "entry": "grant"|"restrict"|"revoke", ...}.
    new_value: the value the policy takes (or the permission entry being added).
    authorized_by: seq of the Event that authorized the change.
    """

    target: Dict[str, Any]
    new_value: Any
    authorized_by: Optional[int] = None

    def to_value(self) -> Dict[str, Any]:
        return {
            "target": dict(self.target),
            "new_value": self.new_value,
            "authorized_by": self.authorized_by,
        }


# Op handlers return a bundle keyed by output port name.
OutputBundle = Dict[str, Any]


def manifest_to_value(manifest: ModuleManifest) -> Dict[str, Any]:
    """Serializable form of a manifest; the source text travels separately by hash."""
    return {
        "module_kind": manifest.module_kind,
        "version": manifest.version,
        "behavior": manifest.behavior,
        "policies": [
            {
                "name": p.name,
                "value_type": p.value_type,
                "default": p.default,
                "lower": p.lower,
                "upper": p.upper,
                "choices": list(p.choices),
            }
            for p in manifest.policies
        ],
        "input_ports": [[p.name, p.port_type, p.handler] for p in manifest.input_ports],
        "output_ports": [[p.name, p.port_type, p.handler] for p in manifest.output_ports],
        "ops": [[o.name, list(o.inputs), list(o.outputs), list(o.optional)] for o in manifest.ops],
        "source_hash": manifest.source_ref.hash,
        "allow_external": manifest.allow_external,
        "description": manifest.description,
    }


def manifest_from_value(value: Dict[str, Any], source_text: str = "") -> ModuleManifest:
    return ModuleManifest(
        module_kind=value["module_kind"],
        version=value["version"],
        behavior=value["behavior"],
        policies=tuple(
            PolicyDecl(
                p["name"],
                p["value_type"],
                p["default"],
                p["lower"],
                p["upper"],
                tuple(p["choices"]),
            )
            for p in value["policies"]
        ),
        input_ports=tuple(PortDecl(*p) for p in value["input_ports"]),
        output_ports=tuple(PortDecl(*p) for p in value["output_ports"]),
        ops=tuple(OpDecl(o[0], tuple(o[1]), tuple(o[2]), tuple(o[3])) for o in value["ops"]),
        source_ref=SourceRef(value["source_hash"], source_text),
        allow_external=bool(value["allow_external"]),
        description=value.get("description", ""),
    )
