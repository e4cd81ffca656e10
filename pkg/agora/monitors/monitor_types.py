from enum import Enum
from typing import Any, Dict, Tuple

from typing_extensions import NamedTuple

from agora.base_types import Tick


class OutputType(str, Enum):
    BINARY = "binary"
    FRACTION = "fraction"
    ARRAY = "array"


class Aggregation(str, Enum):
    COUNT = "count"
    MEAN = "mean"
    RATIO = "ratio"
    PERCENTILE_RANK = "percentile_rank"
    LIST = "list"


AGGREGATION_OUTPUT = {
    Aggregation.COUNT.value: OutputType.BINARY.value,
    Aggregation.MEAN.value: OutputType.BINARY.value,
    Aggregation.RATIO.value: OutputType.FRACTION.value,
    Aggregation.PERCENTILE_RANK.value: OutputType.FRACTION.value,
    Aggregation.LIST.value: OutputType.ARRAY.value,
}


class MonitorSpec(NamedTuple):
    """What a monitor reads and how it folds it into one value.

    measure: installed | members | resource:<key> | user:<attr> | policy:<module>.<name> |
        module:<module>.<key> | events:<kind>
    targets: org path patterns ("/a", "/a/*", "/a/**").
    window: 0 reads a snapshot of current state; n > 0 reads the log over the last n ticks.
    predicate: "<op><number>" for count, mean and ratio.
    reference: org path the percentile rank is taken for.
    """

    measure: str
    targets: Tuple[str, ...]
    aggregation: str
    output_type: str
    window: int = 0
    predicate: str = ""
    reference: str = ""

    def to_value(self) -> Dict[str, Any]:
        return {
            "measure": self.measure,
            "targets": list(self.targets),
            "aggregation": self.aggregation,
            "output_type": self.output_type,
            "window": self.window,
            "predicate": self.predicate,
            "reference": self.reference,
        }

    @classmethod
    def from_value(cls, value: Dict[str, Any]) -> "MonitorSpec":
        targets = value.get("targets", ["/"])
        aggregation = str(value["aggregation"])
        return cls(
            measure=str(value["measure"]),
            targets=tuple(str(t) for t in (targets if isinstance(targets, list) else [targets])),
            aggregation=aggregation,
            output_type=str(value.get("output_type", AGGREGATION_OUTPUT.get(aggregation, ""))),
            window=int(value.get("window", 0)),
            predicate=str(value.get("predicate", "")),
            reference=str(value.get("reference", "")),
        )


class MonitorReport(NamedTuple):
    produced_at: Tick
    value: Any
    inputs_digest: str
    method_ref: Dict[str, Any]

    def to_value(self) -> Dict[str, Any]:
        return {
            "produced_at": self.produced_at,
            "value": self.value,
            "inputs_digest": self.inputs_digest,
            "method_ref": dict(self.method_ref),
        }
