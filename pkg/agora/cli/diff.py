"""Report the first Event where two logs diverge."""
import sys
from typing import List, Optional, TextIO

import hydra
from omegaconf import DictConfig, OmegaConf
from typing_extensions import NamedTuple

from agora.base_types import Event
from agora.errors import CorruptLog
from agora.kernel.replay import read_log_file
from agora.utils.logger import AgoraLogger, LogEvent
from agora.utils.serialization import event_to_line


class Divergence(NamedTuple):
    seq: int
    left: Optional[Event]
    right: Optional[Event]


def first_divergence(a: List[Event], b: List[Event]) -> Optional[Divergence]:
    """None when both logs are identical Event for Event; a missing tail counts as divergence."""
    for seq in range(max(len(a), len(b))):
        left = a[seq] if seq < len(a) else None
        right = b[seq] if seq < len(b) else None
        if left is None or right is None or event_to_line(left) != event_to_line(right):
            return Divergence(seq, left, right)
    return None


def diff_files(path_a: str, path_b: str, out: TextIO = sys.stdout) -> int:
    try:
        a, b = read_log_file(path_a), read_log_file(path_b)
    except OSError as exc:
        print(f"cannot read log: {exc}", file=sys.stderr)
        return 2
    except CorruptLog as exc:
        print(f"corrupt log at seq {exc.seq}: {exc}", file=sys.stderr)
        return 2
    divergence = first_divergence(a, b)
    if divergence is None:
        return 0
    out.write(f"first divergence at seq {divergence.seq}\n")
    out.write(f"- {event_to_line(divergence.left) if divergence.left else '<end of log>'}\n")
    out.write(f"+ {event_to_line(divergence.right) if divergence.right else '<end of log>'}\n")
    return 1


@hydra.main(config_path="../configs", config_name="default_diff.yaml", version_base="1.2")
def hydra_entry_point(cfg: DictConfig) -> None:
    """Diff entry point."""
    # Allow dynamic attributes.
    OmegaConf.set_struct(cfg, False)

    logger = AgoraLogger(cfg)
    code = diff_files(cfg.log_a, cfg.log_b)
    logger.log({"exit_code": code}, 0, LogEvent.SUMMARY)
    logger.stop()
    sys.exit(code)


if __name__ == "__main__":
    hydra_entry_point()
