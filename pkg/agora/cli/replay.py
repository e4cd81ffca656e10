"""Rebuild final state from an event log and print its digest."""
import sys
from typing import Optional, TextIO

import hydra
from omegaconf import DictConfig, OmegaConf

from agora.errors import CorruptLog
from agora.kernel.replay import ReplayResult, read_log_file, replay
from agora.runtime.repository import ModuleRepository, split_module_path
from agora.utils.logger import AgoraLogger, LogEvent


def replay_file(
    path: str,
    repository: ModuleRepository,
    expect_digest: Optional[str] = None,
    out: TextIO = sys.stdout,
) -> int:
    """Print `<instance_id> <digest>`; exit 1 on a digest mismatch, 2 on an unreadable log."""
    try:
        result: ReplayResult = replay(read_log_file(path), repository)
    except OSError as exc:
        print(f"cannot read {path}: {exc.strerror}", file=sys.stderr)
        return 2
    except CorruptLog as exc:
        print(f"{path}: corrupt log at seq {exc.seq}: {exc}", file=sys.stderr)
        return 2
    digest = f"{result.digest:016x}"
    out.write(f"{result.instance.instance_id} {digest}\n")
    if expect_digest is not None and digest != str(expect_digest).lower():
        print(f"digest {digest} does not match {expect_digest}", file=sys.stderr)
        return 1
    return 0


@hydra.main(config_path="../configs", config_name="default_replay.yaml", version_base="1.2")
def hydra_entry_point(cfg: DictConfig) -> None:
    """Replay entry point."""
    # Allow dynamic attributes.
    OmegaConf.set_struct(cfg, False)

    logger = AgoraLogger(cfg)
    repository = ModuleRepository(split_module_path(cfg.repository.module_path))
    code = replay_file(cfg.log, repository, cfg.expect_digest)
    logger.log({"log": cfg.log, "exit_code": code}, 0, LogEvent.SUMMARY)
    logger.stop()
    sys.exit(code)


if __name__ == "__main__":
    hydra_entry_point()
