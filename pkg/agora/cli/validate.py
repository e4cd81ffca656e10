"""Check govspec, scenario and module manifest files without running anything."""
import sys
from pathlib import Path
from typing import List, Sequence, TextIO, Tuple

import hydra
from omegaconf import DictConfig, OmegaConf

from agora.lang import diagnostics as codes
from agora.lang.diagnostics import Diagnostic, Severity, has_errors
from agora.lang.govspec import parse_govspec
from agora.lang.manifest import parse_manifest
from agora.lang.scenario import parse_scenario
from agora.runtime.repository import MANIFEST_SUFFIX, ModuleRepository, split_module_path
from agora.utils.logger import AgoraLogger, LogEvent

SCENARIO_SUFFIX = ".scenario"


def check_file(path: Path, repository: ModuleRepository) -> Tuple[List[Diagnostic], bool]:
    """Diagnostics for one file and whether it could be read at all."""
    try:
        data = path.read_bytes()
    except OSError as exc:
        message = f"cannot read file: {exc.strerror}"
        return [Diagnostic(0, 0, codes.IO_ERROR, Severity.ERROR.value, message)], False
    if path.suffix == MANIFEST_SUFFIX:
        return parse_manifest(data).diagnostics, True
    if path.suffix == SCENARIO_SUFFIX:
        return parse_scenario(data).diagnostics, True
    return parse_govspec(data, repository).diagnostics, True


def validate_paths(
    paths: Sequence[str], repository: ModuleRepository, out: TextIO = sys.stdout
) -> int:
    """Print every diagnostic as `path:line:column: severity code: message`.

    Returns the exit code.
    """
    failed = unreadable = False
    for name in paths:
        diagnostics, readable = check_file(Path(name), repository)
        for diagnostic in diagnostics:
            out.write(diagnostic.render(name) + "\n")
        unreadable |= not readable
        failed |= has_errors(diagnostics)
    if unreadable:
        return 2
    return 1 if failed else 0


@hydra.main(config_path="../configs", config_name="default_validate.yaml", version_base="1.2")
def hydra_entry_point(cfg: DictConfig) -> None:
    """Validate entry point."""
    # Allow dynamic attributes.
    OmegaConf.set_struct(cfg, False)

    logger = AgoraLogger(cfg)
    repository = ModuleRepository(split_module_path(cfg.repository.module_path))
    paths = [str(p) for p in cfg.paths]
    code = validate_paths(paths, repository)
    logger.log({"files": len(paths), "exit_code": code}, 0, LogEvent.SUMMARY)
    logger.stop()
    sys.exit(code)


if __name__ == "__main__":
    hydra_entry_point()
