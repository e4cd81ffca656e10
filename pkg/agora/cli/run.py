"""Run a scenario script deterministically and check its expectations."""
import sys
from typing import List

import hydra
from colorama import Fore, Style
from omegaconf import DictConfig, OmegaConf
from rich.pretty import pprint

from agora.federation.federation_types import LinkSpec
from agora.lang.lang_types import LinkDecl
from agora.runner import RunResult, RunStatus, links_from_value, run_scenario
from agora.runtime.repository import ModuleRepository, split_module_path
from agora.utils.logger import AgoraLogger, LogEvent


def net_links(path: str) -> List[LinkDecl]:
    spec = OmegaConf.to_container(OmegaConf.load(path), resolve=True)
    return links_from_value(spec.get("links", []))  # type: ignore[union-attr]


def report(result: RunResult) -> None:
    """Failures go to stderr; a passing run prints nothing."""
    if result.status == RunStatus.LOAD_ERROR:
        print(
            f"{Fore.RED}{Style.BRIGHT}load error: {result.message}{Style.RESET_ALL}",
            file=sys.stderr,
        )
        return
    failure = result.first_failure
    if failure is not None:
        print(f"{Fore.RED}{Style.BRIGHT}{failure.render()}{Style.RESET_ALL}", file=sys.stderr)


def run_experiment(cfg: DictConfig) -> RunResult:
    logger = AgoraLogger(cfg)
    if cfg.logger.use_console:
        pprint(OmegaConf.to_container(cfg, resolve=True))
    repository = ModuleRepository(split_module_path(cfg.repository.module_path))
    try:
        extra = net_links(cfg.arch.net) if cfg.arch.net else []
    except (OSError, KeyError, TypeError, ValueError) as exc:
        result = RunResult(RunStatus.LOAD_ERROR, {}, [], [], f"bad link spec {cfg.arch.net}: {exc}")
        logger.stop()
        return result
    link = cfg.federation.default_link
    result, _ = run_scenario(
        cfg.scenario,
        repository,
        seed=cfg.arch.seed,
        log=cfg.arch.log,
        extra_links=extra,
        default_link=LinkSpec(int(link.delay_ticks), bool(link.drop), bool(link.duplicate)),
        dedup_cache_size=int(cfg.federation.dedup_cache_size),
        max_tick=cfg.arch.max_tick,
        listener=logger.trace if cfg.logger.trace else None,
    )
    for outcome in result.outcomes:
        logger.log(
            {"expression": outcome.expression, "passed": outcome.passed},
            outcome.tick,
            LogEvent.ASSERT,
        )
    summary = {
        "status": result.status.value,
        **{f"digest_{k}": f"{v:016x}" for k, v in result.digests.items()},
    }
    logger.log(summary, max([o.tick for o in result.outcomes], default=0), LogEvent.SUMMARY)
    logger.stop()
    return result


@hydra.main(config_path="../configs", config_name="default_run.yaml", version_base="1.2")
def hydra_entry_point(cfg: DictConfig) -> None:
    """Run entry point."""
    # Allow dynamic attributes.
    OmegaConf.set_struct(cfg, False)

    result = run_experiment(cfg)
    report(result)
    sys.exit(result.exit_code)


if __name__ == "__main__":
    hydra_entry_point()
