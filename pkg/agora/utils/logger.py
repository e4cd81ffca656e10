import abc
import json
import logging
import os
import sys
from datetime import datetime
from enum import Enum
from typing import Any, Dict, List

from colorama import Fore, Style
from omegaconf import DictConfig
from pandas.io.json._normalize import _simple_json_normalize as flatten_dict

from agora.base_types import Event
from agora.utils.serialization import event_to_line


class LogEvent(Enum):
    LOAD = "load"
    STEP = "step"
    ASSERT = "assert"
    SUMMARY = "summary"
    MISC = "misc"


class AgoraLogger:
    """The front logger for agora commands.

    Thin wrapper around the MultiLogger plus the event trace, which is switched on separately
    because it writes to standard output.
    """

    def __init__(self, config: DictConfig) -> None:
        self.logger: BaseLogger = _make_multi_logger(config)
        self.tracer = TraceLogger() if config.logger.get("trace", False) else None
        self.cfg = config

    def log(self, metrics: Dict, tick: int, event: LogEvent) -> None:
        """Log a dictionary of values at a given tick."""
        self.logger.log_dict(metrics, tick, event)

    def trace(self, instance_id: str, event: Event) -> None:
        if self.tracer is not None:
            self.tracer.write(instance_id, event)

    def stop(self) -> None:
        """Stop the logger."""
        self.logger.stop()


class BaseLogger(abc.ABC):
    @abc.abstractmethod
    def __init__(self, cfg: DictConfig, unique_token: str) -> None:
        pass

    @abc.abstractmethod
    def log_stat(self, key: str, value: Any, tick: int, event: LogEvent) -> None:
        """Log a single value."""
        raise NotImplementedError

    def log_dict(self, data: Dict, tick: int, event: LogEvent) -> None:
        """Log a dictionary of values."""
        # in case the dict is nested, flatten it.
        data = flatten_dict(data, sep="/")

        for key, value in data.items():
            self.log_stat(key, value, tick, event)

    def stop(self) -> None:
        """Stop the logger."""
        return None


class MultiLogger(BaseLogger):
    """Logger that can log to multiple loggers at once."""

    def __init__(self, loggers: List[BaseLogger]) -> None:
        self.loggers = loggers

    def log_stat(self, key: str, value: Any, tick: int, event: LogEvent) -> None:
        for logger in self.loggers:
            logger.log_stat(key, value, tick, event)

    def log_dict(self, data: Dict, tick: int, event: LogEvent) -> None:
        for logger in self.loggers:
            logger.log_dict(data, tick, event)

    def stop(self) -> None:
        for logger in self.loggers:
            logger.stop()


class JsonLogger(BaseLogger):
    """Appends one json record per logged dictionary, for aggregating many runs."""

    def __init__(self, cfg: DictConfig, unique_token: str) -> None:
        json_logs_path = os.path.join(cfg.logger.base_exp_path, "json", unique_token)
        # if a custom path is specified, use that instead
        if cfg.logger.kwargs.json_path is not None:
            json_logs_path = os.path.join(
                cfg.logger.base_exp_path, "json", cfg.logger.kwargs.json_path
            )
        os.makedirs(json_logs_path, exist_ok=True)
        self.path = os.path.join(json_logs_path, "runs.json")
        self.records: List[Dict[str, Any]] = []

    def log_stat(self, key: str, value: Any, tick: int, event: LogEvent) -> None:
        self.records.append({"event": event.value, "tick": tick, key: value})

    def log_dict(self, data: Dict, tick: int, event: LogEvent) -> None:
        self.records.append({"event": event.value, "tick": tick, **flatten_dict(data, sep="/")})

    def stop(self) -> None:
        with open(self.path, "a", encoding="utf-8") as f:
            for record in self.records:
                f.write(json.dumps(record, default=str) + "\n")
        self.records = []


class ConsoleLogger(BaseLogger):
    """Logger for writing to stderr, leaving stdout to command output."""

    _EVENT_COLOURS = {
        LogEvent.LOAD: Fore.CYAN,
        LogEvent.STEP: Fore.MAGENTA,
        LogEvent.ASSERT: Fore.GREEN,
        LogEvent.SUMMARY: Fore.BLUE,
        LogEvent.MISC: Fore.YELLOW,
    }

    def __init__(self, cfg: DictConfig, unique_token: str) -> None:
        self.logger = logging.getLogger()

        self.logger.handlers = []

        ch = logging.StreamHandler(sys.stderr)
        formatter = logging.Formatter(f"{Fore.CYAN}{Style.BRIGHT}%(message)s", "%H:%M:%S")
        ch.setFormatter(formatter)
        self.logger.addHandler(ch)

        # Set to info to suppress debug outputs.
        self.logger.setLevel("INFO")

    def log_stat(self, key: str, value: Any, tick: int, event: LogEvent) -> None:
        colour = self._EVENT_COLOURS[event]

        # Replace underscores with spaces and capitalise keys.
        key = key.replace("_", " ").capitalize()
        self.logger.info(
            f"{colour}{Style.BRIGHT}{event.value.upper()} @{tick} - {key}: {value}{Style.RESET_ALL}"
        )

    def log_dict(self, data: Dict, tick: int, event: LogEvent) -> None:
        # in case the dict is nested, flatten it.
        data = flatten_dict(data, sep=" ")

        colour = self._EVENT_COLOURS[event]
        keys = [k.replace("_", " ").capitalize() for k in data.keys()]
        values = [f"{v:.3f}" if isinstance(v, float) else v for v in data.values()]
        log_str = " | ".join([f"{k}: {v}" for k, v in zip(keys, values)])

        self.logger.info(
            f"{colour}{Style.BRIGHT}{event.value.upper()} @{tick} - {log_str}{Style.RESET_ALL}"
        )


class TraceLogger:
    """Streams every appended Event to stdout as `<instance_id> <log line>`."""

    def __init__(self, stream: Any = None) -> None:
        self.stream = stream or sys.stdout

    def write(self, instance_id: str, event: Event) -> None:
        self.stream.write(f"{instance_id} {event_to_line(event)}\n")
        self.stream.flush()


def _make_multi_logger(cfg: DictConfig) -> BaseLogger:
    """Creates a MultiLogger given a config"""

    loggers: List[BaseLogger] = []
    unique_token = datetime.now().strftime("%Y%m%d%H%M%S")

    if cfg.logger.use_json:
        loggers.append(JsonLogger(cfg, unique_token))
    if cfg.logger.use_console:
        loggers.append(ConsoleLogger(cfg, unique_token))

    return MultiLogger(loggers)
