"""
RunConfig: every setting of a run as one flat, serialisable document

File form is an INI document with [SETUP], [DATA], [ADAPTATION] and
[EXPERIMENT] sections; unknown sections or keys are rejected
"""
import configparser
import dataclasses
import io
import logging
from dataclasses import dataclass, field
from typing import Tuple

from .core.steps import OptimizerSettings
from .exceptions import InvalidArgumentError
from .regimes import REGIMES

log = logging.getLogger("IADA")

CELLS = ("ada", "ada_sdm", "ada_union", "iada", "iada_sdm")
POOL_MODES = ("full", "disjoint")


def _in(section):
    return {"section": section}


@dataclass
class RunConfig:
    # SETUP
    seed: int = field(default=0, metadata=_in("SETUP"))
    data_dir: str = field(default="test", metadata=_in("SETUP"))
    checkpoint_dir: str = field(default="checkpoints", metadata=_in("SETUP"))
    run_dir: str = field(default="runs", metadata=_in("SETUP"))
    report_dir: str = field(default="report", metadata=_in("SETUP"))
    device: str = field(default="cpu", metadata=_in("SETUP"))
    workers: int = field(default=1, metadata=_in("SETUP"))
    outputs: str = field(default="screen,text,jsonfile,plot", metadata=_in("SETUP"))
    # DATA
    start_factor: float = field(default=0.9, metadata=_in("DATA"))
    end_factor: float = field(default=0.5, metadata=_in("DATA"))
    count: int = field(default=5, metadata=_in("DATA"))
    train_size: int = field(default=10000, metadata=_in("DATA"))
    test_size: int = field(default=2000, metadata=_in("DATA"))
    pool_mode: str = field(default="full", metadata=_in("DATA"))
    # ADAPTATION
    mode: str = field(default="iada", metadata=_in("ADAPTATION"))
    sdm: bool = field(default=False, metadata=_in("ADAPTATION"))
    lambda_adv: float = field(default=0.001, metadata=_in("ADAPTATION"))
    scale_discriminator: bool = field(default=False, metadata=_in("ADAPTATION"))
    steps_total: int = field(default=2000, metadata=_in("ADAPTATION"))
    batch_size: int = field(default=64, metadata=_in("ADAPTATION"))
    buffer_capacity: int = field(default=4096, metadata=_in("ADAPTATION"))
    noise_dim: int = field(default=64, metadata=_in("ADAPTATION"))
    source_epochs: int = field(default=10, metadata=_in("ADAPTATION"))
    gan_steps: int = field(default=2000, metadata=_in("ADAPTATION"))
    lr_disc: float = field(default=2e-4, metadata=_in("ADAPTATION"))
    lr_gen: float = field(default=2e-4, metadata=_in("ADAPTATION"))
    lr_encoder: float = field(default=1e-4, metadata=_in("ADAPTATION"))
    lr_source: float = field(default=1e-3, metadata=_in("ADAPTATION"))
    beta1: float = field(default=0.5, metadata=_in("ADAPTATION"))
    beta2: float = field(default=0.999, metadata=_in("ADAPTATION"))
    verify_interval: int = field(default=1, metadata=_in("ADAPTATION"))
    # EXPERIMENT
    name: str = field(default="table1", metadata=_in("EXPERIMENT"))
    cells: Tuple[str, ...] = field(default=CELLS, metadata=_in("EXPERIMENT"))
    seeds: Tuple[int, ...] = field(default=(0, 1, 2), metadata=_in("EXPERIMENT"))
    desk_scale: bool = field(default=True, metadata=_in("EXPERIMENT"))
    sweep_end_factor: float = field(default=0.3, metadata=_in("EXPERIMENT"))
    sweep_counts: Tuple[int, ...] = field(default=(1, 2, 5, 10, 20, 40), metadata=_in("EXPERIMENT"))
    sweep_sdm: bool = field(default=True, metadata=_in("EXPERIMENT"))

    def __post_init__(self):
        self.validate()

    def validate(self):
        self.mode = str(self.mode).lower().replace("-", "_")
        if self.mode not in REGIMES:
            raise InvalidArgumentError(f"unknown adaptation mode {self.mode}, expected one of {', '.join(REGIMES)}")
        self.cells = tuple(self.cells)
        self.seeds = tuple(int(s) for s in self.seeds)
        self.sweep_counts = tuple(int(c) for c in self.sweep_counts)
        for cell in self.cells:
            if cell not in CELLS:
                raise InvalidArgumentError(f"unknown experiment cell {cell}, expected one of {', '.join(CELLS)}")
        if not self.cells:
            raise InvalidArgumentError("at least one experiment cell is required")
        if not self.seeds:
            raise InvalidArgumentError("at least one seed is required")
        if self.pool_mode not in POOL_MODES:
            raise InvalidArgumentError(f"pool_mode must be one of {', '.join(POOL_MODES)}")
        if not (0.0 < self.end_factor <= self.start_factor <= 1.0):
            raise InvalidArgumentError(
                f"factors must satisfy 0 < end <= start <= 1, got start {self.start_factor}, end {self.end_factor}"
            )
        if not (0.0 < self.sweep_end_factor <= 1.0):
            raise InvalidArgumentError(f"sweep_end_factor must be in (0, 1], got {self.sweep_end_factor}")
        for name in ("count", "steps_total", "batch_size", "source_epochs", "gan_steps", "workers"):
            if getattr(self, name) < 1:
                raise InvalidArgumentError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.count > self.steps_total:
            raise InvalidArgumentError(f"count ({self.count}) must not exceed steps_total ({self.steps_total})")
        if self.buffer_capacity < self.batch_size:
            raise InvalidArgumentError("buffer_capacity must be >= batch_size")
        if self.lambda_adv <= 0:
            raise InvalidArgumentError(f"lambda_adv must be > 0, got {self.lambda_adv}")

    def optimizer(self) -> OptimizerSettings:
        return OptimizerSettings(
            lr_disc=self.lr_disc,
            lr_gen=self.lr_gen,
            lr_encoder=self.lr_encoder,
            lr_source=self.lr_source,
            beta1=self.beta1,
            beta2=self.beta2,
        )

    def steps_per_domain(self, count=None) -> int:
        """
        Nominal per domain share of the total adversarial budget; the regimes
        hand the remainder to the earliest domains so the total stays exact
        """
        count = count or self.count
        if count > self.steps_total:
            raise InvalidArgumentError(f"{count} domains cannot share {self.steps_total} steps")
        return self.steps_total // count

    def adaptation(self, mode=None, sdm=None, count=None, seed=None):
        from .engine.trainer import AdaptationConfig

        return AdaptationConfig(
            mode=self.mode if mode is None else mode,
            sdm=self.sdm if sdm is None else sdm,
            lambda_adv=self.lambda_adv,
            steps_per_domain=self.steps_per_domain(count),
            steps_total=self.steps_total,
            batch_size=self.batch_size,
            buffer_capacity=self.buffer_capacity,
            noise_dim=self.noise_dim,
            seed=self.seed if seed is None else seed,
            optimizer=self.optimizer(),
            scale_discriminator=self.scale_discriminator,
            verify_interval=self.verify_interval,
        )

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


def _fields():
    return {f.name: f for f in dataclasses.fields(RunConfig)}


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (tuple, list)):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(f, text):
    text = text.strip()
    default = f.default
    try:
        if isinstance(default, bool):
            lowered = text.lower()
            if lowered not in ("true", "false", "1", "0", "yes", "no", "on", "off"):
                raise ValueError(text)
            return lowered in ("true", "1", "yes", "on")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            items = [item.strip() for item in text.split(",") if item.strip()]
            if default and isinstance(default[0], int):
                return tuple(int(item) for item in items)
            return tuple(items)
    except ValueError as e:
        raise InvalidArgumentError(f"bad value for {f.name}: {text!r}") from e
    return text


def serialize(config: RunConfig) -> str:
    parser = configparser.ConfigParser(interpolation=None)
    for f in dataclasses.fields(RunConfig):
        section = f.metadata["section"]
        if not parser.has_section(section):
            parser.add_section(section)
        parser[section][f.name] = _format(getattr(config, f.name))
    buffer = io.StringIO()
    parser.write(buffer)
    return buffer.getvalue()


def parse(text) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise InvalidArgumentError(f"unable to parse config: {e}") from e
    fields = _fields()
    values = {}
    for section in parser.sections():
        for key, raw in parser[section].items():
            if key not in fields:
                raise InvalidArgumentError(f"unknown config key {key} in section [{section}]")
            if fields[key].metadata["section"] != section:
                raise InvalidArgumentError(
                    f"config key {key} belongs in section [{fields[key].metadata['section']}], not [{section}]"
                )
            values[key] = _parse(fields[key], raw)
    return RunConfig(**values)


def load_config(path) -> RunConfig:
    log.debug(f"reading config file {path}")
    try:
        with open(path) as f:
            return parse(f.read())
    except OSError as e:
        raise InvalidArgumentError(f"unable to read config file {path}: {e}") from e


def save_config(config: RunConfig, path):
    from .io.atomic import atomic_write

    with atomic_write(path, "w") as f:
        f.write(serialize(config))
