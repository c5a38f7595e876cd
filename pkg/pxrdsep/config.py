"""
Run configuration read from a single INI-style ``key = value`` file.

Each section maps onto one settings dataclass::

    [run]    RunSettings
    [sim]    SimConfig
    [data]   MixConfig
    [model]  ModelConfig (``preset = toy|full`` picks the starting point)
    [train]  TrainConfig and LossWeights
    [eval]   EvalConfig

Missing keys keep their defaults; unknown sections or keys are rejected.
"""

import configparser
import dataclasses
import logging
import os
import typing
import warnings
from dataclasses import dataclass, field, replace
from typing import Tuple

from pxrdsep.algorithms.simulate import SIM_RANGES, SimConfig
from pxrdsep.errors import IncompatibleGrid, UnknownConfigKey
from pxrdsep.evaluation.report import EvalConfig
from pxrdsep.mixing.sampling import MixConfig, default_mix_config
from pxrdsep.model.config import ModelConfig
from pxrdsep.training.losses import LossWeights
from pxrdsep.training.stages import TrainConfig

logger = logging.getLogger("ps.cli")

RESOLVED_CONFIG = "resolved_config.ini"
MODEL_PRESETS = {"toy": ModelConfig.toy, "full": ModelConfig.full}

# Accepted for compatibility with published parameter tables; not modeled
IGNORED_KEYS = {"sim": ("lattice_extinction", "lattice_torsion")}


@dataclass(frozen=True)
class RunSettings:
    """
    Settings shared by every command.

    Attributes
    ----------
    seed : int
        Global seed
    threads : int
        Worker count for parallel rendering and evaluation
    verbose : bool
        Log at DEBUG level
    n_per_crystal : int
        Patterns rendered per structure
    split_ratios : tuple of float
        Train/val/test fractions of the crystal ids
    fixed_conditions : tuple of str
        Sampled [sim] conditions held at their configured value when
        rendering a library
    """

    seed: int = 0
    threads: int = 1
    verbose: bool = False
    n_per_crystal: int = 20
    split_ratios: Tuple[float, ...] = (0.8, 0.1, 0.1)
    fixed_conditions: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "split_ratios", tuple(self.split_ratios))
        object.__setattr__(self, "fixed_conditions", tuple(self.fixed_conditions))
        unknown = set(self.fixed_conditions) - set(SIM_RANGES)
        if unknown:
            raise ValueError(f"Not a sampled [sim] condition: {sorted(unknown)}")
        if self.threads < 1 or self.n_per_crystal < 1:
            raise ValueError("threads and n_per_crystal must be positive")


@dataclass(frozen=True)
class RunConfig:
    """All settings of a run, one attribute per file section"""

    run: RunSettings = field(default_factory=RunSettings)
    sim: SimConfig = None
    data: MixConfig = None
    model: ModelConfig = field(default_factory=ModelConfig.toy)
    train: TrainConfig = field(default_factory=TrainConfig)
    weights: LossWeights = field(default_factory=LossWeights)
    eval: EvalConfig = field(default_factory=EvalConfig)
    preset: str = "toy"

    def __post_init__(self):
        if self.sim is None:
            object.__setattr__(self, "sim", default_sim(self.model))
        if self.data is None:
            object.__setattr__(self, "data", default_mix_config(self.model.k_max))
        check_consistency(self)

    def with_run(self, **overrides):
        """Copy with ``[run]`` entries replaced (``None`` values are skipped)"""
        overrides = {k: v for k, v in overrides.items() if v is not None}
        if not overrides:
            return self
        run = replace(self.run, **overrides)
        return replace(self, run=run, train=replace(self.train, seed=run.seed))


def default_sim(model):
    """Simulation settings whose grid has exactly ``model.L`` points"""
    width = SimConfig.two_theta_max - SimConfig.two_theta_min
    return SimConfig(step=width / model.L)


def check_consistency(cfg):
    """
    Raises
    ------
    IncompatibleGrid
        If the simulated grid length differs from the network input length
    ValueError
        If mixtures and network disagree on the slot count
    """
    length = cfg.sim.grid.length
    if length != cfg.model.L:
        raise IncompatibleGrid(
            f"[sim] grid has {length} points but [model] L = {cfg.model.L}"
        )
    if cfg.data.k_max != cfg.model.k_max:
        raise ValueError(
            f"[data] k_max = {cfg.data.k_max} differs from [model] k_max = "
            f"{cfg.model.k_max}"
        )


def _parse_scalar(text, kind):
    if kind is bool:
        value = configparser.ConfigParser.BOOLEAN_STATES.get(text.strip().lower())
        if value is None:
            raise ValueError(f"Cannot interpret {text!r} as a boolean")
        return value
    return kind(text.strip())


def coerce(text, kind):
    """Convert config text to a field type (tuples are comma lists)"""
    if typing.get_origin(kind) in (tuple, Tuple):
        args = typing.get_args(kind)
        items = [t for t in text.replace(",", " ").split() if t]
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_parse_scalar(t, args[0]) for t in items)
        if len(items) != len(args):
            raise ValueError(f"Expected {len(args)} values, got {text!r}")
        return tuple(_parse_scalar(t, a) for t, a in zip(items, args))
    return _parse_scalar(text, kind)


def format_value(value):
    if isinstance(value, tuple):
        return ", ".join(format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _section_kwargs(section, items, classes):
    """Split a section's entries between dataclasses, coercing each value"""
    fields = {}
    for cls in classes:
        for f in dataclasses.fields(cls):
            fields[f.name] = (cls, typing.get_type_hints(cls)[f.name])
    kwargs = {cls: {} for cls in classes}
    for key, text in items:
        if key in IGNORED_KEYS.get(section, ()):
            warnings.warn(
                f"[{section}] {key} is accepted but not modeled; ignoring it",
                UserWarning,
            )
            continue
        if key not in fields:
            raise UnknownConfigKey(f"Unknown key in [{section}]: {key!r}")
        cls, kind = fields[key]
        try:
            kwargs[cls][key] = coerce(text, kind)
        except ValueError as err:
            raise ValueError(
                f"Cannot construct [{section}] {key} from value: {text!r}"
            ) from err
    return kwargs


def parse_config(text=""):
    """
    Build a RunConfig from INI text.

    Raises
    ------
    UnknownConfigKey
        For unknown sections or keys
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser.read_string(text)
    unknown = set(parser.sections()) - {"run", "sim", "data", "model", "train", "eval"}
    if unknown:
        raise UnknownConfigKey(f"Unknown config sections: {sorted(unknown)}")

    def items(name):
        return list(parser.items(name)) if parser.has_section(name) else []

    model_items = [(k, v) for k, v in items("model") if k != "preset"]
    preset = parser.get("model", "preset", fallback="toy").strip()
    if preset not in MODEL_PRESETS:
        raise UnknownConfigKey(f"Unknown model preset: {preset!r}")
    model_kwargs = _section_kwargs("model", model_items, (ModelConfig,))[ModelConfig]
    model = MODEL_PRESETS[preset](**model_kwargs)

    run_kwargs = _section_kwargs("run", items("run"), (RunSettings,))
    run = RunSettings(**run_kwargs[RunSettings])

    sim_kwargs = _section_kwargs("sim", items("sim"), (SimConfig,))[SimConfig]
    if "step" not in sim_kwargs:
        lo = sim_kwargs.get("two_theta_min", SimConfig.two_theta_min)
        hi = sim_kwargs.get("two_theta_max", SimConfig.two_theta_max)
        sim_kwargs["step"] = (hi - lo) / model.L
    sim = SimConfig(**sim_kwargs)

    data_kwargs = _section_kwargs("data", items("data"), (MixConfig,))[MixConfig]
    data_kwargs.setdefault("k_max", model.k_max)
    defaults = default_mix_config(data_kwargs["k_max"])
    data_kwargs.setdefault("n_max", defaults.n_max)
    data_kwargs.setdefault("n_min", min(defaults.n_min, data_kwargs["n_max"]))
    data = MixConfig(**data_kwargs)

    train_kwargs = _section_kwargs("train", items("train"), (TrainConfig, LossWeights))
    train_kwargs[TrainConfig].setdefault("seed", run.seed)
    train = TrainConfig(**train_kwargs[TrainConfig])
    weights = LossWeights(**train_kwargs[LossWeights])

    eval_kwargs = _section_kwargs("eval", items("eval"), (EvalConfig,))
    evaluation = EvalConfig(**eval_kwargs[EvalConfig])
    return RunConfig(run, sim, data, model, train, weights, evaluation, preset)


def override_sim(cfg, overrides):
    """
    Copy of ``cfg`` with ``[sim]`` entries replaced from text values.

    Values are coerced like file entries. Sampled conditions that are set
    join ``[run] fixed_conditions`` so that rendering keeps them. A changed
    scan range without an explicit ``step`` keeps ``model.L`` grid points.

    Raises
    ------
    UnknownConfigKey
        For keys that are not SimConfig fields
    IncompatibleGrid
        If the resulting grid length differs from ``model.L``
    """
    kwargs = _section_kwargs("sim", list(overrides.items()), (SimConfig,))[SimConfig]
    if not kwargs:
        return cfg
    if "step" not in kwargs and {"two_theta_min", "two_theta_max"} & set(kwargs):
        lo = kwargs.get("two_theta_min", cfg.sim.two_theta_min)
        hi = kwargs.get("two_theta_max", cfg.sim.two_theta_max)
        kwargs["step"] = (hi - lo) / cfg.model.L
    fixed = set(cfg.run.fixed_conditions) | (set(kwargs) & set(SIM_RANGES))
    run = replace(cfg.run, fixed_conditions=tuple(sorted(fixed)))
    return replace(cfg, run=run, sim=replace(cfg.sim, **kwargs))


def load_config(path=None):
    """Read a config file; defaults only when ``path`` is None"""
    if path is None:
        return parse_config("")
    with open(path) as f:
        return parse_config(f.read())


def config_to_text(cfg):
    """
    Every setting of ``cfg`` in the file format; parsing the result gives
    back an equal RunConfig.
    """
    sections = [
        ("run", [cfg.run]),
        ("sim", [cfg.sim]),
        ("data", [cfg.data]),
        ("model", [cfg.model]),
        ("train", [cfg.train, cfg.weights]),
        ("eval", [cfg.eval]),
    ]
    lines = []
    for name, objects in sections:
        lines.append(f"[{name}]")
        if name == "model":
            lines.append(f"preset = {cfg.preset}")
        for obj in objects:
            for f in dataclasses.fields(obj):
                lines.append(f"{f.name} = {format_value(getattr(obj, f.name))}")
        lines.append("")
    return "\n".join(lines)


def write_resolved_config(cfg, directory):
    """Write ``resolved_config.ini`` into ``directory`` and return its path"""
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, RESOLVED_CONFIG)
    with open(path, "w") as f:
        f.write(config_to_text(cfg))
    logger.debug(f"Wrote resolved configuration to {path}")
    return path
