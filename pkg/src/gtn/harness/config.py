"""Experiment configuration, loaded from JSON with unknown keys rejected."""

from dataclasses import asdict, dataclass, field, fields
import json

from gtn.network import ACTIVATIONS

FAMILIES = ("gtn", "rnn_baseline", "gcn_baseline")
TASKS = ("regression", "classification")
GRAPHS = ("ring", "geometric", "community")


class ConfigError(ValueError):
    pass


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    kwargs = {}
    for name, value in data.items():
        sub = _NESTED.get((cls, name))
        if sub is not None and value is not None:
            value = _build(sub, value, f"{where}.{name}")
        elif isinstance(value, list):
            value = tuple(value)
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass(frozen=True)
class ModelConfig:
    """Layer sizes shared by the GTN model and both baselines.

    ``hidden`` is the GTN feature width K1. The baselines default to the same
    hidden activation count per sample: ``I2 * hidden`` recurrent units for the
    RNN and ``I1 * hidden`` graph features for the GCN.
    """

    hidden: int = 4
    tt_out_dims: tuple = (2, 2, 2)
    tt_ranks: object = 2
    out_dim: int = 1
    activation1: str = "tanh"
    activation2: str = "tanh"
    c: float = 0.9
    bias: bool = True
    rnn_hidden: int = None
    gcn_hidden: int = None

    def __post_init__(self):
        object.__setattr__(self, "tt_out_dims", tuple(int(k) for k in self.tt_out_dims))
        if not isinstance(self.tt_ranks, int):
            object.__setattr__(self, "tt_ranks", tuple(int(r) for r in self.tt_ranks))
        for act in (self.activation1, self.activation2):
            if act not in ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")
        if self.hidden < 1 or self.out_dim < 1 or min(self.tt_out_dims) < 1:
            raise ValueError("layer sizes must be >= 1")
        if len(self.tt_out_dims) != 3:
            raise ValueError("tt_out_dims needs one entry per mode of the GTN output (3)")
        if not 0 < self.c <= 1:
            raise ValueError("c must lie in (0, 1]")

    def rank_vector(self):
        if isinstance(self.tt_ranks, int):
            return (1,) + (self.tt_ranks,) * (len(self.tt_out_dims) - 1) + (1,)
        ranks = self.tt_ranks
        if len(ranks) == len(self.tt_out_dims) - 1:
            ranks = (1,) + ranks + (1,)
        if len(ranks) != len(self.tt_out_dims) + 1:
            raise ConfigError("tt_ranks must list the internal ranks or R_0..R_N")
        return ranks


@dataclass(frozen=True)
class SyntheticSpec:
    """Teacher-generated multi-graph time-series task."""

    graph: str = "ring"
    nodes: int = 8
    time_steps: int = 6
    features: int = 4
    samples: int = 200
    seed: int = 0
    noise: float = 0.0
    task: str = "regression"
    teacher: ModelConfig = field(default_factory=ModelConfig)

    def __post_init__(self):
        if self.graph not in GRAPHS:
            raise ValueError(f"unknown graph family {self.graph!r}")
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if min(self.nodes, self.time_steps, self.features, self.samples) < 1:
            raise ValueError("sizes must be >= 1")
        if self.noise < 0:
            raise ValueError("noise must be >= 0")


@dataclass(frozen=True)
class CSVSource:
    """User-supplied data: inputs ``(samples, I1, I2, J1)``, targets, adjacency."""

    inputs: str
    targets: str
    adjacency: str
    time_steps: int
    nodes: int
    features: int


@dataclass(frozen=True)
class DataConfig:
    synthetic: SyntheticSpec = None
    csv: CSVSource = None

    def __post_init__(self):
        if (self.synthetic is None) == (self.csv is None):
            raise ValueError("give exactly one of 'synthetic' or 'csv'")


@dataclass(frozen=True)
class TrainingConfig:
    steps: int = 2000
    lr: float = 1e-2
    batch_size: int = None
    patience: int = 50
    min_lr: float = 1e-6
    train_fraction: float = 0.8

    def __post_init__(self):
        if self.steps < 0 or self.lr <= 0:
            raise ValueError("steps must be >= 0 and lr > 0")
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class ExperimentConfig:
    family: str = "gtn"
    task: str = "regression"
    seed: int = 0
    data: DataConfig = field(default_factory=lambda: DataConfig(synthetic=SyntheticSpec()))
    model: ModelConfig = field(default_factory=ModelConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown model family {self.family!r}")
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")

    @classmethod
    def from_dict(cls, data):
        return _build(cls, data, "config")

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return asdict(self)


_NESTED = {
    (ExperimentConfig, "data"): DataConfig,
    (ExperimentConfig, "model"): ModelConfig,
    (ExperimentConfig, "training"): TrainingConfig,
    (DataConfig, "synthetic"): SyntheticSpec,
    (DataConfig, "csv"): CSVSource,
    (SyntheticSpec, "teacher"): ModelConfig,
}


def synthetic_spec_from_json(path):
    with open(path) as fh:
        return _build(SyntheticSpec, json.load(fh), "spec")
