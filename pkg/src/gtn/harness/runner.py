"""Train-and-evaluate runner producing metrics reports."""

from dataclasses import asdict, dataclass, field
import json
import time

import numpy as np

from gtn.graphs import load_adjacency_csv
from gtn.harness.config import ConfigError
from gtn.harness.data import load_data_tensor, read_grid
from gtn.harness.models import build_gsos, build_model, count_params
from gtn.harness.synth import split_indices, synth_generate
from gtn.network import DataTensorMeta
from gtn.train import fit, loss

METRIC = {"regression": "mse", "classification": "accuracy"}
LOSS = {"regression": "mse", "classification": "binary_cross_entropy"}


@dataclass
class MetricsReport:
    family: str
    task: str
    metric: str
    value: float
    params: int
    test_loss: float
    loss_curve: list = field(repr=False)
    wall_clock: float = field(default=0.0, compare=False)

    def to_dict(self):
        return asdict(self)

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def load_experiment_data(config):
    """Return ``(train_x, train_t, test_x, test_t, gsos)`` for a config."""
    src = config.data
    if src.synthetic is not None:
        spec = src.synthetic
        if spec.task != config.task:
            raise ConfigError(f"synthetic task {spec.task!r} != experiment task {config.task!r}")
        d = synth_generate(spec, config.training.train_fraction)
        return d.train_x, d.train_t, d.test_x, d.test_t, d.gsos
    csv = src.csv
    sizes = (csv.time_steps, csv.nodes, csv.features)
    x = load_data_tensor(csv.inputs, DataTensorMeta(sizes[:2], sizes[2:]), samples=True)
    t = read_grid(csv.targets)
    if t.shape[0] != x.shape[0]:
        t = t.reshape(x.shape[0], -1)
    if t.shape[1] != config.model.out_dim:
        raise ConfigError(f"targets have {t.shape[1]} columns, model.out_dim is {config.model.out_dim}")
    gsos = build_gsos(sizes, load_adjacency_csv(csv.adjacency), config.model.c)
    train, test = split_indices(x.shape[0], config.training.train_fraction, np.random.default_rng(config.seed))
    return x[train], t[train], x[test], t[test], gsos


def evaluate(task, y, t):
    if task == "classification":
        return float(np.mean((y > 0.5) == (t > 0.5)))
    return loss("mse", y, t)[0]


def run_experiment(config, family=None):
    """Train one model family on the configured data and score the held-out split."""
    family = family or config.family
    start = time.perf_counter()
    train_x, train_t, test_x, test_t, gsos = load_experiment_data(config)
    rng = np.random.default_rng(config.seed)
    model = build_model(family, train_x.shape[1:], gsos, config.model, rng, config.task)
    tc = config.training
    history = fit(
        model, train_x, train_t, LOSS[config.task],
        steps=tc.steps, lr=tc.lr, batch_size=tc.batch_size, rng=rng,
        patience=tc.patience, min_lr=tc.min_lr,
    )
    y = model.forward(test_x)
    return MetricsReport(
        family=family,
        task=config.task,
        metric=METRIC[config.task],
        value=evaluate(config.task, y, test_t),
        params=count_params(model),
        test_loss=loss(LOSS[config.task], y, test_t)[0],
        loss_curve=[float(v) for v in history],
        wall_clock=time.perf_counter() - start,
    )


_LABEL = {"gtn": "GTN", "rnn_baseline": "RNN", "gcn_baseline": "GCN"}


def format_table(reports):
    """Plain-text table with one column per model family."""
    head = f"{'':<10s}" + "".join(f"{_LABEL.get(r.family, r.family):>12s}" for r in reports)
    metric = reports[0].metric
    fmt = (lambda v: f"{100 * v:.2f}%") if metric == "accuracy" else (lambda v: f"{v:.4g}")
    rows = [
        head,
        f"{metric.upper() if metric == 'mse' else 'Accuracy':<10s}" + "".join(f"{fmt(r.value):>12s}" for r in reports),
        f"{'Params':<10s}" + "".join(f"{r.params:>12d}" for r in reports),
    ]
    return "\n".join(rows)
