"""Run configuration and the tune / train / eval / predict commands.

A run is described by one JSON document::

    {
      "dataset": {"path": "airfoil_self_noise.dat", "delimiter": null,
                  "target": -1, "header": null},
      "space": "self_noise",            # or "aero", or a list of variable declarations
      "budget": {"n_doe": 10, "n_iter": 30},
      "train": {"max_epochs": 1000, "patience": 6},
      "gp": {"categorical": "cr", "n_starts": 10, "max_iter": 100},
      "metrics": {"zeta": 100},
      "arch": {"hidden": [20, 20], "activation": "tanh"},
      "model": "out/model.json",
      "predict": {"input": "rows.csv"},
      "out": "runs/self_noise",
      "seed": 0,
      "workers": 1
    }

Relative paths resolve against the directory holding the config file.
Architecture variables are decoded by name: ``N`` (number of hidden layers),
``N1``, ``N2``, ... (widths) and ``F`` (activation).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import metrics
from .bo import BoResult, TrialRecord, run_ego
from .data import Dataset, DataError, ingest_table, read_rows
from .design_space import DesignPoint, DesignSpace, DesignSpaceError, aero_space, self_noise_space
from .gp import GpConfig
from .lm import (
    TrainConfig,
    TrainedModel,
    evaluate,
    model_from_dict,
    model_to_dict,
    split_dataset,
    train,
    with_overrides,
    write_history_csv,
)
from .mlp import MlpArchitecture

log = logging.getLogger(__name__)

NAMED_SPACES = {"self_noise": self_noise_space, "aero": aero_space}
TRIALS_FILE = "trials.jsonl"
TIMINGS_FILE = "trial_times.jsonl"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    dataset: dict = field(default_factory=dict)
    space: object = "self_noise"
    budget: dict = field(default_factory=lambda: {"n_doe": 10, "n_iter": 30})
    train: dict = field(default_factory=dict)
    gp: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=lambda: {"zeta": 100.0})
    arch: dict = field(default_factory=lambda: {"hidden": [20, 20], "activation": "tanh"})
    model: str | None = None
    predict: dict = field(default_factory=dict)
    out: str = "out"
    seed: int = 0
    workers: int = 1
    base_dir: Path = field(default_factory=Path.cwd)

    @classmethod
    def from_dict(cls, d: dict, base_dir=None) -> "RunConfig":
        known = {f.name for f in fields(cls)} - {"base_dir"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**d, base_dir=Path(base_dir) if base_dir else Path.cwd())
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            d = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(d, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(d, base_dir=path.parent)

    def validate(self):
        for key in ("n_doe", "n_iter"):
            if key in self.budget and (not isinstance(self.budget[key], int) or self.budget[key] < 0):
                raise ConfigError(f"budget.{key} must be a nonnegative integer")
        if self.budget.get("n_doe", 10) < 2:
            raise ConfigError("budget.n_doe must be >= 2")
        try:
            self.train_config()
            self.gp_config()
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if float(self.metrics.get("zeta", 100.0)) <= 0:
            raise ConfigError("metrics.zeta must be positive")

    def resolve(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def out_dir(self) -> Path:
        return self.resolve(self.out)

    @property
    def zeta(self) -> float:
        return float(self.metrics.get("zeta", 100.0))

    def train_config(self) -> TrainConfig:
        return with_overrides(TrainConfig(seed=self.seed), dict(self.train))

    def gp_config(self) -> GpConfig:
        return GpConfig(**self.gp)

    def design_space(self) -> DesignSpace:
        try:
            if isinstance(self.space, str):
                if self.space not in NAMED_SPACES:
                    raise ConfigError(f"unknown named space {self.space!r}; choose from {sorted(NAMED_SPACES)}")
                return NAMED_SPACES[self.space]()
            return DesignSpace.from_list(self.space)
        except DesignSpaceError as exc:
            raise ConfigError(f"design space: {exc}") from None

    def load_dataset(self) -> Dataset:
        ds = self.dataset
        if "path" not in ds:
            raise ConfigError("dataset.path is required")
        return ingest_table(self.resolve(ds["path"]), ds.get("delimiter"), ds.get("target", -1), ds.get("header"))


def decode_architecture(space: DesignSpace, point: DesignPoint, input_dim: int,
                        output_dim: int = 1) -> MlpArchitecture:
    """Hidden widths from ``N`` and ``N1..N<N>``, activation from ``F``."""
    vals = point.as_dict(space.names)
    if "N" in vals:
        n_layers = int(vals["N"])
    else:
        n_layers = sum(1 for k in vals if k[1:].isdigit() and k.startswith("N"))
    try:
        hidden = tuple(int(vals[f"N{i}"]) for i in range(1, n_layers + 1))
    except KeyError as exc:
        raise ConfigError(f"design space lacks width variable {exc}") from None
    return MlpArchitecture(input_dim, hidden, str(vals.get("F", "tanh")), output_dim)


def _dump(path: Path, obj):
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def _split_info(cfg: RunConfig, n_rows: int) -> dict:
    return {"seed": cfg.seed, "ratios": list(cfg.train_config().split), "n_rows": n_rows}


def split_from_info(info: dict):
    return split_dataset(info["n_rows"], tuple(info["ratios"]), info["seed"])


def _model_document(model: TrainedModel, cfg: RunConfig, data: Dataset, **extra) -> dict:
    doc = model_to_dict(model)
    doc["split"] = _split_info(cfg, data.n_rows)
    doc["features"] = list(data.feature_names)
    doc["target"] = data.target_name
    doc.update(extra)
    return doc


def _pe(mape_percent: float, n_params: int, zeta: float) -> float:
    return metrics.parameter_efficiency(mape_percent, n_params, zeta)


# -- tune -----------------------------------------------------------------------

def make_objective(cfg: RunConfig, data: Dataset, space: DesignSpace, cache: dict):
    """Validation MAPE of an LM-trained network for a design point.

    The data split is fixed by the master seed; the weight initialization
    uses the per-point seed provided by the optimizer. The trained model is
    kept in ``cache`` keyed by point.
    """
    tcfg = cfg.train_config()
    split = split_dataset(data.n_rows, tcfg.split, cfg.seed)

    def objective(point: DesignPoint, seed: int) -> float:
        arch = decode_architecture(space, point, data.n_features)
        model = train(arch, data.X, data.y, tcfg, split=split, init_seed=seed)
        cache[point] = model
        return model.metrics["val"]["mape"]

    return objective, split


def cmd_tune(cfg: RunConfig, resume: bool = False) -> tuple[BoResult, dict]:
    data = cfg.load_dataset()
    space = cfg.design_space()
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    cache: dict = {}
    objective, split = make_objective(cfg, data, space, cache)

    trials_path, times_path = out / TRIALS_FILE, out / TIMINGS_FILE
    replay = []
    if resume and trials_path.exists():
        for line in trials_path.read_text().splitlines():
            try:
                replay.append(TrialRecord.from_json(line, space))
            except (ValueError, KeyError, DesignSpaceError):
                break  # torn last line from an interrupted write
        log.info("resuming with %d logged trials", len(replay))

    with open(trials_path, "w") as ft, open(times_path, "w") as fw:
        def on_trial(rec: TrialRecord):
            ft.write(rec.to_json(space.names) + "\n")
            ft.flush()
            fw.write(json.dumps({"iteration": rec.iteration, "wall_time": rec.wall_time}) + "\n")
            fw.flush()
            log.info("trial %d [%s] %s -> %s", rec.iteration, rec.phase,
                     dict(zip(space.names, rec.point.values)), rec.objective)

        result = run_ego(
            objective, space,
            n_doe=cfg.budget.get("n_doe", 10), n_iter=cfg.budget.get("n_iter", 30),
            seed=cfg.seed, gp_config=cfg.gp_config(), workers=cfg.workers,
            on_trial=on_trial, replay=replay,
        )

    best = result.best
    model = cache.get(best.point)
    if model is None:
        # replayed trial: retrain deterministically with the same seeds
        arch = decode_architecture(space, best.point, data.n_features)
        model = train(arch, data.X, data.y, cfg.train_config(), split=split, init_seed=best.seed)
    _dump(out / "best_model.json", _model_document(model, cfg, data, point=best.point.as_dict(space.names)))
    write_history_csv(model, out / "best_history.csv")

    report = {
        "dataset": {"path": data.path, "rows": data.n_rows, "features": list(data.feature_names),
                    "target": data.target_name},
        "split_sizes": [len(s) for s in split],
        "budget": {"n_doe": result.n_doe, "n_iter": result.n_iter, "evaluated": len(result.trials)},
        "seed": cfg.seed,
        "best": {
            "iteration": best.iteration,
            "point": best.point.as_dict(space.names),
            "architecture": model.arch.to_dict(),
            "n_params": model.n_params,
            "val_mape": best.objective,
        },
        "metrics": model.metrics,
        "parameter_efficiency": {"zeta": cfg.zeta,
                                 "test": _pe(model.metrics["test"]["mape"], model.n_params, cfg.zeta)},
        "failed_trials": sum(t.failed for t in result.trials),
    }
    _dump(out / "report.json", report)
    (out / "report.txt").write_text(format_report(report))
    return result, report


def format_report(report: dict) -> str:
    b = report["best"]
    lines = [
        f"dataset      {report['dataset']['path']} ({report['dataset']['rows']} rows)",
        f"budget       {report['budget']['n_doe']} DoE + {report['budget']['n_iter']} EGO "
        f"({report['budget']['evaluated']} evaluated, {report['failed_trials']} failed)",
        f"best point   {b['point']} (trial {b['iteration']})",
        f"architecture hidden={b['architecture']['hidden']} activation={b['architecture']['activation']} "
        f"params={b['n_params']}",
    ]
    for split, m in report["metrics"].items():
        lines.append(f"{split:<12} MSE={m['mse']:.6g} RMSE={m['rmse']:.6g} MAPE={m['mape']:.4f}% (n={m['n']})")
    pe = report["parameter_efficiency"]
    lines.append(f"PE (test, zeta={pe['zeta']:g}) = {pe['test']:.6g}")
    return "\n".join(lines) + "\n"


# -- train / eval / predict -------------------------------------------------------

def cmd_train(cfg: RunConfig) -> TrainedModel:
    data = cfg.load_dataset()
    a = cfg.arch
    try:
        arch = MlpArchitecture(data.n_features, tuple(a["hidden"]), a.get("activation", "tanh"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"arch: {exc}") from None
    model = train(arch, data.X, data.y, cfg.train_config())
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    _dump(out / "model.json", _model_document(model, cfg, data))
    write_history_csv(model, out / "history.csv")
    return model


def _model_path(cfg: RunConfig, model_path=None) -> Path:
    if model_path is not None:
        return Path(model_path)
    if cfg.model is not None:
        return cfg.resolve(cfg.model)
    return cfg.out_dir / "model.json"


def _load_model_doc(path: Path):
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read model {path}: {exc}") from None
    return model_from_dict(doc), doc


def cmd_eval(cfg: RunConfig, model_path=None, split: str = "all") -> dict:
    """Metrics of a persisted model on the configured dataset.

    ``split`` selects ``train``, ``val``, ``test`` (recomputed from the split
    stored with the model) or ``all`` rows.
    """
    model, doc = _load_model_doc(_model_path(cfg, model_path))
    data = cfg.load_dataset()
    if data.n_features != model.arch.input_dim:
        raise DataError(f"dataset has {data.n_features} features, model expects {model.arch.input_dim}")
    idx = np.arange(data.n_rows)
    if split != "all":
        if "split" not in doc:
            raise ConfigError("model document has no stored split")
        if doc["split"]["n_rows"] != data.n_rows:
            raise DataError("dataset row count differs from the one the model was trained on")
        names = ("train", "val", "test")
        if split not in names:
            raise ConfigError(f"unknown split {split!r}")
        idx = split_from_info(doc["split"])[names.index(split)]
    m = evaluate(model, data.X[idx], data.y[idx])
    res = m.to_dict()
    res["split"] = split
    res["n_params"] = model.n_params
    res["zeta"] = cfg.zeta
    res["pe"] = _pe(m.mape, model.n_params, cfg.zeta)
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    _dump(out / f"eval_{split}.json", res)
    return res


def cmd_predict(cfg: RunConfig, model_path=None, input_path=None) -> np.ndarray:
    model, _ = _load_model_doc(_model_path(cfg, model_path))
    src = input_path or cfg.predict.get("input")
    if src is None:
        raise ConfigError("no input rows: set predict.input or pass --input")
    _, rows = read_rows(cfg.resolve(src), cfg.predict.get("delimiter"), cfg.predict.get("header"))
    if rows.shape[1] != model.arch.input_dim:
        raise DataError(f"input rows have {rows.shape[1]} columns, model expects {model.arch.input_dim}")
    pred = model.predict(rows)
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    np.savetxt(out / "predictions.csv", pred, delimiter=",", fmt="%.17g")
    return pred

