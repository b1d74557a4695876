"""Experiment grid: models x horizons x parameter values, best value per cell."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .. import neural, trees
from ..dataset import DatasetError, prepare_sequences, prepare_supervised
from ..indicators import OhlcSeries, SeriesError, compute_indicator_matrix
from ..metrics import MetricError, evaluate

log = logging.getLogger(__name__)

MODELS = ("dtree", "bagging", "rf", "adaboost", "gb", "xgb", "ann", "rnn", "lstm")
DISPLAY = {
    "dtree": "Decision Tree",
    "bagging": "Bagging",
    "rf": "Random Forest",
    "adaboost": "Adaboost",
    "gb": "Gradient Boosting",
    "xgb": "XGBoost",
    "ann": "ANN",
    "rnn": "RNN",
    "lstm": "LSTM",
}
TREE_KIND = {
    "dtree": "single",
    "bagging": "bagging",
    "rf": "random_forest",
    "adaboost": "adaboost_r2",
    "gb": "gradient_boosting",
    "xgb": "xgb_like",
}
PARAM_NAME = {m: "ntrees" for m in TREE_KIND} | {"ann": "epochs", "rnn": "ndays", "lstm": "ndays"}
HORIZONS = (1, 2, 5, 10, 15, 20, 30)
NTREES = tuple(range(50, 501, 50))
NDAYS = (1, 2, 5, 10, 20, 30)
SELECTION_NOTE = "best parameter chosen by minimum test-set MAPE, ties by MAE then smaller parameter"


@dataclass(frozen=True)
class ExperimentConfig:
    input_path: str = ""
    models: tuple = MODELS
    horizons: tuple = HORIZONS
    ntrees: tuple = NTREES
    ann_epochs: tuple = neural.MLP_EPOCHS
    ndays: tuple = NDAYS
    dtree_grid: tuple = (1,)
    epoch_scale: float = 1.0
    train_ratio: float = 0.8
    seed: int = 0
    window: int = 10
    output_path: str = "."
    workers: int = 1
    embed_predictions: bool = False

    def __post_init__(self):
        unknown = set(self.models) - set(MODELS)
        if unknown:
            raise ValueError(f"unknown models: {sorted(unknown)}")
        if not self.models or not self.horizons:
            raise ValueError("models and horizons must be non-empty")
        if any(h < 1 for h in self.horizons):
            raise ValueError("horizons must be positive")
        for name in ("ntrees", "ann_epochs", "ndays", "dtree_grid"):
            grid = getattr(self, name)
            if not grid or any(int(v) < 1 for v in grid):
                raise ValueError(f"{name} grid must be non-empty positive integers")
        if not 0 < self.train_ratio < 1:
            raise ValueError("train_ratio must lie in (0, 1)")
        if self.epoch_scale <= 0:
            raise ValueError("epoch_scale must be positive")

    def grid_for(self, model: str) -> tuple:
        if model == "dtree":
            return tuple(self.dtree_grid)
        if model in TREE_KIND:
            return tuple(self.ntrees)
        if model == "ann":
            return tuple(self.ann_epochs)
        return tuple(self.ndays)

    def echo(self) -> dict:
        """Experiment-defining fields; output location and worker count are excluded."""
        d = asdict(self)
        for k in ("output_path", "workers"):
            d.pop(k)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


@dataclass
class RunRecord:
    model: str
    horizon: int
    parameter_name: str
    best_parameter: Optional[int]
    mape: Optional[float]
    mae: Optional[float]
    r2: Optional[float]
    wall_time: float = 0.0
    seed: Optional[int] = None
    n_train: int = 0
    n_test: int = 0
    error: Optional[str] = None
    predictions: Optional[list] = None
    actual: Optional[list] = None
    candidates: list = field(default_factory=list)

    @property
    def ok(self):
        return self.error is None


@dataclass
class AverageRecord:
    model: str
    mape: float
    mae: float
    r2: float
    horizons: list


def job_seed(master: int, model: str, horizon: int, param: int) -> int:
    """Per-job seed that does not depend on execution order."""
    seq = np.random.SeedSequence([int(master), MODELS.index(model), int(horizon), int(param)])
    return int(seq.generate_state(1, dtype=np.uint32)[0])


def default_fit_predict(model, param, train, test, seed, config: ExperimentConfig):
    """Train ``model`` at grid value ``param`` and return test-set predictions."""
    if model in TREE_KIND:
        params = trees.EnsembleParams(ntrees=int(param), seed=seed)
        fitted = trees.fit_ensemble(TREE_KIND[model], train.features, train.targets, params)
        return fitted.predict(test.features)
    if model == "ann":
        epochs = max(1, int(round(param * config.epoch_scale)))
        cfg = neural.TrainConfig(epochs=epochs, seed=seed)
        return neural.predict_neural(neural.fit_mlp(train.features, train.targets, cfg), test.features)
    epochs = neural.epochs_for(model, int(param), config.epoch_scale)
    cfg = neural.TrainConfig(epochs=epochs, seed=seed)
    fit = neural.fit_rnn if model == "rnn" else neural.fit_lstm
    return neural.predict_neural(fit(train.windows, train.targets, cfg), test.windows)


FitPredict = Callable[..., np.ndarray]

# populated in each worker process
_STATE: dict = {}


def _init_worker(matrix, close, config, fit_predict):
    _STATE.clear()
    _STATE.update(matrix=matrix, close=close, config=config, fit_predict=fit_predict, cache={})


def _datasets(model, horizon, param):
    cache = _STATE["cache"]
    cfg = _STATE["config"]
    key = (horizon, int(param)) if model in ("rnn", "lstm") else (horizon, None)
    if key not in cache:
        if key[1] is None:
            cache[key] = prepare_supervised(_STATE["matrix"], _STATE["close"], horizon, cfg.train_ratio)
        else:
            cache[key] = prepare_sequences(_STATE["matrix"], _STATE["close"], horizon, key[1], cfg.train_ratio)
    return cache[key]


def _run_job(job):
    model, horizon, param = job
    cfg = _STATE["config"]
    seed = job_seed(cfg.seed, model, horizon, param)
    out = {"model": model, "horizon": horizon, "param": int(param), "seed": seed}
    start = time.perf_counter()
    try:
        train, test, _ = _datasets(model, horizon, param)
        pred = np.asarray(_STATE["fit_predict"](model, param, train, test, seed, cfg), dtype=float)
        if pred.shape != test.targets.shape or not np.all(np.isfinite(pred)):
            raise neural.DivergenceError("non-finite or misshapen predictions")
        res = evaluate(test.targets, pred)
        out.update(
            mape=res.mape, mae=res.mae, r2=res.r2, n_train=len(train), n_test=len(test),
            predictions=pred.tolist(), actual=test.targets.tolist(),
        )
    except neural.DivergenceError as exc:
        out["error"] = f"divergence: {exc}"
    except (DatasetError, MetricError, trees.TreeError, neural.NeuralError) as exc:
        out["error"] = f"{type(exc).__name__}: {exc}"
    out["wall_time"] = time.perf_counter() - start
    return out


def _select(results):
    ok = [r for r in results if "error" not in r]
    if not ok:
        return None
    return min(ok, key=lambda r: (r["mape"], r["mae"], r["param"]))


def run_grid(config: ExperimentConfig, series: OhlcSeries, fit_predict: FitPredict | None = None) -> list:
    """One ``RunRecord`` per (model, horizon), in configuration order."""
    fit_predict = fit_predict or default_fit_predict
    try:
        matrix = compute_indicator_matrix(series, config.window)
    except SeriesError as exc:
        raise DatasetError(str(exc)) from exc
    close = series.close
    jobs = [
        (m, h, p) for m in config.models for h in config.horizons for p in config.grid_for(m)
    ]
    log.info("running %d grid jobs on %d bars", len(jobs), len(series))
    if config.workers > 1:
        with ProcessPoolExecutor(
            config.workers, initializer=_init_worker, initargs=(matrix, close, config, fit_predict)
        ) as pool:
            results = list(pool.map(_run_job, jobs))
    else:
        _init_worker(matrix, close, config, fit_predict)
        try:
            results = [_run_job(j) for j in jobs]
        finally:
            _STATE.clear()

    by_cell: dict = {}
    for r in results:
        by_cell.setdefault((r["model"], r["horizon"]), []).append(r)

    records = []
    for m in config.models:
        for h in config.horizons:
            cell = by_cell[(m, h)]
            best = _select(cell)
            candidates = [
                {"parameter": r["param"], "mape": r.get("mape"), "mae": r.get("mae"), "r2": r.get("r2"),
                 "error": r.get("error")}
                for r in cell
            ]
            if best is None:
                errors = sorted({r["error"] for r in cell})
                records.append(
                    RunRecord(m, h, PARAM_NAME[m], None, None, None, None,
                              wall_time=sum(r["wall_time"] for r in cell),
                              error="; ".join(errors), candidates=candidates)
                )
                log.warning("%s h=%d failed: %s", m, h, errors)
                continue
            rec = RunRecord(
                m, h, PARAM_NAME[m], best["param"], best["mape"], best["mae"], best["r2"],
                wall_time=best["wall_time"], seed=best["seed"], n_train=best["n_train"],
                n_test=best["n_test"], candidates=candidates,
            )
            if config.embed_predictions:
                rec.predictions = best["predictions"]
                rec.actual = best["actual"]
            records.append(rec)
            log.info("%s h=%d best %s=%d mape=%.4f", m, h, PARAM_NAME[m], best["param"], best["mape"])
    return records


def summarize(records, horizons=None) -> list:
    """Mean MAPE/MAE/R² per model over horizons; every model must cover the same horizons."""
    ok = [r for r in records if r.ok]
    groups: dict = {}
    for r in ok:
        groups.setdefault(r.model, {})[r.horizon] = r
    if not groups:
        return []
    expected = set(horizons) if horizons is not None else None
    out = []
    for model, rows in groups.items():
        hs = set(rows)
        if expected is None:
            expected = hs
        if hs != expected:
            raise ValueError(
                f"ragged horizon coverage: {model} has {sorted(hs)}, expected {sorted(expected)}"
            )
        ordered = [rows[h] for h in sorted(hs)]
        out.append(
            AverageRecord(
                model,
                float(np.mean([r.mape for r in ordered])),
                float(np.mean([r.mae for r in ordered])),
                float(np.mean([r.r2 for r in ordered])),
                sorted(hs),
            )
        )
    return out
