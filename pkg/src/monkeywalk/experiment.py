"""Seeded, thread-count independent replication of X(t) with CSV, JSON and figure output."""

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .direct import compose_via_effective_time, simulate
from .model import Model
from .rng import replicate_rng
from .stats import SampleSummary, ks_one_sample, ks_two_sample
from .theory import LimitPrediction, predict

SAMPLER_CODES = {"direct": 0, "effective": 1}
KS_LEVEL = 0.01
VARIANCE_TOLERANCE = 0.10
MEAN_SE_LIMIT = 4.0
_CHUNK = 256


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def __post_init__(self):
        self.passed = bool(self.passed)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


@dataclass
class TimeResult:
    t: float
    prediction: LimitPrediction
    raw: dict  # sampler -> (replicates, dim)
    effective_time: dict  # sampler -> (replicates,), NaN where not observed
    report: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)

    def normalized(self, sampler: str) -> np.ndarray:
        return self.prediction.normalize(self.raw[sampler])


def _draw_chunk(model: Model, t: float, sampler: str, seed: int, t_index: int, reps: range):
    code = SAMPLER_CODES[sampler]
    xs = np.empty((len(reps), model.process.dim))
    ss = np.full(len(reps), math.nan)
    for j, r in enumerate(reps):
        rng = replicate_rng(seed, t_index, code, r)
        if sampler == "direct":
            xs[j] = simulate(model, t, rng)
        else:
            x, et = compose_via_effective_time(model, t, rng, with_effective_time=True)
            xs[j], ss[j] = x, et.total
    return xs, ss


def sample_replicates(model: Model, t: float, sampler: str, replicates: int, seed: int, t_index: int = 0, threads: int = 1):
    """(X, S) for replicates 0..replicates-1; S is NaN for the direct sampler.

    Replicate r always uses the stream keyed by (seed, t_index, sampler, r), so the
    result does not depend on ``threads``.
    """
    chunks = [range(lo, min(lo + _CHUNK, replicates)) for lo in range(0, replicates, _CHUNK)]
    if threads <= 1 or len(chunks) == 1:
        parts = [_draw_chunk(model, t, sampler, seed, t_index, c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda c: _draw_chunk(model, t, sampler, seed, t_index, c), chunks))
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def _samplers(cfg: ExperimentConfig) -> list:
    return ["direct", "effective"] if cfg.sampler == "both" else [cfg.sampler]


def evaluate(t: float, prediction: LimitPrediction, raw: dict, effective_time: dict) -> TimeResult:
    res = TimeResult(t, prediction, raw, effective_time)
    limit_var = np.atleast_1d(prediction.limit_variance)
    rep = {"t": t, "prediction": prediction.summary(), "samplers": {}}
    for name, x in raw.items():
        z = prediction.normalize(x)
        coords = []
        for c in range(z.shape[1]):
            summ = SampleSummary.from_array(z[:, c])
            entry = {"summary": summ.to_dict(), "predicted_variance": float(limit_var[c])}
            if summ.count >= 10:
                ks = ks_one_sample(z[:, c], lambda v, c=c: prediction.limit_cdf(v, coord=c))
                entry["ks"] = ks.to_dict()
                res.checks.append(Check(f"t={t:g} {name} x{c} KS vs limit", ks.p_value > KS_LEVEL, f"D={ks.statistic:.4g} p={ks.p_value:.4g}"))
            if summ.count >= 2:
                rel = abs(summ.variance / limit_var[c] - 1.0)
                entry["variance_relative_error"] = rel
                res.checks.append(
                    Check(f"t={t:g} {name} x{c} variance", rel <= VARIANCE_TOLERANCE, f"{summ.variance:.4g} vs {limit_var[c]:.4g}")
                )
                nse = abs(summ.mean) / summ.standard_error if summ.standard_error > 0 else 0.0
                entry["mean_in_standard_errors"] = nse
                res.checks.append(Check(f"t={t:g} {name} x{c} mean", nse <= MEAN_SE_LIMIT, f"mean={summ.mean:.4g} ({nse:.2f} SE)"))
            coords.append(entry)
        block = {"coords": coords}
        s = effective_time.get(name)
        if s is not None and np.all(np.isfinite(s)):
            block["effective_time"] = SampleSummary.from_array(s).to_dict()
        rep["samplers"][name] = block
    if len(raw) == 2 and min(len(v) for v in raw.values()) >= 10:
        a, b = raw["direct"], raw["effective"]
        two = [ks_two_sample(a[:, c], b[:, c]) for c in range(a.shape[1])]
        rep["two_sample"] = [k.to_dict() for k in two]
        for c, k in enumerate(two):
            res.checks.append(Check(f"t={t:g} direct vs effective x{c}", k.p_value > KS_LEVEL, f"D={k.statistic:.4g} p={k.p_value:.4g}"))
    rep["checks"] = [c.to_dict() for c in res.checks]
    res.report = rep
    return res


def write_samples_csv(path, results: list) -> None:
    dim = next(iter(results[0].raw.values())).shape[1]
    header = ["t", "replicate", "raw", "normalized", "sampler"] + (["coord"] if dim > 1 else [])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for res in results:
            for name, x in res.raw.items():
                z = res.normalized(name)
                for r in range(x.shape[0]):
                    for c in range(dim):
                        row = [repr(res.t), r, repr(float(x[r, c])), repr(float(z[r, c])), name]
                        w.writerow(row + ([c] if dim > 1 else []))


def plot_time(path, res: TimeResult) -> None:
    """Histogram and empirical CDF of the normalized samples against the predicted limit (first coordinate)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    pred = res.prediction
    var0 = float(np.atleast_1d(pred.limit_variance)[0])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    lo = hi = 0.0
    for name in res.raw:
        z = res.normalized(name)[:, 0]
        lo, hi = min(lo, z.min()), max(hi, z.max())
        ax1.hist(z, bins=min(80, max(10, len(z) // 50)), density=True, histtype="step", label=name)
        zs = np.sort(z)
        ax2.step(zs, np.arange(1, len(zs) + 1) / len(zs), where="post", label=name)
    grid = np.linspace(lo - 0.5, hi + 0.5, 400)
    dens = np.exp(-grid**2 / (2 * var0)) / math.sqrt(2 * math.pi * var0)
    ax1.plot(grid, dens, "k--", label=f"limit N(0, {var0:.3g})")
    ax2.plot(grid, pred.limit_cdf(grid), "k--", label="limit")
    ax1.set_xlabel("normalized X(t)")
    ax2.set_xlabel("normalized X(t)")
    ax1.set_ylabel("density")
    ax2.set_ylabel("CDF")
    fig.suptitle(f"delta={pred.delta:g}, gamma={pred.gamma:g}, t={res.t:g} ({pred.regime} regime)")
    ax1.legend(fontsize=8)
    ax2.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def output_paths(prefix: str, t: float) -> dict:
    return {
        "report": f"{prefix}report_t{t:g}.json",
        "figure": f"{prefix}figure_t{t:g}.png",
    }


def run_experiment(cfg: ExperimentConfig, threads: int = 1, plot: bool = True, out=None, log=print) -> list:
    """Sample every configured time, write outputs under the prefix, return the TimeResults."""
    model = cfg.model()
    prefix = cfg.output if out is None else out
    parent = os.path.dirname(prefix)
    if parent:
        Path(parent).mkdir(parents=True, exist_ok=True)
    results = []
    for ti, t in enumerate(cfg.times):
        pred = predict(model, t)
        raw, eff = {}, {}
        for name in _samplers(cfg):
            raw[name], eff[name] = sample_replicates(model, t, name, cfg.replicates, cfg.seed, ti, threads)
        res = evaluate(t, pred, raw, eff)
        res.report["config"] = cfg.to_dict()
        paths = output_paths(prefix, t)
        with open(paths["report"], "w") as fh:
            json.dump(res.report, fh, indent=2, default=json_default)
        if plot:
            plot_time(paths["figure"], res)
        results.append(res)
        if log:
            for name, block in res.report["samplers"].items():
                for c, e in enumerate(block["coords"]):
                    s = e["summary"]
                    ks = e.get("ks", {})
                    log(
                        f"t={t:g} {name} x{c}: n={s['count']} mean={s['mean']:.4g} var={s['variance']:.4g} "
                        f"(predicted {e['predicted_variance']:.4g}) KS p={ks.get('p_value', math.nan):.3g}"
                    )
            for c, k in enumerate(res.report.get("two_sample", [])):
                log(f"t={t:g} direct vs effective x{c}: D={k['statistic']:.4g} p={k['p_value']:.3g}")
    write_samples_csv(f"{prefix}samples.csv", results)
    return results


__all__ = ["Check", "TimeResult", "run_experiment", "sample_replicates", "evaluate"]
