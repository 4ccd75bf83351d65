"""The acceptance criteria as runnable checks.

Each criterion function returns a CriterionResult made of named checks; a criterion
passes when every check does. ``scale`` shrinks replicate counts for smoke runs only;
the acceptance verdicts are those at scale 1.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .experiment import Check, sample_replicates
from .genealogy import generate_runs, genealogy_chi_square, make_runs, sample_phi
from .kernel import MemoryKernel
from .model import make_model
from .rng import replicate_rng
from .runlen import exponential
from .stats import SampleSummary, gaussian_cdf, ks_one_sample, ks_two_sample
from .theory import (
    centering,
    crit_ledger,
    exponential_example_ledger,
    phi_residual_large,
    phi_variance_small,
    predict,
    sigma_n,
)

BASE_SEED = 20240611


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def line(self) -> str:
        failed = [c.name for c in self.checks if not c.passed]
        tail = "" if not failed else f" (failed: {'; '.join(failed)})"
        return f"criterion {self.number:2d} {'PASS' if self.passed else 'FAIL'}: {self.title}{tail}"

    def to_dict(self) -> dict:
        return {
            "number": self.number,
            "title": self.title,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "metrics": self.metrics,
        }


def _n(count: int, scale: float) -> int:
    return max(50, int(round(count * scale)))


def _mean_check(name, z, limit=4.0, expect_pass=True):
    s = SampleSummary.from_array(z)
    k = abs(s.mean) / s.standard_error
    ok = k <= limit if expect_pass else k > limit
    rel = "<=" if expect_pass else ">"
    return Check(name, ok, f"mean={s.mean:.4g}, |mean|/SE={k:.2f} (want {rel} {limit:g})"), k


_small_cache: dict = {}


def _small_samples(scale, threads):
    key = (scale, threads)
    if key not in _small_cache:
        m = make_model(0.6, 1.0, exponential(1.0))
        _small_cache[key] = sample_replicates(m, 2000.0, "effective", _n(50_000, scale), BASE_SEED, 0, threads)
    return _small_cache[key]


def criterion_1(scale=1.0, threads=1) -> CriterionResult:
    res = CriterionResult(1, "delta=0.6 CLT: (X - gamma t^delta)/t^0.3 => N(0, 3)")
    t = 2000.0
    x, _ = _small_samples(scale, threads)
    z = (x[:, 0] - t**0.6) / t**0.3
    s = SampleSummary.from_array(z)
    res.checks.append(Check("variance in [2.7, 3.3]", 2.7 <= s.variance <= 3.3, f"variance={s.variance:.4f}"))
    ks = ks_one_sample(z, lambda v: gaussian_cdf(v, 0.0, 3.0))
    res.checks.append(Check("KS vs N(0,3) p > 0.01", ks.p_value > 0.01, f"D={ks.statistic:.4g} p={ks.p_value:.3g}"))
    chk, k = _mean_check("mean within 4 SE of 0", z)
    res.checks.append(chk)
    res.metrics = {"n": s.count, "mean": s.mean, "variance": s.variance, "ks_p": ks.p_value, "mean_se": k}
    return res


def criterion_2(scale=1.0, threads=1) -> CriterionResult:
    res = CriterionResult(2, "delta=0.6 effective-time CLT: Var((S - s)/t^0.3) in [1.8, 2.2]")
    t = 2000.0
    _, s_t = _small_samples(scale, threads)
    z = (s_t - centering(0.6, 1.0, exponential(1.0), t)) / t**0.3
    s = SampleSummary.from_array(z)
    res.checks.append(Check("variance in [1.8, 2.2]", 1.8 <= s.variance <= 2.2, f"variance={s.variance:.4f}"))
    res.metrics = {"n": s.count, "mean": s.mean, "variance": s.variance}
    return res


def criterion_3(scale=1.0, threads=1) -> CriterionResult:
    res = CriterionResult(3, "delta=0.7: the second centering summand cannot be dropped (t=1e5)")
    t, dist = 1e5, exponential(1.0)
    m = make_model(0.7, 1.0, dist)
    x, _ = sample_replicates(m, t, "effective", _n(20_000, scale), BASE_SEED + 3, 0, threads)
    b = predict(m, t).scale
    full = centering(0.7, 1.0, dist, t)
    one = centering(0.7, 1.0, dist, t, terms=1)
    chk_one, k_one = _mean_check("one summand: |mean| > 4 SE", (x[:, 0] - one) / b, expect_pass=False)
    chk_full, k_full = _mean_check("full centering: |mean| <= 4 SE", (x[:, 0] - full) / b)
    res.checks += [chk_one, chk_full]
    res.metrics = {"n": len(x), "s_full": full, "s_one": one, "mean_se_one": k_one, "mean_se_full": k_full}
    return res


def criterion_4(scale=1.0, threads=1) -> CriterionResult:
    res = CriterionResult(4, "delta=1 CLT: Var((X - t/2)/sqrt(t/2)) within 10% of prediction; ledger closed forms")
    t, dist = 5000.0, exponential(1.0)
    m = make_model(1.0, 1.0, dist)
    pred = predict(m, t)
    x, _ = sample_replicates(m, t, "effective", _n(50_000, scale), BASE_SEED + 4, 0, threads)
    z = (x[:, 0] - t / 2) / math.sqrt(t / 2)
    s = SampleSummary.from_array(z)
    target = float(pred.limit_variance[0])
    rel = abs(s.variance / target - 1)
    res.checks.append(Check("variance within 10% of prediction", rel <= 0.10, f"{s.variance:.4f} vs {target:.4f}"))
    worst = {}
    for g in (0.5, 1.0, 2.0):
        a = crit_ledger(g, dist).as_dict()
        b = exponential_example_ledger(g).as_dict()
        for key in a:
            err = abs(a[key] - b[key])
            if err > worst.get(key, (0.0,))[0]:
                worst[key] = (err, g)
    bad = {k: v for k, v in worst.items() if v[0] > 1e-12}
    detail = "all entries agree" if not bad else ", ".join(f"{k} off by {e:.3g} at gamma={g:g}" for k, (e, g) in sorted(bad.items()))
    res.checks.append(Check("ledger reproduces exponential closed forms to 1e-12", not bad, detail))
    res.metrics = {"n": s.count, "variance": s.variance, "predicted": target, "ledger_errors": {k: v[0] for k, v in worst.items()}}
    return res


def criterion_5(scale=1.0, threads=1) -> CriterionResult:
    res = CriterionResult(5, "delta=2.5 CLT: (X - t)/sqrt(t) => N(0, 1)")
    t = 1e4
    m = make_model(2.5, 1.0, exponential(1.0))
    x, _ = sample_replicates(m, t, "effective", _n(20_000, scale), BASE_SEED + 5, 0, threads)
    z = (x[:, 0] - t) / math.sqrt(t)
    ks = ks_one_sample(z, gaussian_cdf)
    res.checks.append(Check("KS vs N(0,1) p > 0.01", ks.p_value > 0.01, f"D={ks.statistic:.4g} p={ks.p_value:.3g}"))
    s = SampleSummary.from_array(z)
    res.metrics = {"n": s.count, "mean": s.mean, "variance": s.variance, "ks_p": ks.p_value}
    return res


def criterion_6(scale=1.0, threads=1) -> CriterionResult:
    res = CriterionResult(6, "delta=1.2 centering: t - t^(2-delta)/(...) is needed")
    t, dist = 1e4, exponential(1.0)
    m = make_model(1.2, 1.0, dist)
    x, _ = sample_replicates(m, t, "effective", _n(20_000, scale), BASE_SEED + 6, 0, threads)
    s_t = centering(1.2, 1.0, dist, t)
    chk_full, k_full = _mean_check("mean of (X - s(t))/sqrt(t) within 4 SE", (x[:, 0] - s_t) / math.sqrt(t))
    chk_t, k_t = _mean_check("with s(t) replaced by t: |mean| > 4 SE", (x[:, 0] - t) / math.sqrt(t), expect_pass=False)
    res.checks += [chk_full, chk_t]
    res.metrics = {"n": len(x), "s": s_t, "mean_se_full": k_full, "mean_se_t": k_t}
    return res


EQUIVALENCE_DELTAS = (0.6, 1.0, 1.2, 2.5)


def criterion_7(scale=1.0, threads=1, seeds=3) -> CriterionResult:
    res = CriterionResult(7, "direct vs effective-time samplers agree at t=50 (two-sample KS)")
    t = 50.0
    n = _n(20_000, scale)
    pvals = np.zeros((seeds, len(EQUIVALENCE_DELTAS)))
    for k in range(seeds):
        for j, d in enumerate(EQUIVALENCE_DELTAS):
            m = make_model(d, 1.0, exponential(1.0))
            seed = BASE_SEED + 700 + k
            a, _ = sample_replicates(m, t, "direct", n, seed, j, threads)
            b, _ = sample_replicates(m, t, "effective", n, seed, j, threads)
            pvals[k, j] = ks_two_sample(a[:, 0], b[:, 0]).p_value
    for k in range(seeds):
        ok = int(np.sum(pvals[k] > 0.01))
        res.checks.append(Check(f"run {k + 1}: >= 3 of 4 regimes with p > 0.01", ok >= 3, f"p={np.round(pvals[k], 4).tolist()}"))
    best = pvals.max(axis=0)
    res.checks.append(Check("all 4 regimes pass on their best of 3 runs", bool(np.all(best > 0.01)), f"best p={np.round(best, 4).tolist()}"))
    res.metrics = {"n": n, "deltas": list(EQUIVALENCE_DELTAS), "p_values": pvals.tolist()}
    return res


GENEALOGY_LENGTHS = (0.8, 1.5, 0.4, 2.2, 1.0, 0.6)


def criterion_8(scale=1.0, threads=1) -> CriterionResult:
    res = CriterionResult(8, "genealogy: brute-force ancestor lines match independent Bernoulli indicators")
    samples = _n(100_000, scale)
    for j, (g, d) in enumerate(((1.0, 0.6), (1.0, 1.0), (0.5, 1.5), (0.3, 2.5))):
        runs = make_runs(GENEALOGY_LENGTHS, MemoryKernel(g, d))
        out = genealogy_chi_square(runs, len(GENEALOGY_LENGTHS), replicate_rng(BASE_SEED + 8, j), samples)
        res.checks.append(
            Check(f"gamma={g:g} delta={d:g} chi-square p > 0.001", out["p_value"] > 0.001, f"stat={out['statistic']:.3g} cells={out['cells']} p={out['p_value']:.3g}")
        )
        res.metrics[f"gamma={g:g},delta={d:g}"] = out
    return res


def criterion_9(scale=1.0, threads=1, seeds=50) -> CriterionResult:
    res = CriterionResult(9, "Phi(n) - T_n (+ correction) stays bounded: median growth < 2 from n=1e3 to 1e5")
    ns = (1_000, 100_000)
    seeds = max(5, int(round(seeds * min(1.0, scale * 10))))
    for d in (1.75, 2.5):
        k = MemoryKernel(1.0, d)
        resid = np.zeros((seeds, len(ns)))
        for s in range(seeds):
            rng = replicate_rng(BASE_SEED + 9, int(d * 100), s)
            runs = generate_runs(exponential(1.0), k, rng=rng, count=ns[-1])
            phis = [sample_phi(runs, n, rng) for n in ns]
            resid[s] = phi_residual_large(d, 1.0, runs, ns, phis)
        med = np.median(np.abs(resid), axis=0)
        ratio = med[-1] / med[0]
        res.checks.append(Check(f"delta={d:g} growth factor < 2", ratio < 2, f"medians={np.round(med, 4).tolist()} ratio={ratio:.3f}"))
        res.metrics[f"delta={d:g}"] = {"medians": med.tolist(), "ratio": ratio}
    return res


def criterion_10(scale=1.0, threads=1) -> CriterionResult:
    res = CriterionResult(10, "kernel numerics: naive agreement pre-overflow, finite and monotone to t=1e6")
    worst = 0.0
    for g, d in ((1.0, 0.6), (1.0, 1.0), (0.7, 1.5), (1.0, 2.5), (2.0, 0.8)):
        k = MemoryKernel(g, d)
        tmax = (690.0 / g) ** (1 / d)
        t = np.linspace(tmax * 1e-3, tmax, 400)
        lam = g * t**d
        worst = max(worst, float(np.max(np.abs(k.exponent(t) / lam - 1))))
        naive_cum = np.log(np.exp(lam) - 1.0)
        worst = max(worst, float(np.max(np.abs(k.log_cumulative(t) - naive_cum) / np.abs(naive_cum))))
        lo, hi = t[:-1], t[1:]
        naive_w = np.log(np.exp(g * hi**d) - np.exp(g * lo**d))
        worst = max(worst, float(np.max(np.abs(k.log_interval_weight(lo, hi) - naive_w) / np.abs(naive_w))))
        x = 0.5 * (hi - lo)
        naive_cdf = (np.exp(g * (lo + x) ** d) - np.exp(g * lo**d)) / (np.exp(g * hi**d) - np.exp(g * lo**d))
        worst = max(worst, float(np.max(np.abs(k.cdf_within_run(lo, hi - lo, x) / naive_cdf - 1))))
    res.checks.append(Check("relative error vs naive arithmetic <= 1e-10", worst <= 1e-10, f"worst={worst:.3g}"))
    k = MemoryKernel(1.0, 2.5)
    t = np.logspace(-3, 6, 3000)
    lam, cum = k.exponent(t), k.log_cumulative(t)
    w = k.log_interval_weight(t[:-1], t[1:])
    u = np.linspace(1e-9, 1 - 1e-9, 2001)
    r = k.sample_relocation_time(np.full_like(u, 1e6), u)
    f = k.sample_within_run(np.full_like(u, 1e6 - 1.0), np.ones_like(u), u)
    runs = generate_runs(exponential(1.0), k, 1e6, replicate_rng(BASE_SEED + 10))
    p = runs.ancestor_probabilities
    finite = all(np.all(np.isfinite(a)) for a in (lam, cum, w, r, f, p))
    mono = bool(np.all(np.diff(lam) > 0) and np.all(np.diff(cum) >= 0) and np.all(np.diff(r) >= 0) and np.all(np.diff(f) >= 0))
    bounds = bool(np.all((r >= 0) & (r < 1e6)) and np.all((f > 0) & (f < 1.0)) and np.all((p >= 0) & (p <= 1)))
    res.checks.append(Check("finite up to t=1e6 at delta=2.5", finite, f"Lambda(1e6)={lam[-1]:.3g}"))
    res.checks.append(Check("monotone in t and u", mono, ""))
    res.checks.append(Check("samples inside their intervals, probabilities in [0, 1]", bounds, ""))
    res.metrics = {"worst_relative_error": worst, "max_exponent": float(lam[-1])}
    return res


def criterion_11(scale=1.0, threads=1) -> CriterionResult:
    res = CriterionResult(11, "Phi(n) CLT at delta=0.6: (Phi(n) - sigma(n))/sqrt(gamma n^delta) => N(0, 2)")
    n, d, dist = 10_000, 0.6, exponential(1.0)
    k = MemoryKernel(1.0, d)
    reps = _n(20_000, scale)
    sig = sigma_n(d, 1.0, dist, n)
    z = np.empty(reps)
    for r in range(reps):
        rng = replicate_rng(BASE_SEED + 11, r)
        runs = generate_runs(dist, k, rng=rng, count=n)
        z[r] = (sample_phi(runs, n, rng) - sig) / math.sqrt(n**d)
    var = phi_variance_small(d, dist)
    ks = ks_one_sample(z, lambda v: gaussian_cdf(v, 0.0, var))
    res.checks.append(Check(f"KS vs N(0, {var:g}) p > 0.01", ks.p_value > 0.01, f"D={ks.statistic:.4g} p={ks.p_value:.3g}"))
    s = SampleSummary.from_array(z)
    res.metrics = {"n": reps, "mean": s.mean, "variance": s.variance, "target_variance": var, "ks_p": ks.p_value}
    return res


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
    11: criterion_11,
}


def run_criteria(numbers=None, scale=1.0, threads=1, log=print) -> list:
    out = []
    for num in numbers or sorted(CRITERIA):
        r = CRITERIA[num](scale=scale, threads=threads)
        if log:
            log(r.line())
            for c in r.checks:
                log(f"    [{'ok' if c.passed else 'XX'}] {c.name}: {c.detail}")
        out.append(r)
    return out
