"""Command line entry point: simulate, theory, verify, genealogy-oracle."""

import argparse
import json
import sys

from .config import ConfigError, ExperimentConfig, config_from_dict, load_config
from .experiment import json_default, run_experiment
from .genealogy import genealogy_chi_square, make_runs
from .kernel import MemoryKernel
from .rng import replicate_rng
from .theory import (
    centering,
    crit_ledger,
    crit_ledger_as_stated,
    exponential_example_ledger,
    predict,
    regime,
    sigma_n,
    summand_count,
)

EXIT_ASSERT = 1
EXIT_CONFIG = 2


def _floats(text: str) -> list:
    return [float(v) for v in text.split(",") if v.strip()]


def _dump(obj) -> None:
    print(json.dumps(obj, indent=2, default=json_default))


def _config_for(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
    elif getattr(args, "delta", None) is not None:
        d = {"delta": args.delta, "times": args.t or [100.0]}
        if args.gamma is not None:
            d["gamma"] = args.gamma
        cfg = config_from_dict(d)
    else:
        raise ConfigError("give --config PATH or --delta")
    over = {}
    if getattr(args, "seed", None) is not None:
        over["seed"] = args.seed
    if getattr(args, "replicates", None) is not None:
        over["replicates"] = args.replicates
    if getattr(args, "sampler", None) is not None:
        over["sampler"] = args.sampler
    return cfg.replace(**over) if over else cfg


def cmd_simulate(args) -> int:
    cfg = _config_for(args)
    results = run_experiment(cfg, threads=args.threads, plot=not args.no_plot, out=args.out)
    failed = [c for r in results for c in r.checks if not c.passed]
    prefix = args.out if args.out is not None else cfg.output
    print(f"wrote {prefix}samples.csv and {len(results)} report(s)")
    if args.assert_:
        for c in failed:
            print(f"ASSERTION FAILED: {c.name}: {c.detail}", file=sys.stderr)
        return EXIT_ASSERT if failed else 0
    return 0


def theory_report(cfg: ExperimentConfig, times=None, ns=None) -> dict:
    model = cfg.model()
    dist = cfg.run_length
    out = {
        "delta": cfg.delta,
        "gamma": cfg.gamma,
        "regime": regime(cfg.delta),
        "run_length": dist.to_dict(),
        "process": cfg.process.to_dict(),
    }
    if cfg.delta < 1:
        out["summands"] = summand_count(cfg.delta)
    times = list(times or cfg.times)
    out["times"] = [dict(predict(model, t).summary(), s=centering(cfg.delta, cfg.gamma, dist, t)) for t in times]
    if times:
        out["s"] = out["times"][0]["s"]
    if ns:
        if cfg.delta < 1:
            out["sigma_n"] = [{"n": n, "sigma": sigma_n(cfg.delta, cfg.gamma, dist, n)} for n in ns]
            out["sigma"] = out["sigma_n"][0]["sigma"]
        else:
            out["sigma_n_note"] = "sigma(n) is defined for delta < 1 only"
    if cfg.delta == 1:
        led = crit_ledger(cfg.gamma, dist)
        out["ledger"] = dict(led.as_dict(), quadratic_form=led.quadratic_form(), psd=led.is_psd())
        stated = crit_ledger_as_stated(cfg.gamma, dist)
        out["ledger_as_stated"] = dict(stated.as_dict(), quadratic_form=stated.quadratic_form(), psd=stated.is_psd())
        if dist.kind == "exponential" and dist.params.get("rate") == 1.0:
            ex = exponential_example_ledger(cfg.gamma)
            out["ledger_exponential_example"] = dict(ex.as_dict(), quadratic_form=ex.quadratic_form(), psd=ex.is_psd())
    return out


def cmd_theory(args) -> int:
    cfg = _config_for(args)
    _dump(theory_report(cfg, args.t, [int(n) for n in args.n] if args.n else None))
    return 0


def cmd_verify(args) -> int:
    from .verify import run_criteria

    nums = [int(v) for v in args.criteria.split(",")] if args.criteria else None
    results = run_criteria(nums, scale=args.scale, threads=args.threads)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump([r.to_dict() for r in results], fh, indent=2, default=json_default)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)} of {len(results)} criteria passed")
    return EXIT_ASSERT if failed else 0


def cmd_genealogy(args) -> int:
    lengths = _floats(args.lengths)
    if not 2 <= len(lengths) <= 16:
        raise ConfigError("--lengths needs between 2 and 16 values")
    runs = make_runs(lengths, MemoryKernel(args.gamma, args.delta))
    seed = 0 if args.seed is None else args.seed
    out = genealogy_chi_square(runs, len(lengths), replicate_rng(seed), args.samples)
    out.update(delta=args.delta, gamma=args.gamma, lengths=lengths)
    _dump(out)
    if args.assert_ and not out["p_value"] > args.level:
        print(f"ASSERTION FAILED: chi-square p={out['p_value']:.3g} <= {args.level}", file=sys.stderr)
        return EXIT_ASSERT
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="monkeywalk", description="Monkey walks with steep memory: simulation and limit theory.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run an experiment config, write CSV/JSON/PNG")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--replicates", type=int, help="override the config's replicate count")
    s.add_argument("--sampler", choices=("direct", "effective", "both"))
    s.add_argument("--out", help="output path prefix (overrides the config)")
    s.add_argument("--assert", dest="assert_", action="store_true", help="exit 1 if any KS/variance/mean check fails")
    s.add_argument("--no-plot", action="store_true", help="skip the PNG figures")
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("theory", help="print s(t), sigma(n) and limit predictions as JSON")
    t.add_argument("--config")
    t.add_argument("--delta", type=float)
    t.add_argument("--gamma", type=float)
    t.add_argument("--t", type=float, nargs="+", help="query times (default: the config's)")
    t.add_argument("--n", type=float, nargs="+", help="run counts for sigma(n)")
    t.set_defaults(func=cmd_theory)

    v = sub.add_parser("verify", help="run the acceptance criteria; exit 1 if any fails")
    v.add_argument("--criteria", help="comma-separated criterion numbers (default: all)")
    v.add_argument("--scale", type=float, default=1.0, help="replicate multiplier; verdicts are meaningful at 1")
    v.add_argument("--threads", type=int, default=1)
    v.add_argument("--out", help="write the results as JSON here")
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("genealogy-oracle", help="brute-force ancestor lines vs independent Bernoulli indicators")
    g.add_argument("--lengths", default="0.8,1.5,0.4,2.2,1.0,0.6")
    g.add_argument("--delta", type=float, default=0.6)
    g.add_argument("--gamma", type=float, default=1.0)
    g.add_argument("--samples", type=int, default=100_000)
    g.add_argument("--seed", type=int)
    g.add_argument("--level", type=float, default=0.001)
    g.add_argument("--assert", dest="assert_", action="store_true")
    g.set_defaults(func=cmd_genealogy)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
