"""Two samplers for X(t): the from-scratch trajectory and the effective-time shortcut."""

import csv
from dataclasses import dataclass

import numpy as np

from .genealogy import RunSequence, generate_runs, sample_effective_time
from .model import Model
from .process import RunPath
from .rng import open_uniform


@dataclass
class Trajectory:
    runs: list  # RunPath per run, in order
    run_start_positions: list
    run_seq: RunSequence
    relocation_targets: np.ndarray  # R_n for n = 1..len(runs) - 1

    def dump_knots(self, path) -> None:
        """Write every revealed knot as CSV rows (run, time, x0, x1, ...)."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            dim = len(self.run_start_positions[0])
            w.writerow(["run", "time"] + [f"x{k}" for k in range(dim)])
            for idx, rp in enumerate(self.runs, start=1):
                for time, pos in rp.knots:
                    w.writerow([idx, repr(float(time))] + [repr(float(v)) for v in pos])


def build_trajectory(model: Model, t: float, rng: np.random.Generator) -> tuple[np.ndarray, Trajectory]:
    if t <= 0:
        raise ValueError("t must be positive")
    kernel, proc = model.kernel, model.process
    runs = generate_runs(model.run_length, kernel, t, rng)
    it = runs.run_index(t)
    nrel = it - 1
    times = runs.relocation_times
    if nrel:
        targets = np.atleast_1d(kernel.sample_relocation_time(times[:nrel], open_uniform(rng, nrel)))
        if np.any(targets >= times[:nrel]):
            raise AssertionError("relocation target not strictly before its relocation time")
        hosts = np.searchsorted(times, targets, side="right")  # 0-based host run
    else:
        targets = np.empty(0)
        hosts = np.empty(0, dtype=np.int64)
    z = rng.standard_normal((it, proc.dim)) if proc.kind == "brownian" else [None] * it
    origin = np.zeros(proc.dim)
    paths: list[RunPath] = [proc.new_path(0.0, origin)]
    starts = [origin]
    for n in range(nrel):
        pos = paths[hosts[n]].sample_at(targets[n], rng, z[n])
        paths.append(proc.new_path(times[n], pos))
        starts.append(pos)
    x = paths[it - 1].sample_at(t, rng, z[it - 1])
    return np.array(x, dtype=float), Trajectory(paths, starts, runs, targets)


def simulate(model: Model, t: float, rng: np.random.Generator) -> np.ndarray:
    """X(t) from an explicit trajectory: every relocation reads the already-revealed past."""
    return build_trajectory(model, t, rng)[0]


def compose_via_effective_time(model: Model, t: float, rng: np.random.Generator, with_effective_time: bool = False):
    """X(t) drawn as Z(S(t)) with Z the bare process from the origin, independent of S(t)."""
    if t <= 0:
        raise ValueError("t must be positive")
    runs = generate_runs(model.run_length, model.kernel, t, rng)
    et = sample_effective_time(runs, t, rng, integer_offsets=model.process.discrete)
    x = model.process.sample_endpoint(et.total, rng)
    return (x, et) if with_effective_time else x
