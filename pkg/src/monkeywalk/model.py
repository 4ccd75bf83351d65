from dataclasses import dataclass

from .kernel import MemoryKernel
from .process import ProcessDescriptor, brownian_drift
from .runlen import RunLengthDistribution, check_moments, exponential


@dataclass(frozen=True)
class Model:
    """The three ingredients of a monkey walk: kernel, run-length law, underlying process."""

    kernel: MemoryKernel
    run_length: RunLengthDistribution
    process: ProcessDescriptor

    @property
    def delta(self) -> float:
        return self.kernel.delta

    @property
    def gamma(self) -> float:
        return self.kernel.gamma

    def validate(self) -> None:
        check_moments(self.run_length, self.delta)
        if self.process.discrete and not self.run_length.integer_valued:
            raise ValueError(
                "lattice processes need integer-valued run lengths (geometric or integer deterministic)"
            )


def make_model(delta, gamma=1.0, run_length=None, process=None) -> Model:
    m = Model(
        MemoryKernel(gamma=gamma, delta=delta),
        run_length if run_length is not None else exponential(1.0),
        process if process is not None else brownian_drift(1.0, 1),
    )
    m.validate()
    return m
