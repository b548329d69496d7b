"""Long-range Ising laboratory: kernels, lattice sums, energies, sampling."""

from .kernel import (
    DomainError,
    ModelParams,
    TailBound,
    ToleranceError,
    coupling,
    single_site_sum,
    smeared_coupling,
    torus_coupling,
)

__all__ = [
    "DomainError",
    "ModelParams",
    "TailBound",
    "ToleranceError",
    "coupling",
    "single_site_sum",
    "smeared_coupling",
    "torus_coupling",
]

__version__ = "0.1.0"
