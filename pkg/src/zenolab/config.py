"""Numerical tolerances shared by every module."""
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    herm: float = 1e-10
    psd: float = 1e-10
    trace: float = 1e-10
    eig: float = 1e-8
    # relative to the largest singular value of the generator
    zero: float = 1e-9
    dim_cap: int = 64

    def override(self, **kwargs) -> "Tolerances":
        return replace(self, **kwargs)


TOL = Tolerances()

DEFAULT_SEED = 20220915
