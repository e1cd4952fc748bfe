"""kernspec: spectra of kernel integral operators and concentration experiments."""

__version__ = "0.1.0"

from . import bounds, experiments, kernelmodel, linalg, montecarlo, specfun  # noqa: F401,E402
