"""Numerical laboratory for stochastic harmonic chains with power-law couplings.

The package bundles the interaction potential and its small-frequency
expansion (:mod:`lrchain.potential`), Fourier multiplier utilities on the
unit torus (:mod:`lrchain.spectral`), a momentum-conserving stochastic
lattice simulator (:mod:`lrchain.microsim`), the mode-pair mean evolution
and its scaling limits (:mod:`lrchain.meanflow`), closed-form macroscopic
solvers (:mod:`lrchain.macro`), convergence-study drivers
(:mod:`lrchain.harness`), and a command line front end
(:mod:`lrchain.cli`).
"""

from lrchain.potential import (
    AsymptoticConstants,
    ConvergenceError,
    PotentialSpec,
    alpha_coeff,
    alpha_hat,
    asymptotic_constants,
    asymptotic_prediction,
    const_c1,
    const_c2,
    coupling_F,
    cross_asymptotic_check,
    noise_kernel_r,
    noise_rate_R,
    omega,
)

__version__ = "0.1.0"

__all__ = [
    "AsymptoticConstants",
    "ConvergenceError",
    "PotentialSpec",
    "alpha_coeff",
    "alpha_hat",
    "asymptotic_constants",
    "asymptotic_prediction",
    "const_c1",
    "const_c2",
    "coupling_F",
    "cross_asymptotic_check",
    "noise_kernel_r",
    "noise_rate_R",
    "omega",
    "__version__",
]
