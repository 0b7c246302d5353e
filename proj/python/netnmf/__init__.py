"""Probabilistic nonnegative matrix factorization for dynamic network models."""

from ._netnmf import (
    InputError,
    NumericalError,
    AsymptoticResult,
    FitResult,
    K2Bounds,
    Nmf,
    NormalizedNmf,
    apply_q,
    compose,
    criterion,
    denormalize,
    essentially_unique_k2,
    fit,
    inference,
    k2_bounds,
    loglik,
    normalize,
    simulate,
    spectral_radius,
    __version__,
)

__all__ = [
    "InputError",
    "NumericalError",
    "AsymptoticResult",
    "FitResult",
    "K2Bounds",
    "Nmf",
    "NormalizedNmf",
    "apply_q",
    "compose",
    "criterion",
    "denormalize",
    "essentially_unique_k2",
    "fit",
    "inference",
    "k2_bounds",
    "loglik",
    "normalize",
    "simulate",
    "spectral_radius",
]
