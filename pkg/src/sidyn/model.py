"""Solvent/insolvent borrower dynamics.

The state is a pair (s, i) of solvent and insolvent borrower counts. With
``k = (1 - alpha) / alpha`` the right-hand side is::

    ds/dt = sigma k (s + i)     - beta1 s i + beta2 s i - mu1 s
    di/dt = (1 - sigma) k (s + i) + beta1 s i - beta2 s i - mu2 i

The bilinear contact terms cancel in the sum, so
``d(s + i)/dt = k (s + i) - mu1 s - mu2 i`` holds for any beta1, beta2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import AlphaOutOfRange, DegeneratePopulation, FieldOutOfRange, NonFinite

PARAM_NAMES = ("alpha", "sigma", "beta1", "beta2", "mu1", "mu2")


class State(NamedTuple):
    s: float
    i: float


class VectorFieldValue(NamedTuple):
    ds: float
    di: float


@dataclass(frozen=True)
class ModelParams:
    """The six model coefficients plus the cached inflow coefficient ``k``.

    Construction enforces the structural bounds (0 < alpha <= 1, proportions
    in [0, 1], exit rates >= 0). The stricter ``mu <= 1`` cap lives in
    :func:`validate_params`.
    """

    alpha: float
    sigma: float
    beta1: float
    beta2: float
    mu1: float
    mu2: float
    k: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in PARAM_NAMES:
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
                raise FieldOutOfRange(name, value, "a real number")
            value = float(value)
            if not math.isfinite(value):
                raise NonFinite(name, value, "finite value")
            object.__setattr__(self, name, value)
        if not 0.0 < self.alpha <= 1.0:
            raise AlphaOutOfRange("alpha", self.alpha, "0 < alpha <= 1")
        for name in ("sigma", "beta1", "beta2"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise FieldOutOfRange(name, value, f"0 <= {name} <= 1")
        for name in ("mu1", "mu2"):
            value = getattr(self, name)
            if value < 0.0:
                raise FieldOutOfRange(name, value, f"{name} >= 0")
        object.__setattr__(self, "k", (1.0 - self.alpha) / self.alpha)

    def as_tuple(self):
        return tuple(getattr(self, name) for name in PARAM_NAMES)

    def as_dict(self):
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def replace(self, **changes):
        values = self.as_dict()
        values.update(changes)
        return ModelParams(**values)


def validate_params(alpha, sigma, beta1, beta2, mu1, mu2, *, unchecked_rates=False):
    """Build a :class:`ModelParams`, rejecting out-of-range inputs.

    Exit rates are capped at 1 like the other coefficients unless
    ``unchecked_rates`` is set, in which case only ``mu >= 0`` is required.

    Raises
    ------
    AlphaOutOfRange
        alpha <= 0 or alpha > 1.
    FieldOutOfRange
        Any other bound is violated; ``err.field`` names the coefficient.
    NonFinite
        A NaN or infinite input.
    """
    p = ModelParams(alpha, sigma, beta1, beta2, mu1, mu2)
    if not unchecked_rates:
        for name in ("mu1", "mu2"):
            value = getattr(p, name)
            if value > 1.0:
                raise FieldOutOfRange(name, value, f"0 <= {name} <= 1 (pass unchecked_rates to lift)")
    return p


def swap_params(p: ModelParams) -> ModelParams:
    """Exchange the roles of the two compartments."""
    return ModelParams(p.alpha, 1.0 - p.sigma, p.beta2, p.beta1, p.mu2, p.mu1)


def make_rhs(p: ModelParams):
    """Return a scalar ``f(s, i) -> (ds, di)`` closure for the integrator hot loop."""
    sk = p.sigma * p.k
    ik = (1.0 - p.sigma) * p.k
    b1, b2, m1, m2 = p.beta1, p.beta2, p.mu1, p.mu2

    def rhs(s, i):
        n = s + i
        si = s * i
        return (sk * n - b1 * si + b2 * si - m1 * s,
                ik * n + b1 * si - b2 * si - m2 * i)

    return rhs


def vector_field(p: ModelParams, x) -> VectorFieldValue:
    s, i = float(x[0]), float(x[1])
    if not (math.isfinite(s) and math.isfinite(i)):
        raise NonFinite("state", (s, i), "finite state")
    ds, di = make_rhs(p)(s, i)
    if not (math.isfinite(ds) and math.isfinite(di)):
        raise NonFinite("vector_field", (ds, di), "finite rates (floating overflow)")
    return VectorFieldValue(ds, di)


def jacobian(p: ModelParams, x) -> np.ndarray:
    """Analytic 2x2 Jacobian of :func:`vector_field` at ``x``."""
    s, i = float(x[0]), float(x[1])
    sk = p.sigma * p.k
    ik = (1.0 - p.sigma) * p.k
    db = p.beta2 - p.beta1
    return np.array([
        [sk + db * i - p.mu1, sk + db * s],
        [ik - db * i, ik - db * s - p.mu2],
    ])


def population(p: ModelParams, x) -> float:
    """Zone population implied by the in-system borrower counts."""
    return (float(x[0]) + float(x[1])) / p.alpha


def portfolio_at_risk(x) -> float:
    """Insolvent share ``i / (s + i)`` of the borrower portfolio."""
    s, i = float(x[0]), float(x[1])
    total = s + i
    if total == 0.0:
        raise DegeneratePopulation("portfolio at risk undefined for s + i == 0")
    return i / total
