"""Least-squares calibration of model parameters against observed counts.

The forward model is a full integration, and candidate parameters regularly
push it past the blow-up threshold. Such candidates score ``SENTINEL`` rather
than raising, so the simplex can back away from the divergent region.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from .errors import AllDiverged, FieldOutOfRange, InvalidSpan, NonFinite, ValidationError
from .integrator import SolverConfig, integrate
from .model import PARAM_NAMES, ModelParams, State, validate_params

SENTINEL = 1e300

REFLECT, EXPAND, CONTRACT, SHRINK = 1.0, 2.0, 0.5, 0.5
DIAMETER_TOL = 1e-8
SPREAD_TOL = 1e-12

# Closed bounds used when a FitSpec gives none for a free parameter.
DEFAULT_BOUNDS = {
    "alpha": (1e-6, 1.0),
    "sigma": (0.0, 1.0),
    "beta1": (0.0, 1.0),
    "beta2": (0.0, 1.0),
    "mu1": (0.0, 1.0),
    "mu2": (0.0, 1.0),
}
X0_NAMES = ("s0", "i0")


@dataclass(frozen=True)
class ObservationSet:
    t: np.ndarray
    s: np.ndarray
    i: np.ndarray
    w: Optional[np.ndarray] = None

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        s = np.asarray(self.s, dtype=float)
        i = np.asarray(self.i, dtype=float)
        w = np.ones_like(t) if self.w is None else np.asarray(self.w, dtype=float)
        if not (t.ndim == 1 and t.shape == s.shape == i.shape == w.shape):
            raise ValueError("observation columns must be 1-d and equal length")
        if len(t) < 3:
            raise ValueError("need at least 3 observations")
        for name, col in (("t", t), ("s", s), ("i", i), ("w", w)):
            if not np.all(np.isfinite(col)):
                raise NonFinite(name, col, "finite observations")
        if np.any(np.diff(t) <= 0):
            raise InvalidSpan("observation times must be strictly increasing")
        if np.any(w < 0):
            raise FieldOutOfRange("w", w, "non-negative weights")
        for name, col in (("t", t), ("s", s), ("i", i), ("w", w)):
            object.__setattr__(self, name, col)

    def __len__(self):
        return len(self.t)

    @property
    def first_state(self):
        return State(float(self.s[0]), float(self.i[0]))

    def scaled(self, c):
        return ObservationSet(self.t, self.s, self.i, self.w * c)


@dataclass(frozen=True)
class FitSpec:
    """Which coefficients to fit, where to start, and within which box.

    Names in ``free`` are model coefficients, plus ``s0``/``i0`` when
    ``x0_policy == "free"``. Every model coefficient not free must appear in
    ``frozen``. Bounds default to ``DEFAULT_BOUNDS``; ``s0``/``i0`` need
    explicit bounds.
    """

    free: tuple
    frozen: dict
    initial_guess: dict
    bounds: dict = field(default_factory=dict)
    x0_policy: Literal["first_observation", "free"] = "first_observation"

    def __post_init__(self):
        free = tuple(self.free)
        object.__setattr__(self, "free", free)
        if not free:
            raise ValueError("at least one free parameter is required")
        if len(set(free)) != len(free):
            raise ValueError(f"duplicate free parameters in {free}")
        allowed = PARAM_NAMES + (X0_NAMES if self.x0_policy == "free" else ())
        for name in free:
            if name not in allowed:
                raise ValueError(f"cannot fit {name!r} (x0_policy={self.x0_policy!r})")
        missing = [n for n in PARAM_NAMES if n not in free and n not in self.frozen]
        if missing:
            raise ValueError(f"parameters neither free nor frozen: {missing}")
        for name in free:
            lo, hi = self.bound(name)
            g = self.initial_guess.get(name)
            if g is None:
                raise ValueError(f"no initial guess for {name!r}")
            if not lo <= g <= hi:
                raise ValueError(f"initial guess {name}={g!r} outside [{lo}, {hi}]")

    def bound(self, name):
        if name in self.bounds:
            lo, hi = self.bounds[name]
        elif name in DEFAULT_BOUNDS:
            lo, hi = DEFAULT_BOUNDS[name]
        else:
            raise ValueError(f"{name!r} needs explicit bounds")
        if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
            raise ValueError(f"bad bounds for {name!r}: {(lo, hi)}")
        return float(lo), float(hi)

    def unpack(self, vec, obs, unchecked_rates=False):
        """Map a free-parameter vector to ``(ModelParams, x0)``."""
        values = dict(self.frozen)
        values.update(zip(self.free, (float(v) for v in vec)))
        x0 = obs.first_state
        if self.x0_policy == "free":
            x0 = State(values.pop("s0", x0.s), values.pop("i0", x0.i))
        p = validate_params(*(values[n] for n in PARAM_NAMES), unchecked_rates=unchecked_rates)
        return p, x0


@dataclass(frozen=True)
class FitResult:
    params: ModelParams
    residual: float
    evaluations: int
    converged: bool
    trace: tuple
    x0: State
    initial_residual: float
    stop_reason: str


def objective(p: ModelParams, obs: ObservationSet, solver: SolverConfig = SolverConfig(), x0=None) -> float:
    """Weighted sum of squared count errors at the observation times.

    The model is integrated from ``x0`` (default: the first observation) at
    the first observation time, and sampled by linear interpolation between
    accepted steps. Runs that do not complete score ``SENTINEL``. With all
    weights zero the objective is identically zero and nothing is integrated.
    """
    if not np.any(obs.w):
        return 0.0
    x0 = obs.first_state if x0 is None else x0
    traj = integrate(p, x0, obs.t[0], obs.t[-1], solver)
    if traj.status != "completed":
        return SENTINEL
    s_mod, i_mod = traj.at(obs.t)
    value = float(np.sum(obs.w * ((s_mod - obs.s) ** 2 + (i_mod - obs.i) ** 2)))
    if not math.isfinite(value) or value > SENTINEL:
        return SENTINEL
    return value


def fit(spec: FitSpec, obs: ObservationSet, solver: SolverConfig = SolverConfig(), budget: int = 2000,
        *, starts=(), unchecked_rates=False) -> FitResult:
    """Nelder-Mead over the free parameters, with box bounds enforced by projection.

    Stops when the simplex diameter drops below 1e-8, when the objective
    spread across the simplex drops below 1e-12 of the best value, or when
    ``budget`` evaluations are used up (``converged`` is then False). The best
    point seen is returned, so the result is never worse than the start.

    ``starts`` holds extra initial-guess dicts for a deterministic multi-start;
    each gets the full budget and the lowest residual wins.

    Raises
    ------
    AllDiverged
        Every evaluation hit the divergence sentinel.
    """
    if budget < 10:
        raise ValueError("budget must be at least 10 evaluations")
    guesses = [spec.initial_guess, *starts]
    results = [_nelder_mead(spec, obs, solver, budget, g, unchecked_rates) for g in guesses]
    return min(results, key=lambda r: r.residual)


def _nelder_mead(spec, obs, solver, budget, guess, unchecked_rates):
    lo = np.array([spec.bound(n)[0] for n in spec.free])
    hi = np.array([spec.bound(n)[1] for n in spec.free])
    n = len(spec.free)
    evals = 0
    n_sentinel = 0

    def f(x):
        nonlocal evals, n_sentinel
        evals += 1
        try:
            p, x0 = spec.unpack(x, obs, unchecked_rates)
        except ValidationError:
            n_sentinel += 1
            return SENTINEL
        value = objective(p, obs, solver, x0)
        if value >= SENTINEL:
            n_sentinel += 1
        return value

    def project(x):
        return np.minimum(np.maximum(x, lo), hi)

    x_start = project(np.array([float(guess[name]) for name in spec.free]))
    simplex = [x_start]
    for j in range(n):
        width = hi[j] - lo[j]
        step = 0.05 * width if width > 0 else 0.0
        v = x_start.copy()
        v[j] = v[j] + step if v[j] + step <= hi[j] else v[j] - step
        simplex.append(v)
    values = [f(v) for v in simplex]
    initial = values[0]
    trace = []
    it = 0
    stop = "budget"
    converged = False

    while True:
        order = sorted(range(n + 1), key=lambda j: (values[j], j))
        simplex = [simplex[j] for j in order]
        values = [values[j] for j in order]
        trace.append((it, values[0]))
        diameter = max(float(np.max(np.abs(v - simplex[0]))) for v in simplex[1:])
        spread = values[-1] - values[0]
        if diameter < DIAMETER_TOL:
            stop, converged = "diameter", True
            break
        if values[0] < SENTINEL and spread <= SPREAD_TOL * abs(values[0]):
            stop, converged = "spread", True
            break
        if evals >= budget:
            break
        it += 1

        centroid = np.sum(simplex[:-1], axis=0) / n
        worst = simplex[-1]
        xr = project(centroid + REFLECT * (centroid - worst))
        fr = f(xr)
        if values[0] <= fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[0]:
            if evals >= budget:
                simplex[-1], values[-1] = xr, fr
                continue
            xe = project(centroid + EXPAND * (centroid - worst))
            fe = f(xe)
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
            continue
        if evals >= budget:
            continue
        if fr < values[-1]:
            xc = project(centroid + CONTRACT * (xr - centroid))
            fc = f(xc)
            if fc <= fr:
                simplex[-1], values[-1] = xc, fc
                continue
        else:
            xc = project(centroid + CONTRACT * (worst - centroid))
            fc = f(xc)
            if fc < values[-1]:
                simplex[-1], values[-1] = xc, fc
                continue
        best = simplex[0]
        for j in range(1, n + 1):
            if evals >= budget:
                break
            simplex[j] = project(best + SHRINK * (simplex[j] - best))
            values[j] = f(simplex[j])

    if n_sentinel == evals:
        raise AllDiverged(f"all {evals} evaluations diverged or were invalid")
    j = min(range(n + 1), key=lambda k: (values[k], k))
    p, x0 = spec.unpack(simplex[j], obs, unchecked_rates)
    return FitResult(p, values[j], evals, converged, tuple(trace), x0, initial, stop)
