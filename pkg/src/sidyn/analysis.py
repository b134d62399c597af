"""Equilibria, their linear stability, and two-parameter outcome maps."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NonConvergence, NotAnEquilibrium, ValidationError
from .integrator import integrate
from .model import PARAM_NAMES, ModelParams, State, jacobian, make_rhs, validate_params

CLASSES = ("stable_node", "unstable_node", "saddle", "stable_spiral", "unstable_spiral",
           "center_degenerate")
OUTCOME_TAGS = ("diverged", "collapse_to_origin", "s_dominant", "i_dominant", "mixed", "invalid")

NEWTON_MAX_ITER = 50
NEWTON_REL_TOL = 1e-9
DEFAULT_REGION = (-1e5, 1e5, -1e5, 1e5)


@dataclass(frozen=True)
class Equilibrium:
    point: State
    residual_norm: float
    eigenvalues: tuple
    classification: str
    trace: float
    det: float


@dataclass(frozen=True)
class OutcomeClass:
    tag: str
    endpoint: Optional[State] = None


@dataclass(frozen=True)
class Axis:
    """A swept parameter: ``count`` evenly spaced values over ``[lo, hi]``."""

    name: str
    lo: float
    hi: float
    count: int

    def __post_init__(self):
        if self.name not in PARAM_NAMES:
            raise ValueError(f"unknown parameter {self.name!r}; expected one of {PARAM_NAMES}")
        if self.count < 1:
            raise ValueError("axis count must be >= 1")

    @property
    def values(self):
        return np.linspace(self.lo, self.hi, self.count)

    @classmethod
    def parse(cls, text):
        """Parse ``name:lo:hi:count``."""
        parts = text.split(":")
        if len(parts) != 4:
            raise ValueError(f"axis spec must be name:lo:hi:count, got {text!r}")
        return cls(parts[0], float(parts[1]), float(parts[2]), int(parts[3]))


@dataclass(frozen=True)
class SweepMap:
    axis1: Axis
    axis2: Axis
    cells: tuple  # rows follow axis1, columns axis2
    base: object

    def tags(self):
        return np.array([[c.tag for c in row] for row in self.cells])


def residual(p: ModelParams, x) -> float:
    ds, di = make_rhs(p)(float(x[0]), float(x[1]))
    return max(abs(ds), abs(di))


def eigenvalues_2x2(trace: float, det: float):
    """Roots of ``lambda^2 - trace*lambda + det``, larger real part first."""
    disc = trace * trace - 4.0 * det
    if disc >= 0.0:
        root = math.sqrt(disc)
        # avoid cancellation in the smaller-magnitude root
        big = 0.5 * (trace + math.copysign(root, trace)) if trace != 0.0 else 0.5 * root
        small = det / big if big != 0.0 else 0.5 * (trace - root)
        lo, hi = sorted((big, small))
        return complex(hi), complex(lo)
    half = 0.5 * trace
    im = 0.5 * math.sqrt(-disc)
    return complex(half, im), complex(half, -im)


def classify_linear(trace: float, det: float):
    eig = eigenvalues_2x2(trace, det)
    class_tol = 1e-9 * (1.0 + abs(trace))
    if any(abs(e.real) <= class_tol for e in eig):
        label = "center_degenerate"
    elif det < 0.0:
        label = "saddle"
    elif trace * trace - 4.0 * det < 0.0:
        label = "stable_spiral" if trace < 0.0 else "unstable_spiral"
    else:
        label = "stable_node" if trace < 0.0 else "unstable_node"
    return eig, label


def _newton_tol(scale):
    return NEWTON_REL_TOL * max(1.0, scale)


def classify(p: ModelParams, point, *, newton_tol=None, polish_steps=5) -> Equilibrium:
    """Polish ``point`` with up to ``polish_steps`` Newton steps and classify it.

    ``newton_tol`` defaults to ``1e-9 * max(1, |point|)``.

    Raises
    ------
    NotAnEquilibrium
        If the residual is still above ``newton_tol`` after polishing.
    """
    x = np.array([float(point[0]), float(point[1])])
    tol = _newton_tol(float(np.max(np.abs(x)))) if newton_tol is None else newton_tol
    rhs = make_rhs(p)
    for _ in range(polish_steps):
        f = np.array(rhs(x[0], x[1]))
        if np.max(np.abs(f)) < tol:
            break
        try:
            x = x - np.linalg.solve(jacobian(p, x), f)
        except np.linalg.LinAlgError:
            break
    res = residual(p, x)
    if not res < tol:
        raise NotAnEquilibrium(f"residual {res!r} at {tuple(x)} exceeds {tol!r}")
    return _equilibrium(p, State(float(x[0]), float(x[1])), res)


def _equilibrium(p, point, res):
    J = jacobian(p, point)
    trace = float(J[0, 0] + J[1, 1])
    det = float(J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0])
    eig, label = classify_linear(trace, det)
    return Equilibrium(point, res, eig, label, trace, det)


def newton(p: ModelParams, seed, tol, max_iter=NEWTON_MAX_ITER):
    """Newton iteration with the analytic Jacobian; returns the root or ``None``.

    Iterates until the step is below ``1e-12 * (1 + |x|)`` so roots come out
    at full precision; ``tol`` only gates acceptance of the final point.
    """
    rhs = make_rhs(p)
    x = np.array([float(seed[0]), float(seed[1])])
    for _ in range(max_iter):
        f = np.array(rhs(x[0], x[1]))
        if not np.all(np.isfinite(f)):
            return None
        if not np.any(f):
            return x
        J = jacobian(p, x)
        det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        if det == 0.0 or not math.isfinite(det):
            return None
        try:
            dx = np.linalg.solve(J, f)
        except np.linalg.LinAlgError:
            return None
        x = x - dx
        if np.max(np.abs(dx)) < 1e-12 * (1.0 + np.max(np.abs(x))):
            break
    f = np.array(rhs(x[0], x[1]))
    if np.all(np.isfinite(f)) and np.max(np.abs(f)) < tol:
        return x
    return None


def find_equilibria(p: ModelParams, region=DEFAULT_REGION, grid_density: int = 21):
    """All equilibria reachable by Newton from a uniform seed grid over ``region``.

    ``region`` is ``(s_lo, s_hi, i_lo, i_hi)``. Roots landing outside the region
    are dropped, near-duplicates (within ``1e-6`` of the region diagonal) are
    merged, and the origin is always reported first. The residual tolerance is
    ``1e-9 * max(1, max |region bound|)``.
    """
    s_lo, s_hi, i_lo, i_hi = map(float, region)
    if not (s_hi > s_lo and i_hi > i_lo):
        raise ValueError(f"degenerate region {region!r}")
    if grid_density < 2:
        raise ValueError("grid_density must be >= 2")
    scale = max(abs(s_lo), abs(s_hi), abs(i_lo), abs(i_hi))
    tol = _newton_tol(scale)
    dedup_tol = 1e-6 * math.hypot(s_hi - s_lo, i_hi - i_lo)

    origin_res = residual(p, (0.0, 0.0))
    if not origin_res < tol:
        raise NonConvergence(f"origin residual {origin_res!r} fails the tolerance")
    roots = [np.zeros(2)]
    for s0 in np.linspace(s_lo, s_hi, grid_density):
        for i0 in np.linspace(i_lo, i_hi, grid_density):
            x = newton(p, (s0, i0), tol)
            if x is None:
                continue
            if not (s_lo - dedup_tol <= x[0] <= s_hi + dedup_tol and i_lo - dedup_tol <= x[1] <= i_hi + dedup_tol):
                continue
            if any(np.max(np.abs(x - r)) <= dedup_tol for r in roots):
                continue
            roots.append(x)
    out = [_equilibrium(p, State(0.0, 0.0), origin_res)]
    rest = sorted(roots[1:], key=lambda r: (r[0], r[1]))
    out.extend(_equilibrium(p, State(float(r[0]), float(r[1])), residual(p, r)) for r in rest)
    return out


def classify_outcome(status: str, endpoint: State) -> OutcomeClass:
    """Label a run by its final state.

    diverged when the run blew up; otherwise collapse_to_origin below one
    borrower, s_dominant / i_dominant when one count exceeds ten times the
    other (floored at 1), else mixed. A ``step_limit`` run is labelled by the
    endpoint it reached.
    """
    if status == "diverged":
        return OutcomeClass("diverged", endpoint)
    s, i = endpoint
    if math.hypot(s, i) < 1.0:
        return OutcomeClass("collapse_to_origin", endpoint)
    if s > 10.0 * max(i, 1.0):
        return OutcomeClass("s_dominant", endpoint)
    if i > 10.0 * max(s, 1.0):
        return OutcomeClass("i_dominant", endpoint)
    return OutcomeClass("mixed", endpoint)


def run_cell(base, params: dict, unchecked_rates=False) -> OutcomeClass:
    """Integrate ``base`` with ``params`` substituted and classify the endpoint."""
    values = base.params.as_dict()
    values.update(params)
    try:
        p = validate_params(**values, unchecked_rates=unchecked_rates)
    except ValidationError:
        return OutcomeClass("invalid", None)
    tr = integrate(p, base.x0, base.t0, base.t1, base.solver)
    return classify_outcome(tr.status, tr.final)


def _cell_job(args):
    base, name1, v1, name2, v2, unchecked = args
    return run_cell(base, {name1: v1, name2: v2}, unchecked)


def sweep(base, axis1: Axis, axis2: Axis, *, workers: int = 1, unchecked_rates=False) -> SweepMap:
    """Outcome of the base run over the ``axis1 x axis2`` parameter grid.

    ``base`` is any object with ``params``, ``x0``, ``t0``, ``t1`` and
    ``solver`` attributes (normally a :class:`sidyn.scenario.Scenario`).
    Cells are independent; ``workers > 1`` farms them out to a process pool
    and the result is identical to the serial run.
    """
    if axis1.name == axis2.name:
        raise ValueError("sweep axes must name two distinct parameters")
    jobs = [(base, axis1.name, float(v1), axis2.name, float(v2), unchecked_rates)
            for v1 in axis1.values for v2 in axis2.values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            flat = list(pool.map(_cell_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        flat = [_cell_job(j) for j in jobs]
    n2 = axis2.count
    cells = tuple(tuple(flat[r * n2:(r + 1) * n2]) for r in range(axis1.count))
    return SweepMap(axis1, axis2, cells, base)
