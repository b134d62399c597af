"""Classical RK4 time stepping for the borrower model.

Two modes are offered: ``rk4-fixed`` (uniform steps) and ``rk4-adaptive``
(step halving with a Richardson error estimate). Both record every accepted
step and stop early once ``max(|s|, |i|)`` reaches the blow-up threshold.

Explicit RK4 is only stable while ``step * |lambda| < RK4_STABILITY_BOUND``
for the fast Jacobian eigenvalue. Interaction terms make that eigenvalue
roughly ``|beta1 - beta2| * max(|s|, |i|)``, so large borrower counts can
force a spurious blow-up; :func:`stability_ratio` reports the margin.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import InvalidSpan, NonFinite
from .model import ModelParams, State, jacobian, make_rhs

log = logging.getLogger(__name__)

# Real-axis extent of the classical RK4 stability region, the root of
# 1 + z + z^2/2 + z^3/6 + z^4/24 = 1 on the negative real line.
RK4_STABILITY_BOUND = 2.785293563405282

METHODS = ("rk4-fixed", "rk4-adaptive")
EVENT_KINDS = ("s_zero_crossing", "i_zero_crossing", "blowup")


@dataclass(frozen=True)
class SolverConfig:
    method: Literal["rk4-fixed", "rk4-adaptive"] = "rk4-fixed"
    step: float = 1e-3
    rel_tol: float = 1e-8
    max_step_count: int = 10_000_000
    blowup_threshold: float = 1e12

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        for name in ("step", "rel_tol", "blowup_threshold"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a finite positive number, got {value!r}")
        if isinstance(self.max_step_count, bool) or int(self.max_step_count) != self.max_step_count \
                or self.max_step_count <= 0:
            raise ValueError(f"max_step_count must be a positive integer, got {self.max_step_count!r}")


@dataclass(frozen=True)
class Event:
    kind: str
    t: float


@dataclass(frozen=True)
class Trajectory:
    """Accepted integration steps stored column-wise.

    ``t``, ``s`` and ``i`` are equal-length float arrays; ``samples`` gives
    the row view as ``(t, State)`` pairs.
    """

    t: np.ndarray
    s: np.ndarray
    i: np.ndarray
    events: tuple = ()
    status: Literal["completed", "diverged", "step_limit"] = "completed"

    @property
    def samples(self):
        return [(float(t), State(float(s), float(i))) for t, s, i in zip(self.t, self.s, self.i)]

    @property
    def final(self) -> State:
        return State(float(self.s[-1]), float(self.i[-1]))

    def __len__(self):
        return len(self.t)

    def at(self, times):
        """Linear interpolation of (s, i) at ``times`` within the integrated span."""
        times = np.asarray(times, dtype=float)
        return np.interp(times, self.t, self.s), np.interp(times, self.t, self.i)


def rk4_step(rhs, s, i, h):
    k1s, k1i = rhs(s, i)
    k2s, k2i = rhs(s + 0.5 * h * k1s, i + 0.5 * h * k1i)
    k3s, k3i = rhs(s + 0.5 * h * k2s, i + 0.5 * h * k2i)
    k4s, k4i = rhs(s + h * k3s, i + h * k3i)
    return (s + h / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s),
            i + h / 6.0 * (k1i + 2.0 * k2i + 2.0 * k3i + k4i))


def stability_ratio(p: ModelParams, x, step: float) -> float:
    """``step * spectral_radius(J(x)) / RK4_STABILITY_BOUND``.

    Values above 1 mean a fixed RK4 step of this size amplifies the fast mode.
    The spectral radius is an upper bound on what matters (the real negative
    eigenvalue), which is the conservative side.
    """
    eig = np.linalg.eigvals(jacobian(p, x))
    return step * float(np.max(np.abs(eig))) / RK4_STABILITY_BOUND


def stability_onset(p: ModelParams, traj, step: float):
    """First sample time at which :func:`stability_ratio` exceeds 1, else ``None``."""
    sk = p.sigma * p.k
    ik = (1.0 - p.sigma) * p.k
    db = p.beta2 - p.beta1
    a = sk + db * traj.i - p.mu1
    b = sk + db * traj.s
    c = ik - db * traj.i
    d = ik - db * traj.s - p.mu2
    tr = a + d
    disc = (tr * tr - 4.0 * (a * d - b * c)).astype(complex)
    root = np.sqrt(disc)
    radius = np.maximum(np.abs(0.5 * (tr + root)), np.abs(0.5 * (tr - root)))
    hit = np.flatnonzero(step * radius > RK4_STABILITY_BOUND)
    return float(traj.t[hit[0]]) if len(hit) else None


def integrate(p: ModelParams, x0, t0: float, t1: float, cfg: SolverConfig = SolverConfig()) -> Trajectory:
    """Integrate the model from ``x0`` at ``t0`` towards ``t1``.

    In fixed mode the span is split into ``ceil(span / step)`` equal steps so
    the last sample lands exactly on ``t1``. Output is bitwise reproducible for
    identical inputs.

    Raises
    ------
    InvalidSpan
        If ``t1 <= t0``.
    NonFinite
        If the initial state is not finite.
    """
    t0, t1 = float(t0), float(t1)
    if not (math.isfinite(t0) and math.isfinite(t1)) or t1 <= t0:
        raise InvalidSpan(f"need finite t1 > t0, got t0={t0!r}, t1={t1!r}")
    s, i = float(x0[0]), float(x0[1])
    if not (math.isfinite(s) and math.isfinite(i)):
        raise NonFinite("x0", (s, i), "finite initial state")

    if cfg.method == "rk4-fixed":
        ts, ss, is_, status = _fixed(make_rhs(p), s, i, t0, t1, cfg)
    else:
        ts, ss, is_, status = _adaptive(make_rhs(p), s, i, t0, t1, cfg)

    t_arr = np.asarray(ts)
    s_arr = np.asarray(ss)
    i_arr = np.asarray(is_)
    events = detect_events(t_arr, s_arr, i_arr, status=status)
    if status == "diverged":
        log.info("integration diverged at t=%r", float(t_arr[-1]))
    return Trajectory(t_arr, s_arr, i_arr, tuple(events), status)


def _blown(s, i, threshold):
    # NaN compares False everywhere, so test finiteness explicitly.
    return not (math.isfinite(s) and math.isfinite(i)) or max(abs(s), abs(i)) >= threshold


def _fixed(rhs, s, i, t0, t1, cfg):
    span = t1 - t0
    n = max(1, math.ceil(span / cfg.step * (1.0 - 1e-12)))
    h = span / n
    ts, ss, is_ = [t0], [s], [i]
    status = "completed"
    threshold = cfg.blowup_threshold
    for j in range(1, n + 1):
        if j > cfg.max_step_count:
            status = "step_limit"
            break
        s, i = rk4_step(rhs, s, i, h)
        if _blown(s, i, threshold):
            status = "diverged"
            if math.isfinite(s) and math.isfinite(i):
                ts.append(t1 if j == n else t0 + j * h)
                ss.append(s)
                is_.append(i)
            break
        ts.append(t1 if j == n else t0 + j * h)
        ss.append(s)
        is_.append(i)
    return ts, ss, is_, status


def _adaptive(rhs, s, i, t0, t1, cfg):
    ts, ss, is_ = [t0], [s], [i]
    t = t0
    h = min(cfg.step, t1 - t0)
    tol = cfg.rel_tol
    threshold = cfg.blowup_threshold
    accepted = 0
    status = "completed"
    while t < t1:
        if accepted >= cfg.max_step_count:
            status = "step_limit"
            break
        last = t + h >= t1
        if last:
            h = t1 - t
        full_s, full_i = rk4_step(rhs, s, i, h)
        half_s, half_i = rk4_step(rhs, s, i, 0.5 * h)
        new_s, new_i = rk4_step(rhs, half_s, half_i, 0.5 * h)
        # Richardson: the two-half-step result is off by about (new - full) / 15.
        scale = max(1.0, abs(new_s), abs(new_i))
        err = max(abs(new_s - full_s), abs(new_i - full_i)) / (15.0 * scale)
        if not math.isfinite(err):
            err = math.inf
        if err <= tol:
            t = t1 if last else t + h
            s, i = new_s, new_i
            accepted += 1
            if _blown(s, i, threshold):
                status = "diverged"
                if math.isfinite(s) and math.isfinite(i):
                    ts.append(t)
                    ss.append(s)
                    is_.append(i)
                break
            ts.append(t)
            ss.append(s)
            is_.append(i)
            factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * (tol / err) ** 0.2))
        else:
            factor = 0.2 if err == math.inf else max(0.2, 0.9 * (tol / err) ** 0.2)
        h *= factor
        if t + h == t:
            status = "step_limit"
            break
    return ts, ss, is_, status


def detect_events(t, s, i, status="completed"):
    """Sign changes of ``s`` and ``i`` between consecutive samples.

    The crossing time is linearly interpolated. A sample that is exactly zero
    does not end a run of signs; the crossing is reported when the next
    nonzero value has the opposite sign. A ``blowup`` event at the final time
    is appended when ``status`` is ``"diverged"``.
    """
    t = np.asarray(t, dtype=float)
    events = []
    for kind, x in (("s_zero_crossing", np.asarray(s, dtype=float)),
                    ("i_zero_crossing", np.asarray(i, dtype=float))):
        nz = np.flatnonzero(x != 0.0)
        pos = x[nz] > 0
        for c in np.flatnonzero(pos[1:] != pos[:-1]):
            a, b = nz[c], nz[c + 1]
            frac = x[a] / (x[a] - x[b])
            events.append(Event(kind, float(t[a] + frac * (t[b] - t[a]))))
    events.sort(key=lambda e: (e.t, EVENT_KINDS.index(e.kind)))
    if status == "diverged" and len(t):
        events.append(Event("blowup", float(t[-1])))
    return events
