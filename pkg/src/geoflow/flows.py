"""Time integration of the metric flows.

The intrinsic flow contracts the metric by twice its Ricci tensor; the
coupled variant adds ``2 alpha(t) dphi (x) dphi`` and evolves the map field
by its own heat equation.  On surfaces the Ricci tensor is half the scalar
curvature times the metric, which closes both grid systems:

* conformal torus:  d phi / dt = e^{-2 phi} lap0(phi)
* warped torus:     d(a^2)/dt = -2 K a^2 + 2 alpha phi_x^2,
                    d(b^2)/dt = -2 K b^2,  d phi / dt = lap_g phi

with K the Gauss curvature.  The sphere shrinks in closed form,
r^2(t) = r0^2 - 2(n-1) t, and is stored exactly.

Explicit RK4 with every step stored: the backward conjugate solve and the
forward heat solves reuse the same time grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backends as bk
from .errors import CFLError, DivergenceError, DomainError, ExtinctionError
from .schedules import Schedule, ZERO

#: parabolic stability safety factor: dt <= CFL_FACTOR * dx^2 * (min metric)
CFL_FACTOR = 0.2

RICCI = "ricci"
RICCI_HARMONIC = "ricci-harmonic"


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered flow snapshots on a uniform step grid."""

    flow: str
    times: np.ndarray
    states: tuple
    alpha: Schedule | None
    dt: float
    cfl_ratio: float

    def __len__(self):
        return len(self.states)

    @property
    def kind(self) -> str:
        return self.states[0].kind

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def fields_at(self, t: float):
        """Metric (and map) fields linearly interpolated to time ``t``.

        Snapshots are the source of truth; interpolation only serves RK4
        stage evaluations between adjacent snapshots.  Sphere geometry is
        reconstructed exactly from the closed form instead.
        """
        s0 = self.states[0]
        if s0.kind == bk.SPHERE:
            r_sq = s0.r_sq - 2.0 * (s0.dim - 1) * t
            return {"r_sq": r_sq}
        k = min(int(np.floor(t / self.dt + 1e-12)), len(self.states) - 2) if t < self.t_end \
            else len(self.states) - 2
        k = max(k, 0)
        frac = (t - self.times[k]) / self.dt
        frac = min(max(frac, 0.0), 1.0)
        sa, sb = self.states[k], self.states[k + 1]
        if s0.kind == bk.CONFORMAL:
            return {"phi": (1.0 - frac) * sa.phi + frac * sb.phi}
        return {
            "a_sq": (1.0 - frac) * sa.a_sq + frac * sb.a_sq,
            "b_sq": (1.0 - frac) * sa.b_sq + frac * sb.b_sq,
            "phi_map": (1.0 - frac) * sa.phi_map + frac * sb.phi_map,
        }


def _cfl_bound(state) -> float:
    """Largest stable dt for the current metric."""
    if state.kind == bk.CONFORMAL:
        return CFL_FACTOR * state.dx**2 * float(np.exp(2.0 * state.phi.min()))
    return CFL_FACTOR * state.dx**2 * float(state.a_sq.min())


def _guard(step: int, *arrays):
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise DivergenceError(f"non-finite values at step {step}")


def _conformal_rhs(phi: np.ndarray, dx: float) -> np.ndarray:
    return np.exp(-2.0 * phi) * bk._lap0(phi, dx)


def _warped_rhs(a_sq, b_sq, phi_map, dx, alpha_t):
    state = bk.WarpedState(a_sq, b_sq, phi_map)
    R = bk.scalar_curvature(state).values
    gauss = 0.5 * R
    da = -2.0 * gauss * a_sq
    db = -2.0 * gauss * b_sq
    if alpha_t != 0.0:
        px = bk._dc(phi_map, dx)
        da = da + 2.0 * alpha_t * px * px
    dphi = bk.laplace_beltrami(state, bk.ScalarField(bk.WARPED, phi_map)).values
    return da, db, dphi


def _evolve_sphere(initial: bk.SphereState, t_end: float, steps: int) -> Trajectory:
    n = initial.dim
    times = np.linspace(0.0, t_end, steps + 1)
    r_end = initial.r_sq - 2.0 * (n - 1) * t_end
    if r_end < 0.05 * initial.r_sq:
        raise ExtinctionError(
            f"horizon {t_end} drives r_sq to {r_end:.3g} (< 5% of initial)"
        )
    states = tuple(
        bk.SphereState(n, initial.r_sq - 2.0 * (n - 1) * t, initial.band_limit, t)
        for t in times
    )
    return Trajectory(RICCI, times, states, None, times[1] - times[0], 0.0)


def _evolve_grid(initial, t_end: float, steps: int, alpha: Schedule | None,
                 flow: str) -> Trajectory:
    dt = t_end / steps
    times = np.linspace(0.0, t_end, steps + 1)
    states = [initial]
    worst_ratio = 0.0
    if initial.kind == bk.CONFORMAL:
        dx = initial.dx
        phi = initial.phi.copy()
        for k in range(steps):
            bound = _cfl_bound(states[-1])
            worst_ratio = max(worst_ratio, dt / bound)
            if dt > bound:
                raise CFLError(
                    f"dt={dt:.3g} exceeds stability bound {bound:.3g} at step {k}"
                )
            k1 = _conformal_rhs(phi, dx)
            k2 = _conformal_rhs(phi + 0.5 * dt * k1, dx)
            k3 = _conformal_rhs(phi + 0.5 * dt * k2, dx)
            k4 = _conformal_rhs(phi + dt * k3, dx)
            phi = phi + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            _guard(k, phi)
            if np.exp(2.0 * phi.min()) < bk.MIN_METRIC:
                raise DivergenceError(f"metric collapsed at step {k}")
            states.append(bk.ConformalState(phi.copy(), times[k + 1]))
    else:
        dx = initial.dx
        a_sq = initial.a_sq.copy()
        b_sq = initial.b_sq.copy()
        pm = initial.phi_map.copy()
        for k in range(steps):
            bound = _cfl_bound(states[-1])
            worst_ratio = max(worst_ratio, dt / bound)
            if dt > bound:
                raise CFLError(
                    f"dt={dt:.3g} exceeds stability bound {bound:.3g} at step {k}"
                )
            t = times[k]

            def rhs(ya, yb, yp, s):
                al = alpha(s) if alpha is not None else 0.0
                return _warped_rhs(ya, yb, yp, dx, al)

            k1 = rhs(a_sq, b_sq, pm, t)
            k2 = rhs(a_sq + 0.5 * dt * k1[0], b_sq + 0.5 * dt * k1[1],
                     pm + 0.5 * dt * k1[2], t + 0.5 * dt)
            k3 = rhs(a_sq + 0.5 * dt * k2[0], b_sq + 0.5 * dt * k2[1],
                     pm + 0.5 * dt * k2[2], t + 0.5 * dt)
            k4 = rhs(a_sq + dt * k3[0], b_sq + dt * k3[1], pm + dt * k3[2], t + dt)
            a_sq = a_sq + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
            b_sq = b_sq + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
            pm = pm + dt / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
            _guard(k, a_sq, b_sq, pm)
            if min(a_sq.min(), b_sq.min()) < bk.MIN_METRIC:
                raise DivergenceError(f"metric collapsed at step {k}")
            states.append(bk.WarpedState(a_sq.copy(), b_sq.copy(), pm.copy(), times[k + 1]))
    return Trajectory(flow, times, tuple(states), alpha, dt, worst_ratio)


def evolve_ricci(initial: bk.ManifoldState, t_end: float, steps: int) -> Trajectory:
    """Run the intrinsic curvature flow from ``initial`` to ``t_end``."""
    if steps < 1 or t_end <= 0:
        raise DomainError("need t_end > 0 and steps >= 1")
    if initial.kind == bk.SPHERE:
        return _evolve_sphere(initial, t_end, steps)
    return _evolve_grid(initial, t_end, steps, None, RICCI)


def evolve_ricci_harmonic(initial: bk.ManifoldState, alpha: Schedule,
                          t_end: float, steps: int) -> Trajectory:
    """Run the map-coupled flow (warped backend only).

    ``alpha`` may vanish identically, in which case the result coincides
    bitwise with :func:`evolve_ricci` on the same data; negative coupling
    is rejected.
    """
    if initial.kind != bk.WARPED:
        raise DomainError("the map-coupled flow runs on the warped backend")
    if steps < 1 or t_end <= 0:
        raise DomainError("need t_end > 0 and steps >= 1")
    if alpha(0.0) < 0 or alpha(t_end) < 0:
        raise DomainError("coupling schedule must be nonnegative")
    return _evolve_grid(initial, t_end, steps, alpha, RICCI_HARMONIC)


def check_volume_evolution(traj: Trajectory) -> float:
    """Max relative residual of the volume-form evolution law.

    Central-difference d/dt of the d mu weights against -R d mu (plus
    alpha |grad phi|^2 d mu on the coupled flow).
    """
    if len(traj) < 3:
        raise DomainError("need at least 3 snapshots")
    worst = 0.0
    for k in range(1, len(traj) - 1):
        s = traj.states[k]
        w_prev = bk.volume_weights(traj.states[k - 1]).values
        w_next = bk.volume_weights(traj.states[k + 1]).values
        w = bk.volume_weights(s).values
        dwdt = (w_next - w_prev) / (2.0 * traj.dt)
        R = bk.scalar_curvature(s).values
        if s.kind == bk.SPHERE:
            rhs = -R[0] * w
        else:
            rhs = -R * w
            if traj.flow == RICCI_HARMONIC:
                grad_sq = bk.gradient_norm_sq(s, bk.ScalarField(bk.WARPED, s.phi_map)).values
                rhs = rhs + traj.alpha(traj.times[k]) * grad_sq * w
        denom = max(float(np.max(np.abs(rhs))), float(np.max(np.abs(w))))
        worst = max(worst, float(np.max(np.abs(dwdt - rhs))) / denom)
    return worst
