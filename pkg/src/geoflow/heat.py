"""Forward heat solves along a stored trajectory, plus zonal evaluation.

Solves ``du/dt = lap_{g(t)} u + a(t) u`` with RK4 on the trajectory's own
time grid.  The sphere backend advances coefficients mode by mode using the
exact eigenvalues of the shrinking metric; grid backends interpolate the
metric to the RK4 stage times.

Time derivatives of the solution are always reconstructed from the PDE
right-hand side (``lap u + a u``), never by finite-differencing stored
snapshots: the pointwise estimate checks depend on that.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre
from scipy.special import eval_gegenbauer

from . import backends as bk
from .errors import (BackendError, CFLError, DomainError, ExtinctionError,
                     PositivityError)
from .flows import Trajectory
from .measures import RK4_STABILITY
from .schedules import Schedule, ZERO

#: default polar sample count for sphere positivity and estimate scans
THETA_SAMPLES = 256


@dataclass
class HeatSolution:
    """Per-snapshot solution fields aligned with a trajectory."""

    kind: str
    times: np.ndarray
    values: np.ndarray          # (snapshots, ...) stacked field values
    a: Schedule
    positive: bool
    A: float | None = None      # max of the initial data, when positivity is tracked
    eta: float | None = None    # min of the initial data

    def field(self, k: int) -> bk.ScalarField:
        return bk.ScalarField(self.kind, self.values[k])


def _sphere_extrema(state: bk.SphereState, coeffs: np.ndarray, thetas: np.ndarray):
    u = zonal_values(state.dim, coeffs, thetas)
    return float(u.min()), float(u.max())


def solve_heat(traj: Trajectory, u0: bk.ScalarField, a: Schedule = ZERO,
               positive: bool = False) -> HeatSolution:
    """March the linear heat equation forward over the trajectory snapshots."""
    s0 = traj.states[0]
    bk._check_field(s0, u0)
    dt = traj.dt
    n_snap = len(traj)

    if traj.kind == bk.SPHERE:
        n = s0.dim
        degrees = np.arange(s0.band_limit + 1, dtype=float)
        base = degrees * (degrees + n - 1)
        nonzero = np.nonzero(u0.values)[0]
        l_max = int(nonzero.max()) if nonzero.size else 0
        r_min = traj.states[-1].r_sq
        if dt * (base[l_max] / r_min + abs(a(traj.t_end))) > RK4_STABILITY:
            raise CFLError("time grid too coarse for the requested band limit")

        def r_sq(t):
            return s0.r_sq - 2.0 * (n - 1) * t

        def rhs(t, c):
            return (-base / r_sq(t) + a(t)) * c

        values = np.empty((n_snap, s0.band_limit + 1))
        values[0] = u0.values
        c = u0.values.copy()
        for k in range(n_snap - 1):
            t = traj.times[k]
            k1 = rhs(t, c)
            k2 = rhs(t + 0.5 * dt, c + 0.5 * dt * k1)
            k3 = rhs(t + 0.5 * dt, c + 0.5 * dt * k2)
            k4 = rhs(t + dt, c + dt * k3)
            c = c + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            values[k + 1] = c
        sol = HeatSolution(bk.SPHERE, traj.times, values, a, positive)
        if positive:
            thetas = np.linspace(0.0, np.pi, THETA_SAMPLES)
            lo0, hi0 = _sphere_extrema(s0, values[0], thetas)
            sol.A, sol.eta = hi0, lo0
            if lo0 <= 0:
                raise PositivityError("initial data is not positive")
            for k in range(n_snap):
                lo, hi = _sphere_extrema(traj.states[k], values[k], thetas)
                if lo <= 0:
                    raise PositivityError(
                        f"solution lost positivity at t={traj.times[k]:.6g}"
                    )
                if hi > sol.A * (1.0 + 1e-10):
                    raise PositivityError(
                        f"solution exceeded its initial maximum at t={traj.times[k]:.6g}"
                    )
        return sol

    # grid backends
    def rhs(t, u):
        fields = traj.fields_at(t)
        if traj.kind == bk.CONFORMAL:
            state = bk.ConformalState(fields["phi"], t)
        else:
            state = bk.WarpedState(fields["a_sq"], fields["b_sq"], fields["phi_map"], t)
        lap = bk.laplace_beltrami(state, bk.ScalarField(state.kind, u)).values
        return lap + a(t) * u

    values = np.empty((n_snap,) + u0.values.shape)
    values[0] = u0.values
    u = u0.values.copy()
    A = float(u.max())
    eta = float(u.min())
    if positive and eta <= 0:
        raise PositivityError("initial data is not positive")
    for k in range(n_snap - 1):
        t = traj.times[k]
        k1 = rhs(t, u)
        k2 = rhs(t + 0.5 * dt, u + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, u + 0.5 * dt * k2)
        k4 = rhs(t + dt, u + dt * k3)
        u = u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(u)):
            raise CFLError(f"heat solve diverged at step {k}")
        if positive:
            if u.min() <= 0:
                idx = int(np.argmin(u))
                raise PositivityError(
                    f"solution lost positivity at t={traj.times[k + 1]:.6g}, point {idx}"
                )
            if u.max() > A * (1.0 + 1e-10):
                raise PositivityError(
                    f"solution exceeded its initial maximum at t={traj.times[k + 1]:.6g}"
                )
        values[k + 1] = u
    return HeatSolution(traj.kind, traj.times, values, a, positive,
                        A if positive else None, eta if positive else None)


def closed_form_sphere_solution(n: int, r0_sq: float, modes, a: Schedule, t):
    """Exact coefficients of the sphere heat solution at time(s) ``t``.

    Mode of degree l scales by ``exp(int a) * (r^2(t)/r0^2)^(l(l+n-1)/(2(n-1)))``.
    """
    t_arr = np.asarray(t, dtype=float)
    scalar = t_arr.ndim == 0
    t_flat = np.atleast_1d(t_arr)
    r_sq = r0_sq - 2.0 * (n - 1) * t_flat
    if np.any(r_sq <= 0):
        raise ExtinctionError("requested time is past sphere extinction")
    growth = np.exp(np.array([a.integral(0.0, float(tv)) for tv in t_flat]))
    out = []
    for l, c0 in modes:
        expo = l * (l + n - 1) / (2.0 * (n - 1))
        vals = c0 * growth * (r_sq / r0_sq) ** expo
        out.append((l, float(vals[0]) if scalar else vals))
    return out


def zonal_values(n: int, coeffs: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    """u(theta) = sum_l c_l C_l^{(n-1)/2}(cos theta); Legendre at n = 2."""
    x = np.cos(thetas)
    if n == 2:
        return legendre.legval(x, coeffs)
    lam = 0.5 * (n - 1)
    out = np.zeros_like(x)
    for l, c in enumerate(coeffs):
        if c != 0.0:
            out += c * eval_gegenbauer(l, lam, x)
    return out


def evaluate_zonal(state: bk.SphereState, field: bk.ScalarField, thetas):
    """Pointwise (u, |grad u|^2, lap u) of a zonal field at polar angles.

    ``|grad u|^2 = (du/dtheta)^2 / r^2``; the Laplacian comes from the
    coefficients, so a PDE time derivative is ``lap u + a u`` exactly.
    """
    if state.kind != bk.SPHERE:
        raise BackendError("zonal evaluation is a sphere operation")
    bk._check_field(state, field)
    thetas = np.asarray(thetas, dtype=float)
    if np.any(thetas < 0) or np.any(thetas > np.pi):
        raise DomainError("polar angles must lie in [0, pi]")
    x = np.cos(thetas)
    c = field.values
    n = state.dim
    if n == 2:
        u = legendre.legval(x, c)
        du_dx = legendre.legval(x, legendre.legder(c))
    else:
        lam = 0.5 * (n - 1)
        u = zonal_values(n, c, thetas)
        du_dx = np.zeros_like(x)
        for l in range(1, c.shape[0]):
            if c[l] != 0.0:
                du_dx += c[l] * 2.0 * lam * eval_gegenbauer(l - 1, lam + 1.0, x)
    du_dtheta = -np.sin(thetas) * du_dx
    grad_sq = du_dtheta**2 / state.r_sq
    lap = zonal_values(n, -state.eigenvalues() * c, thetas)
    return u, grad_sq, lap
