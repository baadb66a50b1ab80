"""Pointwise inequality checkers for positive heat solutions.

Two sharp estimates are scanned over every stored snapshot:

* gradient bound:   t |grad u|^2 <= u^2 log(A/u)   (A = initial maximum),
* Harnack-type bound:  |grad u|^2/u - du/dt <= (c/(2t)) u + K n u, with
  c = n on the intrinsic flow and c = n/2 + 4 n C alpha(0) on the coupled
  flow (C the measured bound for dphi (x) dphi).

Slacks are (right side - left side); a report passes when the worst slack
stays above -tolerance.  Time derivatives come from the PDE right-hand
side, never from differencing snapshots.  Hypothesis band checks (curvature
between 0 and K g, map-gradient band, non-increasing coupling, drift
curvature bound) produce flags the harness uses to gate which monotonicity
claims are asserted.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import backends as bk
from .errors import DomainError
from .flows import RICCI_HARMONIC, Trajectory
from .heat import HeatSolution, evaluate_zonal, zonal_values, THETA_SAMPLES
from .measures import WeightSystem, bakry_emery_bound


@dataclass
class SlackReport:
    """Worst slack of one pointwise inequality over the scanned snapshots."""

    check: str
    worst_slack: float
    location: tuple  # (t, point index or polar angle)
    tolerance: float
    passed: bool
    hypotheses: dict = dc_field(default_factory=dict)
    per_time: np.ndarray | None = None


def _finish(check, slacks, locs, times, tol, hypotheses=None):
    worst_idx = int(np.argmin(slacks))
    worst = float(slacks[worst_idx])
    return SlackReport(check, worst, (float(times[worst_idx]), locs[worst_idx]),
                       tol, worst >= -tol, hypotheses or {}, np.asarray(slacks))


def hamilton_gradient_check(traj: Trajectory, heat: HeatSolution,
                            A: float | None = None, tol: float = 1e-8,
                            theta_samples: int = THETA_SAMPLES) -> SlackReport:
    """Scan ``u^2 log(A/u) - t |grad u|^2`` over all stored (t, point)."""
    if A is None:
        A = heat.A
    if A is None or heat.eta is None:
        raise DomainError("positivity metadata (A, eta) missing from the heat solution")
    slacks, locs = [], []
    if traj.kind == bk.SPHERE:
        thetas = np.linspace(0.0, np.pi, theta_samples)
        for k, state in enumerate(traj.states):
            u, grad_sq, _ = evaluate_zonal(state, heat.field(k), thetas)
            s = u**2 * np.log(A / u) - traj.times[k] * grad_sq
            j = int(np.argmin(s))
            slacks.append(float(s[j]))
            locs.append(float(thetas[j]))
    else:
        for k, state in enumerate(traj.states):
            u = heat.field(k)
            grad_sq = bk.gradient_norm_sq(state, u).values
            s = u.values**2 * np.log(A / u.values) - traj.times[k] * grad_sq
            j = int(np.argmin(s))
            slacks.append(float(s.ravel()[j]) if s.ndim > 1 else float(s[j]))
            locs.append(int(np.argmin(s.ravel())))
    return _finish("hamilton", slacks, locs, traj.times, tol,
                   {"positivity": True})


def li_yau_check(traj: Trajectory, heat: HeatSolution, K_bound: float, n: int,
                 variant: str = "rf", C_dphi: float = 0.0,
                 alpha0: float = 0.0, tol: float = 1e-8,
                 theta_samples: int = THETA_SAMPLES) -> SlackReport:
    """Scan ``(c/(2t)) u + K n u - (|grad u|^2 / u - du/dt)`` for t > 0."""
    if variant not in ("rf", "rhf"):
        raise DomainError("variant must be 'rf' or 'rhf'")
    c_coef = float(n) if variant == "rf" else 0.5 * n + 4.0 * n * C_dphi * alpha0
    slacks, locs = [], []
    a = heat.a
    if traj.kind == bk.SPHERE:
        thetas = np.linspace(0.0, np.pi, theta_samples)
        for k in range(1, len(traj)):
            state = traj.states[k]
            t = float(traj.times[k])
            u, grad_sq, lap = evaluate_zonal(state, heat.field(k), thetas)
            if np.any(np.abs(u) < 1e-12):
                raise DomainError("solution too close to zero for the ratio bound")
            du_dt = lap + a(t) * u
            s = (0.5 * c_coef / t) * u + K_bound * n * u - grad_sq / u + du_dt
            j = int(np.argmin(s))
            slacks.append(float(s[j]))
            locs.append(float(thetas[j]))
    else:
        for k in range(1, len(traj)):
            state = traj.states[k]
            t = float(traj.times[k])
            u = heat.field(k)
            if np.any(np.abs(u.values) < 1e-12):
                raise DomainError("solution too close to zero for the ratio bound")
            grad_sq = bk.gradient_norm_sq(state, u).values
            du_dt = bk.laplace_beltrami(state, u).values + a(t) * u.values
            s = (0.5 * c_coef / t) * u.values + K_bound * n * u.values \
                - grad_sq / u.values + du_dt
            slacks.append(float(s.min()))
            locs.append(int(np.argmin(s.ravel())))
    return _finish("li-yau", slacks, locs, traj.times[1:], tol,
                   {"positivity": True, "ric-band": True})


def hypothesis_band_check(traj: Trajectory, ws: WeightSystem | None, kind: str,
                          K_bound: float | None = None,
                          kappa: np.ndarray | None = None,
                          h_values: np.ndarray | None = None,
                          s_values: np.ndarray | None = None,
                          tol: float = 1e-10) -> SlackReport:
    """Per-snapshot hypothesis bands; the flags gate monotonicity assertions.

    kinds:

    * ``ric-nonneg-upper`` -- 0 <= Ric <= K_bound g.  On a torus the lower
      band forces flat data: the total curvature vanishes, so any sign
      variation fails it (and the report says so rather than asserting).
    * ``dphi-band`` -- 0 <= dphi (x) dphi <= (C/t) g with the smallest
      admissible C measured from the trajectory and reported.
    * ``alpha-monotone`` -- coupling schedule non-increasing and positive.
    * ``ricf-upper`` -- drift curvature bound Ric_f <= (kappa/(2h)) g at the
      supplied per-record values.
    """
    if kind == "ric-nonneg-upper":
        if K_bound is None:
            raise DomainError("ric-nonneg-upper needs K_bound")
        slacks, locs = [], []
        for k, state in enumerate(traj.states):
            if state.kind == bk.SPHERE:
                lo = hi = (state.dim - 1) / state.r_sq
            else:
                gauss = 0.5 * bk.scalar_curvature(state).values
                lo, hi = float(gauss.min()), float(gauss.max())
            slacks.append(min(lo, K_bound - hi))
            locs.append(0)
        rep = _finish("ric-band", slacks, locs, traj.times, tol)
        if not rep.passed and traj.kind != bk.SPHERE:
            rep.hypotheses["note"] = (
                "nonnegative curvature with an upper bound on a torus forces "
                "flat data: the total curvature is zero, so any sign variation "
                "violates the lower band"
            )
        return rep
    if kind == "dphi-band":
        if traj.kind != bk.WARPED:
            raise DomainError("dphi-band applies to the warped backend")
        C_measured = 0.0
        for k, state in enumerate(traj.states):
            t = float(traj.times[k])
            if t == 0.0:
                continue
            grad_sq = bk.gradient_norm_sq(
                state, bk.ScalarField(bk.WARPED, state.phi_map)).values
            C_measured = max(C_measured, t * float(grad_sq.max()))
        rep = SlackReport("dphi-band", 0.0, (0.0, 0), tol, True,
                          {"C_dphi": C_measured})
        return rep
    if kind == "alpha-monotone":
        if traj.alpha is None:
            raise DomainError("no coupling schedule on this trajectory")
        vals = np.array([traj.alpha(float(t)) for t in traj.times])
        diffs = -(vals[1:] - vals[:-1])
        worst = float(min(diffs.min(), vals.min()))
        rep = SlackReport("alpha-monotone", worst, (0.0, 0), tol, worst >= -tol,
                          {"alpha_floor": float(vals.min())})
        return rep
    if kind == "ricf-upper":
        if kappa is None or h_values is None or s_values is None:
            raise DomainError("ricf-upper needs per-record kappa, h and s values")
        slack = kappa / (2.0 * h_values) - s_values
        j = int(np.argmin(slack))
        return SlackReport("ricf-bound", float(slack[j]), (float(j), 0), tol,
                           float(slack[j]) >= -tol)
    raise DomainError(f"unknown hypothesis band '{kind}'")


def measured_ricci_upper(traj: Trajectory, indices=None) -> float:
    """sup over the (sub)trajectory of the largest relative Ricci eigenvalue."""
    worst = -np.inf
    ks = range(len(traj)) if indices is None else indices
    for k in ks:
        state = traj.states[k]
        if state.kind == bk.SPHERE:
            worst = max(worst, (state.dim - 1) / state.r_sq)
        else:
            gauss = 0.5 * bk.scalar_curvature(state).values
            worst = max(worst, float(gauss.max()))
    return float(worst)


def measured_dphi_bound(traj: Trajectory) -> float:
    """Smallest admissible C with dphi (x) dphi <= (C/t) g along the run."""
    C = 0.0
    for k, state in enumerate(traj.states):
        t = float(traj.times[k])
        if t == 0.0 or state.kind != bk.WARPED:
            continue
        grad_sq = bk.gradient_norm_sq(
            state, bk.ScalarField(bk.WARPED, state.phi_map)).values
        C = max(C, t * float(grad_sq.max()))
    return C
