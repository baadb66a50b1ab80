"""Conjugate-heat weight system along a stored trajectory.

The kernel density K solves ``dK/dt = -lap K + R K`` (the coupled flow
subtracts ``alpha |grad phi|^2 K``), integrated backwards in time from
terminal data at the end of the trajectory -- the well-posed direction.
From K we obtain

* the potential ``f = -log K - (n/2) log(4 pi tau)`` with backwards time
  ``tau = T - t``, ``T = t_end + tau0``,
* the unit-mass weighted measure ``dV = K d mu``,
* the drift Laplacian ``lap_f u = lap u - <grad f, grad u>``, assembled in
  weighted divergence form (K averaged onto half points) so that it is
  exactly self-adjoint in the discrete dV inner product,
* the Bakry-Emery tensor ``Ric + Hess f`` and its largest eigenvalue
  relative to the metric.

f is always derived from K; its own evolution equation is only used as a
residual diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log, pi

import numpy as np

from . import backends as bk
from .errors import BackendError, DomainError, PositivityError, StepError
from .flows import RICCI_HARMONIC, Trajectory

#: RK4 real-axis stability limit for the explicit stage operator
RK4_STABILITY = 2.78


@dataclass
class WeightSystem:
    """Per-snapshot kernel density plus the derived measure data."""

    kind: str
    dim: int
    times: np.ndarray
    states: tuple
    K: list
    tau0: float
    T: float
    mass: np.ndarray
    flow: str
    alpha: object = None

    def tau(self, k: int) -> float:
        return float(self.T - self.times[k])

    def dV_weights(self, k: int) -> bk.Weights:
        state = self.states[k]
        mu = bk.volume_weights(state)
        if self.kind == bk.SPHERE:
            return bk.Weights(bk.SPHERE, "dV", self.K[k].values[0] * mu.values)
        return bk.Weights(self.kind, "dV", self.K[k].values * mu.values)

    def f_field(self, k: int) -> bk.ScalarField:
        offset = 0.5 * self.dim * log(4.0 * pi * self.tau(k))
        if self.kind == bk.SPHERE:
            coeffs = np.zeros_like(self.K[k].values)
            coeffs[0] = -log(self.K[k].values[0]) - offset
            return bk.ScalarField(bk.SPHERE, coeffs)
        return bk.ScalarField(self.kind, -np.log(self.K[k].values) - offset)


def _uniform_sphere_coeff(field: bk.ScalarField) -> float:
    if np.any(field.values[1:] != 0.0):
        raise BackendError(
            "sphere weight systems support spatially uniform kernels only"
        )
    return float(field.values[0])


def solve_conjugate_backward(traj: Trajectory, terminal: bk.ScalarField,
                             tau0: float = 1.0) -> WeightSystem:
    """Integrate the conjugate equation backwards over the stored snapshots.

    ``terminal`` is the kernel at the final snapshot; it must be strictly
    positive and is renormalized to unit d mu mass if necessary.
    """
    if tau0 <= 0:
        raise DomainError("tau0 must be positive")
    end_state = traj.states[-1]
    bk._check_field(end_state, terminal)
    T = traj.t_end + tau0
    n_snap = len(traj)
    dt = traj.dt
    dim = end_state.dim if traj.kind == bk.SPHERE else 2

    if traj.kind == bk.SPHERE:
        k_end = _uniform_sphere_coeff(terminal)
        if k_end <= 0:
            raise PositivityError("terminal kernel must be positive")
        k_end = 1.0 / end_state.volume()  # unit-mass normalization of a uniform kernel
        n = end_state.dim

        def r_sq(t):
            return traj.states[0].r_sq - 2.0 * (n - 1) * t

        def rhs(t, y):
            # uniform kernel: lap K = 0, leaving dK/dt = R K
            return n * (n - 1) / r_sq(t) * y

        vals = np.empty(n_snap)
        vals[-1] = k_end
        y = k_end
        for k in range(n_snap - 1, 0, -1):
            t = traj.times[k]
            k1 = rhs(t, y)
            k2 = rhs(t - 0.5 * dt, y - 0.5 * dt * k1)
            k3 = rhs(t - 0.5 * dt, y - 0.5 * dt * k2)
            k4 = rhs(t - dt, y - dt * k3)
            y = y - dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if y <= 0:
                raise PositivityError(f"kernel crossed zero at step {k - 1}")
            vals[k - 1] = y
        fields = [None] * n_snap
        mass = np.empty(n_snap)
        for k, s in enumerate(traj.states):
            coeffs = np.zeros(s.band_limit + 1)
            coeffs[0] = vals[k]
            fields[k] = bk.ScalarField(bk.SPHERE, coeffs)
            mass[k] = vals[k] * s.volume()
        return WeightSystem(bk.SPHERE, dim, traj.times, traj.states, fields,
                            tau0, T, mass, traj.flow, traj.alpha)

    # grid backends
    K = np.asarray(terminal.values, dtype=float).copy()
    if K.min() <= 0:
        raise PositivityError("terminal kernel must be positive")
    mu_end = bk.volume_weights(end_state).values
    K /= float(np.sum(K * mu_end))

    dx = end_state.dx
    coupled = traj.flow == RICCI_HARMONIC

    def rhs(t, K_cur):
        fields = traj.fields_at(t)
        if traj.kind == bk.CONFORMAL:
            state = bk.ConformalState(fields["phi"], t)
        else:
            state = bk.WarpedState(fields["a_sq"], fields["b_sq"], fields["phi_map"], t)
        lap = bk.laplace_beltrami(state, bk.ScalarField(state.kind, K_cur)).values
        R = bk.scalar_curvature(state).values
        out = -lap + R * K_cur
        if coupled:
            grad_sq = bk.gradient_norm_sq(
                state, bk.ScalarField(bk.WARPED, fields["phi_map"])).values
            out = out - traj.alpha(t) * grad_sq * K_cur
        return out, state, R

    fields_out = [None] * n_snap
    mass = np.empty(n_snap)
    fields_out[-1] = bk.ScalarField(traj.kind, K.copy())
    mass[-1] = 1.0
    for k in range(n_snap - 1, 0, -1):
        t = traj.times[k]
        k1, state1, R1 = rhs(t, K)
        # stability of the backward stage operator: diffusion plus reaction
        if traj.kind == bk.CONFORMAL:
            diff = 8.0 * float(np.exp(-2.0 * state1.phi.min())) / dx**2
        else:
            diff = 4.0 / (float(state1.a_sq.min()) * dx**2)
        if dt * (diff + float(np.max(np.abs(R1)))) > RK4_STABILITY:
            raise StepError(
                f"stored time grid too coarse for the backward solve at step {k}"
            )
        k2 = rhs(t - 0.5 * dt, K - 0.5 * dt * k1)[0]
        k3 = rhs(t - 0.5 * dt, K - 0.5 * dt * k2)[0]
        k4 = rhs(t - dt, K - dt * k3)[0]
        K = K - dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(K)):
            raise StepError(f"backward solve diverged at step {k - 1}; time grid too coarse")
        if K.min() <= 0:
            raise PositivityError(f"kernel crossed zero at step {k - 1}")
        fields_out[k - 1] = bk.ScalarField(traj.kind, K.copy())
        mass[k - 1] = float(np.sum(K * bk.volume_weights(traj.states[k - 1]).values))
    return WeightSystem(traj.kind, dim, traj.times, traj.states, fields_out,
                        tau0, T, mass, traj.flow, traj.alpha)


def drift_laplacian(state: bk.ManifoldState, f: bk.ScalarField,
                    u: bk.ScalarField) -> bk.ScalarField:
    """Drift Laplacian ``lap u - <grad f, grad u>`` in weighted divergence form.

    Grid backends put the conjugate density ``e^{-f}`` on half points, which
    makes the operator exactly self-adjoint against dV.  Constant f reduces
    to the plain Laplace-Beltrami operator identically.
    """
    bk._check_field(state, f)
    bk._check_field(state, u)
    if state.kind == bk.SPHERE:
        if np.any(f.values[1:] != 0.0):
            raise BackendError("sphere drift Laplacian needs a spatially uniform potential")
        return bk.laplace_beltrami(state, u)
    dens = np.exp(-(f.values - f.values.min()))  # prefactor cancels; keep it tame
    dx = state.dx
    if state.kind == bk.CONFORMAL:
        acc = np.zeros_like(u.values)
        for axis in (0, 1):
            de = bk._half_mean(dens, axis)
            du = np.roll(u.values, -1, axis) - u.values
            flux = de * du
            acc += flux - np.roll(flux, 1, axis)
        return bk.ScalarField(bk.CONFORMAL, acc / (dens * np.exp(2.0 * state.phi) * dx**2))
    cond = bk._half_mean(np.sqrt(state.b_sq / state.a_sq)) * bk._half_mean(dens)
    du = np.roll(u.values, -1) - u.values
    flux = cond * du
    acc = flux - np.roll(flux, 1)
    ab = np.sqrt(state.a_sq * state.b_sq)
    return bk.ScalarField(bk.WARPED, acc / (dens * ab * dx**2))


def grad_inner_dV(state: bk.ManifoldState, f: bk.ScalarField, u: bk.ScalarField,
                  v: bk.ScalarField, dV: bk.Weights) -> float:
    """Integral of <grad u, grad v> dV, dual to the drift Laplacian.

    Evaluated as -<u, lap_f v>_dV so the pairing is exact in quadrature.
    """
    lap_v = drift_laplacian(state, f, v)
    return -bk.inner(u, lap_v, dV)


def potential_and_measure(ws: WeightSystem, sample_stride: int | None = None):
    """Materialize the potential and dV weights; diagnose the f-equation.

    Returns ``(f_fields, dV_list, residual)`` where ``residual`` is the max
    abs central-time-difference defect of the potential evolution equation
    over the sampled interior snapshots.  The equation never drives f; the
    definitional identity from K does.
    """
    n_snap = len(ws.times)
    f_fields = [ws.f_field(k) for k in range(n_snap)]
    dV_list = [ws.dV_weights(k) for k in range(n_snap)]
    if sample_stride is None:
        sample_stride = max(1, (n_snap - 2) // 32)
    resid = 0.0
    for k in range(1, n_snap - 1, sample_stride):
        resid = max(resid, f_equation_residual(ws, k, f_fields[k - 1], f_fields[k + 1]))
    return f_fields, dV_list, resid


def f_equation_residual(ws: WeightSystem, k: int,
                        f_prev: bk.ScalarField | None = None,
                        f_next: bk.ScalarField | None = None) -> float:
    """Max-norm defect of the potential evolution equation at snapshot ``k``."""
    if k <= 0 or k >= len(ws.times) - 1:
        raise DomainError("residual needs an interior snapshot")
    dt = float(ws.times[1] - ws.times[0])
    f_prev = f_prev if f_prev is not None else ws.f_field(k - 1)
    f_next = f_next if f_next is not None else ws.f_field(k + 1)
    f_cur = ws.f_field(k)
    state = ws.states[k]
    dfdt = (f_next.values - f_prev.values) / (2.0 * dt)
    lap_f = bk.laplace_beltrami(state, f_cur).values
    R = bk.scalar_curvature(state).values
    if ws.kind == bk.SPHERE:
        # spatially uniform data: only the constant mode carries content
        rhs0 = -lap_f[0] - R[0] + 0.5 * ws.dim / ws.tau(k)
        return float(abs(dfdt[0] - rhs0))
    grad_sq = bk.gradient_norm_sq(state, f_cur).values
    rhs = -lap_f - R + grad_sq + 0.5 * ws.dim / ws.tau(k)
    if ws.flow == RICCI_HARMONIC:
        phi_grad = bk.gradient_norm_sq(
            state, bk.ScalarField(bk.WARPED, state.phi_map)).values
        rhs = rhs + ws.alpha(float(ws.times[k])) * phi_grad
    return float(np.max(np.abs(dfdt - rhs)))


def bakry_emery_bound(state: bk.ManifoldState, f: bk.ScalarField,
                      alpha: float = 0.0,
                      dphi: bk.SymTensorField | None = None):
    """Assemble ``Ric + Hess f`` (minus ``alpha dphi (x) dphi`` if supplied).

    Returns the tensor together with the sup over M of its largest
    eigenvalue relative to the metric.
    """
    bk._check_field(state, f)
    if state.kind == bk.SPHERE:
        if np.any(f.values[1:] != 0.0):
            raise BackendError("sphere curvature bound needs a spatially uniform potential")
        coeff = (state.dim - 1) / state.r_sq
        tensor = bk.SymTensorField(bk.SPHERE, np.asarray(coeff))
        return tensor, float(coeff)
    gauss = 0.5 * bk.scalar_curvature(state).values
    hxx, hxy, hyy = bk.hessian_components(state, f)
    if state.kind == bk.CONFORMAL:
        g = np.exp(2.0 * state.phi)
        txx = gauss * g + hxx
        txy = hxy
        tyy = gauss * g + hyy
    else:
        txx = gauss * state.a_sq + hxx
        txy = hxy
        tyy = gauss * state.b_sq + hyy
    if dphi is not None and alpha != 0.0:
        txx = txx - alpha * dphi.values[0]
        txy = txy - alpha * dphi.values[1]
        tyy = tyy - alpha * dphi.values[2]
    tensor = bk.SymTensorField(state.kind, np.stack([txx, txy, tyy]))
    return tensor, bk.sup_relative_eigenvalue(state, tensor)


def uniform_terminal(state: bk.ManifoldState) -> bk.ScalarField:
    """Terminal kernel 1/Vol, the default for the backward solve."""
    if state.kind == bk.SPHERE:
        return bk.constant_field(state, 1.0 / state.volume())
    w = bk.volume_weights(state).values
    return bk.constant_field(state, 1.0 / float(np.sum(w)))


def bump_terminal(state: bk.ManifoldState, amplitude: float = 0.5,
                  width: float = 0.15) -> bk.ScalarField:
    """Centered periodized-Gaussian terminal kernel for inhomogeneous runs."""
    if state.kind == bk.SPHERE:
        raise BackendError("bump terminals are for grid backends")
    N = state.resolution
    x = np.arange(N) / N
    if state.kind == bk.CONFORMAL:
        gx = np.zeros(N)
        for shift in (-1, 0, 1):
            gx += np.exp(-((x - 0.5 + shift) ** 2) / (2.0 * width**2))
        bump = np.outer(gx, gx)
    else:
        bump = np.zeros(N)
        for shift in (-1, 0, 1):
            bump += np.exp(-((x - 0.5 + shift) ** 2) / (2.0 * width**2))
    values = 1.0 + amplitude * (bump - bump.mean())
    if values.min() <= 0:
        raise DomainError("bump amplitude too large, kernel would go nonpositive")
    w = bk.volume_weights(state).values
    values = values / float(np.sum(values * w))
    return bk.ScalarField(state.kind, values)
