"""Discrete manifold backends and their differential operators.

Three backends:

* ``SphereState`` -- round n-sphere handled spectrally.  Scalar fields are
  vectors of zonal coefficients, one mode per degree l up to a band limit.
  For n = 2 the modes are the Legendre polynomials P_l(cos theta); in
  general dimension they are the Gegenbauer polynomials C_l^{(n-1)/2},
  which reduce to Legendre at n = 2.  Every functional used downstream has
  a closed form in the coefficients.
* ``ConformalState`` -- torus [0,1)^2 with metric e^{2 phi}(dx^2 + dy^2) on
  an N x N periodic grid.
* ``WarpedState`` -- torus [0,1)^2 with metric a(x)^2 dx^2 + b(x)^2 dy^2,
  all fields depending on x only (N-point periodic grid), plus the map
  field phi_map used by the coupled flow.

Grid derivatives are second-order centered with periodic wraparound.  The
Laplace-Beltrami operator is assembled in divergence form so that discrete
integration by parts holds exactly, not just to truncation order.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gamma, lgamma, pi
from typing import Union

import numpy as np

from .errors import BackendError, DomainError, ResolutionError

SPHERE = "sphere"
CONFORMAL = "conformal"
WARPED = "warped"

#: metric coefficients below this are treated as a collapsed geometry
MIN_METRIC = 1e-6


def _finite(arr, what):
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{what} contains non-finite values")
    return arr


@dataclass(frozen=True)
class SphereState:
    """Round sphere S^n of squared radius ``r_sq`` at flow time ``t``."""

    dim: int
    r_sq: float
    band_limit: int = 32
    t: float = 0.0

    kind = SPHERE

    def __post_init__(self):
        if self.dim < 2:
            raise DomainError("sphere dimension must be >= 2")
        if not (np.isfinite(self.r_sq) and self.r_sq > 0):
            raise DomainError("sphere needs r_sq > 0")
        if self.band_limit < 1:
            raise DomainError("band limit must be >= 1")

    def eigenvalues(self) -> np.ndarray:
        """Laplace-Beltrami eigenvalues l(l+n-1)/r^2 for l = 0..band_limit."""
        l = np.arange(self.band_limit + 1, dtype=float)
        return l * (l + self.dim - 1) / self.r_sq

    def volume(self) -> float:
        return float(sphere_mode_norms(self.dim, self.r_sq, 0)[0])


@dataclass(frozen=True)
class ConformalState:
    """Conformal torus: metric e^{2 phi}(dx^2 + dy^2) on an N x N grid."""

    phi: np.ndarray
    t: float = 0.0

    kind = CONFORMAL

    def __post_init__(self):
        arr = np.asarray(self.phi, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise BackendError("conformal factor must be a square 2-d array")
        _finite(arr, "conformal factor")
        object.__setattr__(self, "phi", arr)

    @property
    def resolution(self) -> int:
        return self.phi.shape[0]

    @property
    def dx(self) -> float:
        return 1.0 / self.resolution


@dataclass(frozen=True)
class WarpedState:
    """Warped product torus: a(x)^2 dx^2 + b(x)^2 dy^2 plus map field phi_map."""

    a_sq: np.ndarray
    b_sq: np.ndarray
    phi_map: np.ndarray
    t: float = 0.0

    kind = WARPED

    def __post_init__(self):
        a = np.asarray(self.a_sq, dtype=float)
        b = np.asarray(self.b_sq, dtype=float)
        p = np.asarray(self.phi_map, dtype=float)
        if not (a.ndim == b.ndim == p.ndim == 1 and a.shape == b.shape == p.shape):
            raise BackendError("warp fields must be 1-d arrays of a common length")
        for arr, name in ((a, "a_sq"), (b, "b_sq"), (p, "phi_map")):
            _finite(arr, name)
        if a.min() <= 0 or b.min() <= 0:
            raise DomainError("warp factors must be strictly positive")
        object.__setattr__(self, "a_sq", a)
        object.__setattr__(self, "b_sq", b)
        object.__setattr__(self, "phi_map", p)

    @property
    def resolution(self) -> int:
        return self.a_sq.shape[0]

    @property
    def dx(self) -> float:
        return 1.0 / self.resolution


ManifoldState = Union[SphereState, ConformalState, WarpedState]


@dataclass(frozen=True)
class ScalarField:
    """Scalar field on one backend.

    ``values`` holds point samples on grid backends and the zonal
    coefficient vector (index = degree) on the sphere.
    """

    kind: str
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))


@dataclass(frozen=True)
class SymTensorField:
    """Symmetric 2-tensor field.

    Grid backends store the coordinate components stacked as
    ``values[0] = T_xx``, ``values[1] = T_xy``, ``values[2] = T_yy``.
    The sphere stores a single scalar: the multiple of the metric.
    """

    kind: str
    values: np.ndarray


@dataclass(frozen=True)
class Weights:
    """Quadrature weights: point masses on grids, per-degree norms on the sphere."""

    kind: str
    measure: str  # "dmu" or "dV"
    values: np.ndarray


def scalar_field(state: ManifoldState, values) -> ScalarField:
    """Wrap ``values`` as a field on ``state``'s backend, validating the shape."""
    arr = np.asarray(values, dtype=float)
    if state.kind == SPHERE:
        if arr.ndim != 1:
            raise BackendError("sphere fields are 1-d coefficient vectors")
        if arr.shape[0] > state.band_limit + 1:
            raise BackendError("coefficient vector exceeds the band limit")
        if arr.shape[0] < state.band_limit + 1:
            arr = np.concatenate([arr, np.zeros(state.band_limit + 1 - arr.shape[0])])
    elif state.kind == CONFORMAL:
        if arr.shape != state.phi.shape:
            raise BackendError("field shape does not match the grid")
    else:
        if arr.shape != state.a_sq.shape:
            raise BackendError("field shape does not match the grid")
    _finite(arr, "field")
    return ScalarField(state.kind, arr)


def constant_field(state: ManifoldState, value: float) -> ScalarField:
    if state.kind == SPHERE:
        coeffs = np.zeros(state.band_limit + 1)
        coeffs[0] = value
        return ScalarField(SPHERE, coeffs)
    if state.kind == CONFORMAL:
        return ScalarField(CONFORMAL, np.full_like(state.phi, value))
    return ScalarField(WARPED, np.full_like(state.a_sq, value))


def _check_field(state: ManifoldState, u: ScalarField):
    if u.kind != state.kind:
        raise BackendError(f"field on '{u.kind}' used with a '{state.kind}' state")
    if state.kind == SPHERE:
        if u.values.shape[0] != state.band_limit + 1:
            raise BackendError("coefficient vector does not match the band limit")
    elif state.kind == CONFORMAL:
        if u.values.shape != state.phi.shape:
            raise BackendError("field shape does not match the grid")
    else:
        if u.values.shape != state.a_sq.shape:
            raise BackendError("field shape does not match the grid")


# ---------------------------------------------------------------------------
# sphere spectral data

def sphere_mode_norms(n: int, r_sq: float, band_limit: int) -> np.ndarray:
    """L^2(d mu) norms of the zonal modes: integral of C_l^{(n-1)/2}(cos)^2.

    Degree-0 entry equals the sphere volume.  Closed form from Gegenbauer
    orthogonality; reduces to 4 pi r^2 * 1/(2l+1) * ... at n = 2.
    """
    lam = 0.5 * (n - 1)
    l = np.arange(band_limit + 1, dtype=float)
    log_ratio = np.array([lgamma(v + 2 * lam) - lgamma(v + 1) for v in l])
    g = pi * 2.0 ** (1 - 2 * lam) * np.exp(log_ratio) / ((l + lam) * gamma(lam) ** 2)
    omega = 2.0 * pi ** (n / 2.0) / gamma(n / 2.0)
    return omega * r_sq ** (n / 2.0) * g


# ---------------------------------------------------------------------------
# grid stencils

def _lap0(v: np.ndarray, dx: float) -> np.ndarray:
    """Flat periodic Laplacian, 3-point (1-d) or 5-point (2-d)."""
    if v.ndim == 1:
        return (np.roll(v, -1) + np.roll(v, 1) - 2.0 * v) / dx**2
    return (
        np.roll(v, -1, 0) + np.roll(v, 1, 0) + np.roll(v, -1, 1) + np.roll(v, 1, 1) - 4.0 * v
    ) / dx**2


def _dc(v: np.ndarray, dx: float, axis: int = 0) -> np.ndarray:
    """Second-order centered first derivative along ``axis``."""
    return (np.roll(v, -1, axis) - np.roll(v, 1, axis)) / (2.0 * dx)


def _d2(v: np.ndarray, dx: float, axis: int = 0) -> np.ndarray:
    return (np.roll(v, -1, axis) + np.roll(v, 1, axis) - 2.0 * v) / dx**2


def _dxy(v: np.ndarray, dx: float) -> np.ndarray:
    return (
        np.roll(np.roll(v, -1, 0), -1, 1)
        - np.roll(np.roll(v, -1, 0), 1, 1)
        - np.roll(np.roll(v, 1, 0), -1, 1)
        + np.roll(np.roll(v, 1, 0), 1, 1)
    ) / (4.0 * dx**2)


def _half_mean(v: np.ndarray, axis: int = 0) -> np.ndarray:
    """Arithmetic mean at half points: entry i holds the (i, i+1) average."""
    return 0.5 * (v + np.roll(v, -1, axis))


# ---------------------------------------------------------------------------
# curvature

def scalar_curvature(state: ManifoldState) -> ScalarField:
    """Scalar curvature R of the backend metric.

    Sphere: the constant n(n-1)/r^2.  Conformal torus:
    R = -2 e^{-2 phi} lap0(phi).  Warped torus: twice the Gauss curvature
    of the warped product, K = -(b'/a)' / (a b).
    """
    if state.kind == SPHERE:
        return constant_field(state, state.dim * (state.dim - 1) / state.r_sq)
    if state.kind == CONFORMAL:
        R = -2.0 * np.exp(-2.0 * state.phi) * _lap0(state.phi, state.dx)
        return ScalarField(CONFORMAL, R)
    a = np.sqrt(state.a_sq)
    b = np.sqrt(state.b_sq)
    dx = state.dx
    slope_half = (np.roll(b, -1) - b) / dx / _half_mean(a)
    gauss = -(slope_half - np.roll(slope_half, 1)) / (dx * a * b)
    return ScalarField(WARPED, 2.0 * gauss)


def map_gradient_tensor(state: WarpedState) -> SymTensorField:
    """d phi_map (x) d phi_map as a symmetric tensor (warped backend)."""
    if state.kind != WARPED:
        raise BackendError("map field lives on the warped backend")
    px = _dc(state.phi_map, state.dx)
    zeros = np.zeros_like(px)
    return SymTensorField(WARPED, np.stack([px * px, zeros, zeros]))


# ---------------------------------------------------------------------------
# Laplace-Beltrami and gradients

def laplace_beltrami(state: ManifoldState, u: ScalarField) -> ScalarField:
    """Divergence-form Laplace-Beltrami operator."""
    _check_field(state, u)
    if state.kind == SPHERE:
        return ScalarField(SPHERE, -state.eigenvalues() * u.values)
    if state.kind == CONFORMAL:
        # sqrt(g) g^{ij} = identity in 2-d conformal coordinates, so the
        # divergence form collapses to the flat 5-point stencil
        return ScalarField(CONFORMAL, np.exp(-2.0 * state.phi) * _lap0(u.values, state.dx))
    a = np.sqrt(state.a_sq)
    b = np.sqrt(state.b_sq)
    cond_half = _half_mean(b / a)
    flux = cond_half * (np.roll(u.values, -1) - u.values)
    out = (flux - np.roll(flux, 1)) / (a * b * state.dx**2)
    return ScalarField(WARPED, out)


def gradient_norm_sq(state: ManifoldState, u: ScalarField) -> ScalarField:
    """Pointwise |grad u|^2 via centered differences with metric inverse factors.

    Sphere fields are evaluated pointwise through ``heat.evaluate_zonal``
    instead; calling this with a sphere field is an error.
    """
    _check_field(state, u)
    if state.kind == SPHERE:
        raise BackendError("pointwise gradients on the sphere go through evaluate_zonal")
    if state.kind == CONFORMAL:
        gx = _dc(u.values, state.dx, 0)
        gy = _dc(u.values, state.dx, 1)
        return ScalarField(CONFORMAL, np.exp(-2.0 * state.phi) * (gx * gx + gy * gy))
    gx = _dc(u.values, state.dx)
    return ScalarField(WARPED, gx * gx / state.a_sq)


# ---------------------------------------------------------------------------
# quadrature

def volume_weights(state: ManifoldState) -> Weights:
    """d mu quadrature weights (point masses / per-degree mode norms)."""
    if state.kind == SPHERE:
        return Weights(SPHERE, "dmu", sphere_mode_norms(state.dim, state.r_sq, state.band_limit))
    if state.kind == CONFORMAL:
        return Weights(CONFORMAL, "dmu", np.exp(2.0 * state.phi) * state.dx**2)
    return Weights(WARPED, "dmu", np.sqrt(state.a_sq * state.b_sq) * state.dx)


def integrate(field: ScalarField, weights: Weights) -> float:
    """Integral of ``field`` against ``weights``.

    Trapezoidal quadrature on periodic grids (sample sum times masses,
    spectrally accurate for smooth data); exact coefficient sums on the
    sphere, where only the degree-0 mode has nonzero mean.
    """
    if field.kind != weights.kind:
        raise BackendError("field and weights live on different backends")
    if field.kind == SPHERE:
        if field.values.shape != weights.values.shape:
            raise BackendError("coefficient/norm length mismatch")
        return float(field.values[0] * weights.values[0])
    if field.values.shape != weights.values.shape:
        raise BackendError("field/weight shape mismatch")
    return float(np.sum(field.values * weights.values))


def inner(u: ScalarField, v: ScalarField, weights: Weights) -> float:
    """L^2 inner product <u, v> against ``weights``."""
    if u.kind != weights.kind or v.kind != weights.kind:
        raise BackendError("field and weights live on different backends")
    if u.values.shape != v.values.shape or u.values.shape != weights.values.shape:
        raise BackendError("field/weight shape mismatch")
    return float(np.sum(u.values * v.values * weights.values))


def dirichlet_integral(state: ManifoldState, u: ScalarField, v: ScalarField,
                       density: np.ndarray | None = None) -> float:
    """Integral of <grad u, grad v> against ``density * dmu``.

    Assembled from the same half-point fluxes as :func:`laplace_beltrami`,
    so integration by parts against it is exact in floating point (up to
    summation roundoff).  ``density`` is a per-point weight (defaults 1).
    """
    _check_field(state, u)
    _check_field(state, v)
    if state.kind == SPHERE:
        if density is not None:
            raise BackendError("weighted Dirichlet forms on the sphere need uniform density")
        norms = sphere_mode_norms(state.dim, state.r_sq, state.band_limit)
        return float(np.sum(state.eigenvalues() * u.values * v.values * norms))
    dens = np.ones_like(u.values) if density is None else density
    if state.kind == CONFORMAL:
        total = 0.0
        for axis in (0, 1):
            du = np.roll(u.values, -1, axis) - u.values
            dv = np.roll(v.values, -1, axis) - v.values
            total += float(np.sum(_half_mean(dens, axis) * du * dv))
        return total
    cond_half = _half_mean(np.sqrt(state.b_sq / state.a_sq)) * _half_mean(dens)
    du = np.roll(u.values, -1) - u.values
    dv = np.roll(v.values, -1) - v.values
    return float(np.sum(cond_half * du * dv) / state.dx)


# ---------------------------------------------------------------------------
# Hessians

def _require_resolved(values: np.ndarray):
    """Reject fields whose energy sits in the Nyquist band of the grid."""
    v = values - values.mean()
    total = float(np.sum(v * v))
    if total == 0.0:
        return
    if values.ndim == 1:
        n = values.shape[0]
        spec = np.abs(np.fft.rfft(v)) ** 2
        top = float(spec[-1]) if n % 2 == 0 else 0.0
        top_total = float(np.sum(spec[1:]))
    else:
        n = values.shape[0]
        spec = np.abs(np.fft.fft2(v)) ** 2
        k = np.fft.fftfreq(n) * n
        band = np.maximum(np.abs(k)[:, None], np.abs(k)[None, :]) >= n // 2
        top = float(np.sum(spec[band]))
        top_total = float(np.sum(spec)) - float(spec[0, 0])
    if top_total > 0 and top / top_total > 0.25:
        raise ResolutionError("field energy concentrated at the grid Nyquist band")


def hessian_components(state: ManifoldState, u: ScalarField):
    """Covariant Hessian components (xx, xy, yy) with Christoffel corrections."""
    _check_field(state, u)
    if state.kind == SPHERE:
        raise BackendError("sphere Hessians are handled in closed form")
    dx = state.dx
    if state.kind == CONFORMAL:
        px = _dc(state.phi, dx, 0)
        py = _dc(state.phi, dx, 1)
        ux = _dc(u.values, dx, 0)
        uy = _dc(u.values, dx, 1)
        hxx = _d2(u.values, dx, 0) - px * ux + py * uy
        hxy = _dxy(u.values, dx) - py * ux - px * uy
        hyy = _d2(u.values, dx, 1) + px * ux - py * uy
        return hxx, hxy, hyy
    a = np.sqrt(state.a_sq)
    b = np.sqrt(state.b_sq)
    ax = _dc(a, dx)
    bx = _dc(b, dx)
    ux = _dc(u.values, dx)
    hxx = _d2(u.values, dx) - (ax / a) * ux
    hyy = (b * bx / state.a_sq) * ux
    return hxx, np.zeros_like(hxx), hyy


def hessian_energy(state: ManifoldState, u: ScalarField, weights: Weights) -> float:
    """Integral of |Hess u|^2 against ``weights``.

    Sphere: closed form sum c_l^2 (lambda_l^2 - (n-1)/r^2 lambda_l) per mode.
    Grids: Christoffel-corrected centered stencils; under-resolved fields
    raise :class:`ResolutionError`.
    """
    _check_field(state, u)
    if state.kind == SPHERE:
        lam = state.eigenvalues()
        dens = lam * lam - (state.dim - 1) / state.r_sq * lam
        return float(np.sum(u.values**2 * dens * weights.values))
    _require_resolved(u.values)
    hxx, hxy, hyy = hessian_components(state, u)
    if state.kind == CONFORMAL:
        norm_sq = np.exp(-4.0 * state.phi) * (hxx**2 + 2.0 * hxy**2 + hyy**2)
    else:
        norm_sq = hxx**2 / state.a_sq**2 + 2.0 * hxy**2 / (state.a_sq * state.b_sq) \
            + hyy**2 / state.b_sq**2
    return float(np.sum(norm_sq * weights.values))


def hessian_tensor(state: ManifoldState, u: ScalarField) -> SymTensorField:
    """Covariant Hessian assembled as a SymTensorField (grid backends)."""
    hxx, hxy, hyy = hessian_components(state, u)
    return SymTensorField(state.kind, np.stack([hxx, hxy, hyy]))


def sup_relative_eigenvalue(state: ManifoldState, tensor: SymTensorField) -> float:
    """sup over M of the largest eigenvalue of ``tensor`` relative to the metric."""
    if tensor.kind != state.kind:
        raise BackendError("tensor backend mismatch")
    if state.kind == SPHERE:
        return float(tensor.values)
    txx, txy, tyy = tensor.values
    if state.kind == CONFORMAL:
        mean = 0.5 * (txx + tyy)
        disc = np.sqrt(0.25 * (txx - tyy) ** 2 + txy**2)
        return float(np.max(np.exp(-2.0 * state.phi) * (mean + disc)))
    # metric is diagonal and the tensor has no xy part on this backend
    return float(max(np.max(txx / state.a_sq), np.max(tyy / state.b_sq)))


def relative_eigenvalue_range(state: ManifoldState, tensor: SymTensorField):
    """(min, max) over M of the eigenvalues of ``tensor`` relative to the metric."""
    if state.kind == SPHERE:
        c = float(tensor.values)
        return c, c
    txx, txy, tyy = tensor.values
    if state.kind == CONFORMAL:
        mean = 0.5 * (txx + tyy)
        disc = np.sqrt(0.25 * (txx - tyy) ** 2 + txy**2)
        scale = np.exp(-2.0 * state.phi)
        return float(np.min(scale * (mean - disc))), float(np.max(scale * (mean + disc)))
    lo = np.minimum(txx / state.a_sq, tyy / state.b_sq)
    hi = np.maximum(txx / state.a_sq, tyy / state.b_sq)
    return float(np.min(lo)), float(np.max(hi))
