"""Scenario orchestration: run flows end to end and assert the claims.

``run_scenario`` executes the pipeline

    evolve flow -> backward conjugate solve -> forward heat solve
    -> frequency series on [t0, t1] -> checks -> Report

deterministically for a fixed config.  Monotonicity claims are asserted
only when their hypothesis flags pass; a failed hypothesis yields the
verdict "not-asserted", never "pass".
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dc_field
from importlib import resources

import numpy as np

from . import backends as bk
from . import estimates, flows, frequency, heat, measures
from .config import (EXPRESSIONS, FieldSpec, ScenarioConfig)
from .errors import DomainError, GeoflowError
from .schedules import Schedule

SELF_ADJOINT_PAIRS = 20
SELF_ADJOINT_SEED = 20240501


# ---------------------------------------------------------------------------
# config -> objects

def _grid_axes(n):
    x = np.arange(n) / n
    return x


def build_field_values(spec: FieldSpec, n: int, two_dim: bool) -> np.ndarray:
    fn = EXPRESSIONS[spec.expression][0]
    x = _grid_axes(n)
    if two_dim:
        xx, yy = np.meshgrid(x, x, indexing="ij")
        return spec.offset + spec.amplitude * fn(xx, yy)
    return spec.offset + spec.amplitude * fn(x)


def build_initial_state(config: ScenarioConfig) -> bk.ManifoldState:
    b = config.backend
    if b.kind == "sphere":
        return bk.SphereState(b.dimension, b.radius_sq, b.band_limit, 0.0)
    if b.kind == "conformal":
        phi = build_field_values(b.phi, b.resolution, two_dim=True)
        return bk.ConformalState(phi, 0.0)
    a_sq = build_field_values(b.a_sq, b.resolution, two_dim=False)
    b_sq = build_field_values(b.b_sq, b.resolution, two_dim=False)
    phi_map = build_field_values(b.phi_map, b.resolution, two_dim=False)
    return bk.WarpedState(a_sq, b_sq, phi_map, 0.0)


def build_u0(state: bk.ManifoldState, config: ScenarioConfig) -> bk.ScalarField:
    if state.kind == bk.SPHERE:
        coeffs = np.zeros(state.band_limit + 1)
        for l, c in config.heat.modes:
            coeffs[l] = c
        return bk.ScalarField(bk.SPHERE, coeffs)
    values = build_field_values(config.heat.u0, state.resolution,
                                two_dim=state.kind == bk.CONFORMAL)
    return bk.ScalarField(state.kind, values)


def build_terminal(state: bk.ManifoldState, config: ScenarioConfig) -> bk.ScalarField:
    if config.terminal.kind == "uniform":
        return measures.uniform_terminal(state)
    return measures.bump_terminal(state, config.terminal.amplitude,
                                  config.terminal.width)


# ---------------------------------------------------------------------------
# report types

@dataclass
class CheckItem:
    name: str
    claim: str
    verdict: str                 # "pass" | "fail" | "not-asserted"
    passed: bool | None
    worst_slack: float | None
    tolerance: float | None
    hypotheses: dict = dc_field(default_factory=dict)
    details: dict = dc_field(default_factory=dict)

    def to_dict(self):
        return {
            "name": self.name,
            "claim": self.claim,
            "verdict": self.verdict,
            "passed": self.passed,
            "worst_slack": self.worst_slack,
            "tolerance": self.tolerance,
            "hypotheses": self.hypotheses,
            "details": self.details,
        }


@dataclass
class Report:
    scenario: str
    runtime: float
    config: dict
    items: list

    @property
    def failed(self) -> bool:
        return any(item.verdict == "fail" for item in self.items)

    def to_dict(self):
        counts = {"pass": 0, "fail": 0, "not-asserted": 0}
        for item in self.items:
            counts[item.verdict] += 1
        return {
            "scenario": self.scenario,
            "runtime_seconds": self.runtime,
            "config": self.config,
            "summary": counts,
            "items": [item.to_dict() for item in self.items],
        }


@dataclass
class ScenarioResult:
    report: Report
    series: frequency.FrequencySeries
    traj: flows.Trajectory
    ws: measures.WeightSystem
    heat_sol: heat.HeatSolution
    slack_hamilton: np.ndarray | None = None   # aligned with series.indices
    slack_liyau: np.ndarray | None = None


def verify_monotone(values, direction: str, tol: float):
    """Consecutive-difference monotonicity check.

    Returns ``(passed, worst_slack, index)`` where ``index`` points at the
    first element breaking the direction (or the worst one).
    """
    vals = np.asarray(values, dtype=float)
    if vals.size < 2:
        raise DomainError("monotonicity needs at least 2 points")
    diffs = np.diff(vals)
    if direction == "nondecreasing":
        slack = diffs
    elif direction == "nonincreasing":
        slack = -diffs
    else:
        raise DomainError(f"unknown direction '{direction}'")
    j = int(np.argmin(slack))
    worst = float(slack[j])
    return worst >= -tol, worst, j + 1


# ---------------------------------------------------------------------------
# tolerances

def grid_tolerance(traj: flows.Trajectory) -> float:
    state = traj.states[0]
    return 10.0 * (state.dx**2 + traj.dt)


def default_tolerance(check: str, traj: flows.Trajectory) -> float:
    spectral = traj.kind == bk.SPHERE
    if check in ("u3-monotone", "u3-constant", "u4-monotone",
                 "eigen-u3-monotone", "eigen-u4-monotone"):
        return 1e-10 if spectral else grid_tolerance(traj)
    if check == "mass":
        return 1e-10 if spectral else 1e-6
    if check == "self-adjoint":
        return 1e-12
    if check in ("hamilton", "li-yau"):
        return 1e-8 if spectral else max(1e-8, grid_tolerance(traj))
    if check == "ratio-bound":
        return 1e-8
    if check == "volume-evolution":
        return 1e-10 if spectral else grid_tolerance(traj)
    if check in ("ric-band", "dphi-band", "alpha-monotone"):
        return 1e-10
    raise DomainError(f"unknown check '{check}'")


# ---------------------------------------------------------------------------
# frequency series assembly

def build_frequency_series(traj: flows.Trajectory, ws: measures.WeightSystem,
                           sol: heat.HeatSolution,
                           config: ScenarioConfig) -> frequency.FrequencySeries:
    fcfg = config.frequency
    t = ws.times
    mask = (t >= fcfg.t0 - 1e-12) & (t <= fcfg.t1 + 1e-12)
    idx = np.nonzero(mask)[0]
    if idx.size < 2:
        raise DomainError("study interval contains fewer than 2 snapshots")
    times = t[idx]
    h = fcfg.h_schedule(T=ws.T)
    h.validate_interval(float(times[0]), float(times[-1]))
    hv = np.asarray(h.value(times), dtype=float) + np.zeros(idx.size)

    coupled = traj.flow == flows.RICCI_HARMONIC
    I = np.empty(idx.size)
    D = np.empty(idx.size)
    s_bound = np.empty(idx.size)
    kappa = np.empty(idx.size)
    for j, k in enumerate(idx):
        state = ws.states[k]
        u = sol.field(k)
        I[j], D[j] = frequency.compute_I_D(ws, k, u, float(hv[j]))
        f = ws.f_field(k)
        if coupled:
            dphi = bk.map_gradient_tensor(state)
            alpha_t = traj.alpha(float(t[k]))
            _, s_bound[j] = measures.bakry_emery_bound(state, f, alpha_t, dphi)
        else:
            _, s_bound[j] = measures.bakry_emery_bound(state, f)
        if fcfg.kappa.kind == "measured":
            kappa[j] = frequency.choose_kappa(s_bound[j], float(hv[j]))
        else:
            kappa[j] = fcfg.kappa.value

    lambda1 = np.full(idx.size, np.nan)
    if traj.kind == bk.SPHERE:
        r_sq = np.array([ws.states[k].r_sq for k in idx])
        lambda1 = ws.states[0].dim / r_sq
    elif fcfg.eigen_samples > 0:
        n_samp = min(fcfg.eigen_samples, idx.size)
        sample_js = np.unique(np.linspace(0, idx.size - 1, n_samp).astype(int))
        for j in sample_js:
            k = idx[j]
            lambda1[j] = frequency.first_eigenvalue(ws.states[k], ws.K[k])

    series = frequency.FrequencySeries(times, idx, I, D, kappa, s_bound, hv,
                                       lambda1=lambda1)
    frequency.compute_u3(series, h)
    if sol.positive and sol.A is not None and sol.eta is not None:
        if fcfg.k_bound.kind == "measured":
            K_bound = estimates.measured_ricci_upper(traj, idx)
        else:
            K_bound = fcfg.k_bound.value
        frequency.compute_u4(series, h, K_bound, ws.dim, sol.A, sol.eta)
    series.meta.update({
        "h_sign": 1 if hv[0] > 0 else -1,
        "t0": float(times[0]),
        "t1": float(times[-1]),
        "kappa_mode": fcfg.kappa.kind,
    })
    return series


# ---------------------------------------------------------------------------
# individual checks

def _direction(series) -> str:
    return "nondecreasing" if series.meta["h_sign"] < 0 else "nonincreasing"


def _monotone_item(name, claim, values, series, tol, hypotheses, details=None):
    gating = {k: v for k, v in hypotheses.items() if isinstance(v, bool)}
    if not all(gating.values()):
        return CheckItem(name, claim, "not-asserted", None, None, tol,
                         hypotheses, details or {})
    passed, worst, j = verify_monotone(values, _direction(series), tol)
    return CheckItem(name, claim, "pass" if passed else "fail", passed, worst,
                     tol, hypotheses, {**(details or {}), "worst_index": j})


def _ricf_hypothesis(series, config):
    """Drift curvature bound flag: equality by construction for measured
    kappa; a user override is treated as an assumption (stress mode) and the
    measured slack is recorded."""
    slack = float(np.min(series.kappa / (2.0 * series.h) - series.s_bound))
    if config.frequency.kappa.kind == "measured":
        return {"ricf-bound": True}, {"ricf_slack": slack}
    return {"ricf-bound": True}, {"ricf_slack": slack, "kappa": "user-assumed"}


def run_checks(config: ScenarioConfig, traj, ws, sol, series) -> ScenarioResult:
    items: list[CheckItem] = []
    tol_of = lambda name: config.tolerances.get(name, default_tolerance(name, traj))
    coupled = traj.flow == flows.RICCI_HARMONIC
    slack_h = None
    slack_ly = None

    # hypothesis bands are evaluated eagerly when a gated check needs them
    need_ric_band = any(c in config.checks for c in ("u4-monotone", "li-yau",
                                                     "eigen-u4-monotone", "ric-band"))
    ric_band_item = None
    K_bound = None
    if need_ric_band:
        if config.frequency.k_bound.kind == "measured":
            K_bound = estimates.measured_ricci_upper(traj, series.indices)
        else:
            K_bound = config.frequency.k_bound.value
        rep = estimates.hypothesis_band_check(traj, ws, "ric-nonneg-upper",
                                              K_bound=K_bound,
                                              tol=tol_of("ric-band"))
        ric_band_item = CheckItem(
            "ric-band", f"curvature stays within [0, {K_bound:.6g}] times the metric",
            "pass" if rep.passed else "fail", rep.passed, rep.worst_slack,
            rep.tolerance, rep.hypotheses, {"K_bound": K_bound})

    dphi_item = None
    alpha_item = None
    if coupled:
        rep = estimates.hypothesis_band_check(traj, ws, "dphi-band")
        dphi_item = CheckItem(
            "dphi-band", "map gradient square stays below (C/t) times the metric",
            "pass", True, rep.worst_slack, rep.tolerance, rep.hypotheses,
            {"C_dphi": rep.hypotheses.get("C_dphi", 0.0)})
        rep = estimates.hypothesis_band_check(traj, ws, "alpha-monotone",
                                              tol=tol_of("alpha-monotone"))
        alpha_item = CheckItem(
            "alpha-monotone", "coupling schedule is positive and non-increasing",
            "pass" if rep.passed else "fail", rep.passed, rep.worst_slack,
            rep.tolerance, rep.hypotheses, {})

    for name in config.checks:
        tol = tol_of(name)
        if name == "u3-monotone":
            hyp, det = _ricf_hypothesis(series, config)
            claim = ("drift-normalized frequency is monotone "
                     + ("nondecreasing (h < 0)" if series.meta["h_sign"] < 0
                        else "nonincreasing (h > 0)"))
            items.append(_monotone_item(name, claim, series.U3, series, tol, hyp, det))
        elif name == "u3-constant":
            hyp, det = _ricf_hypothesis(series, config)
            dev = float(np.max(np.abs(series.U3 - series.U3[0])))
            items.append(CheckItem(
                name, "drift-normalized frequency is constant (equality case)",
                "pass" if dev <= tol else "fail", dev <= tol, -dev, tol, hyp,
                {**det, "max_deviation": dev}))
        elif name == "u4-monotone":
            if series.U4 is None:
                items.append(CheckItem(
                    name, "bounded-curvature frequency is monotone",
                    "not-asserted", None, None, tol,
                    {"positivity": False}, {"reason": "no positive-solution data"}))
                continue
            hyp = {"positivity": True, "ric-band": bool(ric_band_item.passed)}
            det = {"K_bound": K_bound}
            if coupled:
                hyp["alpha-monotone"] = bool(alpha_item.passed)
                det["C_dphi"] = dphi_item.details["C_dphi"]
            if not ric_band_item.passed and "note" in ric_band_item.hypotheses:
                det["gating_note"] = ric_band_item.hypotheses["note"]
            claim = ("bounded-curvature frequency is monotone "
                     + ("nondecreasing (h < 0)" if series.meta["h_sign"] < 0
                        else "nonincreasing (h > 0)"))
            items.append(_monotone_item(name, claim, series.U4, series, tol, hyp, det))
        elif name == "eigen-u3-monotone":
            hyp, det = _ricf_hypothesis(series, config)
            vals = series.V3[~np.isnan(series.V3)]
            items.append(_monotone_item(
                name, "normalized h * lambda1 series is monotone (drift form)",
                vals, series, tol, hyp, det))
        elif name == "eigen-u4-monotone":
            if series.V4 is None:
                items.append(CheckItem(
                    name, "normalized h * lambda1 series is monotone (bounded form)",
                    "not-asserted", None, None, tol, {"positivity": False}, {}))
                continue
            hyp = {"positivity": True, "ric-band": bool(ric_band_item.passed)}
            if coupled:
                hyp["alpha-monotone"] = bool(alpha_item.passed)
            vals = series.V4[~np.isnan(series.V4)]
            items.append(_monotone_item(
                name, "normalized h * lambda1 series is monotone (bounded form)",
                vals, series, tol, hyp))
        elif name == "mass":
            dev = float(np.max(np.abs(ws.mass - 1.0)))
            items.append(CheckItem(
                name, "weighted measure keeps unit mass at every snapshot",
                "pass" if dev <= tol else "fail", dev <= tol, -dev, tol, {},
                {"max_mass_defect": dev}))
        elif name == "self-adjoint":
            defect = self_adjoint_defect(ws, series.indices[0])
            items.append(CheckItem(
                name, "drift Laplacian is self-adjoint in the dV inner product",
                "pass" if defect <= tol else "fail", defect <= tol, -defect,
                tol, {}, {"max_defect": defect, "pairs": SELF_ADJOINT_PAIRS}))
        elif name == "hamilton":
            if not sol.positive or sol.A is None:
                items.append(CheckItem(
                    name, "gradient bound for positive solutions",
                    "not-asserted", None, None, tol, {"positivity": False}, {}))
                continue
            rep = estimates.hamilton_gradient_check(traj, sol, tol=tol)
            slack_h = rep.per_time
            items.append(CheckItem(
                name, "t |grad u|^2 <= u^2 log(A/u) at every stored point",
                "pass" if rep.passed else "fail", rep.passed, rep.worst_slack,
                tol, {"positivity": True}, {"location": list(rep.location)}))
        elif name == "li-yau":
            if not sol.positive or sol.A is None:
                items.append(CheckItem(
                    name, "Harnack-type bound for positive solutions",
                    "not-asserted", None, None, tol, {"positivity": False}, {}))
                continue
            hyp = {"positivity": True, "ric-band": bool(ric_band_item.passed)}
            if not all(hyp.values()):
                det = {}
                if "note" in ric_band_item.hypotheses:
                    det["gating_note"] = ric_band_item.hypotheses["note"]
                items.append(CheckItem(
                    name, "Harnack-type bound for positive solutions",
                    "not-asserted", None, None, tol, hyp, det))
                continue
            variant = "rhf" if coupled else "rf"
            C_dphi = estimates.measured_dphi_bound(traj) if coupled else 0.0
            alpha0 = traj.alpha(0.0) if coupled else 0.0
            rep = estimates.li_yau_check(traj, sol, K_bound, ws.dim, variant,
                                         C_dphi, alpha0, tol=tol)
            slack_ly = rep.per_time
            items.append(CheckItem(
                name, "|grad u|^2/u - du/dt <= (c/(2t)) u + K n u at every stored point",
                "pass" if rep.passed else "fail", rep.passed, rep.worst_slack,
                tol, hyp, {"K_bound": K_bound, "C_dphi": C_dphi,
                           "location": list(rep.location)}))
        elif name == "ratio-bound":
            hyp, det = _ricf_hypothesis(series, config)
            h = config.frequency.h_schedule(T=ws.T)
            bound, actual = frequency.ratio_lower_bound(series, h, sol.a,
                                                        float(series.times[0]))
            slack = actual - bound
            gate = all(v for v in hyp.values() if isinstance(v, bool))
            verdict = "pass" if slack >= -tol else "fail"
            items.append(CheckItem(
                name, "norm ratio I(t1)/I(t') dominates the monotonicity bound",
                verdict if gate else "not-asserted",
                (slack >= -tol) if gate else None, slack, tol, hyp,
                {**det, "bound": bound, "actual": actual}))
        elif name == "volume-evolution":
            resid = flows.check_volume_evolution(traj)
            items.append(CheckItem(
                name, "volume form follows its evolution law",
                "pass" if resid <= tol else "fail", resid <= tol, -resid, tol,
                {}, {"max_relative_residual": resid}))
        elif name == "ric-band":
            items.append(ric_band_item)
        elif name == "dphi-band":
            items.append(dphi_item if dphi_item is not None else CheckItem(
                name, "map gradient band", "not-asserted", None, None, tol,
                {"coupled-flow": False}, {}))
        elif name == "alpha-monotone":
            items.append(alpha_item if alpha_item is not None else CheckItem(
                name, "coupling schedule monotone", "not-asserted", None, None,
                tol, {"coupled-flow": False}, {}))
        else:
            raise DomainError(f"unknown check '{name}'")

    report = Report(config.scenario_id, 0.0, config.to_dict(), items)
    return ScenarioResult(report, series, traj, ws, sol, slack_h, slack_ly)


def self_adjoint_defect(ws: measures.WeightSystem, k: int,
                        pairs: int = SELF_ADJOINT_PAIRS) -> float:
    """Max symmetry defect of the drift Laplacian over a seeded field basis."""
    state = ws.states[k]
    f = ws.f_field(k)
    dV = ws.dV_weights(k)
    rng = np.random.default_rng(SELF_ADJOINT_SEED)
    shape = ws.K[k].values.shape
    worst = 0.0
    for _ in range(pairs):
        u_vals = rng.standard_normal(shape)
        v_vals = rng.standard_normal(shape)
        u = bk.ScalarField(state.kind, u_vals / np.max(np.abs(u_vals)))
        v = bk.ScalarField(state.kind, v_vals / np.max(np.abs(v_vals)))
        if state.kind == bk.SPHERE:
            lap = state.eigenvalues()
            a = float(np.sum(-lap * u.values * v.values * dV.values))
            b = float(np.sum(u.values * -lap * v.values * dV.values))
        else:
            a = bk.inner(measures.drift_laplacian(state, f, u), v, dV)
            b = bk.inner(u, measures.drift_laplacian(state, f, v), dV)
        worst = max(worst, abs(a - b))
    return worst


def run_scenario(config: ScenarioConfig) -> ScenarioResult:
    """Execute the full pipeline for one scenario config."""
    start = time.perf_counter()
    stage = "setup"
    try:
        state0 = build_initial_state(config)
        stage = "flow"
        if config.flow.kind == "ricci-harmonic":
            traj = flows.evolve_ricci_harmonic(state0, config.flow.alpha,
                                               config.t_end, config.steps)
        else:
            traj = flows.evolve_ricci(state0, config.t_end, config.steps)
        stage = "conjugate-solve"
        terminal = build_terminal(traj.states[-1], config)
        ws = measures.solve_conjugate_backward(traj, terminal, config.tau0)
        stage = "heat-solve"
        u0 = build_u0(state0, config)
        sol = heat.solve_heat(traj, u0, config.heat.a, config.heat.positive)
        stage = "frequency"
        series = build_frequency_series(traj, ws, sol, config)
        stage = "checks"
        result = run_checks(config, traj, ws, sol, series)
    except GeoflowError as exc:
        raise type(exc)(f"[{stage}] {exc}") from exc
    result.report.runtime = time.perf_counter() - start
    return result


# ---------------------------------------------------------------------------
# composition identity used by the acceptance and refinement studies

def bochner_identity_defect(state: bk.ManifoldState, f: bk.ScalarField,
                            u: bk.ScalarField, K: bk.ScalarField) -> float:
    """Relative defect of the integral curvature identity

    ``int |Hess u|^2 dV = int (|lap_f u|^2 - Ric_f(grad u, grad u)) dV``.
    """
    mu = bk.volume_weights(state)
    mass = bk.integrate(K, mu)
    dV = bk.Weights(state.kind, "dV", K.values * mu.values / mass) \
        if state.kind != bk.SPHERE else bk.Weights(
            bk.SPHERE, "dV", K.values[0] / mass * mu.values)
    lhs = bk.hessian_energy(state, u, dV)
    lap_f_u = measures.drift_laplacian(state, f, u)
    term1 = bk.inner(lap_f_u, lap_f_u, dV)
    tensor, _ = measures.bakry_emery_bound(state, f)
    if state.kind == bk.CONFORMAL:
        ux = bk._dc(u.values, state.dx, 0)
        uy = bk._dc(u.values, state.dx, 1)
        txx, txy, tyy = tensor.values
        contraction = np.exp(-4.0 * state.phi) * (
            txx * ux**2 + 2.0 * txy * ux * uy + tyy * uy**2)
    elif state.kind == bk.WARPED:
        ux = bk._dc(u.values, state.dx)
        txx = tensor.values[0]
        contraction = txx * ux**2 / state.a_sq**2
    else:
        raise DomainError("identity check is for grid backends")
    ric_term = float(np.sum(contraction * dV.values))
    rhs = term1 - ric_term
    return abs(lhs - rhs) / max(abs(lhs), 1e-300)


def _bochner_probe(state: bk.ManifoldState):
    # the identity ties the quadrature weight to the drift potential: K = e^{-f}
    n = state.resolution
    x = _grid_axes(n)
    if state.kind == bk.CONFORMAL:
        xx, yy = np.meshgrid(x, x, indexing="ij")
        u = np.cos(2 * np.pi * xx) + 0.3 * np.sin(2 * np.pi * yy)
        f = 0.3 * np.cos(2 * np.pi * xx) * np.cos(2 * np.pi * yy)
    else:
        u = np.cos(2 * np.pi * x) + 0.3 * np.sin(2 * np.pi * x)
        f = 0.3 * np.cos(2 * np.pi * x)
    return (bk.ScalarField(state.kind, f), bk.ScalarField(state.kind, u),
            bk.ScalarField(state.kind, np.exp(-f)))


def _observed_orders(errors):
    orders = []
    for a, b in zip(errors, errors[1:]):
        if a == 0.0 or b == 0.0:
            orders.append(None)  # exact at this scale
        else:
            orders.append(float(np.log2(a / b)))
    return orders


def refinement_study(config: ScenarioConfig, levels: int = 3) -> dict:
    """Grid refinement: N, 2N, 4N, ... with the step count scaled by 4 each level.

    Reports errors and observed orders for the static curvature (analytic
    oracle), the heat solution on the flat member of the torus family
    (closed-form oracle), the integral curvature identity defect, the
    potential-equation residual, and Richardson differences of the
    drift-normalized frequency at t1.
    """
    if config.backend.kind == "sphere":
        raise DomainError("refinement studies target the grid backends")
    if levels < 2:
        raise DomainError("need at least 2 levels")
    out = {
        "levels": [],
        "curvature": {"errors": []},
        "heat": {"errors": []},
        "bochner": {"defects": []},
        "f_residual": {"values": []},
        "u3": {"values": []},
    }
    for lvl in range(levels):
        N = config.backend.resolution * 2**lvl
        steps = config.steps * 4**lvl
        out["levels"].append(N)
        scaled = ScenarioConfig(
            config.scenario_id, config.backend.__class__(
                **{**config.backend.__dict__, "resolution": N}),
            config.flow, config.t_end, steps, config.tau0, config.terminal,
            config.heat, config.frequency.__class__(
                **{**config.frequency.__dict__, "eigen_samples": 0}),
            (), config.output_dir, {})
        state0 = build_initial_state(scaled)

        # static curvature against the analytic closed form
        if state0.kind == bk.CONFORMAL:
            spec = config.backend.phi
            fn, lap_fn, _ = EXPRESSIONS[spec.expression]
            x = _grid_axes(N)
            xx, yy = np.meshgrid(x, x, indexing="ij")
            phi = spec.offset + spec.amplitude * fn(xx, yy)
            exact = -2.0 * np.exp(-2.0 * phi) * spec.amplitude * lap_fn(xx, yy)
            got = bk.scalar_curvature(state0).values
            out["curvature"]["errors"].append(float(np.max(np.abs(got - exact))))
        else:
            out["curvature"]["errors"].append(float("nan"))

        f_pr, u_pr, K_pr = _bochner_probe(state0)
        out["bochner"]["defects"].append(
            bochner_identity_defect(state0, f_pr, u_pr, K_pr))

        # heat probe on the flat member: closed-form oracle
        if state0.kind == bk.CONFORMAL:
            flat0 = bk.ConformalState(np.zeros((N, N)), 0.0)
        else:
            flat0 = bk.WarpedState(np.ones(N), np.ones(N), np.zeros(N), 0.0)
        flat_traj = flows.evolve_ricci(flat0, config.t_end, steps)
        x = _grid_axes(N)
        if state0.kind == bk.CONFORMAL:
            xx, _ = np.meshgrid(x, x, indexing="ij")
            u0 = bk.ScalarField(bk.CONFORMAL, 2.0 + np.cos(2 * np.pi * xx))
            oracle = 2.0 + np.exp(-4 * np.pi**2 * config.t_end) * np.cos(2 * np.pi * xx)
        else:
            u0 = bk.ScalarField(bk.WARPED, 2.0 + np.cos(2 * np.pi * x))
            oracle = 2.0 + np.exp(-4 * np.pi**2 * config.t_end) * np.cos(2 * np.pi * x)
        flat_sol = heat.solve_heat(flat_traj, u0)
        out["heat"]["errors"].append(
            float(np.max(np.abs(flat_sol.values[-1] - oracle))))

        # full pipeline at this level: potential residual and U3(t1)
        result = run_scenario(scaled)
        mid = max(1, min(len(result.ws.times) - 2,
                         int(round(0.5 * config.t_end / result.traj.dt))))
        out["f_residual"]["values"].append(
            measures.f_equation_residual(result.ws, mid))
        out["u3"]["values"].append(float(result.series.U3[-1]))

    out["curvature"]["orders"] = _observed_orders(out["curvature"]["errors"])
    out["heat"]["orders"] = _observed_orders(out["heat"]["errors"])
    out["bochner"]["orders"] = _observed_orders(out["bochner"]["defects"])
    out["f_residual"]["orders"] = _observed_orders(out["f_residual"]["values"])
    u3_vals = out["u3"]["values"]
    diffs = [abs(a - b) for a, b in zip(u3_vals, u3_vals[1:])]
    out["u3"]["diffs"] = diffs
    out["u3"]["orders"] = _observed_orders(diffs)
    return out


# ---------------------------------------------------------------------------
# bundled scenario catalog

def scenario_names() -> list:
    root = resources.files("geoflow").joinpath("scenarios")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_scenario_text(name: str) -> str:
    path = resources.files("geoflow").joinpath("scenarios", f"{name}.json")
    if not path.is_file():
        raise DomainError(f"no bundled scenario named '{name}'")
    return path.read_text(encoding="utf-8")
