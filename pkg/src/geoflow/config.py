"""Scenario configuration: JSON schema, validation and normalization.

One JSON document describes one scenario end to end: backend and initial
data, flow kind and coupling schedule, horizon, weighted-measure offset,
heat initial data, the frequency study window, and the list of checks to
assert.  Unknown keys are rejected; every error message carries the path of
the offending field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import ConfigError
from .schedules import HSchedule, Schedule

# named initial-data expressions; each entry maps to (value, flat laplacian)
# so curvature oracles stay analytic
_TWO_PI = 2.0 * np.pi


def _expr_sin2pix(x, y=None):
    return np.sin(_TWO_PI * x)


def _expr_cos2pix(x, y=None):
    return np.cos(_TWO_PI * x)


def _expr_sin2piy(x, y):
    return np.sin(_TWO_PI * y)


def _expr_cos2piy(x, y):
    return np.cos(_TWO_PI * y)


def _expr_sinxcosy(x, y):
    return np.sin(_TWO_PI * x) * np.cos(_TWO_PI * y)


def _expr_zero(x, y=None):
    return np.zeros_like(x)


EXPRESSIONS = {
    "zero": (_expr_zero, lambda x, y=None: np.zeros_like(x), 0.0),
    "sin2pix": (_expr_sin2pix, lambda x, y=None: -_TWO_PI**2 * np.sin(_TWO_PI * x), 1.0),
    "cos2pix": (_expr_cos2pix, lambda x, y=None: -_TWO_PI**2 * np.cos(_TWO_PI * x), 1.0),
    "sin2piy": (_expr_sin2piy, lambda x, y: -_TWO_PI**2 * np.sin(_TWO_PI * y), 1.0),
    "cos2piy": (_expr_cos2piy, lambda x, y: -_TWO_PI**2 * np.cos(_TWO_PI * y), 1.0),
    "sinxcosy": (_expr_sinxcosy, lambda x, y: -2.0 * _TWO_PI**2 * _expr_sinxcosy(x, y), 1.0),
}

ONE_DIM_EXPRESSIONS = ("zero", "sin2pix", "cos2pix")


@dataclass(frozen=True)
class FieldSpec:
    expression: str = "zero"
    amplitude: float = 1.0
    offset: float = 0.0

    def to_dict(self):
        return {"expression": self.expression, "amplitude": self.amplitude,
                "offset": self.offset}


@dataclass(frozen=True)
class BackendSpec:
    kind: str
    dimension: int = 2
    radius_sq: float = 1.0
    band_limit: int = 32
    resolution: int = 128
    phi: FieldSpec = field(default_factory=FieldSpec)
    a_sq: FieldSpec = field(default_factory=lambda: FieldSpec(offset=1.0, amplitude=0.0))
    b_sq: FieldSpec = field(default_factory=lambda: FieldSpec(offset=1.0, amplitude=0.0))
    phi_map: FieldSpec = field(default_factory=lambda: FieldSpec(amplitude=0.0))


@dataclass(frozen=True)
class FlowSpec:
    kind: str = "ricci"
    alpha: Schedule = field(default_factory=lambda: Schedule("constant", 1.0))


@dataclass(frozen=True)
class HeatSpec:
    modes: tuple = ()
    u0: FieldSpec = field(default_factory=lambda: FieldSpec("cos2pix", 1.0, 2.0))
    a: Schedule = field(default_factory=lambda: Schedule("constant", 0.0))
    positive: bool = False


@dataclass(frozen=True)
class KappaSpec:
    kind: str = "measured"          # or "constant"
    value: float = 0.0


@dataclass(frozen=True)
class KBoundSpec:
    kind: str = "measured"          # or "value"
    value: float = 0.0


@dataclass(frozen=True)
class FrequencySpec:
    h_kind: str = "constant"
    h_c0: float = -1.0
    h_c1: float = 0.0
    t0: float = 0.1
    t1: float = 0.35
    normalization: str = "kappa"    # "kappa" or "bounded"
    kappa: KappaSpec = field(default_factory=KappaSpec)
    k_bound: KBoundSpec = field(default_factory=KBoundSpec)
    eigen_samples: int = 9

    def h_schedule(self, T: float | None = None) -> HSchedule:
        if self.h_kind == "negative-tau":
            return HSchedule("negative-tau", T=T)
        return HSchedule(self.h_kind, self.h_c0, self.h_c1)


@dataclass(frozen=True)
class TerminalSpec:
    kind: str = "uniform"           # or "bump"
    amplitude: float = 0.5
    width: float = 0.15


@dataclass(frozen=True)
class ScenarioConfig:
    scenario_id: str
    backend: BackendSpec
    flow: FlowSpec
    t_end: float
    steps: int
    tau0: float
    terminal: TerminalSpec
    heat: HeatSpec
    frequency: FrequencySpec
    checks: tuple
    output_dir: str
    tolerances: dict

    def to_dict(self) -> dict:
        """Normalized echo; parsing it back reproduces this config."""
        backend: dict[str, Any] = {"kind": self.backend.kind}
        if self.backend.kind == "sphere":
            backend.update(dimension=self.backend.dimension,
                           radius_sq=self.backend.radius_sq,
                           band_limit=self.backend.band_limit)
        elif self.backend.kind == "conformal":
            backend.update(resolution=self.backend.resolution,
                           phi=self.backend.phi.to_dict())
        else:
            backend.update(resolution=self.backend.resolution,
                           a_sq=self.backend.a_sq.to_dict(),
                           b_sq=self.backend.b_sq.to_dict(),
                           phi_map=self.backend.phi_map.to_dict())
        flow: dict[str, Any] = {"kind": self.flow.kind}
        if self.flow.kind == "ricci-harmonic":
            flow["alpha"] = _schedule_dict(self.flow.alpha)
        heat: dict[str, Any] = {
            "a": _schedule_dict(self.heat.a),
            "positive": self.heat.positive,
        }
        if self.backend.kind == "sphere":
            heat["modes"] = [list(m) for m in self.heat.modes]
        else:
            heat["u0"] = self.heat.u0.to_dict()
        freq: dict[str, Any] = {
            "h": _h_dict(self.frequency),
            "t0": self.frequency.t0,
            "t1": self.frequency.t1,
            "normalization": self.frequency.normalization,
            "eigen_samples": self.frequency.eigen_samples,
        }
        if self.frequency.kappa.kind != "measured":
            freq["kappa"] = {"kind": "constant", "value": self.frequency.kappa.value}
        if self.frequency.k_bound.kind != "measured":
            freq["k_bound"] = {"kind": "value", "value": self.frequency.k_bound.value}
        out: dict[str, Any] = {
            "id": self.scenario_id,
            "backend": backend,
            "flow": flow,
            "horizon": {"t_end": self.t_end, "steps": self.steps},
            "tau0": self.tau0,
            "heat": heat,
            "frequency": freq,
            "checks": list(self.checks),
            "output_dir": self.output_dir,
        }
        if self.terminal.kind != "uniform":
            out["terminal"] = {"kind": self.terminal.kind,
                               "amplitude": self.terminal.amplitude,
                               "width": self.terminal.width}
        if self.tolerances:
            out["tolerances"] = dict(self.tolerances)
        return out


def _schedule_dict(s: Schedule) -> dict:
    d = {"kind": s.kind, "value": s.value}
    if s.kind == "exp-decay":
        d["rate"] = s.rate
    return d


def _h_dict(freq: FrequencySpec) -> dict:
    if freq.h_kind == "negative-tau":
        return {"kind": "negative-tau"}
    if freq.h_kind == "linear":
        return {"kind": "linear", "c0": freq.h_c0, "c1": freq.h_c1}
    return {"kind": "constant", "value": freq.h_c0}


# ---------------------------------------------------------------------------
# parsing helpers

class _Node:
    """Dict wrapper that tracks consumed keys and reports paths."""

    def __init__(self, data: dict, path: str):
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected an object")
        self.data = data
        self.path = path
        self.seen = set()

    def child(self, key: str, required: bool = False) -> "_Node | None":
        if key not in self.data:
            if required:
                raise ConfigError(f"{self.path}.{key}: missing required section")
            return None
        self.seen.add(key)
        return _Node(self.data[key], f"{self.path}.{key}")

    def take(self, key, kind, default=None, required=False):
        if key not in self.data:
            if required:
                raise ConfigError(f"{self.path}.{key}: missing required value")
            return default
        self.seen.add(key)
        val = self.data[key]
        if kind is float:
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise ConfigError(f"{self.path}.{key}: expected a number")
            return float(val)
        if kind is int:
            if isinstance(val, bool) or not isinstance(val, int):
                raise ConfigError(f"{self.path}.{key}: expected an integer")
            return val
        if kind is bool:
            if not isinstance(val, bool):
                raise ConfigError(f"{self.path}.{key}: expected a boolean")
            return val
        if kind is str:
            if not isinstance(val, str):
                raise ConfigError(f"{self.path}.{key}: expected a string")
            return val
        if kind is list:
            if not isinstance(val, list):
                raise ConfigError(f"{self.path}.{key}: expected a list")
            return val
        if kind is dict:
            if not isinstance(val, dict):
                raise ConfigError(f"{self.path}.{key}: expected an object")
            return val
        raise AssertionError(kind)

    def finish(self):
        unknown = set(self.data) - self.seen
        if unknown:
            raise ConfigError(f"{self.path}: unknown key '{sorted(unknown)[0]}'")


def _parse_field_spec(node: _Node | None, default: FieldSpec,
                      one_dim: bool = False) -> FieldSpec:
    if node is None:
        return default
    expr = node.take("expression", str, default.expression)
    allowed = ONE_DIM_EXPRESSIONS if one_dim else tuple(EXPRESSIONS)
    if expr not in allowed:
        raise ConfigError(f"{node.path}.expression: unknown expression '{expr}'")
    spec = FieldSpec(expr,
                     node.take("amplitude", float, default.amplitude),
                     node.take("offset", float, default.offset))
    node.finish()
    return spec


def _parse_schedule(node: _Node | None, default: Schedule, path_hint: str) -> Schedule:
    if node is None:
        return default
    kind = node.take("kind", str, "constant")
    if kind not in ("constant", "exp-decay"):
        raise ConfigError(f"{node.path}.kind: unknown schedule kind '{kind}'")
    value = node.take("value", float, required=True)
    rate = node.take("rate", float, 0.0)
    node.finish()
    if kind == "exp-decay" and rate < 0:
        raise ConfigError(f"{node.path}.rate: must be >= 0")
    return Schedule(kind, value, rate)


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a scenario JSON document."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    root = _Node(data, "$")
    scenario_id = root.take("id", str, required=True)

    bnode = root.child("backend", required=True)
    kind = bnode.take("kind", str, required=True)
    if kind == "sphere":
        backend = BackendSpec(
            "sphere",
            dimension=bnode.take("dimension", int, 2),
            radius_sq=bnode.take("radius_sq", float, 1.0),
            band_limit=bnode.take("band_limit", int, 32),
        )
        if backend.dimension < 2:
            raise ConfigError(f"{bnode.path}.dimension: must be >= 2")
        if backend.radius_sq <= 0:
            raise ConfigError(f"{bnode.path}.radius_sq: must be > 0")
    elif kind == "conformal":
        backend = BackendSpec(
            "conformal",
            resolution=bnode.take("resolution", int, 128),
            phi=_parse_field_spec(bnode.child("phi"), FieldSpec(amplitude=0.0)),
        )
    elif kind == "warped":
        backend = BackendSpec(
            "warped",
            resolution=bnode.take("resolution", int, 128),
            a_sq=_parse_field_spec(bnode.child("a_sq"),
                                   FieldSpec(offset=1.0, amplitude=0.0), one_dim=True),
            b_sq=_parse_field_spec(bnode.child("b_sq"),
                                   FieldSpec(offset=1.0, amplitude=0.0), one_dim=True),
            phi_map=_parse_field_spec(bnode.child("phi_map"),
                                      FieldSpec(amplitude=0.0), one_dim=True),
        )
    else:
        raise ConfigError(f"{bnode.path}.kind: unknown backend '{kind}'")
    if kind != "sphere" and backend.resolution < 8:
        raise ConfigError(f"{bnode.path}.resolution: must be >= 8")
    bnode.finish()

    fnode = root.child("flow", required=True)
    flow_kind = fnode.take("kind", str, required=True)
    if flow_kind not in ("ricci", "ricci-harmonic"):
        raise ConfigError(f"{fnode.path}.kind: unknown flow '{flow_kind}'")
    alpha = _parse_schedule(fnode.child("alpha"), Schedule("constant", 1.0),
                            f"{fnode.path}.alpha")
    if flow_kind == "ricci-harmonic" and alpha.value < 0:
        raise ConfigError(f"{fnode.path}.alpha.value: must be >= 0")
    fnode.finish()
    flow = FlowSpec(flow_kind, alpha)

    default_t_end, default_steps = _default_horizon(backend)
    hnode = root.child("horizon")
    if hnode is None:
        t_end, steps = default_t_end, default_steps
    else:
        t_end = hnode.take("t_end", float, default_t_end)
        steps = hnode.take("steps", int,
                           default_steps if t_end == default_t_end
                           else _default_horizon(backend, t_end)[1])
        hnode.finish()
    if t_end <= 0:
        raise ConfigError("$.horizon.t_end: must be > 0")
    if steps < 16:
        raise ConfigError("$.horizon.steps: must be >= 16")

    tau0 = root.take("tau0", float, 1.0)
    if tau0 <= 0:
        raise ConfigError("$.tau0: must be > 0")

    tnode = root.child("terminal")
    if tnode is None:
        terminal = TerminalSpec()
    else:
        tkind = tnode.take("kind", str, "uniform")
        if tkind not in ("uniform", "bump"):
            raise ConfigError(f"{tnode.path}.kind: unknown terminal kind '{tkind}'")
        terminal = TerminalSpec(tkind,
                                tnode.take("amplitude", float, 0.5),
                                tnode.take("width", float, 0.15))
        tnode.finish()

    heatnode = root.child("heat", required=True)
    one_dim = kind == "warped"
    if kind == "sphere":
        raw_modes = heatnode.take("modes", list, required=True)
        modes = []
        for i, entry in enumerate(raw_modes):
            if (not isinstance(entry, list) or len(entry) != 2
                    or isinstance(entry[0], bool) or not isinstance(entry[0], int)
                    or isinstance(entry[1], bool)
                    or not isinstance(entry[1], (int, float))):
                raise ConfigError(f"$.heat.modes[{i}]: expected [degree, coefficient]")
            if entry[0] < 0 or entry[0] > backend.band_limit:
                raise ConfigError(f"$.heat.modes[{i}]: degree outside [0, band_limit]")
            modes.append((entry[0], float(entry[1])))
        if len({l for l, _ in modes}) != len(modes):
            raise ConfigError("$.heat.modes: degrees must be distinct")
        u0 = FieldSpec()
    else:
        modes = []
        u0 = _parse_field_spec(heatnode.child("u0"),
                               FieldSpec("cos2pix", 1.0, 2.0), one_dim=one_dim)
    a_sched = _parse_schedule(heatnode.child("a"), Schedule("constant", 0.0),
                              "$.heat.a")
    positive = heatnode.take("positive", bool, False)
    heatnode.finish()
    heat = HeatSpec(tuple(modes), u0, a_sched, positive)

    qnode = root.child("frequency", required=True)
    hsnode = qnode.child("h")
    if hsnode is None:
        h_kind, h_c0, h_c1 = "constant", -1.0, 0.0
    else:
        h_kind = hsnode.take("kind", str, "constant")
        if h_kind == "constant":
            h_c0 = hsnode.take("value", float, -1.0)
            h_c1 = 0.0
        elif h_kind == "linear":
            h_c0 = hsnode.take("c0", float, required=True)
            h_c1 = hsnode.take("c1", float, required=True)
        elif h_kind == "negative-tau":
            h_c0, h_c1 = 0.0, 0.0
        else:
            raise ConfigError(f"{hsnode.path}.kind: unknown h kind '{h_kind}'")
        hsnode.finish()
    t0 = qnode.take("t0", float, required=True)
    t1 = qnode.take("t1", float, required=True)
    normalization = qnode.take("normalization", str, "kappa")
    if normalization not in ("kappa", "bounded"):
        raise ConfigError("$.frequency.normalization: must be 'kappa' or 'bounded'")
    knode = qnode.child("kappa")
    if knode is None:
        kappa = KappaSpec()
    else:
        kk = knode.take("kind", str, "measured")
        if kk not in ("measured", "constant"):
            raise ConfigError(f"{knode.path}.kind: must be 'measured' or 'constant'")
        kappa = KappaSpec(kk, knode.take("value", float, 0.0))
        knode.finish()
    kbnode = qnode.child("k_bound")
    if kbnode is None:
        k_bound = KBoundSpec()
    else:
        kb = kbnode.take("kind", str, "measured")
        if kb not in ("measured", "value"):
            raise ConfigError(f"{kbnode.path}.kind: must be 'measured' or 'value'")
        k_bound = KBoundSpec(kb, kbnode.take("value", float, 0.0))
        kbnode.finish()
    eigen_samples = qnode.take("eigen_samples", int, 9)
    qnode.finish()

    if t0 <= 0:
        raise ConfigError("$.frequency.t0: must be > 0")
    if not (t0 < t1 <= t_end * (1 + 1e-12)):
        raise ConfigError("$.frequency.t1: need t0 < t1 <= t_end")
    freq = FrequencySpec(h_kind, h_c0, h_c1, t0, t1, normalization, kappa,
                         k_bound, eigen_samples)
    if h_kind != "negative-tau":
        try:
            freq.h_schedule().validate_interval(t0, t1)
        except Exception as exc:
            raise ConfigError(f"$.frequency.h: {exc}") from exc

    raw_checks = root.take("checks", list, [])
    checks = []
    for i, c in enumerate(raw_checks):
        if not isinstance(c, str):
            raise ConfigError(f"$.checks[{i}]: expected a string")
        if c not in KNOWN_CHECKS:
            raise ConfigError(f"$.checks[{i}]: unknown check '{c}'")
        checks.append(c)

    output_dir = root.take("output_dir", str, f"out/{scenario_id}")

    tol_raw = root.take("tolerances", dict, {})
    tolerances = {}
    for key, val in tol_raw.items():
        if key not in KNOWN_CHECKS:
            raise ConfigError(f"$.tolerances: unknown check '{key}'")
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"$.tolerances.{key}: expected a number")
        tolerances[key] = float(val)

    root.finish()
    return ScenarioConfig(scenario_id, backend, flow, t_end, steps, tau0,
                          terminal, heat, freq, tuple(checks), output_dir,
                          tolerances)


KNOWN_CHECKS = (
    "u3-monotone",
    "u3-constant",
    "u4-monotone",
    "eigen-u3-monotone",
    "eigen-u4-monotone",
    "mass",
    "self-adjoint",
    "hamilton",
    "li-yau",
    "ratio-bound",
    "volume-evolution",
    "ric-band",
    "dphi-band",
    "alpha-monotone",
)
