"""Experiment descriptions stored as strict JSON.

Unknown keys are rejected. Angles of the mean geometry carry an explicit unit
suffix (``"22.5deg"`` or ``"0.3927rad"``). Direction vectors may be given
unnormalised through the ``*_direction`` keys.

Example::

    {
      "geometry": {"L": 500, "alpha_d": "22.5deg", "beta_d": "112.5deg", "h_d": 120},
      "beam": {"wavelength": 1.55e-6, "w_L": 0.3, "r0": 0.1},
      "weather": "clear_air",
      "model": {"type": "correlated_uniform", "xi": 0.4,
                "v_direction": [3, 1, 2], "tau_direction": [1, 2]},
      "link": {"eta": 1.0, "r_thr": 0.5, "gamma_bar_db": {"start": 0, "stop": 80, "step": 5}},
      "sim": {"n_trials": 1000000, "seed": 1, "mode": "linearized_u"}
    }
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field, replace
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np

from .atmosphere import WEATHER, atmospheric_loss, gamma_gamma_params
from .conditional_gml import T_RULES, GmlApprox, gml_approx_params
from .fluctuation_models import (
    CorrelatedGaussian,
    CorrelatedUniform,
    FluctuationModel,
    IndependentGaussian,
    misalignment_dist,
    unit,
)
from .geometry import BeamParams, MeanState, beam_width
from .gml_statistics import GmlDist, gml_dist
from .link_performance import LinkBudget, gamma_thr_from_rate

MODES = ("linearized_u", "approx_formula", "exact_quadrature")

_ANGLE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(deg|rad)\s*$")


class ScenarioError(ValueError):
    """Malformed scenario file; the message names the offending field."""


@dataclass(frozen=True)
class SimConfig:
    n_trials: int = 1_000_000
    seed: int = 0
    mode: str = "linearized_u"
    include_turbulence: bool = False
    workers: int = 1

    def __post_init__(self):
        if int(self.n_trials) < 1:
            raise ValueError("n_trials must be >= 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if int(self.workers) < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class Scenario:
    """Everything needed to reproduce one analytical curve and its simulation."""

    L: float = 500.0
    alpha_d: float = math.pi / 8
    beta_d: float = 5 * math.pi / 8
    h_d: float = 120.0
    beam: BeamParams = field(default_factory=lambda: BeamParams(beam_width_override=0.3))
    kappa: float = WEATHER["clear_air"]
    model: FluctuationModel = field(default_factory=IndependentGaussian)
    eta: float = 1.0
    gamma_thr: float = gamma_thr_from_rate(0.5)
    gamma_bar_db: tuple = tuple(float(x) for x in range(0, 85, 5))
    sim: SimConfig = field(default_factory=SimConfig)
    t_rule: str = "geom"
    routing: str = "eigen"
    name: str = "default"
    source_hash: str = ""

    def __post_init__(self):
        if abs(self.alpha_d) >= math.pi / 2 - 0.01:
            raise ValueError("|alpha_d| must stay below pi/2 - 0.01")
        if self.t_rule not in T_RULES:
            raise ValueError(f"t_rule must be one of {T_RULES}")
        if self.routing not in ("eigen", "trace"):
            raise ValueError("routing must be 'eigen' or 'trace'")

    def with_sim(self, **changes) -> "Scenario":
        return replace(self, sim=replace(self.sim, **changes))

    @cached_property
    def mean(self) -> MeanState:
        return MeanState.from_spherical(self.L, self.alpha_d, self.beta_d)

    @cached_property
    def turbulence(self):
        return gamma_gamma_params(self.L, self.h_d, self.beam.wavelength)

    @cached_property
    def w_L(self) -> float:
        return beam_width(self.L, self.beam, self.turbulence.cn2)

    @cached_property
    def h_p(self) -> float:
        return atmospheric_loss(self.kappa, self.L)

    @cached_property
    def approx(self) -> GmlApprox:
        return gml_approx_params(self.mean.mu_omega, self.w_L, self.beam.lens_radius, self.t_rule)

    @cached_property
    def dist(self) -> GmlDist:
        return gml_dist(self.approx, misalignment_dist(self.model, self.mean, self.routing))

    def link(self, gamma_bar_db: float) -> LinkBudget:
        return LinkBudget(self.eta, self.h_p, 10.0 ** (gamma_bar_db / 10.0), self.gamma_thr)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _take(block: dict, path: str, allowed: dict, required=()):
    if not isinstance(block, dict):
        raise ScenarioError(f"{path or '<root>'}: expected an object")
    for key in block:
        if key not in allowed:
            raise ScenarioError(
                f"{path + '.' if path else ''}{key}: unknown key (allowed: {sorted(allowed)})"
            )
    for key in required:
        if key not in block:
            raise ScenarioError(f"{path + '.' if path else ''}{key}: required")
    return {k: block.get(k, d) for k, d in allowed.items()}


def parse_angle(value, path: str) -> float:
    """``"22.5deg"`` or ``"0.39rad"`` to radians; bare numbers are rejected."""
    if isinstance(value, str):
        m = _ANGLE.match(value)
        if m:
            x = float(m.group(1))
            return math.radians(x) if m.group(2) == "deg" else x
    raise ScenarioError(f"{path}: angle needs a unit suffix, e.g. '22.5deg' or '0.39rad'")


def _num(value, path, positive=False, nonneg=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{path}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ScenarioError(f"{path}: must be finite")
    if positive and not value > 0:
        raise ScenarioError(f"{path}: must be positive")
    if nonneg and value < 0:
        raise ScenarioError(f"{path}: must be non-negative")
    return value


def _vec(value, n, path):
    if not isinstance(value, list) or len(value) != n:
        raise ScenarioError(f"{path}: expected a list of {n} numbers")
    return tuple(_num(x, f"{path}[{i}]") for i, x in enumerate(value))


def _direction(block, key, n, path, L, required=True):
    """Resolve ``key`` or ``key_direction`` (normalised; tau also divided by L)."""
    explicit, direct = block.get(key), block.get(f"{key}_direction")
    if explicit is not None and direct is not None:
        raise ScenarioError(f"{path}: give either {key} or {key}_direction, not both")
    if explicit is not None:
        return _vec(explicit, n, f"{path}.{key}")
    if direct is not None:
        d = np.asarray(_vec(direct, n, f"{path}.{key}_direction"))
        nrm = np.linalg.norm(d)
        if nrm == 0:
            return tuple(0.0 for _ in range(n))
        d = d / nrm
        if key == "tau":
            d = d / L
        return tuple(float(x) for x in d)
    if required:
        raise ScenarioError(f"{path}: {key} or {key}_direction required")
    return None


def _independent(block, path, L) -> IndependentGaussian:
    b = _take(
        block,
        path,
        {
            "sigma_r": None,
            "sigma_omega": None,
            "scale": None,
            "v_direction": None,
            "tau_direction": None,
            "tau": None,
            "v": None,
        },
    )
    if b["scale"] is not None:
        # sigma_r = scale * v, sigma_omega = scale * tau
        if b["sigma_r"] is not None or b["sigma_omega"] is not None:
            raise ScenarioError(f"{path}: scale excludes sigma_r/sigma_omega")
        s = _num(b["scale"], f"{path}.scale", nonneg=True)
        v = _direction(b, "v", 3, path, L)
        tau = _direction(b, "tau", 2, path, L)
        return IndependentGaussian(*(s * abs(x) for x in v), *(s * abs(x) for x in tau))
    for key in ("v", "v_direction", "tau", "tau_direction"):
        if b[key] is not None:
            raise ScenarioError(f"{path}.{key}: only valid together with scale")
    sr = _vec(b["sigma_r"] if b["sigma_r"] is not None else [0, 0, 0], 3, f"{path}.sigma_r")
    so = _vec(
        b["sigma_omega"] if b["sigma_omega"] is not None else [0, 0], 2, f"{path}.sigma_omega"
    )
    try:
        return IndependentGaussian(*sr, *so)
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def _model(block, path, L) -> FluctuationModel:
    if not isinstance(block, dict) or "type" not in block:
        raise ScenarioError(f"{path}.type: required")
    kind = block["type"]
    rest = {k: v for k, v in block.items() if k != "type"}
    try:
        if kind == "independent_gaussian":
            return _independent(rest, path, L)
        if kind == "correlated_gaussian":
            b = _take(
                rest,
                path,
                {"base": None, "zeta": None, "v": None, "v_direction": None,
                 "tau": None, "tau_direction": None},
                required=("zeta",),
            )
            base = _independent(b["base"], f"{path}.base", L) if b["base"] else IndependentGaussian()
            return CorrelatedGaussian(
                base,
                _num(b["zeta"], f"{path}.zeta", nonneg=True),
                _direction(b, "v", 3, path, L),
                _direction(b, "tau", 2, path, L),
            )
        if kind == "correlated_uniform":
            b = _take(
                rest,
                path,
                {"xi": None, "v": None, "v_direction": None, "tau": None, "tau_direction": None},
                required=("xi",),
            )
            return CorrelatedUniform(
                _num(b["xi"], f"{path}.xi", nonneg=True),
                _direction(b, "v", 3, path, L),
                _direction(b, "tau", 2, path, L),
            )
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from None
    raise ScenarioError(
        f"{path}.type: unknown model {kind!r} "
        "(independent_gaussian, correlated_gaussian, correlated_uniform)"
    )


def _grid(value, path):
    if isinstance(value, list):
        return tuple(_num(x, f"{path}[{i}]") for i, x in enumerate(value))
    b = _take(value, path, {"start": None, "stop": None, "step": None},
              required=("start", "stop", "step"))
    start = _num(b["start"], f"{path}.start")
    stop = _num(b["stop"], f"{path}.stop")
    step = _num(b["step"], f"{path}.step", positive=True)
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(start + i * step for i in range(max(n, 0)))


def scenario_from_dict(raw: dict, name: str = "scenario", source_hash: str = "") -> Scenario:
    """Validate a decoded scenario document and build a :class:`Scenario`."""
    top = _take(
        raw,
        "",
        {"name": None, "description": None, "geometry": {}, "beam": {}, "weather": None,
         "model": None, "link": {}, "sim": {}, "analysis": {}},
        required=("model",),
    )
    d = Scenario()
    g = _take(top["geometry"], "geometry", {"L": None, "alpha_d": None, "beta_d": None, "h_d": None})
    L = _num(g["L"], "geometry.L", positive=True) if g["L"] is not None else d.L
    alpha = parse_angle(g["alpha_d"], "geometry.alpha_d") if g["alpha_d"] is not None else d.alpha_d
    beta = parse_angle(g["beta_d"], "geometry.beta_d") if g["beta_d"] is not None else d.beta_d
    h_d = _num(g["h_d"], "geometry.h_d", nonneg=True) if g["h_d"] is not None else d.h_d

    bm = _take(top["beam"], "beam", {"wavelength": None, "w0": None, "w_L": None, "r0": None})
    w_L = bm["w_L"]
    if w_L is None and bm["w0"] is None:
        w_L = d.beam.beam_width_override
    try:
        beam = BeamParams(
            wavelength=_num(bm["wavelength"], "beam.wavelength", positive=True)
            if bm["wavelength"] is not None else d.beam.wavelength,
            waist_radius=_num(bm["w0"], "beam.w0", positive=True)
            if bm["w0"] is not None else d.beam.waist_radius,
            lens_radius=_num(bm["r0"], "beam.r0", positive=True)
            if bm["r0"] is not None else d.beam.lens_radius,
            beam_width_override=None if w_L is None else _num(w_L, "beam.w_L", positive=True),
        )
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"beam: {exc}") from None

    weather = top["weather"]
    if weather is None:
        kappa = d.kappa
    elif isinstance(weather, str):
        if weather not in WEATHER:
            raise ScenarioError(f"weather: unknown preset {weather!r} ({sorted(WEATHER)})")
        kappa = WEATHER[weather]
    else:
        kappa = _num(_take(weather, "weather", {"kappa": None}, ("kappa",))["kappa"],
                     "weather.kappa", positive=True)

    model = _model(top["model"], "model", L)

    lk = _take(top["link"], "link",
               {"eta": None, "r_thr": None, "gamma_thr": None, "gamma_bar_db": None})
    if lk["r_thr"] is not None and lk["gamma_thr"] is not None:
        raise ScenarioError("link: give either r_thr or gamma_thr, not both")
    if lk["gamma_thr"] is not None:
        gamma_thr = _num(lk["gamma_thr"], "link.gamma_thr", positive=True)
    elif lk["r_thr"] is not None:
        gamma_thr = gamma_thr_from_rate(_num(lk["r_thr"], "link.r_thr", positive=True))
    else:
        gamma_thr = d.gamma_thr
    eta = _num(lk["eta"], "link.eta", positive=True) if lk["eta"] is not None else d.eta
    grid = _grid(lk["gamma_bar_db"], "link.gamma_bar_db") if lk["gamma_bar_db"] is not None \
        else d.gamma_bar_db

    sm = _take(top["sim"], "sim",
               {"n_trials": None, "seed": None, "mode": None, "include_turbulence": None,
                "workers": None})
    sim_kw = {}
    for key in ("n_trials", "seed", "workers"):
        if sm[key] is not None:
            if isinstance(sm[key], bool) or not isinstance(sm[key], int):
                raise ScenarioError(f"sim.{key}: expected an integer")
            sim_kw[key] = sm[key]
    if sm["mode"] is not None:
        sim_kw["mode"] = sm["mode"]
    if sm["include_turbulence"] is not None:
        if not isinstance(sm["include_turbulence"], bool):
            raise ScenarioError("sim.include_turbulence: expected true/false")
        sim_kw["include_turbulence"] = sm["include_turbulence"]
    try:
        sim = SimConfig(**sim_kw)
    except ValueError as exc:
        raise ScenarioError(f"sim: {exc}") from None

    an = _take(top["analysis"], "analysis", {"t_rule": None, "routing": None})
    try:
        return Scenario(
            L=L, alpha_d=alpha, beta_d=beta, h_d=h_d, beam=beam, kappa=kappa, model=model,
            eta=eta, gamma_thr=gamma_thr, gamma_bar_db=grid, sim=sim,
            t_rule=an["t_rule"] or d.t_rule, routing=an["routing"] or d.routing,
            name=top["name"] or name, source_hash=source_hash,
        )
    except ValueError as exc:
        raise ScenarioError(f"{exc}") from None


def loads(text: str, name: str = "scenario") -> Scenario:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return scenario_from_dict(raw, name=name, source_hash=digest)


def load(path) -> Scenario:
    """Load a scenario from a file path or the name of a bundled preset."""
    p = Path(path)
    if not p.exists():
        if preset_path(str(path)) is None:
            raise ScenarioError(f"{path}: no such file or bundled preset ({', '.join(presets())})")
        p = preset_path(str(path))
    text = p.read_text(encoding="utf-8")
    try:
        return loads(text, name=p.stem)
    except ScenarioError as exc:
        raise ScenarioError(f"{p}: {exc}") from None


def presets() -> list[str]:
    folder = resources.files("uavfso") / "scenarios"
    return sorted(f.name[:-5] for f in folder.iterdir() if f.name.endswith(".json"))


def preset_path(name: str):
    f = resources.files("uavfso") / "scenarios" / f"{name}.json"
    return Path(str(f)) if f.is_file() else None
