"""
Run configuration: a JSON document validated into dataclasses.

Unknown keys and out-of-range values raise :class:`ConfigError`, whose
message names the offending key path.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .evolve import SemilinearSpec, SourceSpec
from .potential import ModeSpec


class ConfigError(ValueError):
    pass


def _obj(d: Any, path: str, allowed: set[str], required: set[str] = frozenset()) -> dict:
    if not isinstance(d, dict):
        raise ConfigError(f"{path or 'config'}: expected an object")
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ConfigError(f"unknown key {path + '.' if path else ''}{unknown[0]}")
    missing = sorted(required - set(d))
    if missing:
        raise ConfigError(f"missing key {path + '.' if path else ''}{missing[0]}")
    return d


def _num(d: dict, key: str, path: str, default=None, *, positive=False, nonneg=False, integer=False):
    full = f"{path}.{key}" if path else key
    if key not in d:
        if default is None:
            raise ConfigError(f"missing key {full}")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{full}: expected a finite number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{full}: expected an integer, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(f"{full}: must be positive, got {v!r}")
    if nonneg and not v >= 0:
        raise ConfigError(f"{full}: must be non-negative, got {v!r}")
    return int(v) if integer else float(v)


@dataclass(frozen=True)
class GridConfig:
    x_min: float = -400.0
    x_max: float = 600.0
    n: int = 10001


@dataclass(frozen=True)
class Profile:
    type: str = "gaussian"
    center: float = 10.0
    width: float = 2.0
    amplitude: float = 1.0
    direction: str = "static"


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"
    energy_every: int = 1
    snapshot_every: int | None = None


@dataclass(frozen=True)
class VerificationConfig:
    l_values: tuple[int, ...] | None = None
    lambda_list: tuple[float, ...] | None = None
    C_grid: tuple[float, ...] | None = None
    b_grid: tuple[tuple[float, float], ...] | None = None
    family: str = "regge-wheeler"

    def lambdas(self) -> list[float]:
        if self.lambda_list is not None:
            return list(self.lambda_list)
        ls = self.l_values if self.l_values is not None else tuple(range(21))
        return [ModeSpec(l).lam for l in ls]


@dataclass(frozen=True)
class AnalysisConfig:
    fit_window: tuple[float, float] = (50.0, 500.0)
    window_radius: float = 20.0
    drop_factor: float = 100.0
    probe: float | None = None


@dataclass(frozen=True)
class ConvergenceConfig:
    fixture: str = "manufactured-sine"
    lam: float = math.sqrt(6.0)
    resolutions: tuple[int, ...] = (451, 901, 1801)
    x_min: float = -40.0
    x_max: float = 50.0
    t_final: float = 20.0
    courant: float = 0.5


@dataclass(frozen=True)
class RunConfig:
    mass: float = 1.0
    grid: GridConfig = field(default_factory=GridConfig)
    modes: tuple[ModeSpec, ...] = (ModeSpec(0),)
    courant: float = 0.9
    t_final: float = 500.0
    initial_data: Profile = field(default_factory=Profile)
    mode_profiles: dict[tuple[int, int], Profile] = field(default_factory=dict)
    source: SourceSpec | None = None
    semilinear: SemilinearSpec | None = None
    outputs: OutputConfig = field(default_factory=OutputConfig)
    verification: VerificationConfig = field(default_factory=VerificationConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    convergence: ConvergenceConfig = field(default_factory=ConvergenceConfig)

    def profile_for(self, mode: ModeSpec) -> Profile:
        return self.mode_profiles.get((mode.l, mode.m), self.initial_data)


TOP_KEYS = {"mass", "grid", "modes", "l_max", "courant", "t_final", "initial_data", "source",
            "semilinear", "outputs", "verification", "analysis", "convergence"}


def _profile(d, path) -> Profile:
    _obj(d, path, {"type", "center", "width", "amplitude", "direction"})
    kind = d.get("type", "gaussian")
    if kind != "gaussian":
        raise ConfigError(f"{path}.type: unsupported profile {kind!r}")
    direction = d.get("direction", "static")
    if direction not in ("static", "outgoing", "ingoing"):
        raise ConfigError(f"{path}.direction: expected static, outgoing or ingoing")
    return Profile(
        kind,
        _num(d, "center", path, 10.0),
        _num(d, "width", path, 2.0, positive=True),
        _num(d, "amplitude", path, 1.0),
        direction,
    )


def _mode(d, path) -> ModeSpec:
    _obj(d, path, {"l", "m", "profile"}, {"l"})
    l = _num(d, "l", path, integer=True, nonneg=True)
    m = _num(d, "m", path, 0, integer=True)
    if abs(m) > l:
        raise ConfigError(f"{path}.m: need |m| <= l")
    return ModeSpec(l, m)


def parse_config(raw: dict) -> RunConfig:
    d = _obj(raw, "", TOP_KEYS)
    mass = _num(d, "mass", "", 1.0, positive=True)

    g = _obj(d.get("grid", {}), "grid", {"x_min", "x_max", "n"})
    grid = GridConfig(_num(g, "x_min", "grid", -400.0), _num(g, "x_max", "grid", 600.0),
                      _num(g, "n", "grid", 10001, integer=True))
    if not grid.x_min < grid.x_max:
        raise ConfigError("grid.x_max: must exceed grid.x_min")
    if grid.n < 3:
        raise ConfigError("grid.n: need at least 3 nodes")

    initial = Profile()
    mode_profiles: dict[tuple[int, int], Profile] = {}
    modes_from_data: list[ModeSpec] = []
    if "initial_data" in d:
        idata = d["initial_data"]
        if isinstance(idata, dict) and "modes" in idata:
            _obj(idata, "initial_data", {"modes"})
            if not isinstance(idata["modes"], list):
                raise ConfigError("initial_data.modes: expected a list")
            for i, md in enumerate(idata["modes"]):
                path = f"initial_data.modes[{i}]"
                mode = _mode(md, path)
                mode_profiles[(mode.l, mode.m)] = _profile(md.get("profile", {}), path + ".profile")
                modes_from_data.append(mode)
        else:
            initial = _profile(idata, "initial_data")

    if "modes" in d and "l_max" in d:
        raise ConfigError("l_max: give either modes or l_max, not both")
    if "modes" in d:
        if not isinstance(d["modes"], list):
            raise ConfigError("modes: expected a list")
        modes = tuple(_mode(m, f"modes[{i}]") for i, m in enumerate(d["modes"]))
    elif "l_max" in d:
        l_max = _num(d, "l_max", "", integer=True, nonneg=True)
        modes = tuple(ModeSpec(l) for l in range(l_max + 1))
    elif modes_from_data:
        modes = tuple(modes_from_data)
    else:
        modes = (ModeSpec(0),)
    if len(set(modes)) != len(modes):
        raise ConfigError("modes: duplicate (l, m) entries")
    modes = tuple(sorted(modes, key=lambda m: (m.l, m.m)))

    courant = _num(d, "courant", "", 0.9, positive=True)
    if courant > 1:
        raise ConfigError("courant: must be <= 1")
    t_final = _num(d, "t_final", "", 500.0, nonneg=True)

    source = None
    if d.get("source") is not None:
        s = _obj(d["source"], "source", {"type", "amplitude", "t0", "x0", "sigma_t", "sigma_x"}, {"type"})
        if s["type"] != "gaussian-pulse":
            raise ConfigError(f"source.type: unsupported source {s['type']!r}")
        source = SourceSpec("gaussian-pulse", _num(s, "amplitude", "source", 0.0), _num(s, "t0", "source", 0.0),
                            _num(s, "x0", "source", 0.0), _num(s, "sigma_t", "source", 1.0, positive=True),
                            _num(s, "sigma_x", "source", 1.0, positive=True))

    semilinear = None
    if d.get("semilinear") is not None:
        s = _obj(d["semilinear"], "semilinear", {"p", "kappa"})
        p = _num(s, "p", "semilinear", 3.0)
        if not p > 2:
            raise ConfigError("semilinear.p: must exceed 2")
        semilinear = SemilinearSpec(p, _num(s, "kappa", "semilinear", 1.0))

    o = _obj(d.get("outputs", {}), "outputs", {"dir", "energy_every", "snapshot_every"})
    out_dir = o.get("dir", "out")
    if not isinstance(out_dir, str):
        raise ConfigError("outputs.dir: expected a string")
    snap_every = None
    if o.get("snapshot_every") is not None:
        snap_every = _num(o, "snapshot_every", "outputs", integer=True, positive=True)
    outputs = OutputConfig(out_dir, _num(o, "energy_every", "outputs", 1, integer=True, positive=True), snap_every)

    v = _obj(d.get("verification", {}), "verification", {"l_values", "lambda_list", "C_grid", "b_grid", "family"})
    l_values = lam_list = C_grid = b_grid = None
    if "l_values" in v and "lambda_list" in v:
        raise ConfigError("verification.lambda_list: give either l_values or lambda_list")
    if "l_values" in v:
        if not isinstance(v["l_values"], list) or not v["l_values"]:
            raise ConfigError("verification.l_values: expected a non-empty list")
        l_values = tuple(_num({"l": x}, "l", "verification.l_values", integer=True, nonneg=True) for x in v["l_values"])
    if "lambda_list" in v:
        if not isinstance(v["lambda_list"], list) or not v["lambda_list"]:
            raise ConfigError("verification.lambda_list: expected a non-empty list")
        lam_list = tuple(_num({"v": x}, "v", "verification.lambda_list", nonneg=True) for x in v["lambda_list"])
    if "C_grid" in v:
        if not isinstance(v["C_grid"], list) or not v["C_grid"]:
            raise ConfigError("verification.C_grid: expected a non-empty list")
        C_grid = tuple(_num({"v": x}, "v", "verification.C_grid", positive=True) for x in v["C_grid"])
    if "b_grid" in v:
        bg = v["b_grid"]
        if not isinstance(bg, list) or not bg:
            raise ConfigError("verification.b_grid: expected a non-empty list of [b1, b2] pairs")
        pairs = []
        for pair in bg:
            if not (isinstance(pair, list) and len(pair) == 2):
                raise ConfigError("verification.b_grid: expected [b1, b2] pairs")
            b1 = _num({"v": pair[0]}, "v", "verification.b_grid", positive=True)
            b2 = _num({"v": pair[1]}, "v", "verification.b_grid", positive=True)
            if not b1 < b2:
                raise ConfigError("verification.b_grid: need b1 < b2")
            pairs.append((b1, b2))
        b_grid = tuple(pairs)
    family = v.get("family", "regge-wheeler")
    if family not in ("regge-wheeler", "synthetic-quadratic", "synthetic-negative"):
        raise ConfigError(f"verification.family: unknown family {family!r}")
    verification = VerificationConfig(l_values, lam_list, C_grid, b_grid, family)

    a = _obj(d.get("analysis", {}), "analysis", {"fit_window", "window_radius", "drop_factor", "probe"})
    fit_window = (50.0, 500.0)
    if "fit_window" in a:
        fw = a["fit_window"]
        if not (isinstance(fw, list) and len(fw) == 2):
            raise ConfigError("analysis.fit_window: expected [t_lo, t_hi]")
        fit_window = (_num({"v": fw[0]}, "v", "analysis.fit_window", positive=True),
                      _num({"v": fw[1]}, "v", "analysis.fit_window", positive=True))
        if not fit_window[0] < fit_window[1]:
            raise ConfigError("analysis.fit_window: need t_lo < t_hi")
    drop = _num(a, "drop_factor", "analysis", 100.0)
    if not drop > 1:
        raise ConfigError("analysis.drop_factor: must exceed 1")
    probe = _num(a, "probe", "analysis") if a.get("probe") is not None else None
    analysis = AnalysisConfig(fit_window, _num(a, "window_radius", "analysis", 20.0, positive=True), drop, probe)

    c = _obj(d.get("convergence", {}), "convergence",
             {"fixture", "lambda", "resolutions", "x_min", "x_max", "t_final", "courant"})
    fixture = c.get("fixture", "manufactured-sine")
    if fixture != "manufactured-sine":
        raise ConfigError(f"convergence.fixture: unknown fixture {fixture!r}")
    res = c.get("resolutions", [451, 901, 1801])
    if not isinstance(res, list):
        raise ConfigError("convergence.resolutions: expected a list")
    res = tuple(_num({"v": n}, "v", "convergence.resolutions", integer=True, positive=True) for n in res)
    if len(res) != 3:
        raise ConfigError("convergence.resolutions: need exactly three resolutions")
    for coarse, fine in zip(res, res[1:]):
        if fine - 1 != 2 * (coarse - 1):
            raise ConfigError("convergence.resolutions: each level must halve dx (n -> 2n - 1)")
    cc = _num(c, "courant", "convergence", 0.5, positive=True)
    if cc > 1:
        raise ConfigError("convergence.courant: must be <= 1")
    convergence = ConvergenceConfig(fixture, _num(c, "lambda", "convergence", math.sqrt(6.0), nonneg=True), res,
                                    _num(c, "x_min", "convergence", -40.0), _num(c, "x_max", "convergence", 50.0),
                                    _num(c, "t_final", "convergence", 20.0, positive=True), cc)

    return RunConfig(mass, grid, modes, courant, t_final, initial, mode_profiles, source, semilinear,
                     outputs, verification, analysis, convergence)


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return parse_config({})
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return parse_config(raw)
