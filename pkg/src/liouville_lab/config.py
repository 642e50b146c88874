"""Family configuration files: parsing, validation and construction.

A configuration is a JSON object naming one family plus its data.  Scalar
functions use the grammar

    {"const": r, "cos": [[k, amp], ...], "sin": [[k, amp], ...], "period": P}

meaning ``r + sum amp cos(2 pi k t / P) + sum amp sin(2 pi k t / P)``.
Unknown keys are rejected.
"""
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import jets as jm
from .errors import LiouvilleLabError
from .fields import Lattice, ScalarField2D, ScalarPeriodic1D
from . import families as fam
from .integrals import QuadraticIntegral

__all__ = ["ConfigError", "FamilyConfig", "load_config", "parse_config", "build_system",
           "preset_names", "preset_path", "build_candidates", "parse_function"]


class ConfigError(LiouvilleLabError):
    """The configuration could not be read or does not describe a family."""


FAMILY_KEYS = {
    "global_liouville": ({"X", "Y"}, {"lattice", "epsilon", "strict"}),
    "klein_liouville": ({"X", "Y", "c", "d"}, {"epsilon"}),
    "linear_integral_torus": ({"K", "L", "M"}, {"lattice"}),
    "foliation": ({"profile"}, {"profile_params"}),
    "flat_torus": (set(), {"lattice"}),
    "jordan_block": ({"Y", "Yhat"}, {"domain", "epsilon"}),
    "complex_liouville": ({"h"}, {"domain"}),
}
COMMON_KEYS = {"family", "description", "name", "grid", "seed", "tolerances", "flow", "super"}
TOLERANCE_KEYS = {"bracket", "classify", "drift", "integral_drift", "equivalence", "rank",
                  "curvature"}
FLOW_KEYS = {"T", "t0", "random", "ic", "energy", "h", "h_min", "order", "store_every"}
SUPER_KEYS = {"candidates"}
CANDIDATE_KEYS = {"name", "builtin", "scale", "perturb"}
PERTURB_KEYS = {"coefficient", "amplitude", "kx", "ky"}
FUNCTION_KEYS = {"const", "cos", "sin", "period"}
BUILTINS = {"hamiltonian", "family", "px2", "py2", "pxpy"}


@dataclass
class FamilyConfig:
    family: str
    name: str
    raw: dict
    grid: int = 64
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    flow: dict = field(default_factory=dict)
    super: dict = field(default_factory=dict)

    def tol(self, key, default):
        return float(self.tolerances.get(key, default))


def _reject_unknown(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object, got {type(obj).__name__}")
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(map(repr, extra))}")


def _number(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    if not np.isfinite(v):
        raise ConfigError(f"{where}: must be finite")
    return float(v)


def parse_function(desc, where="function"):
    """A :class:`ScalarPeriodic1D` from the function grammar (a bare number
    means a constant)."""
    if isinstance(desc, (int, float)) and not isinstance(desc, bool):
        return ScalarPeriodic1D.constant(float(desc))
    _reject_unknown(desc, FUNCTION_KEYS, where)
    harm = {}
    for key in ("cos", "sin"):
        items = desc.get(key, [])
        if not isinstance(items, list):
            raise ConfigError(f"{where}.{key}: expected a list of [k, amplitude] pairs")
        pairs = []
        for i, item in enumerate(items):
            if not (isinstance(item, list) and len(item) == 2):
                raise ConfigError(f"{where}.{key}[{i}]: expected [k, amplitude]")
            k = _number(item[0], f"{where}.{key}[{i}][0]")
            if k != int(k) or k < 1:
                raise ConfigError(f"{where}.{key}[{i}]: harmonic index must be a positive integer")
            pairs.append((int(k), _number(item[1], f"{where}.{key}[{i}][1]")))
        harm[key] = pairs
    period = _number(desc.get("period", 1.0), f"{where}.period")
    if period <= 0:
        raise ConfigError(f"{where}.period: must be positive")
    return ScalarPeriodic1D.from_harmonics(_number(desc.get("const", 0.0), f"{where}.const"),
                                           harm["cos"], harm["sin"], period)


def _lattice(desc, where="lattice"):
    if desc is None:
        return Lattice.unit()
    _reject_unknown(desc, {"xi", "nu"}, where)
    try:
        xi = [_number(v, f"{where}.xi") for v in desc["xi"]]
        nu = [_number(v, f"{where}.nu") for v in desc["nu"]]
        return Lattice(tuple(xi), tuple(nu))
    except KeyError as e:
        raise ConfigError(f"{where}: missing {e.args[0]!r}") from None
    except (ValueError, TypeError) as e:
        raise ConfigError(f"{where}: {e}") from None


def _domain(desc, default):
    if desc is None:
        return default
    try:
        (x0, x1), (y0, y1) = desc
        return ((_number(x0, "domain"), _number(x1, "domain")),
                (_number(y0, "domain"), _number(y1, "domain")))
    except (TypeError, ValueError):
        raise ConfigError("domain: expected [[x0, x1], [y0, y1]]") from None


def parse_config(obj, name="config"):
    """Validate a decoded JSON object and wrap it as :class:`FamilyConfig`."""
    if not isinstance(obj, dict):
        raise ConfigError("top level must be a JSON object")
    family = obj.get("family")
    if family not in FAMILY_KEYS:
        raise ConfigError(f"unknown or missing family {family!r}; expected one of "
                          f"{', '.join(sorted(FAMILY_KEYS))}")
    required, optional = FAMILY_KEYS[family]
    _reject_unknown(obj, COMMON_KEYS | required | optional, "config")
    missing = sorted(required - set(obj))
    if missing:
        raise ConfigError(f"family {family!r} needs key(s) {', '.join(missing)}")
    tol = obj.get("tolerances", {})
    _reject_unknown(tol, TOLERANCE_KEYS, "tolerances")
    tol = {k: _number(v, f"tolerances.{k}") for k, v in tol.items()}
    flow = obj.get("flow", {})
    _reject_unknown(flow, FLOW_KEYS, "flow")
    sup = obj.get("super", {})
    _reject_unknown(sup, SUPER_KEYS, "super")
    for i, cand in enumerate(sup.get("candidates", [])):
        _reject_unknown(cand, CANDIDATE_KEYS, f"super.candidates[{i}]")
        if cand.get("builtin") not in BUILTINS:
            raise ConfigError(f"super.candidates[{i}].builtin must be one of {sorted(BUILTINS)}")
        if "perturb" in cand:
            _reject_unknown(cand["perturb"], PERTURB_KEYS, f"super.candidates[{i}].perturb")
    grid = obj.get("grid", 64)
    if isinstance(grid, bool) or not isinstance(grid, int) or grid < 2:
        raise ConfigError("grid: expected an integer >= 2")
    seed = obj.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("seed: expected an integer")
    # parse every function now so errors surface as input errors
    for key in ("X", "Y", "K", "L", "M", "Yhat"):
        if key in obj:
            parse_function(obj[key], key)
    if family == "foliation" and obj["profile"] not in fam.PROFILES:
        raise ConfigError(f"profile must be one of {sorted(fam.PROFILES)}")
    return FamilyConfig(family, obj.get("name", family), obj, grid, seed, tol, flow, sup)


def _decode(text, source):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{source}: JSON parse error at line {e.lineno}, column {e.colno}: "
                          f"{e.msg}") from None


def preset_names():
    root = resources.files("liouville_lab") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def preset_path(name):
    return resources.files("liouville_lab") / "presets" / f"{name}.json"


def load_config(path):
    """Read a configuration file; a bare preset name is also accepted."""
    p = Path(path)
    if not p.exists():
        if str(path) in preset_names():
            return parse_config(_decode(preset_path(str(path)).read_text(), str(path)), str(path))
        raise ConfigError(f"cannot read {path}: no such file or preset")
    try:
        text = p.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from None
    return parse_config(_decode(text, str(path)), p.stem)


def build_system(cfg: FamilyConfig):
    """Call the family constructor described by ``cfg``."""
    r = cfg.raw
    fn = lambda k: parse_function(r[k], k)  # noqa: E731
    eps = int(r.get("epsilon", -1))
    if eps not in (-1, 1):
        raise ConfigError("epsilon must be -1 or 1")
    if cfg.family == "global_liouville":
        return fam.make_global_liouville(fn("X"), fn("Y"), _lattice(r.get("lattice")), eps,
                                         strict=bool(r.get("strict", False)), seed=cfg.seed)
    if cfg.family == "klein_liouville":
        return fam.make_klein_liouville(fn("X"), fn("Y"), _number(r["c"], "c"),
                                        _number(r["d"], "d"), eps, seed=cfg.seed)
    if cfg.family == "linear_integral_torus":
        return fam.make_linear_integral_torus(fn("K"), fn("L"), fn("M"), _lattice(r.get("lattice")))
    if cfg.family == "foliation":
        params = r.get("profile_params", {})
        if not isinstance(params, dict):
            raise ConfigError("profile_params: expected an object")
        try:
            theta = fam.PROFILES[r["profile"]](**params)
        except TypeError as e:
            raise ConfigError(f"profile_params: {e}") from None
        return fam.make_foliation_metric(theta, seed=cfg.seed, tag=cfg.name)
    if cfg.family == "flat_torus":
        return fam.make_flat_torus(_lattice(r.get("lattice")), seed=cfg.seed)
    if cfg.family == "jordan_block":
        return fam.make_jordan_block(fn("Y"), fn("Yhat"), eps=int(r.get("epsilon", 1)),
                                     domain=_domain(r.get("domain"), ((-0.4, 0.4), (0.0, 1.0))))
    if cfg.family == "complex_liouville":
        coeffs = r["h"]
        try:
            h = fam.HolomorphicData([complex(_number(re, "h"), _number(im, "h"))
                                     for re, im in coeffs])
        except (TypeError, ValueError):
            raise ConfigError("h: expected a list of [re, im] polynomial coefficients") from None
        return fam.make_complex_liouville(h, _domain(r.get("domain"), ((0.0, 1.0), (0.0, 1.0))))
    raise ConfigError(f"unsupported family {cfg.family!r}")  # pragma: no cover


def _perturbation(desc):
    amp = _number(desc.get("amplitude", 1e-3), "perturb.amplitude")
    kx = _number(desc.get("kx", 1), "perturb.kx")
    ky = _number(desc.get("ky", 0), "perturb.ky")
    return ScalarField2D(lambda x, y: amp * jm.sin((x * kx + y * ky) * (2 * np.pi)))


def build_candidates(cfg: FamilyConfig, system):
    """Candidate integrals listed under ``super.candidates``; defaults to H
    plus the family integral and any extra integrals."""
    cands = cfg.super.get("candidates")
    if not cands:
        out = [system.hamiltonian]
        for F in [system.integral] + list(system.extra_integrals):
            if all(F is not G for G in out) and F.name != "H":
                out.append(F)
        return out
    out = []
    for i, c in enumerate(cands):
        b = c["builtin"]
        if b == "hamiltonian":
            F = system.hamiltonian
        elif b == "family":
            F = system.integral
        elif b == "px2":
            F = QuadraticIntegral.constant(1.0, 0.0, 0.0)
        elif b == "py2":
            F = QuadraticIntegral.constant(0.0, 0.0, 1.0)
        else:
            F = QuadraticIntegral.constant(0.0, 1.0, 0.0)
        if "scale" in c:
            F = F.scaled(_number(c["scale"], "scale"))
        if "perturb" in c:
            coef = c["perturb"].get("coefficient", "b")
            if coef not in ("a", "b", "c"):
                raise ConfigError("perturb.coefficient must be a, b or c")
            F = F.perturbed(**{"d" + coef: _perturbation(c["perturb"])})
        out.append(F.named(c.get("name", f"F{i}")))
    return out
