"""Experiment configuration: a JSON document with one key per field.

Example::

    {
      "domain": {"kind": "Box", "lo": [0, 0], "hi": [1, 1]},
      "density": {"kind": "IndicatorBox", "lo": [0.3, 0.6], "hi": [0.5, 0.8]},
      "kernel": {"family": "MaternQuadratic", "gamma": 1.0, "dim": 2, "tau": 4.0},
      "mc_M": 2000,
      "candidate_gen": {"kind": "Grid", "points_per_axis": 50},
      "rule": "FOverP",
      "term": {"max_n": 150, "residual_tol": 1e-12, "wce_tol": null},
      "seed": 0,
      "comparison": {"kind": "UniformGrid", "sizes": [4, 16, 64, 144]}
    }

Relative file paths are resolved against the directory of the config file.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..errors import ConfigError, GkquadError
from ..functionals import (
    DEFAULT_MAX_NORM_NODES,
    Box,
    Constant,
    IndicatorBox,
    RadialSingular,
    SphereGaussian,
    UnitSphere2,
)
from ..greedy import SelectionRule, Termination
from ..kernels import KernelSpec

FIELDS = ("domain", "density", "kernel", "mc_M", "candidate_gen", "rule", "term", "seed", "comparison")
MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class Grid:
    points_per_axis: int


@dataclass(frozen=True)
class UniformRandom:
    count: int


@dataclass(frozen=True)
class FromFile:
    path: Path


@dataclass(frozen=True)
class UniformGrid:
    sizes: tuple


@dataclass(frozen=True)
class ExperimentConfig:
    domain: object
    density: object
    kernel: KernelSpec
    mc_M: int
    candidate_gen: object
    rule: SelectionRule
    term: Termination
    seed: int
    comparison: Optional[object] = None
    raw: Optional[dict] = None

    def to_dict(self) -> dict:
        return copy.deepcopy(self.raw)


# -- presets ----------------------------------------------------------------

def _box_base():
    return {
        "domain": {"kind": "Box", "lo": [0.0, 0.0], "hi": [1.0, 1.0]},
        "kernel": {"family": "MaternQuadratic", "gamma": 1.0, "dim": 2, "tau": 4.0},
        "mc_M": 2000,
        "candidate_gen": {"kind": "Grid", "points_per_axis": 50},
        "rule": "FOverP",
        "term": {"max_n": 150, "residual_tol": 1e-12, "wce_tol": None},
        "seed": 0,
    }


def preset(name: str) -> dict:
    """Desk-scale versions of the reference experiments."""
    if name == "box":
        d = _box_base()
        d["density"] = {"kind": "IndicatorBox", "lo": [0.3, 0.6], "hi": [0.5, 0.8]}
        # nested grids (2^j + 1 points per axis), so the errors are monotone
        d["comparison"] = {"kind": "UniformGrid", "sizes": [4, 9, 25, 81, 289]}
        return d
    if name == "singular":
        d = _box_base()
        d["density"] = {"kind": "RadialSingular", "center": [0.5, 0.5], "alpha": 2.0}
        d["comparison"] = {"kind": "UniformGrid", "sizes": [k * k for k in range(4, 13)]}
        return d
    if name == "sphere":
        return {
            "domain": {"kind": "UnitSphere2"},
            "density": {"kind": "SphereGaussian", "center": [0.0, -1.0, 0.0], "sigma_diag": [-5.0, -5.0, -3.0]},
            "kernel": {"family": "MaternQuadratic", "gamma": 1.0, "dim": 3, "tau": 4.0},
            "mc_M": 2000,
            "candidate_gen": {"kind": "UniformRandom", "count": 2500},
            "rule": "FOverP",
            "term": {"max_n": 150, "residual_tol": 1e-12, "wce_tol": None},
            "seed": 0,
            "comparison": {"kind": "None"},
        }
    raise ConfigError(f"unknown preset {name!r}; choose from box, singular, sphere")


PRESETS = ("box", "singular", "sphere")


# -- overrides --------------------------------------------------------------

def apply_override(d: dict, assignment: str) -> dict:
    """Apply ``a.b.c=value`` to a nested dict; ``value`` is parsed as JSON when possible."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not of the form key=value")
    key, text = assignment.split("=", 1)
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text
    parts = key.strip().split(".")
    if not parts[0] or parts[0] not in FIELDS:
        raise ConfigError(f"unknown config field {parts[0]!r}")
    node = d
    for p in parts[:-1]:
        if not isinstance(node.get(p), dict):
            node[p] = {}
        node = node[p]
    node[parts[-1]] = value
    return d


# -- parsing ----------------------------------------------------------------

def _need(d, key, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    if key not in d:
        raise ConfigError(f"{where}: missing field {key!r}")
    return d[key]


def _pos_int(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v or v < 1:
        raise ConfigError(f"{where} must be a positive integer, got {v!r}")
    return int(v)


def _vec(v, where):
    if not isinstance(v, (list, tuple)) or not v:
        raise ConfigError(f"{where} must be a nonempty list of numbers")
    try:
        return tuple(float(x) for x in v)
    except (TypeError, ValueError):
        raise ConfigError(f"{where} must be a list of numbers") from None


def _resolve(path, base: Optional[Path]) -> Path:
    p = Path(path)
    if not p.is_absolute() and base is not None:
        p = base / p
    return p


def _parse_domain(d):
    kind = _need(d, "kind", "domain")
    if kind == "Box":
        return Box(_vec(_need(d, "lo", "domain"), "domain.lo"), _vec(_need(d, "hi", "domain"), "domain.hi"))
    if kind == "UnitSphere2":
        return UnitSphere2()
    raise ConfigError(f"domain.kind must be Box or UnitSphere2, got {kind!r}")


def _parse_density(d):
    kind = _need(d, "kind", "density")
    if kind == "IndicatorBox":
        return IndicatorBox(_vec(_need(d, "lo", "density"), "density.lo"), _vec(_need(d, "hi", "density"), "density.hi"))
    if kind == "RadialSingular":
        return RadialSingular(_vec(_need(d, "center", "density"), "density.center"),
                              float(_need(d, "alpha", "density")))
    if kind == "SphereGaussian":
        return SphereGaussian(_vec(_need(d, "center", "density"), "density.center"),
                              _vec(_need(d, "sigma_diag", "density"), "density.sigma_diag"))
    if kind == "Constant":
        return Constant(float(d.get("value", 1.0)))
    raise ConfigError(f"unknown density kind {kind!r}")


def _parse_candidates(d, base):
    kind = _need(d, "kind", "candidate_gen")
    if kind == "Grid":
        return Grid(_pos_int(_need(d, "points_per_axis", "candidate_gen"), "candidate_gen.points_per_axis"))
    if kind == "UniformRandom":
        return UniformRandom(_pos_int(_need(d, "count", "candidate_gen"), "candidate_gen.count"))
    if kind == "FromFile":
        p = _resolve(_need(d, "path", "candidate_gen"), base)
        if not p.is_file():
            raise ConfigError(f"candidate file {p} does not exist")
        return FromFile(p)
    raise ConfigError(f"unknown candidate_gen kind {kind!r}")


def _parse_comparison(d, base):
    if d is None:
        return None
    kind = _need(d, "kind", "comparison")
    if kind == "None":
        return None
    if kind == "UniformGrid":
        sizes = _need(d, "sizes", "comparison")
        if not isinstance(sizes, (list, tuple)) or not sizes:
            raise ConfigError("comparison.sizes must be a nonempty list")
        sizes = tuple(_pos_int(s, "comparison.sizes entry") for s in sizes)
        if list(sizes) != sorted(set(sizes)):
            raise ConfigError("comparison.sizes must be strictly increasing")
        return UniformGrid(sizes)
    if kind == "FromFile":
        p = _resolve(_need(d, "path", "comparison"), base)
        if not p.exists():
            raise ConfigError(f"comparison path {p} does not exist")
        return FromFile(p)
    raise ConfigError(f"unknown comparison kind {kind!r}")


def _parse_term(d):
    max_n = _pos_int(_need(d, "max_n", "term"), "term.max_n")
    tols = {}
    for name in ("residual_tol", "wce_tol"):
        v = d.get(name)
        if v is not None:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not v >= 0:
                raise ConfigError(f"term.{name} must be a nonnegative number or null, got {v!r}")
            v = float(v)
        tols[name] = v
    return Termination(max_n=max_n, **tols)


def parse_config(d: dict, base_dir=None) -> ExperimentConfig:
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(d) - set(FIELDS)
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    base = None if base_dir is None else Path(base_dir)
    try:
        domain = _parse_domain(_need(d, "domain", "config"))
        density = _parse_density(_need(d, "density", "config"))
        kd = _need(d, "kernel", "config")
        for key in ("family", "gamma", "dim"):
            _need(kd, key, "kernel")
        kernel = KernelSpec.from_dict(kd)
        mc_M = _pos_int(_need(d, "mc_M", "config"), "mc_M")
        cand = _parse_candidates(_need(d, "candidate_gen", "config"), base)
        rule = SelectionRule(_need(d, "rule", "config"))
        term = _parse_term(_need(d, "term", "config"))
        seed = _need(d, "seed", "config")
        comparison = _parse_comparison(d.get("comparison"), base)
    except ConfigError:
        raise
    except (GkquadError, ValueError, TypeError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= MAX_SEED:
        raise ConfigError(f"seed must be an integer in [0, 2^64), got {seed!r}")
    if kernel.dim != domain.dim:
        raise ConfigError(f"kernel.dim is {kernel.dim} but the domain lives in R^{domain.dim}")
    ddim = getattr(density, "dim", None)
    if ddim is not None and ddim != domain.dim:
        raise ConfigError(f"density has dimension {ddim}, domain has {domain.dim}")
    if mc_M > DEFAULT_MAX_NORM_NODES:
        raise ConfigError(f"mc_M = {mc_M} exceeds the cap of {DEFAULT_MAX_NORM_NODES}")
    if isinstance(domain, UnitSphere2) and isinstance(cand, Grid):
        raise ConfigError("Grid candidates are only defined on a Box domain")
    if isinstance(comparison, UniformGrid):
        if not isinstance(domain, Box):
            raise ConfigError("UniformGrid comparison is only defined on a Box domain")
        for s in comparison.sizes:
            k = round(s ** (1.0 / domain.dim))
            if k ** domain.dim != s:
                raise ConfigError(f"comparison size {s} is not a perfect power {domain.dim} grid")
    return ExperimentConfig(domain=domain, density=density, kernel=kernel, mc_M=mc_M, candidate_gen=cand,
                            rule=rule, term=term, seed=seed, comparison=comparison, raw=copy.deepcopy(d))


def load_config(path, overrides=()) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path) as fh:
            d = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    for o in overrides:
        apply_override(d, o)
    return parse_config(d, base_dir=path.parent)


def reference_exponent(config: ExperimentConfig) -> float:
    """``-tau/d`` with ``d`` the intrinsic dimension of the domain."""
    return -config.kernel.smoothness / config.domain.manifold_dim


def singular_shift(config: ExperimentConfig) -> Optional[float]:
    """``(alpha/d - 1/2)_+`` for a radially singular density, else None.

    The density lies in ``L_p`` exactly for ``p < d/alpha``; the conjugate
    exponent ``q = d/(d - alpha)`` then gives ``(1/2 - 1/q)_+``.
    """
    if isinstance(config.density, RadialSingular):
        return max(config.density.alpha / config.domain.manifold_dim - 0.5, 0.0)
    return None
