"""JSON channel/experiment configs and state files.

Channel config::

    {
      "spectrum": [0, 0.8, 1],
      "beta": 1.0,                      # number or "inf"
      "parametrization": {"type": "qutrit", "s1": 0.5, "sbar": 0.745, "alpha0": 0.745}
                       | {"type": "couplings", "g10": .., "g21": .., "g20": .., "t": 1.0}
                       | {"type": "general", "unitaries": [u1, u2, ...]},
      "allow_degenerate_gaps": false,   # optional
      "seed": 0,                        # optional, GMADLAB_SEED overrides
      "grid_size": 201,                 # optional
      "betas": [0.1, 1, 10, "inf"],     # optional, sweep default
      "optimizer": {"n_starts": 64, ...}  # optional OptimizerConfig fields
    }

Complex matrices are nested lists of [re, im] pairs; u^(m) is (m+1) x (m+1).
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, ConstructionError, ValidationError
from .functionals import OptimizerConfig
from .gmad import GmadSpec, KrausChannel, QutritGmadParams, build_gmad, build_qutrit_gmad
from .states import Hamiltonian, validate_state

SEED_ENV = "GMADLAB_SEED"
PARAM_KEYS = {
    "qutrit": ("s1", "sbar", "alpha0"),
    "couplings": ("g10", "g21", "g20", "t"),
    "general": ("unitaries",),
}
TOP_KEYS = {"spectrum", "beta", "parametrization", "allow_degenerate_gaps", "seed",
            "grid_size", "betas", "optimizer"}


def parse_beta(v) -> float:
    if isinstance(v, str):
        if v.strip().lower() in ("inf", "infinity", "+inf"):
            return math.inf
        raise ConfigError(f"beta must be a number or 'inf', got {v!r}")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"beta must be a number or 'inf', got {v!r}")
    b = float(v)
    if math.isnan(b) or b < 0:
        raise ConfigError(f"beta must be >= 0, got {v!r}")
    return b


def format_beta(b: float):
    return "inf" if math.isinf(b) else b


def decode_complex_matrix(data, name: str = "matrix") -> np.ndarray:
    """Nested list of [re, im] pairs (plain numbers accepted as real)."""
    if not isinstance(data, list) or not data or not all(isinstance(r, list) for r in data):
        raise ConfigError(f"{name} must be a non-empty list of rows")
    n = len(data[0])
    out = np.zeros((len(data), n), dtype=complex)
    for i, row in enumerate(data):
        if len(row) != n:
            raise ConfigError(f"{name} row {i} has length {len(row)}, expected {n}")
        for j, x in enumerate(row):
            if isinstance(x, (int, float)) and not isinstance(x, bool):
                out[i, j] = float(x)
            elif (isinstance(x, list) and len(x) == 2
                  and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in x)):
                out[i, j] = complex(float(x[0]), float(x[1]))
            else:
                raise ConfigError(f"{name}[{i}][{j}] must be a number or an [re, im] pair, got {x!r}")
    return out


def encode_complex_matrix(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _number(d: dict, key: str, where: str) -> float:
    if key not in d:
        raise ConfigError(f"{where}: missing key {key!r}")
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{where}: {key!r} must be a finite number, got {v!r}")
    return float(v)


def _parametrization(p) -> dict:
    if not isinstance(p, dict) or "type" not in p:
        raise ConfigError("parametrization must be an object with a 'type'")
    kind = p["type"]
    if kind not in PARAM_KEYS:
        raise ConfigError(f"unknown parametrization type {kind!r}; expected one of {sorted(PARAM_KEYS)}")
    extra = set(p) - set(PARAM_KEYS[kind]) - {"type"}
    if extra:
        raise ConfigError(f"parametrization {kind!r}: unexpected keys {sorted(extra)}")
    where = f"parametrization {kind!r}"
    if kind == "general":
        us = p.get("unitaries")
        if not isinstance(us, list):
            raise ConfigError(f"{where}: 'unitaries' must be a list of matrices")
        blocks = [decode_complex_matrix(u, f"unitaries[{m}]") for m, u in enumerate(us)]
        return {"type": kind, "unitaries": [encode_complex_matrix(u) for u in blocks]}
    out = {"type": kind}
    for key in PARAM_KEYS[kind]:
        if key == "t" and key not in p:
            out[key] = 1.0
        else:
            out[key] = _number(p, key, where)
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved channel plus run settings. ``to_dict`` / ``from_dict`` round-trip exactly."""

    spectrum: tuple
    beta: float
    parametrization: dict
    allow_degenerate_gaps: bool = False
    seed: int = 0
    grid_size: int = 201
    betas: tuple = (0.1, 1.0, 10.0, math.inf)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    @property
    def hamiltonian(self) -> Hamiltonian:
        return Hamiltonian(self.spectrum)

    @property
    def optimizer_config(self) -> OptimizerConfig:
        """Optimizer settings with the run seed applied."""
        return dataclasses.replace(self.optimizer, seed=self.seed)

    @classmethod
    def from_dict(cls, d: dict, env: dict | None = None) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        extra = set(d) - TOP_KEYS
        if extra:
            raise ConfigError(f"unexpected config keys {sorted(extra)}")
        for key in ("spectrum", "beta", "parametrization"):
            if key not in d:
                raise ConfigError(f"missing key {key!r}")
        spec = d["spectrum"]
        if not isinstance(spec, list) or not all(
                isinstance(e, (int, float)) and not isinstance(e, bool) for e in spec):
            raise ConfigError("spectrum must be a list of numbers")
        try:
            Hamiltonian(tuple(spec))
        except ValidationError as exc:
            raise ConfigError(str(exc)) from exc
        seed = d.get("seed", 0)
        env = os.environ if env is None else env
        if env.get(SEED_ENV):
            try:
                seed = int(env[SEED_ENV])
            except ValueError as exc:
                raise ConfigError(f"{SEED_ENV} must be an integer, got {env[SEED_ENV]!r}") from exc
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")
        grid = d.get("grid_size", 201)
        if isinstance(grid, bool) or not isinstance(grid, int) or grid < 2:
            raise ConfigError(f"grid_size must be an integer >= 2, got {grid!r}")
        betas = d.get("betas", [0.1, 1.0, 10.0, "inf"])
        if not isinstance(betas, list) or not betas:
            raise ConfigError("betas must be a non-empty list")
        opt = d.get("optimizer", {})
        names = {f.name for f in dataclasses.fields(OptimizerConfig)} - {"seed"}
        if not isinstance(opt, dict) or set(opt) - names:
            raise ConfigError(f"optimizer accepts keys {sorted(names)}")
        try:
            optimizer = OptimizerConfig(**opt)
        except (TypeError, ValidationError) as exc:
            raise ConfigError(f"optimizer: {exc}") from exc
        flag = d.get("allow_degenerate_gaps", False)
        if not isinstance(flag, bool):
            raise ConfigError("allow_degenerate_gaps must be a boolean")
        return cls(
            spectrum=tuple(float(e) for e in spec),
            beta=parse_beta(d["beta"]),
            parametrization=_parametrization(d["parametrization"]),
            allow_degenerate_gaps=flag,
            seed=seed,
            grid_size=grid,
            betas=tuple(parse_beta(b) for b in betas),
            optimizer=dataclasses.replace(optimizer, seed=0),
        )

    def to_dict(self) -> dict:
        opt = dataclasses.asdict(self.optimizer)
        opt.pop("seed")
        return {
            "spectrum": list(self.spectrum),
            "beta": format_beta(self.beta),
            "parametrization": json.loads(json.dumps(self.parametrization)),
            "allow_degenerate_gaps": self.allow_degenerate_gaps,
            "seed": self.seed,
            "grid_size": self.grid_size,
            "betas": [format_beta(b) for b in self.betas],
            "optimizer": opt,
        }

    def sha256(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_beta(self, beta: float) -> "ExperimentConfig":
        return dataclasses.replace(self, beta=beta)


def load_config(path, env: dict | None = None) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return ExperimentConfig.from_dict(data, env)


def qutrit_params(cfg: ExperimentConfig, beta: float | None = None) -> QutritGmadParams:
    p = cfg.parametrization
    beta = cfg.beta if beta is None else beta
    h = cfg.hamiltonian
    if p["type"] == "qutrit":
        return QutritGmadParams(p["s1"], p["sbar"], p["alpha0"], beta, h,
                                allow_degenerate_gaps=cfg.allow_degenerate_gaps)
    if p["type"] == "couplings":
        return QutritGmadParams.from_couplings(p["g10"], p["g21"], p["g20"], beta, h, t=p["t"],
                                               allow_degenerate_gaps=cfg.allow_degenerate_gaps)
    raise ConfigError(f"parametrization {p['type']!r} is not a qutrit parametrization")


def gmad_spec(cfg: ExperimentConfig, beta: float | None = None) -> GmadSpec:
    beta = cfg.beta if beta is None else beta
    if cfg.parametrization["type"] == "general":
        blocks = tuple(decode_complex_matrix(u) for u in cfg.parametrization["unitaries"])
        return GmadSpec(cfg.hamiltonian, beta, blocks, cfg.allow_degenerate_gaps)
    return qutrit_params(cfg, beta).to_spec()


def build_channel(cfg: ExperimentConfig, beta: float | None = None,
                  check_unitarity: bool = True) -> KrausChannel:
    """Channel described by the config; construction problems become ConfigError
    (non-unitary blocks are let through when ``check_unitarity`` is False)."""
    try:
        if cfg.parametrization["type"] == "general":
            return build_gmad(gmad_spec(cfg, beta), check_unitarity=check_unitarity)
        return build_qutrit_gmad(qutrit_params(cfg, beta))
    except (ConstructionError, ValidationError) as exc:
        raise ConfigError(str(exc)) from exc


def load_states(path, dim: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """State-pair file {"rho": M, "sigma": M}."""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read states {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"states file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or set(data) != {"rho", "sigma"}:
        raise ConfigError("states file must be an object with exactly the keys 'rho' and 'sigma'")
    out = []
    for key in ("rho", "sigma"):
        m = decode_complex_matrix(data[key], key)
        try:
            out.append(validate_state(m, dim))
        except ValidationError as exc:
            raise ConfigError(f"{key}: {exc}") from exc
    return out[0], out[1]
