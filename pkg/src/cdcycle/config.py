"""Run configuration: parsing, validation, defaults and fingerprints.

A run is described by a JSON-compatible dict with four blocks::

    {
      "model":  {... ModelParams fields, or a "raw" four-level block ...},
      "sweep":  {"profile": "polynomial" | "arctan", ...},
      "run":    {"samples": null, "n_cycles": 1, "cd_enabled": true, ...},
      "experiment": "fig4",          # optional
      "output_dir": "out"            # optional
    }

Unknown keys are rejected everywhere.  Every executed run re-emits its fully
resolved configuration next to its outputs, and loading that file reproduces
the run bit for bit; the fingerprint is a SHA-256 over the canonical JSON
form of the resolved configuration.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .errors import ConfigError
from .model import (
    DEFAULT_PHASE_TARGETS,
    PHASE_TARGET_CHOICES,
    ModelParams,
    RawFourLevelParams,
    derive_couplings,
)
from .sweeps import ArctanProfile, PolynomialProfile, SweepSpec

EXPERIMENTS = ("propagate", "cycles", "fig2", "fig3", "fig4", "fig5", "fig6", "berry", "check")

_MODEL_KEYS = {"eps_S", "eps_T", "omega_1S", "omega_ST", "omega_1T_abs"}
_RAW_KEYS = {"delta_c", "Delta_so", "Omega_c", "Omega_p", "alpha", "beta", "delta_p"}
_SWEEP_KEYS = {"profile", "coefficients", "a", "b", "c", "v", "k", "sign_mode", "d", "t_f"}
_RUN_KEYS = {"samples", "n_cycles", "cd_enabled", "initial_state", "dimension", "workers"}
_TOP_KEYS = {"model", "sweep", "run", "experiment", "output_dir"}


@dataclass(frozen=True)
class RunOptions:
    """Propagation options shared by all experiments."""

    samples: int | None = None  # per-cycle grid size; None = auto from t_f
    n_cycles: int = 1
    cd_enabled: bool = True
    initial_state: str = "1"  # bare label, or "eigenstate" for the followed level
    dimension: int = 3
    workers: int = 1

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ConfigError(f"dimension must be 2 or 3, got {self.dimension}")
        if self.n_cycles < 1:
            raise ConfigError("n_cycles must be >= 1")
        if self.samples is not None and self.samples < 2:
            raise ConfigError("samples must be >= 2")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration of one run."""

    model: ModelParams = field(default_factory=ModelParams)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    run: RunOptions = field(default_factory=RunOptions)
    phase_targets: tuple[str, ...] = DEFAULT_PHASE_TARGETS
    omega_1T_sign_raw: float | None = None  # sign reported by derive_couplings
    experiment: str | None = None
    output_dir: str = "out"

    def with_sweep(self, **changes) -> "RunConfig":
        return replace(self, sweep=replace(self.sweep, **changes))

    def with_run(self, **changes) -> "RunConfig":
        return replace(self, run=replace(self.run, **changes))

    def to_dict(self) -> dict:
        sweep = self.sweep
        if isinstance(sweep.profile, ArctanProfile):
            profile = {
                "profile": "arctan",
                "a": sweep.profile.a,
                "b": sweep.profile.b,
                "c": sweep.profile.c,
            }
        else:
            profile = {"profile": "polynomial", "coefficients": list(sweep.profile.coeffs)}
        model_block = asdict(self.model)
        model_block["phase_targets"] = list(self.phase_targets)
        if self.omega_1T_sign_raw is not None:
            model_block["omega_1T_sign_raw"] = self.omega_1T_sign_raw
        return {
            "model": model_block,
            "sweep": {
                **profile,
                "v": sweep.v,
                "k": sweep.k,
                "sign_mode": sweep.sign_mode,
                "d": sweep.d,
                "t_f": sweep.t_f,
            },
            "run": asdict(self.run),
            "experiment": self.experiment,
            "output_dir": self.output_dir,
        }

    def fingerprint(self) -> str:
        """SHA-256 over the result-determining part of the configuration.

        The output directory and experiment selector are excluded: two runs
        that differ only there produce bit-identical numbers.
        """
        payload = self.to_dict()
        payload.pop("output_dir", None)
        payload.pop("experiment", None)
        text = json.dumps(payload, sort_keys=True, default=float)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _reject_unknown(block: dict, allowed: set, where: str) -> None:
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")


def _parse_model(block: dict) -> tuple[ModelParams, tuple[str, ...], float | None]:
    block = dict(block)
    phase_targets = tuple(block.pop("phase_targets", DEFAULT_PHASE_TARGETS))
    for t in phase_targets:
        if t not in PHASE_TARGET_CHOICES:
            raise ConfigError(f"unknown phase target {t!r}")
    stored_sign = block.pop("omega_1T_sign_raw", None)  # provenance from a resolved config
    raw_block = block.pop("raw", None)
    if raw_block is not None:
        _reject_unknown(raw_block, _RAW_KEYS, "model.raw")
        if set(block) & _MODEL_KEYS:
            raise ConfigError("model block must not mix explicit parameters with a raw block")
        try:
            raw = RawFourLevelParams(**raw_block)
        except TypeError as exc:
            raise ConfigError(f"invalid raw four-level block: {exc}") from exc
        params, sign = derive_couplings(raw)
        return params, phase_targets, sign
    _reject_unknown(block, _MODEL_KEYS, "model")
    try:
        return ModelParams(**block), phase_targets, stored_sign
    except TypeError as exc:
        raise ConfigError(f"invalid model block: {exc}") from exc


def _parse_sweep(block: dict) -> SweepSpec:
    _reject_unknown(block, _SWEEP_KEYS, "sweep")
    block = dict(block)
    kind = block.pop("profile", "polynomial")
    if kind == "polynomial":
        if any(key in block for key in ("a", "b", "c")):
            raise ConfigError("a/b/c are arctan parameters; the polynomial takes coefficients")
        coeffs = block.pop("coefficients", None)
        profile = PolynomialProfile() if coeffs is None else PolynomialProfile(tuple(coeffs))
    elif kind == "arctan":
        if "coefficients" in block:
            raise ConfigError("coefficients belong to the polynomial profile")
        profile = ArctanProfile(
            a=float(block.pop("a", ArctanProfile.a)),
            b=float(block.pop("b", ArctanProfile.b)),
            c=float(block.pop("c", ArctanProfile.c)),
        )
    else:
        raise ConfigError(f"unknown sweep profile {kind!r}")
    k = block.get("k", 0)
    if k != int(k):
        raise ConfigError(f"phase winding k must be an integer, got {k!r}")
    try:
        return SweepSpec(
            profile=profile,
            v=float(block.get("v", 0.0)),
            k=int(k),
            sign_mode=bool(block.get("sign_mode", False)),
            d=float(block.get("d", 20.0)),
            t_f=float(block.get("t_f", 50.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid sweep block: {exc}") from exc


def from_dict(data: dict) -> RunConfig:
    """Build a validated RunConfig from a JSON-compatible dict."""
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be an object")
    _reject_unknown(data, _TOP_KEYS, "configuration")
    params, phase_targets, sign = _parse_model(data.get("model", {}))
    sweep = _parse_sweep(data.get("sweep", {}))
    run_block = data.get("run", {})
    _reject_unknown(run_block, _RUN_KEYS, "run")
    try:
        run = RunOptions(**{k: v for k, v in run_block.items() if v is not None})
    except TypeError as exc:
        raise ConfigError(f"invalid run block: {exc}") from exc
    experiment = data.get("experiment")
    if experiment is not None and experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {EXPERIMENTS}")
    return RunConfig(
        model=params,
        sweep=sweep,
        run=run,
        phase_targets=phase_targets,
        omega_1T_sign_raw=sign,
        experiment=experiment,
        output_dir=str(data.get("output_dir", "out")),
    )


def load_config(path: str | Path) -> RunConfig:
    """Load and validate a configuration file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"configuration {path} is not valid JSON: {exc}") from exc
    return from_dict(data)


def default_config() -> RunConfig:
    """Built-in defaults: reference model, polynomial sweep, CD on, one cycle."""
    return RunConfig()
