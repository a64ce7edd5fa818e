"""Run configuration (JSON). Rates and times are scale-free: entered in units of k_S."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from ..master import Model, ModelSpec
from ..spin import SpinSpec

UNITS = {
    "nuclei": "spin quantum number",
    "omega1": "k_S",
    "omega2": "k_S",
    "hyperfine": "(electron index, nucleus index, A in k_S)",
    "k_S": "1/time",
    "k_sr": "k_S",
    "N0": "radical pairs",
    "delta_t": "1/k_S",
    "t_end": "1/k_S",
    "step": "1/k_S",
}

MAX_SEED = 2**64 - 1


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    nuclei: list[float] = field(default_factory=list)
    omega1: float = 10.0
    omega2: float = -10.0
    hyperfine: list[tuple[int, int, float]] = field(default_factory=list)
    models: list[str] = field(default_factory=lambda: ["jh", "kominis"])
    k_S: float = 1.0
    k_sr: float = 0.0
    N0: float = 1e12
    delta_t: float = 0.25
    t_end: float = 5.0
    step: float | None = None
    coherence_measure: str = "trace_norm"
    seed: int = 1
    trials: int = 100
    out: str = "out"

    def __post_init__(self):
        self.validate()

    # -- derived quantities ----------------------------------------------------
    @property
    def model_list(self) -> list[Model]:
        return [Model.parse(m) for m in self.models]

    def model_spec(self, model: Model) -> ModelSpec:
        return ModelSpec(model, self.k_S, self.k_sr * self.k_S, self.coherence_measure)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hyperfine"] = [list(c) for c in self.hyperfine]
        return d

    def config_hash(self) -> str:
        """Hash over the fields that determine the expected counts.

        Seed, trial count and output path are recorded separately.
        """
        d = self.to_dict()
        for key in ("out", "seed", "trials"):
            d.pop(key)
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    # -- validation --------------------------------------------------------------
    def validate(self) -> None:
        try:
            self.nuclei = [float(I) for I in self.nuclei]
            spec = SpinSpec(tuple(self.nuclei))
            if spec.dim > 4096:
                raise ConfigError(f"Hilbert dimension {spec.dim} exceeds the 4096 cap")
            self.hyperfine = [(int(e), int(n), float(A)) for e, n, A in self.hyperfine]
            for e, n, _ in self.hyperfine:
                if e not in (0, 1) or not 0 <= n < len(self.nuclei):
                    raise ConfigError(f"hyperfine coupling ({e}, {n}) references a missing spin")
            if not self.models:
                raise ConfigError("at least one model is required")
            models = self.model_list
            self.models = [m.value for m in models]
            if len(set(self.models)) != len(self.models):
                raise ConfigError("models are listed more than once")
            for m in models:
                self.model_spec(m)
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from None

        for name in ("omega1", "omega2"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if not (self.N0 > 0 and math.isfinite(self.N0)):
            raise ConfigError("N0 must be positive")
        if not (self.delta_t > 0 and math.isfinite(self.delta_t)):
            raise ConfigError("delta_t must be positive")
        if not (self.t_end >= 0 and math.isfinite(self.t_end)):
            raise ConfigError("t_end must be non-negative")
        if self.step is not None:
            if not self.step > 0:
                raise ConfigError("step must be positive")
            ratio = self.delta_t / self.step
            if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
                raise ConfigError("delta_t must be an integer multiple of step")
        if not (isinstance(self.seed, int) and 0 <= self.seed <= MAX_SEED):
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not (isinstance(self.trials, int) and self.trials >= 1):
            raise ConfigError("trials must be a positive integer")


def load_config(path: Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    raw = dict(raw)
    units = raw.pop("units", None) or {}
    for key, unit in units.items():
        if key in UNITS and unit != UNITS[key]:
            raise ConfigError(f"field {key!r} declared in {unit!r}; expected {UNITS[key]!r}")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {', '.join(sorted(unknown))}")
    try:
        return RunConfig(**raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def dump_config(config: RunConfig) -> str:
    return json.dumps({"units": UNITS, **config.to_dict()}, indent=2)
