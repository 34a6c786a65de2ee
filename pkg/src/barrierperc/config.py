"""Campaign configuration: JSON schema, validation, and hashing."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

from .lattice import BarrierModel

# step of the default barrier-fraction grid per model family
_DEFAULT_STEP = {1: 0.05, 2: 0.025}
_DEFAULT_MAX = {1: 1.0, 2: 0.65}


class ConfigError(ValueError):
    """Invalid campaign configuration; message lists field-level problems."""


@dataclass
class CampaignConfig:
    """Everything one simulate/analyze run needs, with desk-scale defaults."""

    model: BarrierModel
    sizes: list[int] = field(default_factory=lambda: [32, 48, 64, 96, 128])
    values: list[float] | None = None  # p_d grid, or q_b grid for the joint model
    replicas: int = 100_000
    seed: int = 20240
    epsilon: float = 0.1
    coarse_lo: float = 0.1
    coarse_hi: float = 1.0
    coarse_points: int = 91
    window_points: int = 201
    spanning: str = "vertical"
    workers: int = 1
    chunk_size: int = 4096
    out: str = "runs"

    def __post_init__(self):
        if self.values is None:
            self.values = default_value_grid(self.model)
        problems = []
        if any(L < 2 for L in self.sizes):
            problems.append("sizes: every lattice side must be >= 2")
        if list(self.sizes) != sorted(self.sizes):
            problems.append("sizes: must be sorted ascending")
        if len(set(self.sizes)) != len(self.sizes):
            problems.append("sizes: duplicates not allowed")
        if self.replicas < 1:
            problems.append("replicas: must be >= 1")
        if not 0 < self.epsilon < 0.5:
            problems.append("epsilon: must be in (0, 0.5)")
        if any(not 0.0 <= v <= 1.0 for v in self.values):
            problems.append("values: every entry must be in [0, 1]")
        if not 0 <= self.coarse_lo < self.coarse_hi <= 1:
            problems.append("coarse_lo/coarse_hi: need 0 <= lo < hi <= 1")
        if self.coarse_points < 10:
            problems.append("coarse_points: must be >= 10")
        if self.window_points < 10:
            problems.append("window_points: must be >= 10")
        if self.spanning not in ("vertical", "either"):
            problems.append("spanning: must be 'vertical' or 'either'")
        if self.workers < 1:
            problems.append("workers: must be >= 1")
        if self.chunk_size < 1:
            problems.append("chunk_size: must be >= 1")
        if self.seed < 0:
            problems.append("seed: must be non-negative")
        if problems:
            raise ConfigError("invalid config:\n  " + "\n  ".join(problems))

    @property
    def param_name(self) -> str:
        return self.model.param_name

    def normalized(self) -> dict:
        d = asdict(self)
        d["model"] = self.model.value
        return d

    def hash(self) -> str:
        """Digest of the campaign identity: fields that influence results.

        Execution details (workers, out, chunk_size) are excluded so reruns
        with a different worker count produce byte-identical artifacts.
        """
        payload = self.normalized()
        for key in ("workers", "out", "chunk_size"):
            payload.pop(key)
        return hashlib.sha256(
            json.dumps(payload, sort_keys=True).encode()
        ).hexdigest()[:12]


def default_value_grid(model: BarrierModel) -> list[float]:
    """Barrier-fraction grid when none is given: model-family step from 0."""
    if model is BarrierModel.JOINT_SITE_BOND:
        raise ConfigError("values: the joint model needs an explicit q_b grid")
    per_site = model.bonds_per_site
    step = _DEFAULT_STEP[per_site]
    hi = _DEFAULT_MAX[per_site]
    n = int(round(hi / step))
    return [round(k * step, 6) for k in range(n + 1)]


def load_config(path: str, **overrides) -> CampaignConfig:
    """Parse a JSON config file; unknown keys are reported, not ignored."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}")
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    raw.update({k: v for k, v in overrides.items() if v is not None})
    if "model" not in raw:
        raise ConfigError("model: required field missing")
    try:
        model = BarrierModel(raw.pop("model"))
    except ValueError:
        valid = ", ".join(m.value for m in BarrierModel)
        raise ConfigError(f"model: must be one of {valid}")
    known = set(CampaignConfig.__dataclass_fields__) - {"model"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(
            "unknown config fields: " + ", ".join(sorted(unknown))
            + f" (known: {', '.join(sorted(known))})"
        )
    return CampaignConfig(model=model, **raw)
