"""Run configuration: ``key = value`` files with flag overrides.

Blank lines and ``#`` comments are ignored. Lists are comma separated.
Unknown keys are rejected with their location. ``seed`` has no default.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, location: str | None = None):
        super().__init__(message)
        self.key = key
        self.location = location


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(v) for v in s.split(",") if v.strip())


def _strs(s: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in s.split(",") if v.strip())


def _bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


@dataclass(frozen=True)
class RunConfig:
    seed: int
    # data
    per_class: int = 100
    t: int = 13
    dt: float = 0.25
    classes: tuple[str, ...] = ()  # empty means all classes
    eval_per_class: int = 20
    data: str = ""
    eval_data: str = ""
    # model
    latent_dim: int = 64
    depth: int = 2
    heads: int = 4
    diffusion_steps: int = 1000
    # loss
    levels: int = 3
    weight_approx: float = 2.0
    weight_details: tuple[float, ...] = (1.0, 0.5, 0.25)
    beta: float = 0.1
    regularizer: str = "wavreg"
    # optimisation
    steps: int = 3000
    batch_size: int = 64
    lr: float = 2e-3
    lr_schedule: str = "cosine"
    warmup: int = 100
    ema_decay: float = 0.999
    diag_every: int = 10
    # sampling / evaluation
    checkpoint: str = ""
    motion_class: str = "dolly_in"
    speed: str = "regular"
    magnitude: float = 1.5
    components: tuple[str, ...] = ()
    scene_seed: int = 0
    n_samples: int = 4
    translation_threshold: float = 0.1
    rotation_threshold_deg: float = 2.0
    speed_tolerance: float = 0.3
    # analysis / export
    input: str = ""
    cutoff: float = 0.5
    format: str = "re10k"
    # sweep
    betas: tuple[float, ...] = (0.0, 0.1)
    workers: int = 1

    def __post_init__(self):
        if self.format not in ("re10k", "jsonl"):
            raise ConfigError(f"format must be re10k or jsonl, got {self.format!r}", "format")
        if self.t < 2:
            raise ConfigError("t must be >= 2", "t")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer", "seed")

    def to_text(self) -> str:
        """Canonical serialisation; parses back to an equal config."""
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                text = ",".join(_scalar(x) for x in v)
            else:
                text = _scalar(v)
            lines.append(f"{f.name} = {text}")
        return "\n".join(lines) + "\n"

    def digest(self, exclude: tuple[str, ...] = ("seed",)) -> str:
        """Short hash of every setting except ``exclude``; names run directories."""
        text = "\n".join(line for line in self.to_text().splitlines() if line.split(" = ")[0] not in exclude)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


def _scalar(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


_FIELDS = {f.name: f for f in fields(RunConfig)}
_PARSERS = {
    "int": int,
    "float": float,
    "str": str,
    "bool": _bool,
    "tuple[float, ...]": _floats,
    "tuple[str, ...]": _strs,
}


def _convert(key: str, raw: str, location: str) -> Any:
    if key not in _FIELDS:
        raise ConfigError(f"unknown key {key!r}", key, location)
    parser = _PARSERS[str(_FIELDS[key].type)]
    try:
        return parser(raw.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {exc}", key, location) from None


def parse_text(text: str, source: str = "<config>") -> dict[str, Any]:
    out: dict[str, Any] = {}
    for n, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        loc = f"{source}:{n}"
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", None, loc)
        key, raw = (s.strip() for s in body.split("=", 1))
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", key, loc)
        out[key] = _convert(key, raw, loc)
    return out


def resolve(config_path: str | None, overrides: Mapping[str, str | tuple[str, str]]) -> RunConfig:
    """File values, then flag overrides, then defaults.

    An override is a raw string or a ``(raw, location)`` pair.
    """
    values: dict[str, Any] = {}
    if config_path:
        path = Path(config_path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from None
        values.update(parse_text(text, str(path)))
    for key, raw in overrides.items():
        raw, loc = raw if isinstance(raw, tuple) else (raw, f"--{key}")
        values[key] = _convert(key, raw, loc)
    if "seed" not in values:
        raise ConfigError("seed is required (pass --seed or set it in the config)", "seed", "<flags>")
    try:
        return RunConfig(**values)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
