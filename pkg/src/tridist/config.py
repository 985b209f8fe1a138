"""Run configuration: defaults, JSON config files and environment overrides."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional

from .conic import SolverSettings
from .sweep import SweepConfig
from .threepoint import SdpParams

ENV_PREFIX = "TRIDIST_"
DEFAULT_CACHE = os.path.join(os.path.expanduser("~"), ".cache", "tridist")

# environment variable suffix -> (field name, parser)
_ENV_FIELDS = {
    "CACHE_DIR": ("cache_dir", str),
    "BACKEND": ("backend", str),
    "FEASTOL": ("feastol", float),
    "ABSTOL": ("abstol", float),
    "RELTOL": ("reltol", float),
    "MAX_ITERS": ("max_iters", int),
    "TIME_LIMIT": ("time_limit", float),
    "WORKERS": ("workers", int),
}


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI run needs. Defaults use LP degree 18 and SDP degree 6."""

    dims: tuple[int, ...] = (7, 20, 21, 23, 24, 25)
    p_lp: int = 18
    p_sdp: int = 6
    step: float = 0.001
    refine_tol: float = 1e-4
    interval_width: float = 0.005
    backend: str = "cvxopt"
    feastol: float = 1e-8
    abstol: float = 1e-8
    reltol: float = 1e-8
    max_iters: int = 500
    time_limit: Optional[float] = None
    cache_dir: Optional[str] = DEFAULT_CACHE
    output_format: str = "json"
    workers: int = 1
    use_lp: bool = True

    def __post_init__(self) -> None:
        if self.output_format not in ("json", "csv"):
            raise ValueError(f"output_format must be json or csv, got {self.output_format!r}")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        SdpParams(self.p_lp, self.p_sdp)

    @property
    def params(self) -> SdpParams:
        return SdpParams(self.p_lp, self.p_sdp)

    @property
    def settings(self) -> SolverSettings:
        return SolverSettings(
            backend=self.backend, feastol=self.feastol, abstol=self.abstol, reltol=self.reltol,
            max_iters=self.max_iters, time_limit=self.time_limit,
        )

    def sweep_config(self) -> SweepConfig:
        return SweepConfig(
            step=self.step, refine_tol=self.refine_tol, params=self.params, settings=self.settings,
            cache_dir=self.cache_dir, workers=self.workers, use_lp=self.use_lp,
        )

    def config_hash(self) -> str:
        body = {k: v for k, v in asdict(self).items() if k not in ("cache_dir", "output_format", "workers", "dims")}
        return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()[:16]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dims"] = list(self.dims)
        return d


def load_config(path: Optional[str | Path] = None, env: Optional[dict] = None, **overrides) -> RunConfig:
    """Defaults, then the JSON file, then ``TRIDIST_*`` variables, then keyword overrides."""
    values: dict = {}
    if path is not None:
        data = json.loads(Path(path).read_text())
        known = {f.name for f in fields(RunConfig)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        values.update(data)
    env = os.environ if env is None else env
    for suffix, (name, parse) in _ENV_FIELDS.items():
        raw = env.get(ENV_PREFIX + suffix)
        if raw is not None and raw != "":
            values[name] = parse(raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return replace(RunConfig(), **values)
