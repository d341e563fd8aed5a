"""Run configuration: one declarative JSON file per experiment."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import InvalidInput
from .io import canonical_json
from .params import Normalization, ParamFunction, ParamMap

__all__ = [
    "RunConfig",
    "load_config",
    "config_hash",
    "build_param_map",
]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class FunctionDecl(_Strict):
    kind: Literal["coord", "affine", "poly", "sin"]
    index: int = 0
    args: dict[str, Union[float, list[float]]] = {}


class NormalizationDecl(_Strict):
    kind: Literal["range", "identity", "explicit"] = "range"
    lo: float = 0.0
    hi: float = 0.01
    scale: Optional[list[float]] = None
    offset: Optional[list[float]] = None

    @model_validator(mode="after")
    def _explicit_needs_values(self):
        if self.kind == "explicit" and (self.scale is None or self.offset is None):
            raise ValueError("explicit normalization needs scale and offset")
        return self


class ParamMapDecl(_Strict):
    # None: one coordinate function per parameter
    functions: Optional[list[FunctionDecl]] = None
    normalization: NormalizationDecl = NormalizationDecl()


class AffineDataDecl(_Strict):
    kind: Literal["affine"]
    n: int = Field(ge=1)
    functions: Optional[list[FunctionDecl]] = None
    seed: Optional[int] = None
    spectral_radius: float = Field(0.95, gt=0.0, le=1.0)
    noise_std: float = Field(0.0, ge=0.0)
    b_scale: float = 0.5
    dt: float = Field(1.0, gt=0.0)


class AdvDiffDataDecl(_Strict):
    kind: Literal["advdiff"]
    n: int = Field(128, ge=3)
    length: float = Field(1.0, gt=0.0)
    speed: float = 1.0
    dt: float = Field(1e-3, gt=0.0)
    stride: int = Field(1, ge=1)
    initial_condition: Literal["sine", "gaussian", "wave-packet"] = "gaussian"
    ic_mode: int = 1
    ic_width: float = Field(0.1, gt=0.0)


class MethodDecl(_Strict):
    id: Literal["pidmd", "dmd", "stacked", "rkoi"]
    rank: Optional[int] = Field(None, ge=1)
    r_tilde: Optional[int] = Field(None, ge=1)
    r_hat: Optional[int] = Field(None, ge=1)
    scheme: Optional[Literal["linear1d", "lsq"]] = None
    pair_rtol: Optional[float] = Field(None, gt=0.0)

    @model_validator(mode="after")
    def _ranks(self):
        if self.id == "pidmd":
            if self.r_tilde is None or self.r_hat is None:
                raise ValueError("pidmd needs r_tilde and r_hat")
        elif self.rank is None:
            raise ValueError(f"{self.id} needs rank")
        return self

    @property
    def key(self):
        return self.id


class ParamSample(_Strict):
    theta: list[float]
    label: Optional[str] = None


class RunConfig(_Strict):
    name: str = "run"
    seed: int = 0
    output_dir: str = "runs/out"
    data: Annotated[Union[AffineDataDecl, AdvDiffDataDecl], Field(discriminator="kind")]
    train: list[ParamSample] = Field(min_length=1)
    test: list[ParamSample] = Field(min_length=1)
    train_snapshots: int = Field(ge=1)
    horizon: int = Field(ge=0)
    transient_skip: int = Field(0, ge=0)
    ic_index: int = Field(0, ge=0)
    param_map: ParamMapDecl = ParamMapDecl()
    methods: list[MethodDecl] = Field(min_length=1)

    @model_validator(mode="after")
    def _consistent(self):
        ps = {len(s.theta) for s in self.train + self.test}
        if len(ps) != 1:
            raise ValueError("all parameter samples must have the same dimension")
        ids = [m.id for m in self.methods]
        if len(ids) != len(set(ids)):
            raise ValueError("each method may appear only once")
        return self

    @property
    def p(self):
        return len(self.train[0].theta)

    @property
    def trajectory_length(self):
        """Snapshots stored per parameter after the transient, minus one."""
        return max(self.train_snapshots, self.ic_index + self.horizon, 1)


def load_config(path, seed=None, output_dir=None):
    """Read and validate a config file; ``seed``/``output_dir`` override."""
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read config {path}: {exc}") from exc
    if seed is not None:
        raw["seed"] = int(seed)
    if output_dir is not None:
        raw["output_dir"] = str(output_dir)
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise InvalidInput(f"invalid config {path}:\n{exc}") from exc


def config_hash(cfg):
    """sha256 of the canonical config, ignoring where outputs go."""
    d = cfg.model_dump(mode="json")
    d.pop("output_dir", None)
    return hashlib.sha256(canonical_json(d).encode()).hexdigest()


def _functions(decls, p):
    if decls is None:
        return tuple(ParamFunction("coord", i) for i in range(p))
    return tuple(ParamFunction(f.kind, f.index, dict(f.args)) for f in decls)


def build_param_map(cfg):
    """ParamMap for fitting, normalization resolved against the training set."""
    nd = cfg.param_map.normalization
    p = cfg.p
    if nd.kind == "identity":
        norm = Normalization.identity(p)
    elif nd.kind == "explicit":
        norm = Normalization(tuple(nd.scale), tuple(nd.offset))
    else:
        norm = Normalization.from_range([s.theta for s in cfg.train], nd.lo, nd.hi)
    return ParamMap(p, _functions(cfg.param_map.functions, p), norm)


def build_generator_map(cfg):
    """ParamMap the affine generator uses (raw theta, no normalization)."""
    return ParamMap(cfg.p, _functions(cfg.data.functions, cfg.p))
