"""
Engine configuration.

A single JSON document (YAML is accepted too) validated into `EngineConfig`.
Values are layered: defaults < config file < TMN_* environment < CLI flags.
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, Iterable, Literal, Optional, Union

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import ConfigError

logger = logging.getLogger(__name__)

MOCK_SCHEME = "mock://"


class SearchConfig(BaseModel):
    """Best-first search knobs"""
    model_config = ConfigDict(populate_by_name=True)

    n0: int = Field(default=15, ge=1)
    decay: float = Field(default=0.5, gt=0.0, le=1.0)
    lambda_: float = Field(default=10.0, ge=0.0, alias="lambda")
    max_steps: int = Field(default=5, ge=1)
    greedy: bool = False
    budget: int = Field(default=500, ge=0)
    seed: Optional[int] = None

    @classmethod
    def preset(cls, name: str, **overrides: Any) -> "SearchConfig":
        if name not in SEARCH_PRESETS:
            raise ConfigError(f"unknown search preset {name!r} (choose from {', '.join(SEARCH_PRESETS)})")
        return cls(**{**SEARCH_PRESETS[name], **overrides})


SEARCH_PRESETS: Dict[str, Dict[str, Any]] = {
    "default": {"n0": 15, "decay": 0.5},
    "footnote": {"n0": 10, "decay": 0.5},
}


class FilterThresholds(BaseModel):
    theta_max: float = 0.3
    mu_max: float = 0.3
    sum_max: float = 0.4


class SamplingConfig(BaseModel):
    top_p: float = Field(default=0.95, gt=0.0, le=1.0)
    top_k: int = Field(default=10, ge=1)
    max_len: int = Field(default=40, ge=1)


class RetryConfig(BaseModel):
    attempts: int = Field(default=3, ge=1)
    backoff: float = Field(default=0.5, ge=0.0)
    timeout: float = Field(default=30.0, gt=0.0)


class DatagenConfig(BaseModel):
    per_step: int = Field(default=5, ge=1)
    cap: int = Field(default=50, ge=1)
    scorer_f1_threshold: float = Field(default=0.2, ge=0.0, le=1.0)
    scorer_sample_n0: int = Field(default=5, ge=1)
    distractor_min: int = Field(default=2, ge=0)
    distractor_max: int = Field(default=7, ge=0)
    shuffle: bool = False


class EndpointsConfig(BaseModel):
    """Service base URLs or mock://<fixture> paths"""
    squad_qa: Optional[str] = None
    squad_gen: Optional[str] = None
    nextgen: Optional[str] = None
    scorer: Optional[str] = None

    @field_validator("*")
    @classmethod
    def _scheme(cls, value: Optional[str]) -> Optional[str]:
        if value is None:
            return value
        if not value.startswith(("http://", "https://", MOCK_SCHEME)):
            raise ValueError(f"endpoint must be an http(s) URL or {MOCK_SCHEME}<path>: {value!r}")
        return value


class EngineConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    endpoints: EndpointsConfig = EndpointsConfig()
    search: SearchConfig = SearchConfig()
    filters: FilterThresholds = FilterThresholds()
    sampling: SamplingConfig = SamplingConfig()
    retry: RetryConfig = RetryConfig()
    datagen: DatagenConfig = DatagenConfig()
    overlap_threshold: float = Field(default=0.8, ge=0.0, le=1.0)
    stopwords_path: Optional[str] = None
    zeta_mode: Literal["prune", "literal"] = "prune"
    proximity_window: int = Field(default=20, ge=1)
    pos_tagger: Optional[str] = None
    seed: int = 0
    jobs: int = Field(default=1, ge=1)

    def check_endpoints(self, required: Iterable[str], base_dir: Optional[Path] = None) -> None:
        """Fail fast when a needed endpoint is missing or its mock fixture is absent."""
        for name in required:
            value = getattr(self.endpoints, name)
            if value is None:
                raise ConfigError(f"endpoint {name!r} is not configured")
            if value.startswith(MOCK_SCHEME):
                path = resolve_mock_path(value, base_dir)
                if not path.is_file():
                    raise ConfigError(f"mock fixture for {name!r} not found: {path}")


def resolve_mock_path(uri: str, base_dir: Optional[Path] = None) -> Path:
    path = Path(uri[len(MOCK_SCHEME):])
    if not path.is_absolute() and base_dir is not None:
        path = base_dir / path
    return path


_ENV_KEYS = {
    "TMN_SEED": ("seed",),
    "TMN_JOBS": ("jobs",),
    "TMN_SQUAD_QA_URL": ("endpoints", "squad_qa"),
    "TMN_SQUAD_GEN_URL": ("endpoints", "squad_gen"),
    "TMN_NEXTGEN_URL": ("endpoints", "nextgen"),
    "TMN_SCORER_URL": ("endpoints", "scorer"),
}


def _set_path(data: Dict[str, Any], keys: tuple, value: Any):
    for key in keys[:-1]:
        data = data.setdefault(key, {})
    data[keys[-1]] = value


def load_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> EngineConfig:
    """Build the engine configuration from file, environment and overrides.

    `overrides` maps dotted keys ("search.greedy") to values; None values
    are ignored so unset CLI flags fall through.
    """
    load_dotenv()
    data: Dict[str, Any] = {}
    path = path or os.getenv("TMN_CONFIG")
    if path:
        try:
            with open(path, encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        except yaml.YAMLError as e:
            raise ConfigError(f"config {path} is not valid JSON/YAML: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must be a JSON object")
        logger.debug("loaded config from %s", path)

    for env_name, keys in _ENV_KEYS.items():
        value = os.getenv(env_name)
        if value is not None:
            _set_path(data, keys, value)

    for dotted, value in (overrides or {}).items():
        if value is not None:
            _set_path(data, tuple(dotted.split(".")), value)

    try:
        return EngineConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from e
