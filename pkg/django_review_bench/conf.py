# -*- coding: utf-8 -*-
"""
Run configuration.

Defaults come from ``REVIEW_BENCH_*`` Django settings, then a JSON config
file, then command-line overrides.
"""
import dataclasses
import json
import logging
from typing import Any, Dict, Mapping, Optional, Tuple

from django.conf import settings

from .corpus import BundlePolicy
from .errors import ConfigurationError
from .judge import BACKENDS, CacheMode
from .novelty import AggregationPolicy
from .retrieval import S2_ENDPOINT

logger = logging.getLogger('django_review_bench.conf')

DIMENSIONS = ('doa', 'novelty', 'flaw', 'mcs')
DEFAULT_BUNDLE_POLICY = {'doa': 'concatenate', 'novelty': 'concatenate', 'flaw': 'per-review', 'mcs': 'per-review'}


def _setting(name: str, default):
    return getattr(settings, f"REVIEW_BENCH_{name}", default)


@dataclasses.dataclass
class RunConfig:
    dimensions: Tuple[str, ...] = DIMENSIONS
    judge_backend: str = 'gemini'
    judge_model: str = 'gemini-2.5-flash-lite'
    judge_endpoint: str = ''
    judge_api_key_env: str = 'GEMINI_API_KEY'
    judge_timeout: float = 120.0
    judge_max_attempts: int = 3
    judge_backoff: float = 2.0
    temperature: float = 0.0
    top_p: float = 0.95
    s2_endpoint: str = S2_ENDPOINT
    s2_api_key_env: str = 'S2_API_KEY'
    s2_per_minute: int = 60
    fetch_limit: int = 20
    mmr_k: int = 30
    mmr_lambda: float = 0.5
    dedup_threshold: float = 0.96
    aggregation_policy: str = AggregationPolicy.Top3Weighted.value
    parallelism: int = 4
    retrieval_parallelism: int = 2
    cache_dir: str = '.review_bench_cache'
    cache_mode: str = CacheMode.Record.value
    output_dir: str = 'review_bench_out'
    bundle_policy: Dict[str, str] = dataclasses.field(default_factory=lambda: dict(DEFAULT_BUNDLE_POLICY))
    paper_context_chars: int = 6000
    experimental_severity_weights: Optional[Dict[str, float]] = None
    ledger: bool = True

    def __post_init__(self):
        self.validate()

    @classmethod
    def field_names(cls):
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def from_settings(cls) -> 'RunConfig':
        values = {}
        for name in cls.field_names():
            if name == 'ledger':
                continue
            marker = object()
            value = _setting(name.upper(), marker)
            if value is not marker:
                values[name] = value
        return cls(**values)

    def overlay(self, overrides: Mapping[str, Any]) -> 'RunConfig':
        unknown = sorted(set(overrides) - set(self.field_names()))
        if unknown:
            raise ConfigurationError(f"Unknown configuration keys: {', '.join(unknown)}")
        values = dataclasses.asdict(self)
        for key, value in overrides.items():
            if value is None:
                continue
            if key == 'bundle_policy':
                value = dict(values['bundle_policy'], **value)
            values[key] = value
        return RunConfig(**values)

    @classmethod
    def from_file(cls, path: str, base: Optional['RunConfig'] = None) -> 'RunConfig':
        try:
            with open(path, 'r', encoding='utf-8') as fh:
                data = json.load(fh)
        except (OSError, ValueError) as e:
            raise ConfigurationError(f"Cannot read config file {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigurationError(f"Config file {path} must hold a JSON object")
        return (base or cls.from_settings()).overlay(data)

    def validate(self):
        self.dimensions = tuple(self.dimensions)
        unknown = [d for d in self.dimensions if d not in DIMENSIONS]
        if unknown or not self.dimensions:
            raise ConfigurationError(f"Unknown dimensions {unknown}, expected a subset of {list(DIMENSIONS)}")
        if self.judge_backend not in BACKENDS:
            raise ConfigurationError(f"Unknown judge backend '{self.judge_backend}'")
        if not 0.0 <= self.mmr_lambda <= 1.0:
            raise ConfigurationError(f"mmr_lambda must lie in [0, 1], got {self.mmr_lambda}")
        if not 0.0 <= self.dedup_threshold <= 1.0:
            raise ConfigurationError(f"dedup_threshold must lie in [0, 1], got {self.dedup_threshold}")
        for name in ('mmr_k', 'fetch_limit', 'parallelism', 'retrieval_parallelism', 'judge_max_attempts',
                     's2_per_minute', 'paper_context_chars'):
            if int(getattr(self, name)) < 1:
                raise ConfigurationError(f"{name} must be at least 1, got {getattr(self, name)}")
        try:
            CacheMode(self.cache_mode)
            AggregationPolicy(self.aggregation_policy)
        except ValueError as e:
            raise ConfigurationError(str(e)) from None
        policy = dict(DEFAULT_BUNDLE_POLICY, **(self.bundle_policy or {}))
        for dimension, value in policy.items():
            if dimension not in DIMENSIONS:
                raise ConfigurationError(f"Bundle policy names unknown dimension '{dimension}'")
            try:
                BundlePolicy(value)
            except ValueError:
                raise ConfigurationError(f"Unknown bundle policy '{value}' for {dimension}") from None
        self.bundle_policy = policy
        weights = self.experimental_severity_weights
        if weights is not None:
            if set(weights) != {'Critical', 'Minor'} or any(float(w) <= 0 for w in weights.values()):
                raise ConfigurationError('experimental_severity_weights needs positive Critical and Minor weights')
            logger.warning(f"Running with experimental severity weights {weights}")

    def policy_for(self, dimension: str) -> BundlePolicy:
        return BundlePolicy(self.bundle_policy[dimension])

    def to_dict(self) -> Dict[str, Any]:
        data = dataclasses.asdict(self)
        data['dimensions'] = list(self.dimensions)
        return data
