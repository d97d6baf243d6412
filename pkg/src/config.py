"""Allocator settings.

Values are layered: built-in defaults, then a flat KEY=value file read with
python-dotenv, then `ALLOCATOR_<KEY>` environment variables.
"""
import logging
import os
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

from dotenv import dotenv_values

from .assoc_miner import BIGRAM_MODES, MERGED
from .cascade import STAGES, CascadeConfig
from .embeddings import AGGREGATIONS, CENTROID
from .errors import ConfigError, decoding
from .external_linker import format_timestamp, parse_timestamp
from .preprocess import DATA_FOLDER, DEFAULT_LEMMAS_PATH, DEFAULT_STOPWORDS_PATH
from .verdict import Provenance

logger = logging.getLogger(__name__)

ENV_PREFIX = 'ALLOCATOR_'
DEFAULT_CONFIG_PATH = os.path.join(DATA_FOLDER, 'allocator.env')
TAGGER_PROVIDERS = ('gazetteer', 'process', 'openai')
LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR')


@dataclass(frozen=True)
class AllocatorSettings:
    fastpath_threshold: float = 0.50
    concept_threshold: float = 0.55
    association_threshold: float = 0.60
    ner_threshold: float = 0.50
    radius: int = 5
    concept_limit: int = 50
    concept_relations: Tuple[str, ...] = ()
    min_support: float = 0.05
    min_confidence: float = 0.3
    min_lift: float = 1.0
    max_itemset_size: Optional[int] = 3
    bigram_mode: str = MERGED
    aggregation: str = CENTROID
    stage_order: Tuple[str, ...] = tuple(stage.value for stage in STAGES)
    external_overrides: bool = True
    ner_labels: Tuple[str, ...] = ()
    tagger_provider: str = 'gazetteer'
    tagger_command: str = ''
    tagger_timeout: int = 60
    openai_model: str = ''
    embeddings_path: str = os.path.join(DATA_FOLDER, 'embeddings.txt')
    concept_kb_path: str = os.path.join(DATA_FOLDER, 'concepts.tsv')
    gazetteer_path: str = os.path.join(DATA_FOLDER, 'gazetteer.tsv')
    stopwords_path: str = str(DEFAULT_STOPWORDS_PATH)
    lemmas_path: str = str(DEFAULT_LEMMAS_PATH)
    external_snapshot_path: str = os.path.join(DATA_FOLDER, 'external_snapshot.csv')
    external_snapshot_url: str = ''
    workers: int = 5
    log_level: str = 'INFO'
    as_of: Optional[str] = None
    warnings: Tuple[str, ...] = field(default=(), compare=False)

    def thresholds(self):
        return {
            Provenance.FASTPATH: self.fastpath_threshold,
            Provenance.CONCEPT: self.concept_threshold,
            Provenance.ASSOCIATION: self.association_threshold,
            Provenance.NER: self.ner_threshold,
        }

    def cascade_config(self, as_of: Optional[str] = None) -> CascadeConfig:
        try:
            stage_order = tuple(Provenance.parse(stage) for stage in self.stage_order)
        except ValueError as e:
            raise ConfigError(f"STAGE_ORDER: {e}") from e
        return CascadeConfig(
            stage_order=stage_order,
            thresholds=self.thresholds(),
            radius=self.radius,
            concept_limit=self.concept_limit,
            concept_relations=self.concept_relations,
            min_support=self.min_support,
            min_confidence=self.min_confidence,
            min_lift=self.min_lift,
            max_itemset_size=self.max_itemset_size,
            bigram_mode=self.bigram_mode,
            ner_labels=self.ner_labels,
            aggregation=self.aggregation,
            external_overrides=self.external_overrides,
            as_of=_timestamp(as_of, 'as_of') if as_of else self.as_of,
        )


def _float(value):
    return float(value)


def _int(value):
    return int(value)


def _optional_int(value):
    if value.strip().lower() in ('', 'none', '0'):
        return None
    return int(value)


def _flag(value):
    lowered = value.strip().lower()
    if lowered in ('1', 'true', 'yes', 'on'):
        return True
    if lowered in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError(f"not a boolean: '{value}'")


def _list(value):
    return tuple(item.strip() for item in value.split(',') if item.strip())


def _lower_list(value):
    return tuple(item.lower() for item in _list(value))


def _text(value):
    return value.strip()


def _choice(options, lower=True):
    def parse(value):
        value = value.strip().lower() if lower else value.strip().upper()
        if value not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return value
    return parse


def _timestamp(value, key='AS_OF'):
    if not value or not value.strip():
        return None
    parsed = parse_timestamp(value)
    if parsed is None:
        raise ConfigError(f"{key}: not an ISO-8601 timestamp: '{value}'")
    return format_timestamp(parsed)


PARSERS = {
    'FASTPATH_THRESHOLD': ('fastpath_threshold', _float),
    'CONCEPT_THRESHOLD': ('concept_threshold', _float),
    'ASSOCIATION_THRESHOLD': ('association_threshold', _float),
    'NER_THRESHOLD': ('ner_threshold', _float),
    'RADIUS': ('radius', _int),
    'CONCEPT_LIMIT': ('concept_limit', _int),
    'CONCEPT_RELATIONS': ('concept_relations', _lower_list),
    'MIN_SUPPORT': ('min_support', _float),
    'MIN_CONFIDENCE': ('min_confidence', _float),
    'MIN_LIFT': ('min_lift', _float),
    'MAX_ITEMSET_SIZE': ('max_itemset_size', _optional_int),
    'BIGRAM_MODE': ('bigram_mode', _choice(BIGRAM_MODES)),
    'AGGREGATION': ('aggregation', _choice(AGGREGATIONS)),
    'STAGE_ORDER': ('stage_order', _list),
    'EXTERNAL_OVERRIDES': ('external_overrides', _flag),
    'NER_LABELS': ('ner_labels', _list),
    'TAGGER_PROVIDER': ('tagger_provider', _choice(TAGGER_PROVIDERS)),
    'TAGGER_COMMAND': ('tagger_command', _text),
    'TAGGER_TIMEOUT': ('tagger_timeout', _int),
    'OPENAI_MODEL': ('openai_model', _text),
    'EMBEDDINGS_PATH': ('embeddings_path', _text),
    'CONCEPT_KB_PATH': ('concept_kb_path', _text),
    'GAZETTEER_PATH': ('gazetteer_path', _text),
    'STOPWORDS_PATH': ('stopwords_path', _text),
    'LEMMAS_PATH': ('lemmas_path', _text),
    'EXTERNAL_SNAPSHOT_PATH': ('external_snapshot_path', _text),
    'EXTERNAL_SNAPSHOT_URL': ('external_snapshot_url', _text),
    'WORKERS': ('workers', _int),
    'LOG_LEVEL': ('log_level', _choice(LOG_LEVELS, lower=False)),
    'AS_OF': ('as_of', _timestamp),
}


def load_settings(config_path=None) -> AllocatorSettings:
    """Read settings from `config_path` (if given) with ALLOCATOR_* environment overrides."""
    raw = {}
    warnings = []
    if config_path:
        if not os.path.exists(config_path):
            raise ConfigError(f"config file not found: {config_path}")
        with decoding(config_path):
            values = dotenv_values(config_path, encoding='utf-8')
        for key, value in values.items():
            key = key.strip().upper()
            if key not in PARSERS:
                warnings.append(f"unknown config key '{key}' in {config_path}")
                continue
            raw[key] = value if value is not None else ''

    for key in PARSERS:
        override = os.getenv(ENV_PREFIX + key)
        if override is not None:
            raw[key] = override

    values = {}
    for key, value in raw.items():
        attr, parse = PARSERS[key]
        try:
            values[attr] = parse(value)
        except ConfigError:
            raise
        except ValueError as e:
            raise ConfigError(f"{key}: {e}") from e

    for message in warnings:
        logger.warning(message)

    settings = replace(AllocatorSettings(), warnings=tuple(warnings), **values)
    _validate(settings)
    return settings


def _validate(settings: AllocatorSettings):
    if settings.workers < 1:
        raise ConfigError(f"WORKERS must be >= 1, got {settings.workers}")
    if settings.tagger_timeout < 1:
        raise ConfigError(f"TAGGER_TIMEOUT must be >= 1, got {settings.tagger_timeout}")
    if settings.tagger_provider == 'process' and not settings.tagger_command:
        raise ConfigError("TAGGER_PROVIDER=process needs TAGGER_COMMAND")
    # cascade-level checks (thresholds, permutation, apriori ranges)
    settings.cascade_config()
