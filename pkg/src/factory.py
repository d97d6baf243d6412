import logging
import os

from .cascade import CascadeResources
from .concept_kb import ConceptKB, load_concept_kb
from .embeddings import load_embeddings
from .errors import ConfigError
from .manager import TaggerService
from .ner import GazetteerTagger, load_gazetteer
from .openai_adapter import OpenAITagger
from .preprocess import TextNormalizer, load_lemmas, load_stopwords
from .process_adapter import ProcessTagger

logger = logging.getLogger(__name__)


def get_tagger(settings):
    provider = (settings.tagger_provider or 'gazetteer').lower()
    if provider == 'process':
        if not settings.tagger_command:
            raise ConfigError("TAGGER_PROVIDER=process needs TAGGER_COMMAND")
        client = ProcessTagger(settings.tagger_command, timeout=settings.tagger_timeout)
    elif provider == 'openai':
        client = OpenAITagger(model=settings.openai_model or None)
    elif provider == 'gazetteer':
        gazetteer = {}
        if settings.gazetteer_path and os.path.exists(settings.gazetteer_path):
            gazetteer = load_gazetteer(settings.gazetteer_path)
        else:
            logger.warning(f"⚠️ No gazetteer at '{settings.gazetteer_path}', NER will tag nothing")
        client = GazetteerTagger(gazetteer)
    else:
        raise ConfigError(f"unknown TAGGER_PROVIDER '{settings.tagger_provider}'")
    return TaggerService(client)


def get_normalizer(settings) -> TextNormalizer:
    stopwords = load_stopwords(settings.stopwords_path) if settings.stopwords_path else ()
    lemmas = load_lemmas(settings.lemmas_path) if settings.lemmas_path else {}
    return TextNormalizer(stopwords, lemmas)


def get_concept_kb(settings) -> ConceptKB:
    if settings.concept_kb_path and os.path.exists(settings.concept_kb_path):
        return load_concept_kb(settings.concept_kb_path)
    logger.warning(f"⚠️ No concept KB at '{settings.concept_kb_path}', concept mining will decline")
    return ConceptKB()


def get_resources(settings, normalizer=None) -> CascadeResources:
    """Load everything the cascade reads: embeddings, concept KB, tagger and normalizer."""
    return CascadeResources(
        store=load_embeddings(settings.embeddings_path),
        concept_kb=get_concept_kb(settings),
        tagger=get_tagger(settings),
        normalizer=normalizer or get_normalizer(settings),
    )
