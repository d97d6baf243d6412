import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

from nltk.stem import PorterStemmer
from nltk.tokenize import RegexpTokenizer

from .errors import MalformedRow, decoding

logger = logging.getLogger(__name__)

DATA_FOLDER = Path(__file__).resolve().parent.parent / 'data'
DEFAULT_STOPWORDS_PATH = DATA_FOLDER / 'stopwords.txt'
DEFAULT_LEMMAS_PATH = DATA_FOLDER / 'lemmas.tsv'

# Alphanumeric runs; '-' and '.' survive between alphanumerics ("node.js",
# "front-end"), trailing '+' / '#' stay attached after a letter ("c++", "c#"; "10+" gives "10").
TOKEN_PATTERN = r"[^\W_]+(?:[-.][^\W_]+)*(?:(?<=[^\W\d_])[+#]+)?"


@dataclass(frozen=True)
class RawDocument:
    id: str
    text: str = ''


@dataclass(frozen=True)
class Token:
    surface: str
    stem: str
    lemma: str
    position: int


@dataclass(frozen=True)
class PreprocessedDocument:
    id: str
    tokens: Tuple[Token, ...] = ()

    @property
    def surfaces(self) -> List[str]:
        return [token.surface for token in self.tokens]

    @property
    def stems(self) -> List[str]:
        return [token.stem for token in self.tokens]


@dataclass(frozen=True)
class ContextWindow:
    orphan_surface: str
    words: Tuple[str, ...]
    radius: int
    occurrences: int = 0


@dataclass(frozen=True)
class OrphanEntity:
    """A context-poor term and the resume it was extracted from."""
    surface: str
    resume_id: str
    context: Optional[ContextWindow] = None


class TextNormalizer:
    """Lowercase -> tokenize -> drop stopwords -> stem and lemma.

    One instance is shared by every stage so that occurrence matching,
    transaction building and external lookups all stem identically.
    """

    def __init__(self, stopwords: Iterable[str] = (), lemmas: Optional[Dict[str, str]] = None):
        self.stopwords = frozenset(stopwords)
        self.lemmas = dict(lemmas or {})
        self._stemmer = PorterStemmer()
        self._tokenizer = RegexpTokenizer(TOKEN_PATTERN)

    def tokenize(self, text: str) -> List[str]:
        return self._tokenizer.tokenize(text.lower())

    def stem(self, surface: str) -> str:
        return self._stemmer.stem(surface) or surface

    def lemma(self, surface: str, stem: str) -> str:
        return self.lemmas.get(surface) or stem

    def term(self, text: str) -> str:
        """Normalized node id for a free-text term: its tokens joined by one space."""
        return ' '.join(self.tokenize(text))

    def stem_term(self, text: str) -> str:
        return ' '.join(self.stem(part) for part in self.tokenize(text))

    def normalize(self, doc: RawDocument) -> PreprocessedDocument:
        tokens = []
        for position, surface in enumerate(self.tokenize(doc.text)):
            if surface in self.stopwords:
                continue
            stem = self.stem(surface)
            tokens.append(Token(surface, stem, self.lemma(surface, stem), position))
        return PreprocessedDocument(doc.id, tuple(tokens))

    def extract_context(self, doc: PreprocessedDocument, orphan: str, radius: int,
                        fallback: bool = True) -> ContextWindow:
        if radius < 1:
            raise ValueError(f"radius must be >= 1, got {radius}")

        orphan_tokens = self.tokenize(orphan)
        orphan_surface = ' '.join(orphan_tokens)
        spans = self.find_occurrences(doc, orphan_tokens)
        surfaces = doc.surfaces

        if not spans:
            if not fallback:
                return ContextWindow(orphan_surface, (), radius, 0)
            leading = surfaces[:min(2 * radius, len(surfaces))]
            return ContextWindow(orphan_surface, tuple(_unique(leading)), radius, 0)

        excluded = set(orphan_tokens)
        excluded.add(orphan_surface)
        for start, end in spans:
            excluded.update(surfaces[start:end])

        collected = []
        for start, end in spans:
            collected.extend(surfaces[max(0, start - radius):start])
            collected.extend(surfaces[end:end + radius])

        words = [word for word in _unique(collected) if word not in excluded]
        return ContextWindow(orphan_surface, tuple(words), radius, len(spans))

    def find_occurrences(self, doc: PreprocessedDocument, orphan_tokens: List[str]) -> List[Tuple[int, int]]:
        """Token spans matching the orphan; stems are compared only when no surface matches."""
        width = len(orphan_tokens)
        if width == 0:
            return []

        surfaces = doc.surfaces
        last = len(surfaces) - width + 1
        spans = [(i, i + width) for i in range(last) if surfaces[i:i + width] == orphan_tokens]
        if spans:
            return spans

        orphan_stems = [self.stem(part) for part in orphan_tokens]
        stems = doc.stems
        return [(i, i + width) for i in range(last) if stems[i:i + width] == orphan_stems]

    def occurs_in(self, doc: PreprocessedDocument, orphan: str) -> bool:
        return bool(self.find_occurrences(doc, self.tokenize(orphan)))


def _unique(words):
    seen = set()
    for word in words:
        if word not in seen:
            seen.add(word)
            yield word


def normalize(doc: RawDocument, stopwords: Iterable[str], lemmas: Optional[Dict[str, str]] = None) -> PreprocessedDocument:
    return TextNormalizer(stopwords, lemmas).normalize(doc)


def extract_context(doc: PreprocessedDocument, orphan: str, radius: int, fallback: bool = True) -> ContextWindow:
    return TextNormalizer().extract_context(doc, orphan, radius, fallback=fallback)


def load_stopwords(path=DEFAULT_STOPWORDS_PATH) -> frozenset:
    """One lowercase word per line; '#' starts a comment."""
    words = set()
    with decoding(path), open(path, 'r', encoding='utf-8') as f:
        for line in f:
            word = line.split('#', 1)[0].strip().lower()
            if word:
                words.add(word)
    logger.info(f"Loaded {len(words)} stopwords from {path}")
    return frozenset(words)


def load_lemmas(path=DEFAULT_LEMMAS_PATH) -> Dict[str, str]:
    """TSV `surface<TAB>lemma`, lowercase; '#' comment lines and blank lines ignored."""
    lemmas = {}
    with decoding(path), open(path, 'r', encoding='utf-8') as f:
        for line_no, line in enumerate(f, 1):
            line = line.rstrip('\n')
            if not line.strip() or line.lstrip().startswith('#'):
                continue
            parts = line.split('\t')
            if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                raise MalformedRow(path, line_no, 'expected surface<TAB>lemma')
            lemmas[parts[0].strip().lower()] = parts[1].strip().lower()
    logger.info(f"Loaded {len(lemmas)} lemma entries from {path}")
    return lemmas
