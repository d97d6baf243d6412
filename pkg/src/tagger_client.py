import abc
import logging
from dataclasses import dataclass
from typing import Iterable, List

from .preprocess import PreprocessedDocument

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TaggedEntity:
    surface: str
    label: str
    start: int
    end: int


class BaseTagger(abc.ABC):
    @abc.abstractmethod
    def tag(self, doc: PreprocessedDocument) -> List[TaggedEntity]:
        pass


def parse_tagged_lines(lines: Iterable[str], doc: PreprocessedDocument, origin: str = 'tagger') -> List[TaggedEntity]:
    """Parse `surface<TAB>label<TAB>start<TAB>end` lines (end exclusive) against the document tokens.

    Lines whose span falls outside the document or whose surface disagrees
    with the tokens of the span are dropped with a warning.
    """
    surfaces = doc.surfaces
    entities = []
    for line_no, line in enumerate(lines, 1):
        line = line.rstrip('\r\n')
        if not line.strip():
            continue
        parts = line.split('\t')
        if len(parts) != 4:
            logger.warning(f"{origin} line {line_no}: expected 4 tab-separated fields, got {len(parts)}")
            continue

        surface, label, start, end = (part.strip() for part in parts)
        try:
            start, end = int(start), int(end)
        except ValueError:
            logger.warning(f"{origin} line {line_no}: non-integer span")
            continue
        if not 0 <= start < end <= len(surfaces):
            logger.warning(f"{origin} line {line_no}: span {start}..{end} outside document '{doc.id}'")
            continue
        joined = ' '.join(surfaces[start:end])
        if joined != ' '.join(surface.lower().split()) or not label:
            logger.warning(f"{origin} line {line_no}: '{surface}' does not match tokens '{joined}'")
            continue
        entities.append(TaggedEntity(joined, label, start, end))
    return entities
