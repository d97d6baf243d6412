import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import List, Sequence

from .errors import MalformedRow, decoding
from .preprocess import OrphanEntity, PreprocessedDocument, RawDocument, TextNormalizer
from .resume_parser import ResumeParser
from .tagger_client import BaseTagger

logger = logging.getLogger(__name__)


class BatchProcessor:
    """Runs the per-resume work of a batch on a thread pool.

    Results always come back in input order. Graph commits never happen
    here; the cascade applies them one orphan at a time.
    """

    def __init__(self, normalizer: TextNormalizer, max_workers=5):
        self.normalizer = normalizer
        self.max_workers = max_workers
        self.executor = ThreadPoolExecutor(max_workers=max_workers)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def normalize_corpus(self, documents: Sequence[RawDocument]) -> List[PreprocessedDocument]:
        corpus = list(self.executor.map(self.normalizer.normalize, documents))
        tokens = sum(len(doc.tokens) for doc in corpus)
        logger.info(f"Preprocessed {len(corpus)} resumes ({tokens} tokens) with {self.max_workers} workers")
        return corpus

    def load_corpus(self, folder) -> List[PreprocessedDocument]:
        return self.normalize_corpus(ResumeParser().get_all_resumes(folder))

    def prefetch_tags(self, tagger: BaseTagger, corpus: Sequence[PreprocessedDocument], resume_ids=None):
        """Tag the resumes that will be needed ahead of the sequential cascade run."""
        wanted = set(resume_ids) if resume_ids is not None else None
        docs = [doc for doc in corpus if wanted is None or doc.id in wanted]
        tagged = list(self.executor.map(tagger.tag, docs))
        logger.info(f"Tagged {len(docs)} resumes ({sum(len(entities) for entities in tagged)} entities)")

    def close(self):
        self.executor.shutdown(wait=True)


def write_token_files(corpus: Sequence[PreprocessedDocument], out_dir) -> List[str]:
    """One `<resume_id>.tsv` per resume: surface, stem, lemma, raw position."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for doc in corpus:
        path = os.path.join(out_dir, f"{doc.id}.tsv")
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            for token in doc.tokens:
                f.write(f"{token.surface}\t{token.stem}\t{token.lemma}\t{token.position}\n")
        paths.append(path)
    logger.info(f"Wrote {len(paths)} token files to {out_dir}")
    return paths


def load_orphans(path) -> List[OrphanEntity]:
    """TSV `orphan<TAB>resume_id`; '#' comments and blank lines ignored, order kept."""
    orphans = []
    with decoding(path), open(path, 'r', encoding='utf-8') as f:
        for line_no, line in enumerate(f, 1):
            line = line.rstrip('\r\n')
            if not line.strip() or line.lstrip().startswith('#'):
                continue
            parts = line.split('\t')
            if len(parts) != 2:
                raise MalformedRow(path, line_no, 'expected orphan<TAB>resume_id')
            surface, resume_id = parts[0].strip(), parts[1].strip()
            if not surface or not resume_id:
                raise MalformedRow(path, line_no, 'empty orphan or resume id')
            orphans.append(OrphanEntity(surface, resume_id))
    logger.info(f"Loaded {len(orphans)} orphans from {path}")
    return orphans
