"""External skill-taxonomy snapshots: ingestion into the graph and the
existence check that closes the cascade.

Snapshots are CSV files with the header `skill,category,source,retrieved_at`.
Each record becomes an edge skill -> category with External provenance.
"""
import csv
import logging
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, List, Optional

import requests

from .errors import IoFailure, MalformedRow, decoding
from .kgraph import Edge, KnowledgeGraph
from .preprocess import TextNormalizer
from .verdict import ModuleVerdict, Provenance

logger = logging.getLogger(__name__)

SNAPSHOT_FIELDS = ['skill', 'category', 'source', 'retrieved_at']


@dataclass(frozen=True)
class ExternalSkillRecord:
    skill: str
    category: str
    source: str
    retrieved_at: Optional[datetime]


@dataclass
class IngestReport:
    added_nodes: int = 0
    added_edges: int = 0
    updated_edges: int = 0
    skipped: int = 0
    reasons: List[str] = field(default_factory=list)

    def to_dict(self):
        return {
            'added_nodes': self.added_nodes,
            'added_edges': self.added_edges,
            'updated_edges': self.updated_edges,
            'skipped': self.skipped,
            'reasons': list(self.reasons),
        }


def parse_timestamp(value: str) -> Optional[datetime]:
    value = (value or '').strip()
    if not value:
        return None
    if value.endswith('Z'):
        value = value[:-1] + '+00:00'
    try:
        parsed = datetime.fromisoformat(value)
    except ValueError:
        return None
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed.astimezone(timezone.utc)


def format_timestamp(value: datetime) -> str:
    return value.astimezone(timezone.utc).isoformat()


def load_snapshot(path, normalizer: Optional[TextNormalizer] = None) -> List[ExternalSkillRecord]:
    """Read a snapshot CSV. Rows are kept even when invalid; ingest decides what to skip."""
    normalizer = normalizer or TextNormalizer()
    records = []
    with decoding(path), open(path, 'r', encoding='utf-8-sig', newline='') as f:
        reader = csv.DictReader(f)
        try:
            missing = [name for name in SNAPSHOT_FIELDS if name not in (reader.fieldnames or [])]
            if missing:
                raise MalformedRow(path, 1, f"header lacks {', '.join(missing)}")
            for row in reader:
                records.append(ExternalSkillRecord(
                    skill=normalizer.term(row.get('skill') or ''),
                    category=normalizer.term(row.get('category') or ''),
                    source=(row.get('source') or '').strip(),
                    retrieved_at=parse_timestamp(row.get('retrieved_at')),
                ))
        except csv.Error as e:
            raise MalformedRow(path, reader.line_num, str(e)) from e
    logger.info(f"Read {len(records)} external records from {path}")
    return records


def _invalid(record: ExternalSkillRecord) -> Optional[str]:
    if not record.skill:
        return 'empty skill'
    if not record.category:
        return 'empty category'
    if record.skill == record.category:
        return f"skill '{record.skill}' equals its category"
    if record.retrieved_at is None:
        return 'missing or invalid retrieved_at'
    return None


def ingest_external(kg: KnowledgeGraph, records: Iterable[ExternalSkillRecord]) -> IngestReport:
    """Idempotent: identical records add nothing; a newer retrieved_at refreshes the edge in place."""
    report = IngestReport()
    with kg.writer():
        for index, record in enumerate(records, 1):
            reason = _invalid(record)
            if reason:
                report.skipped += 1
                report.reasons.append(f"record {index}: {reason}")
                continue

            stamp = format_timestamp(record.retrieved_at)
            edge = Edge(record.skill, record.category, Provenance.EXTERNAL, 1.0, stamp,
                        {'source': record.source} if record.source else {})
            existing = kg.edge(record.skill, record.category, Provenance.EXTERNAL)
            if existing is not None:
                previous = parse_timestamp(existing.created_at)
                if previous is None or record.retrieved_at > previous:
                    kg.replace_edge(edge)
                    report.updated_edges += 1
                else:
                    report.skipped += 1
                continue

            for node in (record.skill, record.category):
                if not kg.has_node(node):
                    kg.add_node(node)
                    report.added_nodes += 1
            kg.add_edge(edge)
            report.added_edges += 1

    logger.info(f"External ingest: {report.added_nodes} nodes added, {report.added_edges} edges added, "
                f"{report.updated_edges} updated, {report.skipped} skipped")
    for reason in report.reasons:
        logger.warning(f"Skipped {reason}")
    return report


def external_lookup(kg: KnowledgeGraph, orphan: str, normalizer: Optional[TextNormalizer] = None) -> ModuleVerdict:
    """Existence check: exact surface first, then stem; Accepted at distance 0 with the skill's category."""
    normalizer = normalizer or TextNormalizer()
    term = normalizer.term(orphan)
    skills = kg.external_skills()

    match = skills.get(term)
    if match is None and term:
        stem = normalizer.stem_term(term)
        stemmed = sorted(skill for skill in skills if normalizer.stem_term(skill) == stem)
        if stemmed:
            match = skills[stemmed[0]]

    if match is None or match[0] == term:
        return ModuleVerdict.decline()
    return ModuleVerdict.accept(match[0], 0.0)


def fetch_snapshot(url: str, destination, timeout: int = 30):
    """Download a snapshot CSV and replace `destination` atomically."""
    try:
        response = requests.get(url, timeout=timeout)
        response.raise_for_status()
    except requests.RequestException as e:
        raise IoFailure(f"cannot fetch snapshot from {url}: {e}") from e

    folder = os.path.dirname(os.path.abspath(destination))
    tmp_path = None
    try:
        os.makedirs(folder, exist_ok=True)
        fd, tmp_path = tempfile.mkstemp(prefix='.snapshot-', suffix='.csv', dir=folder)
        with os.fdopen(fd, 'wb') as f:
            f.write(response.content)
        os.replace(tmp_path, destination)
    except OSError as e:
        _discard(tmp_path)
        raise IoFailure(f"cannot store snapshot at {destination}: {e}") from e
    logger.info(f"Fetched {len(response.content)} bytes from {url} into {destination}")


def _discard(tmp_path):
    if tmp_path and os.path.exists(tmp_path):
        try:
            os.unlink(tmp_path)
        except OSError as e:
            logger.warning(f"Could not remove temporary file {tmp_path}: {e}")
