"""Accuracy of a results log against hand-labelled gold allocations.

accuracy = 100 * correct / allocated. Coverage (allocated / all orphans) is
reported next to it, so unallocated orphans are visible without counting
against accuracy.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from openpyxl import Workbook
from openpyxl.styles import Alignment, Font, PatternFill

from .cascade import AllocationResult
from .errors import DuplicateGold, MalformedRow, MissingGold, decoding
from .preprocess import TextNormalizer
from .verdict import Provenance

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LabeledOrphan:
    orphan: str
    resume_id: str
    gold_destination: str

    def __post_init__(self):
        if not self.orphan or not self.resume_id or not self.gold_destination:
            raise ValueError('labeled orphan needs orphan, resume id and gold destination')


@dataclass
class AccuracyReport:
    total_orphans: int = 0
    total_allocated: int = 0
    correct: int = 0
    unallocated: int = 0
    per_module: Dict[Provenance, Tuple[int, int]] = field(default_factory=dict)

    @property
    def accuracy_percent(self) -> Optional[float]:
        if self.total_allocated == 0:
            return None
        return 100.0 * self.correct / self.total_allocated

    @property
    def coverage_percent(self) -> Optional[float]:
        if self.total_orphans == 0:
            return None
        return 100.0 * self.total_allocated / self.total_orphans

    def to_dict(self):
        return {
            'total_orphans': self.total_orphans,
            'total_allocated': self.total_allocated,
            'correct': self.correct,
            'accuracy_percent': self.accuracy_percent,
            'coverage_percent': self.coverage_percent,
            'unallocated': self.unallocated,
            'per_module': {
                module.value: {'allocated': allocated, 'correct': correct}
                for module, (allocated, correct) in sorted(self.per_module.items(), key=lambda item: _rank(item[0]))
            },
        }


def _rank(module: Provenance) -> int:
    return list(Provenance).index(module)


def _key(normalizer, orphan, resume_id):
    return normalizer.term(orphan), resume_id


def index_gold(gold: Sequence[LabeledOrphan], normalizer: Optional[TextNormalizer] = None) -> Dict[tuple, str]:
    normalizer = normalizer or TextNormalizer()
    indexed = {}
    for entry in gold:
        key = _key(normalizer, entry.orphan, entry.resume_id)
        if key in indexed:
            raise DuplicateGold(entry.orphan, entry.resume_id)
        indexed[key] = normalizer.term(entry.gold_destination)
    return indexed


def evaluate(results: Sequence[AllocationResult], gold: Sequence[LabeledOrphan],
             normalizer: Optional[TextNormalizer] = None) -> AccuracyReport:
    """Every result needs a gold entry (MissingGold otherwise); result order does not matter."""
    normalizer = normalizer or TextNormalizer()
    indexed = index_gold(gold, normalizer)
    report = AccuracyReport()
    per_module = {}

    for result in results:
        key = _key(normalizer, result.orphan, result.resume_id)
        if key not in indexed:
            raise MissingGold(result.orphan, result.resume_id)
        report.total_orphans += 1
        if not result.allocated:
            report.unallocated += 1
            continue

        hit = normalizer.term(result.destination or '') == indexed[key]
        report.total_allocated += 1
        report.correct += int(hit)
        allocated, correct = per_module.get(result.module, (0, 0))
        per_module[result.module] = (allocated + 1, correct + int(hit))

    report.per_module = per_module
    logger.info(f"Accuracy: {report.correct}/{report.total_allocated} correct, "
                f"{report.total_allocated}/{report.total_orphans} allocated")
    return report


def accuracy_curve(results: Sequence[AllocationResult], gold: Sequence[LabeledOrphan], step: int = 1,
                   normalizer: Optional[TextNormalizer] = None) -> List[Tuple[int, Optional[float]]]:
    """Cumulative accuracy after every `step` resumes, in the order resumes first appear in the log."""
    if step < 1:
        raise ValueError(f"step must be >= 1, got {step}")
    order = []
    for result in results:
        if result.resume_id not in order:
            order.append(result.resume_id)

    curve = []
    for count in range(step, len(order) + step, step):
        count = min(count, len(order))
        seen = set(order[:count])
        report = evaluate([result for result in results if result.resume_id in seen], gold, normalizer)
        curve.append((count, report.accuracy_percent))
        if count == len(order):
            break
    return curve


def load_gold(path) -> List[LabeledOrphan]:
    """TSV `orphan<TAB>resume_id<TAB>gold_destination`; '#' comments and blank lines ignored."""
    gold = []
    with decoding(path), open(path, 'r', encoding='utf-8') as f:
        for line_no, line in enumerate(f, 1):
            line = line.rstrip('\r\n')
            if not line.strip() or line.lstrip().startswith('#'):
                continue
            parts = [part.strip() for part in line.split('\t')]
            if len(parts) != 3 or not all(parts):
                raise MalformedRow(path, line_no, 'expected orphan<TAB>resume_id<TAB>gold_destination')
            gold.append(LabeledOrphan(parts[0], parts[1], parts[2].lower()))
    logger.info(f"Loaded {len(gold)} gold labels from {path}")
    return gold


def _write_sheet(ws, headers, rows, color):
    for col, header in enumerate(headers, 1):
        cell = ws.cell(row=1, column=col, value=header)
        cell.font = Font(bold=True)
        cell.fill = PatternFill(start_color=color, end_color=color, fill_type="solid")
        cell.alignment = Alignment(horizontal="center")

    for row, values in enumerate(rows, 2):
        for col, value in enumerate(values, 1):
            ws.cell(row=row, column=col, value=value)

    # Auto-adjust column widths
    for column in ws.columns:
        column_letter = column[0].column_letter
        max_length = max(len(str(cell.value)) if cell.value is not None else 0 for cell in column)
        ws.column_dimensions[column_letter].width = min(max_length + 2, 60)


def write_report_xlsx(report: AccuracyReport, results: Sequence[AllocationResult], gold: Sequence[LabeledOrphan],
                      path, normalizer: Optional[TextNormalizer] = None):
    """Summary, per-module breakdown and one row per result."""
    normalizer = normalizer or TextNormalizer()
    indexed = index_gold(gold, normalizer)

    wb = Workbook()
    ws = wb.active
    ws.title = "Summary"
    summary = report.to_dict()
    _write_sheet(ws, ['Metric', 'Value'],
                 [(name, value) for name, value in summary.items() if name != 'per_module'], "CCCCCC")

    _write_sheet(wb.create_sheet("By Module"), ['Module', 'Allocated', 'Correct', 'Accuracy %'],
                 [(module, counts['allocated'], counts['correct'],
                   100.0 * counts['correct'] / counts['allocated'] if counts['allocated'] else None)
                  for module, counts in summary['per_module'].items()], "CCCCCC")

    rows = []
    for result in results:
        expected = indexed.get(_key(normalizer, result.orphan, result.resume_id))
        rows.append((
            result.resume_id,
            result.orphan,
            'Allocated' if result.allocated else 'Unallocated',
            result.destination if result.allocated else None,
            result.module.value if result.module else None,
            result.distance,
            expected,
            result.allocated and normalizer.term(result.destination or '') == expected,
        ))
    _write_sheet(wb.create_sheet("Results"),
                 ['Resume', 'Orphan', 'Outcome', 'Destination', 'Module', 'Distance', 'Gold', 'Correct'],
                 rows, "CCCCCC")

    wb.save(path)
    logger.info(f"Wrote accuracy report to {path}")
