from dotenv import load_dotenv
load_dotenv()

import argparse
import json
import logging
import os
import sys

from src import kgraph
from src.batch_processor import BatchProcessor, load_orphans, write_token_files
from src.cascade import allocate_batch, read_results_log, write_results_log
from src.config import DEFAULT_CONFIG_PATH, load_settings
from src.errors import AllocatorError, ConfigError
from src.evaluation import accuracy_curve, evaluate, load_gold, write_report_xlsx
from src.external_linker import fetch_snapshot, ingest_external, load_snapshot
from src.factory import get_normalizer, get_resources
from src.resume_parser import ResumeParser

logger = logging.getLogger('allocator')

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a whole number, got '{text}'")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def build_parser():
    parser = ArgumentParser(prog='app.py', description='Allocate orphan entities from resumes to a knowledge graph.')
    sub = parser.add_subparsers(dest='command', metavar='COMMAND', parser_class=ArgumentParser)
    sub.required = True

    def with_config(p):
        p.add_argument('--config', default=None,
                       help=f'KEY=value settings file (default: {DEFAULT_CONFIG_PATH} when present)')
        return p

    p = with_config(sub.add_parser('preprocess', help='normalize a corpus folder into token files'))
    p.add_argument('--corpus', default='candidates', help='folder of .txt resumes')
    p.add_argument('--out', required=True, help='folder for <resume_id>.tsv token files')

    p = with_config(sub.add_parser('ingest-external', help='ingest an external skill snapshot CSV'))
    p.add_argument('--snapshot', required=True)
    p.add_argument('--graph', required=True)

    p = with_config(sub.add_parser('refresh-external', help='download the configured snapshot and ingest it'))
    p.add_argument('--graph', required=True)
    p.add_argument('--url', default=None, help='overrides EXTERNAL_SNAPSHOT_URL')
    p.add_argument('--snapshot', default=None, help='where to store the download (default: EXTERNAL_SNAPSHOT_PATH)')

    p = with_config(sub.add_parser('allocate', help='allocate orphans and update the graph'))
    p.add_argument('--orphans', required=True, help='TSV orphan<TAB>resume_id')
    p.add_argument('--corpus', default='candidates')
    p.add_argument('--graph', required=True)
    p.add_argument('--results', default='results.ndjson')
    p.add_argument('--as-of', default=None,
                   help='ISO-8601 timestamp stamped on committed edges (default: newest edge time in the graph)')

    p = with_config(sub.add_parser('evaluate', help='score a results log against gold labels'))
    p.add_argument('--results', required=True)
    p.add_argument('--gold', required=True)
    p.add_argument('--xlsx', default=None, help='also write a spreadsheet report')
    p.add_argument('--curve-step', type=_positive_int, default=None, help='add cumulative accuracy every N resumes')

    p = with_config(sub.add_parser('export', help='export the graph as dot, graphml or json'))
    p.add_argument('--graph', required=True)
    p.add_argument('--format', required=True, choices=kgraph.EXPORT_FORMATS)
    p.add_argument('--out', default=None, help='output file (default: stdout)')
    return parser


def _settings(args):
    path = args.config
    if path is None and os.path.exists(DEFAULT_CONFIG_PATH):
        path = DEFAULT_CONFIG_PATH
    settings = load_settings(path)
    logging.getLogger().setLevel(settings.log_level)
    return settings


def _load_graph(path):
    if os.path.exists(path):
        return kgraph.load(path)
    logger.info(f"🔄 No graph at {path}, starting from an empty graph")
    return kgraph.KnowledgeGraph()


def cmd_preprocess(args, settings):
    normalizer = get_normalizer(settings)
    with BatchProcessor(normalizer, max_workers=settings.workers) as processor:
        corpus = processor.load_corpus(args.corpus)
    write_token_files(corpus, args.out)


def cmd_ingest_external(args, settings):
    kg = _load_graph(args.graph)
    report = ingest_external(kg, load_snapshot(args.snapshot, get_normalizer(settings)))
    kgraph.save(kg, args.graph)
    print(json.dumps(report.to_dict(), indent=2))


def cmd_refresh_external(args, settings):
    url = args.url or settings.external_snapshot_url
    if not url:
        raise ConfigError('no snapshot URL: pass --url or set EXTERNAL_SNAPSHOT_URL')
    destination = args.snapshot or settings.external_snapshot_path
    fetch_snapshot(url, destination)
    args.snapshot = destination
    cmd_ingest_external(args, settings)


def cmd_allocate(args, settings):
    cfg = settings.cascade_config(as_of=args.as_of)
    resources = get_resources(settings)
    orphans = load_orphans(args.orphans)
    kg = _load_graph(args.graph)

    with BatchProcessor(resources.normalizer, max_workers=settings.workers) as processor:
        corpus = processor.normalize_corpus(ResumeParser().get_all_resumes(args.corpus))
        processor.prefetch_tags(resources.tagger, corpus, {orphan.resume_id for orphan in orphans})

    results = allocate_batch(orphans, corpus, kg, resources, cfg)
    write_results_log(results, args.results)
    kgraph.save(kg, args.graph)


def cmd_evaluate(args, settings):
    normalizer = get_normalizer(settings)
    results = read_results_log(args.results)
    gold = load_gold(args.gold)
    report = evaluate(results, gold, normalizer)
    output = report.to_dict()
    if args.curve_step:
        output['curve'] = [
            {'resumes': count, 'accuracy_percent': accuracy}
            for count, accuracy in accuracy_curve(results, gold, args.curve_step, normalizer)
        ]
    if args.xlsx:
        write_report_xlsx(report, results, gold, args.xlsx, normalizer)
    print(json.dumps(output, indent=2))


def cmd_export(args, settings):
    if not os.path.exists(args.graph):
        raise ConfigError(f"graph file not found: {args.graph}")
    data = kgraph.export(kgraph.load(args.graph), args.format)
    if args.out:
        with open(args.out, 'wb') as f:
            f.write(data)
        logger.info(f"Exported {args.format} to {args.out}")
    else:
        sys.stdout.write(data.decode('utf-8'))


COMMANDS = {
    'preprocess': cmd_preprocess,
    'ingest-external': cmd_ingest_external,
    'refresh-external': cmd_refresh_external,
    'allocate': cmd_allocate,
    'evaluate': cmd_evaluate,
    'export': cmd_export,
}


def run_cli(argv=None) -> int:
    """Exit codes: 0 success, 1 usage error, 2 data or I/O error."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(str(e), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        return EXIT_OK if not e.code else EXIT_USAGE

    try:
        settings = _settings(args)
        COMMANDS[args.command](args, settings)
    except (AllocatorError, OSError) as e:
        logger.error(f"❌ {args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == '__main__':
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    sys.exit(run_cli())
