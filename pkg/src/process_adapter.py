import logging
import shlex
import subprocess

from .errors import TaggerError
from .tagger_client import BaseTagger, parse_tagged_lines

logger = logging.getLogger(__name__)


class ProcessTagger(BaseTagger):
    """Runs an external tagger: tokens one per line on stdin, tagged lines on stdout."""

    def __init__(self, command, timeout=60):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = timeout

    def tag(self, doc):
        if not doc.tokens:
            return []
        stdin = ''.join(f"{surface}\n" for surface in doc.surfaces)
        try:
            result = subprocess.run(
                self.command,
                input=stdin,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                encoding='utf-8',
                timeout=self.timeout,
                check=False,
            )
        except subprocess.TimeoutExpired as e:
            raise TaggerError(f"tagger exceeded {self.timeout} seconds on resume '{doc.id}'") from e
        except OSError as e:
            raise TaggerError(f"cannot start tagger {self.command[0]!r}: {e}") from e

        if result.returncode != 0:
            raise TaggerError(
                f"tagger exited with code {result.returncode} on resume '{doc.id}': {result.stderr.strip()}")
        return parse_tagged_lines(result.stdout.splitlines(), doc, origin=self.command[0])
