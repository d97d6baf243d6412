from contextlib import contextmanager


class AllocatorError(Exception):
    """Base class for every data error the allocator reports."""


class MalformedRow(AllocatorError):
    def __init__(self, path, line_no, detail=''):
        self.path = str(path)
        self.line_no = line_no
        self.detail = detail
        super().__init__(f"{self.path}:{line_no}: malformed row{': ' + detail if detail else ''}")


class InconsistentDimension(AllocatorError):
    def __init__(self, path, line_no, expected, found):
        self.path = str(path)
        self.line_no = line_no
        self.expected = expected
        self.found = found
        super().__init__(f"{self.path}:{line_no}: expected {expected} components, found {found}")


class EmptyFile(AllocatorError):
    def __init__(self, path):
        self.path = str(path)
        super().__init__(f"{self.path}: no rows")


class ZeroVector(AllocatorError):
    pass


class SchemaViolation(AllocatorError):
    def __init__(self, detail):
        self.detail = detail
        super().__init__(f"graph schema violation: {detail}")


class IoFailure(AllocatorError):
    pass


class SelfLoop(AllocatorError):
    def __init__(self, node):
        self.node = node
        super().__init__(f"refusing self-loop on '{node}'")


class EmptyCorpus(AllocatorError):
    pass


class MissingGold(AllocatorError):
    def __init__(self, orphan, resume_id):
        self.orphan = orphan
        self.resume_id = resume_id
        super().__init__(f"no gold label for orphan '{orphan}' in resume '{resume_id}'")


class ConfigError(AllocatorError):
    pass


class TaggerError(AllocatorError):
    pass


class DuplicateGold(AllocatorError):
    def __init__(self, orphan, resume_id):
        self.orphan = orphan
        self.resume_id = resume_id
        super().__init__(f"duplicate gold entry for '{orphan}' in '{resume_id}'")


@contextmanager
def decoding(path):
    """Report undecodable text input as IoFailure naming the file."""
    try:
        yield
    except UnicodeDecodeError as e:
        raise IoFailure(f"{path}: not valid UTF-8 ({e.reason} at byte {e.start})") from e
