import threading

from .tagger_client import BaseTagger


class TaggerService(BaseTagger):
    """Tags each resume once; later calls for the same resume id are served from cache."""

    def __init__(self, client: BaseTagger):
        self.client = client
        self._cache = {}
        self._lock = threading.Lock()

    def tag(self, doc):
        with self._lock:
            cached = self._cache.get(doc.id)
        if cached is None:
            cached = tuple(self.client.tag(doc))
            with self._lock:
                self._cache[doc.id] = cached
        return list(cached)
