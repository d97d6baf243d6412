from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple


class Provenance(str, Enum):
    FASTPATH = 'FastPath'
    CONCEPT = 'Concept'
    ASSOCIATION = 'Association'
    NER = 'NER'
    EXTERNAL = 'External'

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace('_', '').replace('-', '')
        for member in cls:
            if member.value.lower() == key or member.name.lower() == key:
                return member
        raise ValueError(f"unknown stage '{value}'")


@dataclass(frozen=True)
class ModuleVerdict:
    """Accepted(destination, distance) or Declined(best seen pair, possibly none)."""
    accepted: bool
    destination: Optional[str] = None
    distance: Optional[float] = None

    @classmethod
    def accept(cls, destination: str, distance: float):
        return cls(True, destination, distance)

    @classmethod
    def decline(cls, best: Optional[Tuple[str, float]] = None):
        if best is None:
            return cls(False)
        return cls(False, best[0], best[1])

    @property
    def best(self) -> Optional[Tuple[str, float]]:
        if self.destination is None:
            return None
        return self.destination, self.distance

    def to_dict(self):
        return {
            'outcome': 'Accepted' if self.accepted else 'Declined',
            'destination': self.destination,
            'distance': self.distance,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(data['outcome'] == 'Accepted', data.get('destination'), data.get('distance'))


def check_threshold(threshold: float):
    if not 0.0 <= threshold <= 2.0:
        raise ValueError(f"threshold must lie in [0, 2], got {threshold}")


def gate(best: Optional[Tuple[str, float]], threshold: float) -> ModuleVerdict:
    """Accept the best candidate when its distance is at most the threshold."""
    check_threshold(threshold)
    if best is None:
        return ModuleVerdict.decline()
    if best[1] <= threshold:
        return ModuleVerdict.accept(*best)
    return ModuleVerdict.decline(best)
