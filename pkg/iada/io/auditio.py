import logging
from collections import defaultdict

log = logging.getLogger("IADA")


class AccessAudit:
    """
    Per (dataset, phase) read counters, only ever incremented
    """

    def __init__(self) -> None:
        self._counters = defaultdict(int)

    def __str__(self):
        return f"AccessAudit {self.as_dict()}"

    def record(self, dataset, phase, reads=1):
        if reads < 0:
            raise ValueError("read counters cannot decrease")
        self._counters[(dataset, phase)] += reads

    def count(self, dataset, phase=None) -> int:
        return sum(
            n for (name, tag), n in self._counters.items() if name == dataset and (phase is None or tag == phase)
        )

    def as_dict(self) -> dict:
        result = {}
        for (dataset, phase), n in sorted(self._counters.items()):
            result.setdefault(dataset, {})[phase] = n
        return result

    @classmethod
    def from_dict(cls, data) -> "AccessAudit":
        audit = cls()
        for dataset, phases in data.items():
            for phase, n in phases.items():
                audit.record(dataset, phase, n)
        return audit


class AuditedStream:
    """
    Guarded handle around a DomainStream: every batch read is counted against phase
    """

    def __init__(self, stream, name, phase, audit) -> None:
        self._stream = stream
        self.name = name
        self.phase = phase
        self.audit = audit

    def __str__(self):
        return f"AuditedStream {self.name} ({self.phase}) over {self._stream}"

    def __len__(self):
        return len(self._stream)

    @property
    def spec(self):
        return self._stream.spec

    def batches(self, *args, **kwargs):
        for batch in self._stream.batches(*args, **kwargs):
            self.audit.record(self.name, self.phase)
            yield batch

    def materialize(self):
        self.audit.record(self.name, self.phase)
        return self._stream.materialize()


def audit_guard(dataset, phase, audit=None, name="source") -> AuditedStream:
    if audit is None:
        audit = AccessAudit()
    log.debug(f"guarding dataset {name} for phase {phase}")
    return AuditedStream(dataset, name, phase, audit)
