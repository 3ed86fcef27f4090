import abc
import logging
from dataclasses import dataclass
from typing import Tuple

from ..exceptions import InvalidArgumentError

log = logging.getLogger("IADA")


@dataclass(frozen=True)
class Stage:
    """
    One adaptation stage: the domains its target data is drawn from (uniform
    mixture when several), its step budget and the domain evaluated after it
    """

    index: int
    domains: Tuple[int, ...]
    steps: int
    evaluate_index: int

    @property
    def mixed(self) -> bool:
        return len(self.domains) > 1


class AbstractRegime(metaclass=abc.ABCMeta):
    def __init__(self, *args, **kwargs) -> None:
        self._regime_id = None

    def __str__(self):
        return f"regime {self._regime_id}"

    def get_regime_id(self) -> str:
        return self._regime_id

    @abc.abstractmethod
    def plan(self, sequence, steps_per_domain, steps_total=None) -> list:
        raise NotImplementedError

    def check(self, sequence, steps_per_domain, steps_total=None):
        if steps_per_domain < 1:
            raise InvalidArgumentError(f"steps_per_domain must be >= 1, got {steps_per_domain}")
        if sequence.count < 1:
            raise InvalidArgumentError("domain sequence is empty")
        if steps_total is not None and steps_total < sequence.count:
            raise InvalidArgumentError(f"{sequence.count} domains cannot share {steps_total} steps")

    def budgets(self, sequence, steps_per_domain, steps_total=None) -> list:
        """
        Steps per domain summing to steps_total (or count x steps_per_domain);
        the remainder goes one step each to the earliest domains
        """
        self.check(sequence, steps_per_domain, steps_total)
        count = sequence.count
        if steps_total is None:
            return [steps_per_domain] * count
        share, extra = divmod(steps_total, count)
        return [share + (1 if k < extra else 0) for k in range(count)]
