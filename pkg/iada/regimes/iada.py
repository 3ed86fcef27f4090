import logging

from .regime import AbstractRegime, Stage

log = logging.getLogger("IADA")


class iada(AbstractRegime):
    """
    Incremental adaptation: one warm started stage per domain, in sequence order
    """

    def __init__(self, *args, **kwargs) -> None:
        super().__init__()
        self._regime_id = "iada"

    def plan(self, sequence, steps_per_domain, steps_total=None) -> list:
        budgets = self.budgets(sequence, steps_per_domain, steps_total)
        return [
            Stage(index=k, domains=(k,), steps=steps, evaluate_index=k)
            for k, steps in enumerate(budgets)
        ]
