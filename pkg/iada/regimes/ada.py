import logging

from .regime import AbstractRegime, Stage

log = logging.getLogger("IADA")


class ada(AbstractRegime):
    """
    One step adaptation to the final domain, with the whole sequence's step budget
    """

    def __init__(self, *args, **kwargs) -> None:
        super().__init__()
        self._regime_id = "ada"

    def plan(self, sequence, steps_per_domain, steps_total=None) -> list:
        steps = sum(self.budgets(sequence, steps_per_domain, steps_total))
        final = sequence.count - 1
        return [Stage(index=0, domains=(final,), steps=steps, evaluate_index=final)]
