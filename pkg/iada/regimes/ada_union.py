import logging

from .regime import AbstractRegime, Stage

log = logging.getLogger("IADA")


class ada_union(AbstractRegime):
    """
    One step adaptation to the uniform mixture of every domain in the sequence
    """

    def __init__(self, *args, **kwargs) -> None:
        super().__init__()
        self._regime_id = "ada_union"

    def plan(self, sequence, steps_per_domain, steps_total=None) -> list:
        steps = sum(self.budgets(sequence, steps_per_domain, steps_total))
        return [
            Stage(
                index=0,
                domains=tuple(range(sequence.count)),
                steps=steps,
                evaluate_index=sequence.count - 1,
            )
        ]
