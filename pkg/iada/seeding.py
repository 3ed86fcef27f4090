import logging

import numpy as np
import torch

log = logging.getLogger("IADA")

# Order matters: the position is the spawn key, changing it changes every derived seed
PHASES = ("data", "init", "source", "gan", "noise", "buffer", "stream", "eval")


class SeedSplitter:
    """
    Expand a single root seed into independent per-phase seeds

    seed(phase, index) is a pure function of (root, phase, index) so any phase
    can be replayed on its own
    """

    def __init__(self, root_seed=0) -> None:
        self.root_seed = int(root_seed)

    def __str__(self):
        return f"SeedSplitter root: {self.root_seed}"

    def seed(self, phase, index=0) -> int:
        if phase not in PHASES:
            raise KeyError(f"unknown seed phase {phase}")
        sequence = np.random.SeedSequence(
            entropy=self.root_seed, spawn_key=(PHASES.index(phase), int(index))
        )
        return int(sequence.generate_state(1, dtype=np.uint32)[0])

    def rng(self, phase, index=0) -> np.random.Generator:
        return np.random.default_rng(self.seed(phase, index))

    def generator(self, phase, index=0, device="cpu") -> torch.Generator:
        gen = torch.Generator(device=device)
        gen.manual_seed(self.seed(phase, index))
        return gen


def set_deterministic():
    """
    Ask torch for deterministic kernels (warn only where none exists)
    """
    log.debug("enabling deterministic torch algorithms")
    torch.use_deterministic_algorithms(True, warn_only=True)
