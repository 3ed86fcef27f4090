import abc
import logging

import numpy as np

from ..forge.streams import LabeledBatch

log = logging.getLogger("IADA")

DATA_TYPE_TEST = 1
DATA_TYPE_IDX = 2


class BaseIO(metaclass=abc.ABCMeta):
    """
    Source of the base (undeformed, labeled) digit pools
    """

    @abc.abstractmethod
    def load(self, split="train") -> LabeledBatch:
        raise NotImplementedError

    def load_subset(self, split="train", size=None, seed=0) -> LabeledBatch:
        batch = self.load(split)
        if size is None or size >= len(batch):
            return batch
        return subsample(batch, size, seed)


def subsample(batch, size, seed=0) -> LabeledBatch:
    """
    Keep size samples chosen by a seeded permutation (original order preserved)
    """
    keep = np.sort(np.random.default_rng(seed).permutation(len(batch))[:size])
    log.debug(f"subsampled {size} of {len(batch)} samples")
    return batch.take(keep)


def is_test_source(data_dir):
    return data_dir is not None and str(data_dir).lower() == "test"


def get_data_type(data_dir):
    if is_test_source(data_dir):
        return DATA_TYPE_TEST
    return DATA_TYPE_IDX


def get_data_io(data_dir=None, **kwargs) -> BaseIO:
    """
    Pick the loader for data_dir: 'test' gives the synthetic digits, anything else
    is read as a directory of idx digit archives
    """
    data_type = get_data_type(data_dir)
    if data_type == DATA_TYPE_TEST:
        log.info("Using testio for base digits")
        from .testio import TestIO

        return TestIO(**kwargs)
    log.info(f"Using idxio for base digits in {data_dir}")
    from .idxio import IdxIO

    return IdxIO(data_dir=data_dir)
