import gzip
import os
import struct
import tempfile
import unittest

import numpy as np

from iada.exceptions import ResourceError
from iada.forge.domains import DomainSpec
from iada.forge.streams import DomainStream
from iada.io.atomic import atomic_write, directory_lock
from iada.io.auditio import AccessAudit, audit_guard
from iada.io.baseio import get_data_io, subsample
from iada.io.cacheio import domain_filename, read_domain, write_domain
from iada.io.idxio import IdxIO, read_idx
from iada.io.testio import TestIO


def idx_bytes(array):
    array = np.asarray(array, dtype=np.uint8)
    header = struct.pack(">HBB", 0, 0x08, array.ndim) + struct.pack(f">{array.ndim}I", *array.shape)
    return header + array.tobytes()


class test_idxio(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def test_read_idx(self):
        """ decode a small image archive, plain and gzipped """
        images = np.arange(2 * 3 * 4).reshape(2, 3, 4)
        plain = os.path.join(self.dir, "images")
        with open(plain, "wb") as f:
            f.write(idx_bytes(images))
        packed = os.path.join(self.dir, "images.gz")
        with gzip.open(packed, "wb") as f:
            f.write(idx_bytes(images))
        np.testing.assert_array_equal(read_idx(plain), images)
        np.testing.assert_array_equal(read_idx(packed), images)

    def test_bad_archive(self):
        """ wrong magic, truncated payload and missing files are resource errors """
        bad = os.path.join(self.dir, "bad")
        with open(bad, "wb") as f:
            f.write(b"\x00\x00\x0d\x01" + struct.pack(">I", 2) + b"\x00" * 8)
        self.assertRaises(ResourceError, read_idx, bad)
        short = os.path.join(self.dir, "short")
        with open(short, "wb") as f:
            f.write(idx_bytes(np.zeros(4))[:-1])
        self.assertRaises(ResourceError, read_idx, short)
        self.assertRaises(ResourceError, read_idx, os.path.join(self.dir, "nope"))

    def test_load_split(self):
        """ IdxIO scales pixels to [0, 1] and pairs them with labels """
        images = np.full((3, 28, 28), 255)
        labels = np.array([1, 2, 3])
        for name, data in (("t10k-images-idx3-ubyte", images), ("t10k-labels-idx1-ubyte", labels)):
            with open(os.path.join(self.dir, name), "wb") as f:
                f.write(idx_bytes(data))
        batch = IdxIO(self.dir).load("test")
        self.assertEqual(batch.images.shape, (3, 28, 28))
        np.testing.assert_allclose(batch.images, 1.0)
        self.assertEqual(batch.labels.tolist(), [1, 2, 3])
        self.assertRaises(ResourceError, IdxIO(self.dir).load, "train")
        self.assertRaises(ResourceError, IdxIO(os.path.join(self.dir, "missing")).load, "test")


class test_testio(unittest.TestCase):
    def test_synthetic_digits(self):
        """ synthetic digits are balanced, in range and replayable """
        data_io = TestIO(train_size=50, test_size=20, seed=1)
        batch = data_io.load("train")
        self.assertEqual(batch.images.shape, (50, 28, 28))
        self.assertEqual(np.bincount(batch.labels, minlength=10).tolist(), [5] * 10)
        self.assertTrue((batch.images >= 0).all() and (batch.images <= 1).all())
        np.testing.assert_array_equal(batch.images, TestIO(train_size=50, test_size=20, seed=1).load("train").images)
        self.assertEqual(len(data_io.load("test")), 20)

    def test_get_data_io(self):
        """ 'test' selects the synthetic digits, anything else the idx loader """
        self.assertIsInstance(get_data_io("test", train_size=10), TestIO)
        self.assertIsInstance(get_data_io("/tmp/digits"), IdxIO)

    def test_subsample(self):
        """ subsets are seeded and keep the original order """
        batch = TestIO(train_size=30).load("train")
        subset = subsample(batch, 10, seed=4)
        self.assertEqual(len(subset), 10)
        np.testing.assert_array_equal(subset.images, subsample(batch, 10, seed=4).images)
        self.assertEqual(len(TestIO(train_size=30).load_subset("train", 100)), 30)


class test_cacheio(unittest.TestCase):
    def test_domain_cache(self):
        """ a cached labeled domain reads back with its factor, seed and labels """
        images = np.random.default_rng(0).uniform(size=(6, 28, 28)).astype(np.float32)
        stream = DomainStream(DomainSpec(0.7, index=2, seed=99), images, np.arange(6) % 10)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, domain_filename(2, labeled=True))
            write_domain(path, stream)
            loaded = read_domain(path, index=2)
        self.assertEqual(loaded.spec, stream.spec)
        np.testing.assert_array_equal(loaded.materialize().images, images)
        np.testing.assert_array_equal(loaded.materialize().labels, np.arange(6) % 10)
        self.assertEqual(domain_filename(3), "domain_3.bin")

    def test_missing_cache(self):
        """ reading a missing cache file fails """
        self.assertRaises(ResourceError, read_domain, "/nonexistent/domain_0.bin")


class test_audit(unittest.TestCase):
    def test_counters(self):
        """ counters only grow and serialise per dataset and phase """
        audit = AccessAudit()
        audit.record("source", "adapt")
        audit.record("source", "adapt", 2)
        audit.record("source", "train")
        self.assertEqual(audit.count("source", "adapt"), 3)
        self.assertEqual(audit.count("source"), 4)
        self.assertEqual(audit.count("target"), 0)
        self.assertRaises(ValueError, audit.record, "source", "adapt", -1)
        self.assertEqual(AccessAudit.from_dict(audit.as_dict()).as_dict(), {"source": {"adapt": 3, "train": 1}})

    def test_guard_counts_reads(self):
        """ every batch pulled through the guard is one read """
        stream = DomainStream(DomainSpec(1.0), np.zeros((8, 28, 28)), np.zeros(8, dtype=int))
        audit = AccessAudit()
        guarded = audit_guard(stream, "adapt", audit)
        self.assertEqual(audit.count("source", "adapt"), 0)
        batches = guarded.batches(4)
        next(batches)
        next(batches)
        guarded.materialize()
        self.assertEqual(audit.count("source", "adapt"), 3)
        self.assertEqual(len(guarded), 8)


class test_atomic(unittest.TestCase):
    def test_atomic_write(self):
        """ a failed write leaves neither the target nor a temporary file """
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "out.txt")
            with atomic_write(path, "w") as f:
                f.write("done –")
            with open(path, encoding="utf-8") as f:
                self.assertEqual(f.read(), "done –")
            failed = os.path.join(tmp, "failed.txt")
            with self.assertRaises(RuntimeError):
                with atomic_write(failed, "w") as f:
                    f.write("partial")
                    raise RuntimeError("interrupted")
            self.assertEqual(sorted(os.listdir(tmp)), ["out.txt"])

    def test_directory_lock(self):
        """ the lock file is created inside the guarded directory """
        with tempfile.TemporaryDirectory() as tmp:
            target = os.path.join(tmp, "ckpt")
            with directory_lock(target):
                self.assertTrue(os.path.exists(os.path.join(target, ".lock")))
