"""
Tests for the binary dataset format.
"""

import tempfile
import unittest
from pathlib import Path

from multinet.core.errors import (
    ArtifactIOError,
    BadMagicError,
    DataError,
    TruncatedRecordError,
    VersionMismatchError,
)
from multinet.core.models import BehavioralMode, OperationalMode
from multinet.data.codec import RECORD_DTYPE, dataset_bytes, dataset_from_bytes, deserialize, serialize
from multinet.data.moments import Dataset
from tests.helpers import make_dataset


class TestCodec(unittest.TestCase):
    """Test cases for dataset files."""

    def setUp(self):
        """Set up test fixtures."""
        self.temp_dir = tempfile.TemporaryDirectory()
        self.root = Path(self.temp_dir.name)
        self.dataset = Dataset.concat(
            [
                make_dataset({BehavioralMode.DIRECT: 2, BehavioralMode.FURTIVE: 1}, seed=3),
                make_dataset({BehavioralMode.FOLLOW: 2}, seed=4, operational=OperationalMode.CORRECTIONAL),
            ]
        )

    def tearDown(self):
        """Clean up test fixtures."""
        self.temp_dir.cleanup()

    def test_round_trip(self):
        """Test that a written file reads back bit-exact."""
        path = serialize(self.dataset, self.root / "sub" / "data.mndm")
        self.assertTrue(deserialize(path).equals(self.dataset))

    def test_record_layout(self):
        """Test the header and per-record sizes."""
        data = dataset_bytes(self.dataset)
        self.assertEqual(data[:4], b"MNDM")
        self.assertEqual(RECORD_DTYPE.itemsize, 1 + 1 + 8 + 4 * 26 * 52 * 3 + 20 * 4)
        self.assertEqual(len(data), 14 + 5 * RECORD_DTYPE.itemsize)

    def test_empty_dataset(self):
        """Test that an empty dataset is a bare header."""
        data = dataset_bytes(Dataset.empty())
        self.assertEqual(len(data), 14)
        self.assertEqual(len(dataset_from_bytes(data)), 0)

    def test_truncated_record(self):
        """Test that a cut inside the third record names record 2."""
        data = dataset_bytes(self.dataset)
        cut = 14 + 2 * RECORD_DTYPE.itemsize + 100
        with self.assertRaises(TruncatedRecordError) as ctx:
            dataset_from_bytes(data[:cut])
        self.assertEqual(ctx.exception.record_index, 2)
        with self.assertRaises(TruncatedRecordError):
            dataset_from_bytes(data[:10])

    def test_bad_magic(self):
        """Test that foreign bytes are rejected."""
        with self.assertRaises(BadMagicError):
            dataset_from_bytes(b"PK\x03\x04" + dataset_bytes(self.dataset)[4:])
        with self.assertRaises(BadMagicError):
            dataset_from_bytes(b"")

    def test_version_mismatch(self):
        """Test that another format version is rejected."""
        data = bytearray(dataset_bytes(self.dataset))
        data[4:6] = (2).to_bytes(2, "little")
        with self.assertRaises(VersionMismatchError) as ctx:
            dataset_from_bytes(bytes(data))
        self.assertEqual(ctx.exception.found, 2)

    def test_trailing_bytes(self):
        """Test that bytes past the declared records are rejected."""
        with self.assertRaises(DataError):
            dataset_from_bytes(dataset_bytes(self.dataset) + b"\x00\x00")

    def test_invalid_mode_code(self):
        """Test that a stored behavioral code above 2 is a data error."""
        data = bytearray(dataset_bytes(self.dataset))
        data[14] = 7
        with self.assertRaises(DataError):
            dataset_from_bytes(bytes(data))

    def test_missing_file(self):
        """Test that a missing path is an artifact error."""
        with self.assertRaises(ArtifactIOError):
            deserialize(self.root / "absent.mndm")


if __name__ == "__main__":
    unittest.main()
