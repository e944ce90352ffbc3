"""
CIFAR-100 binary format

Each record is exactly 3074 bytes: one coarse-label byte, one fine-label byte,
then 3072 pixel bytes in channel-major order (1024 red, 1024 green, 1024 blue),
each plane stored row by row with 32 pixels per row. The train file holds
50,000 records and the test file 10,000.
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from hierarchy import LabelHierarchy, ancestor_of
from hierarchy.presets import cifar100_hierarchy
from transhp.exceptions import ConsistencyError, RecordLengthError
from .records import ImageRecord

logger = logging.getLogger(__name__)

CIFAR_SIZE = 32
PIXEL_BYTES = 3 * CIFAR_SIZE * CIFAR_SIZE
RECORD_BYTES = 2 + PIXEL_BYTES
TRAIN_RECORDS = 50_000
TEST_RECORDS = 10_000


def decode_cifar100(data: bytes, hierarchy: LabelHierarchy, source='<bytes>',
                    expected_records: Optional[int] = None, id_offset: int = 0) -> List[ImageRecord]:
    """
    Decode CIFAR-100 records, cross-checking every coarse byte against the hierarchy

    Raises:
        RecordLengthError: empty or truncated input, or a record count other than expected
        ConsistencyError: fine label out of range or coarse byte disagreeing with the taxonomy
    """
    actual = len(data)
    if expected_records is not None and actual != expected_records * RECORD_BYTES:
        raise RecordLengthError(source, expected_records * RECORD_BYTES, actual)
    if actual == 0 or actual % RECORD_BYTES:
        expected = max(1, -(-actual // RECORD_BYTES)) * RECORD_BYTES
        raise RecordLengthError(source, expected, actual)

    records = []
    for index in range(actual // RECORD_BYTES):
        start = index * RECORD_BYTES
        coarse, fine = data[start], data[start + 1]
        if fine >= hierarchy.fine_count:
            raise ConsistencyError(f"fine label {fine} outside [0, {hierarchy.fine_count})", index)
        expected_coarse = ancestor_of(hierarchy, fine, 0)
        if coarse != expected_coarse:
            raise ConsistencyError(
                f"coarse byte {coarse} but fine label {fine} belongs to coarse class {expected_coarse}", index
            )
        records.append(ImageRecord.from_bytes(
            data[start + 2:start + RECORD_BYTES], CIFAR_SIZE, fine, id_offset + index,
        ))
    return records


def read_cifar100_file(path: Union[str, Path], hierarchy: Optional[LabelHierarchy] = None,
                       expected_records: Optional[int] = None, id_offset: int = 0) -> List[ImageRecord]:
    path = Path(path)
    records = decode_cifar100(path.read_bytes(), hierarchy or cifar100_hierarchy(), source=path,
                              expected_records=expected_records, id_offset=id_offset)
    logger.info(f"Read {len(records)} CIFAR-100 records from {path}")
    return records


def parse_cifar100(train_file: Union[str, Path], test_file: Union[str, Path],
                   expected_counts: Optional[Tuple[int, int]] = (TRAIN_RECORDS, TEST_RECORDS)
                   ) -> Tuple[Dict[str, List[ImageRecord]], LabelHierarchy]:
    """
    Load both CIFAR-100 splits under the built-in taxonomy

    Args:
        train_file: path of the train binary
        test_file: path of the test binary
        expected_counts: required (train, test) record counts; None accepts any
            whole number of records (used for crafted fixtures)

    Returns:
        ({'train': records, 'test': records}, hierarchy); test image ids
        continue after the train ids
    """
    hierarchy = cifar100_hierarchy()
    train_count, test_count = expected_counts or (None, None)
    train = read_cifar100_file(train_file, hierarchy, train_count)
    test = read_cifar100_file(test_file, hierarchy, test_count, id_offset=len(train))
    return {'train': train, 'test': test}, hierarchy


def serialize_cifar100(records: Sequence[ImageRecord], hierarchy: Optional[LabelHierarchy] = None) -> bytes:
    """Encode records in the CIFAR-100 layout; the coarse byte comes from the hierarchy"""
    hierarchy = hierarchy or cifar100_hierarchy()
    chunks = []
    for record in records:
        chunks.append(bytes((ancestor_of(hierarchy, record.fine_label, 0), record.fine_label)))
        chunks.append(record.to_bytes())
    return b''.join(chunks)
