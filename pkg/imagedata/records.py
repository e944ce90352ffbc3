"""
Image records and batching helpers
"""
import hashlib
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from transhp.exceptions import ContractError

PIXEL_DTYPE = np.float32


@dataclass(frozen=True)
class ImageRecord:
    """One labelled image; pixels are H x W x 3 with values in [0, 1]"""
    pixels: np.ndarray
    fine_label: int
    image_id: int

    @property
    def image_size(self) -> int:
        return self.pixels.shape[0]

    def to_bytes(self) -> bytes:
        """Channel-major uint8 payload (all red rows, then green, then blue)"""
        quantized = np.rint(self.pixels * 255.0).astype(np.uint8)
        return quantized.transpose(2, 0, 1).tobytes()

    @classmethod
    def from_bytes(cls, payload: bytes, size: int, fine_label: int, image_id: int) -> 'ImageRecord':
        planes = np.frombuffer(payload, dtype=np.uint8).reshape(3, size, size)
        pixels = planes.transpose(1, 2, 0).astype(PIXEL_DTYPE) / PIXEL_DTYPE(255.0)
        return cls(pixels=pixels, fine_label=int(fine_label), image_id=int(image_id))


def stack_records(records: Sequence[ImageRecord], dtype=np.float64) -> Tuple[np.ndarray, np.ndarray]:
    """
    Stack records into a batch

    Returns:
        (images of shape B x H x W x 3, fine labels of shape B)
    """
    if not records:
        raise ContractError("cannot stack an empty record list")
    images = np.stack([record.pixels for record in records]).astype(dtype)
    labels = np.array([record.fine_label for record in records], dtype=np.int64)
    return images, labels


def dataset_fingerprint(records: Sequence[ImageRecord]) -> str:
    """SHA-256 over labels and quantized pixels, in record order"""
    digest = hashlib.sha256()
    for record in records:
        digest.update(int(record.fine_label).to_bytes(2, 'little'))
        digest.update(record.to_bytes())
    return digest.hexdigest()
