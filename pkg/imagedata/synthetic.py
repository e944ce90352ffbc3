"""
Synthetic hierarchical image generator

Coarse class c sets a global attribute: the background is a stripe field whose
orientation is one of M evenly spaced angles. Fine class k within c sets a local
attribute: one of K small glyphs stamped in the top-left quadrant. Knowing the
coarse class therefore tells the model where not to look, and the glyph alone
separates siblings.
"""
import logging
import struct
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from hierarchy import LabelHierarchy, Level
from transhp.exceptions import ConsistencyError, RecordLengthError
from .records import PIXEL_DTYPE, ImageRecord

logger = logging.getLogger(__name__)

SYNTHETIC_MAGIC = b'THPSYN01'
HEADER_FORMAT = '<8sHHHI'
HEADER_BYTES = struct.calcsize(HEADER_FORMAT)

BACKGROUND_MEAN = 0.35
BACKGROUND_AMPLITUDE = 0.2
GLYPH_VALUE = 1.0


@dataclass(frozen=True)
class SyntheticConfig:
    coarse_count: int = 8
    fine_per_coarse: int = 4
    images_per_fine: int = 64
    image_size: int = 32
    noise_std: float = 0.1
    seed: int = 0

    @property
    def fine_count(self) -> int:
        return self.coarse_count * self.fine_per_coarse

    @property
    def glyph_size(self) -> int:
        return max(3, self.image_size // 4)

    def validate(self) -> None:
        """
        Raises:
            ValueError: describing the first invalid field
        """
        if self.coarse_count < 1:
            raise ValueError(f"coarse_count (M) must be >= 1, got {self.coarse_count}")
        if self.fine_per_coarse < 1:
            raise ValueError(f"fine_per_coarse (K) must be >= 1, got {self.fine_per_coarse}")
        if self.fine_count > 256:
            raise ValueError(f"at most 256 fine classes fit a label byte, got {self.fine_count}")
        if self.images_per_fine < 1:
            raise ValueError(f"images_per_fine must be >= 1, got {self.images_per_fine}")
        if self.image_size < 8:
            raise ValueError(f"image_size must be >= 8, got {self.image_size}")
        if self.noise_std < 0:
            raise ValueError(f"noise_std must be >= 0, got {self.noise_std}")

    def to_dict(self) -> dict:
        return asdict(self)


def _named_glyph(index: int, g: int) -> np.ndarray:
    r = np.arange(g)
    yy, xx = np.meshgrid(r, r, indexing='ij')
    mid = g // 2
    shapes = [
        np.ones((g, g), dtype=bool),                                   # block
        (yy == 0) | (yy == g - 1) | (xx == 0) | (xx == g - 1),         # frame
        (yy == mid) | (xx == mid),                                     # plus
        (yy == xx) | (yy == g - 1 - xx),                               # cross
        (yy >= mid - 1) & (yy <= mid),                                 # bar
        (xx >= mid - 1) & (xx <= mid),                                 # post
        np.abs(yy - mid) + np.abs(xx - mid) <= mid,                    # diamond
        xx <= yy,                                                      # wedge
    ]
    return shapes[index]


def glyph_bank(count: int, size: int) -> List[np.ndarray]:
    """K distinct binary glyphs; beyond the eight named shapes, seeded random masks"""
    bank = []
    for k in range(count):
        if k < 8:
            bank.append(_named_glyph(k, size))
        else:
            bank.append(np.random.default_rng([7919, k]).random((size, size)) < 0.5)
    return bank


def stripe_field(size: int, angle: float, phase: float) -> np.ndarray:
    r = np.arange(size, dtype=np.float64)
    yy, xx = np.meshgrid(r, r, indexing='ij')
    period = size / 4.0
    wave = np.sin(2.0 * np.pi * (xx * np.cos(angle) + yy * np.sin(angle)) / period + phase)
    return BACKGROUND_MEAN + BACKGROUND_AMPLITUDE * wave


def synthetic_hierarchy(cfg: SyntheticConfig) -> LabelHierarchy:
    level = Level(
        name='coarse',
        coarse_count=cfg.coarse_count,
        parent_of=tuple(fine // cfg.fine_per_coarse for fine in range(cfg.fine_count)),
    )
    return LabelHierarchy(fine_count=cfg.fine_count, levels=(level,))


def generate_synthetic(cfg: SyntheticConfig) -> Tuple[List[ImageRecord], LabelHierarchy]:
    """
    Generate M·K·images_per_fine records, fine label c·K + k

    Images are emitted class by class; every random draw comes from one
    generator seeded with cfg.seed, so equal configs give identical output.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    size, g = cfg.image_size, cfg.glyph_size
    glyphs = glyph_bank(cfg.fine_per_coarse, g)
    span = size // 2 - g

    records = []
    for c in range(cfg.coarse_count):
        angle = np.pi * c / cfg.coarse_count
        for k in range(cfg.fine_per_coarse):
            fine = c * cfg.fine_per_coarse + k
            for _ in range(cfg.images_per_fine):
                phase = rng.uniform(0.0, 2.0 * np.pi)
                top, left = rng.integers(0, span + 1, size=2)
                plane = stripe_field(size, angle, phase)
                window = plane[top:top + g, left:left + g]
                window[glyphs[k]] = GLYPH_VALUE
                image = np.repeat(plane[:, :, None], 3, axis=2)
                image = image + rng.normal(0.0, cfg.noise_std, size=image.shape)
                pixels = np.clip(image, 0.0, 1.0).astype(PIXEL_DTYPE)
                records.append(ImageRecord(pixels=pixels, fine_label=fine, image_id=len(records)))

    logger.info(f"Generated {len(records)} synthetic records (M={cfg.coarse_count}, K={cfg.fine_per_coarse})")
    return records, synthetic_hierarchy(cfg)


def write_synthetic(path: Union[str, Path], records: List[ImageRecord], hierarchy: LabelHierarchy,
                    fine_per_coarse: int) -> Path:
    """
    Serialize records: header (magic, M, K, H, count) then CIFAR-layout records

    Pixels are quantized to bytes, so reading back yields round(p·255)/255.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    size = records[0].image_size if records else 0
    level = hierarchy.levels[0]
    with path.open('wb') as handle:
        handle.write(struct.pack(HEADER_FORMAT, SYNTHETIC_MAGIC, level.coarse_count,
                                 fine_per_coarse, size, len(records)))
        for record in records:
            handle.write(bytes((level.parent_of[record.fine_label], record.fine_label)))
            handle.write(record.to_bytes())
    return path


def read_synthetic(path: Union[str, Path]) -> Tuple[List[ImageRecord], LabelHierarchy]:
    """
    Raises:
        RecordLengthError: bad magic or payload length
    """
    path = Path(path)
    data = path.read_bytes()
    if len(data) < HEADER_BYTES or data[:8] != SYNTHETIC_MAGIC:
        raise RecordLengthError(path, HEADER_BYTES, len(data))
    _, coarse_count, fine_per_coarse, size, count = struct.unpack_from(HEADER_FORMAT, data)
    record_bytes = 2 + 3 * size * size
    expected = HEADER_BYTES + count * record_bytes
    if len(data) != expected:
        raise RecordLengthError(path, expected, len(data))

    cfg = SyntheticConfig(coarse_count=coarse_count, fine_per_coarse=fine_per_coarse, image_size=size)
    hierarchy = synthetic_hierarchy(cfg)
    records = []
    for index in range(count):
        start = HEADER_BYTES + index * record_bytes
        if data[start + 1] >= hierarchy.fine_count or data[start] != hierarchy.levels[0].parent_of[data[start + 1]]:
            raise ConsistencyError(f"labels (coarse={data[start]}, fine={data[start + 1]}) disagree with the header", index)
        records.append(ImageRecord.from_bytes(data[start + 2:start + record_bytes], size,
                                              data[start + 1], index))
    return records, hierarchy
