"""
Checkpoint files

Layout (all integers little-endian):

    magic        8 bytes  b'THPCKPT1'
    version      uint32   currently 2
    config       uint32 length + UTF-8 text, one ``key=value`` per line
                 (ModelConfig fields, then ``variant``, ``seed`` and ``dtype``)
    hierarchy    uint32 length + UTF-8 text in the hierarchy file format
    count        uint32   number of tensors
    per tensor:  uint16 name length, UTF-8 name, uint8 ndim,
                 ndim x uint32 dims, product(dims) payload values

Payloads are float32 ('<f4') unless ``dtype=float64`` is recorded, in which
case they are '<f8' and a float64 model reloads bit for bit. Version 1 files
carry no dtype line and always hold float32 payloads.

Tensors appear in the model's parameter order.
"""
import logging
import struct
from pathlib import Path
from typing import Union

import numpy as np

from hierarchy import dumps_hierarchy, loads_hierarchy
from numerics import Tensor
from transhp.exceptions import CheckpointError
from .config import ModelConfig
from .initialization import base_parameters, prompting_parameters
from .model import NO_COARSE_LABELS, NO_PROMPTS, TransHPModel

logger = logging.getLogger(__name__)

MAGIC = b'THPCKPT1'
VERSION = 2
SUPPORTED_VERSIONS = (1, 2)
PAYLOAD_DTYPES = {
    'float32': np.dtype('<f4'),
    'float64': np.dtype('<f8'),
}


def _pack_text(text: str) -> bytes:
    raw = text.encode('utf-8')
    return struct.pack('<I', len(raw)) + raw


def _dtype_name(dtype) -> str:
    return 'float64' if np.dtype(dtype) == np.float64 else 'float32'


def checkpoint_bytes(model: TransHPModel) -> bytes:
    dtype_name = _dtype_name(model.dtype)
    payload_dtype = PAYLOAD_DTYPES[dtype_name]
    config_text = model.config.to_text() + f"variant={model.variant}\nseed={model.seed}\ndtype={dtype_name}\n"
    arrays = model.state_arrays()
    chunks = [MAGIC, struct.pack('<I', VERSION), _pack_text(config_text),
              _pack_text(dumps_hierarchy(model.hierarchy)), struct.pack('<I', len(arrays))]
    for name, array in arrays.items():
        raw_name = name.encode('utf-8')
        chunks.append(struct.pack('<H', len(raw_name)) + raw_name)
        chunks.append(struct.pack('<B', array.ndim) + struct.pack(f'<{array.ndim}I', *array.shape))
        chunks.append(array.astype(payload_dtype).tobytes())
    return b''.join(chunks)


def save_checkpoint(model: TransHPModel, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(checkpoint_bytes(model))
    logger.info(f"Wrote checkpoint {path}")
    return path


class _Reader:
    def __init__(self, data: bytes, source):
        self.data = data
        self.offset = 0
        self.source = source

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.data):
            raise CheckpointError(f"{self.source}: truncated at byte {self.offset}")
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def text(self) -> str:
        (length,) = self.unpack('<I')
        return self.take(length).decode('utf-8')


def load_checkpoint(path: Union[str, Path], dtype=None) -> TransHPModel:
    """
    Rebuild a model from a checkpoint file

    Args:
        dtype: compute dtype of the rebuilt model; defaults to the dtype the
            model was saved with

    Raises:
        CheckpointError: bad magic, unsupported version, unreadable config or
            a tensor set that disagrees with the config
    """
    path = Path(path)
    reader = _Reader(path.read_bytes(), path)
    if reader.take(len(MAGIC)) != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    (version,) = reader.unpack('<I')
    if version not in SUPPORTED_VERSIONS:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}, expected one of "
                              f"{SUPPORTED_VERSIONS}")

    values = dict(line.split('=', 1) for line in reader.text().splitlines() if '=' in line)
    try:
        config = ModelConfig.from_dict(values)
        hierarchy = loads_hierarchy(reader.text())
        variant = values['variant']
        seed = None if values.get('seed', 'None') == 'None' else int(values['seed'])
        saved_dtype = values.get('dtype', 'float32')
        payload_dtype = PAYLOAD_DTYPES[saved_dtype]
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"{path}: unreadable configuration block ({exc})") from exc
    dtype = np.dtype(saved_dtype if dtype is None else dtype)

    params = {}
    (count,) = reader.unpack('<I')
    for _ in range(count):
        (name_length,) = reader.unpack('<H')
        name = reader.take(name_length).decode('utf-8')
        (ndim,) = reader.unpack('<B')
        shape = reader.unpack(f'<{ndim}I') if ndim else ()
        size = int(np.prod(shape)) if shape else 1
        payload = np.frombuffer(reader.take(size * payload_dtype.itemsize), dtype=payload_dtype)
        params[name] = Tensor(payload.reshape(shape).astype(dtype), requires_grad=True, name=name)
    if reader.offset != len(reader.data):
        raise CheckpointError(f"{path}: {len(reader.data) - reader.offset} trailing bytes")

    model = TransHPModel(config, hierarchy, params, variant=variant, seed=seed)
    _check_parameter_set(model, path)
    logger.info(f"Loaded {model} from {path}")
    return model


def _check_parameter_set(model: TransHPModel, path: Path) -> None:
    # shapes only; the draws are discarded
    expected = {name: array.shape for name, array in base_parameters(model.config, 0).items()}
    for spec in model.config.prompting_specs:
        for name, array in prompting_parameters(model.config, spec, 0).items():
            if name.endswith('.pool') and model.variant == NO_PROMPTS:
                continue
            if name.endswith('.prototypes') and model.variant == NO_COARSE_LABELS:
                continue
            expected[name] = array.shape
    actual = {name: param.shape for name, param in model.params.items()}
    if actual != expected:
        missing = sorted(set(expected) - set(actual))
        extra = sorted(set(actual) - set(expected))
        raise CheckpointError(f"{path}: parameters disagree with config (missing {missing}, unexpected {extra})")
