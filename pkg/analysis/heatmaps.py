"""
Class-token attention maps

For a chosen block the class token's head-averaged attention row is split
into patch keys, reshaped to the (H/P) x (H/P) grid, and prompt keys, which
are reported separately. Grids are min-max normalised; a flat grid maps to 0.5.
Exports are a binary PGM (P5) image and a comma-separated matrix.
"""
import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
from PIL import Image

from numerics import no_grad
from .absorption import AbsorptionReport

logger = logging.getLogger(__name__)

MATRIX_FORMAT = '%.10f'


@dataclass
class HeatmapExport:
    image_id: int
    layer: int
    grid: np.ndarray
    normalized: np.ndarray
    prompt_weights: np.ndarray
    pgm_path: Path
    csv_path: Path


def class_token_attention(attention: np.ndarray, n_feature: int, grid_size: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Args:
        attention: one image's (h, T, T) attention probabilities

    Returns:
        (patch grid of shape (grid_size, grid_size), prompt weights of shape (T - n_feature,))
    """
    row = np.asarray(attention).mean(axis=0)[0]
    return row[1:n_feature].reshape(grid_size, grid_size), row[n_feature:]


def normalize_grid(grid: np.ndarray) -> np.ndarray:
    low, high = float(grid.min()), float(grid.max())
    if high <= low:
        return np.full(grid.shape, 0.5)
    return (grid - low) / (high - low)


def write_pgm(normalized: np.ndarray, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pixels = np.rint(np.clip(normalized, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(pixels).save(path, format='PPM')
    return path


def write_matrix(matrix: np.ndarray, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, matrix, delimiter=',', fmt=MATRIX_FORMAT)
    return path


def read_matrix(path: Union[str, Path]) -> np.ndarray:
    return np.loadtxt(path, delimiter=',', ndmin=2)


def export_heatmaps(model, image: np.ndarray, layers: Sequence[int], out_dir: Union[str, Path],
                    image_id: int = 0) -> List[HeatmapExport]:
    """
    One forward pass, one heatmap per requested block

    Raises:
        IndexError: for a block outside [1, L]
    """
    depth = model.config.depth
    for layer in layers:
        if not 1 <= layer <= depth:
            raise IndexError(f"block {layer} out of range [1, {depth}]")
    out_dir = Path(out_dir)
    with no_grad():
        output = model.forward(np.asarray(image).astype(model.dtype, copy=False), retain_attention=True)

    exports = []
    for layer in layers:
        grid, prompts = class_token_attention(output.attention[layer], 1 + model.config.patch_count,
                                              model.config.grid_size)
        normalized = normalize_grid(grid)
        stem = f'image{image_id}_block{layer}'
        exports.append(HeatmapExport(
            image_id=image_id,
            layer=layer,
            grid=grid,
            normalized=normalized,
            prompt_weights=prompts,
            pgm_path=write_pgm(normalized, out_dir / f'{stem}.pgm'),
            csv_path=write_matrix(normalized, out_dir / f'{stem}.csv'),
        ))
    logger.info(f"Exported {len(exports)} heatmaps for image {image_id}")
    return exports


def attention_map_export(model, image: np.ndarray, block_index: int, out_dir: Union[str, Path],
                         image_id: int = 0) -> HeatmapExport:
    return export_heatmaps(model, image, [block_index], out_dir, image_id)[0]


def write_prompt_bars(reports: Sequence[AbsorptionReport], path: Union[str, Path]) -> Path:
    """
    Per-image prompt weights with the selection outcome, one row per image and block

    Columns: image_id, block, true_coarse, predicted_coarse, selection, w0..w{M-1}
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    width = max((len(r.class_token_weights) for r in reports), default=0)
    with path.open('w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(['image_id', 'block', 'true_coarse', 'predicted_coarse', 'selection']
                        + [f'w{i}' for i in range(width)])
        for r in reports:
            weights = [f'{w:.10f}' for w in r.class_token_weights]
            writer.writerow([r.image_id, r.layer, r.true_coarse, r.predicted_coarse, r.selection]
                            + weights + [''] * (width - len(weights)))
    return path


def write_report(reports: Sequence[AbsorptionReport], summary: dict, path: Union[str, Path]) -> Path:
    """JSON lines: one 'image' record per report, then one 'summary' record per block"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w') as handle:
        for report in reports:
            handle.write(json.dumps({'type': 'image', **report.to_dict()}, sort_keys=True) + '\n')
        for layer, stats in summary.items():
            handle.write(json.dumps({'type': 'summary', 'block': layer, **stats}, sort_keys=True) + '\n')
    return path
