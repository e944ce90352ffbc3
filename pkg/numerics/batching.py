"""
Batch-parallel evaluation

Independent batches may run on worker threads; results always come back in
batch order, so any reduction over them is the same as the serial one.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Tuple, TypeVar

from .tensor import no_grad

logger = logging.getLogger(__name__)

T = TypeVar('T')


def batch_bounds(count: int, batch_size: int) -> List[Tuple[int, int]]:
    if batch_size < 1:
        raise ValueError(f"batch size must be positive, got {batch_size}")
    return [(start, min(start + batch_size, count)) for start in range(0, count, batch_size)]


def map_batches(fn: Callable[[int, int], T], count: int, batch_size: int, workers: int = 1) -> List[T]:
    """
    Apply ``fn(start, stop)`` to every batch without recording a graph

    Args:
        workers: 1 runs serially on the calling thread; more evaluates
            batches concurrently

    Returns:
        one result per batch, in batch order
    """
    bounds = batch_bounds(count, batch_size)

    def run(span: Tuple[int, int]) -> T:
        # grad mode is thread-local
        with no_grad():
            return fn(*span)

    if workers <= 1 or len(bounds) <= 1:
        return [run(span) for span in bounds]
    logger.debug(f"Evaluating {len(bounds)} batches on {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, bounds))
