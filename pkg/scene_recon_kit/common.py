"""
Common helpers shared by the processing modules
"""
from loguru import logger
from typing import Callable, List, Sequence, TypeVar
import os
from concurrent.futures import ThreadPoolExecutor

from scene_recon_kit.errors import InputError

THREADS_ENV = "SRK_THREADS"
DEFAULT_MAX_THREADS = 8

T = TypeVar("T")
R = TypeVar("R")


def get_n_threads() -> int:
    """
    Get the maximum number of worker threads

    The environment variable SRK_THREADS caps the parallelism. When unset, the
    number of cpus is used up to a maximum of 8.

    Returns
    -------
    int
        The number of worker threads

    Raises
    ------
    InputError
        If SRK_THREADS is not a positive integer
    """
    value = os.environ.get(THREADS_ENV)
    if value is None or value.strip() == "":
        return max(1, min(DEFAULT_MAX_THREADS, os.cpu_count() or 1))
    try:
        n_threads = int(value)
    except ValueError:
        raise InputError(f"{THREADS_ENV}={value!r} is not an integer")
    if n_threads < 1:
        raise InputError(f"{THREADS_ENV}={n_threads} must be at least 1")
    return n_threads


def parallel_map(fn: Callable[[T], R], items: Sequence[T]) -> List[R]:
    """
    Apply a function to items using a capped thread pool

    Results are returned in the order of the input items regardless of the
    order in which the workers finish.

    Parameters
    ----------
    fn : Callable[[T], R]
        The function to apply
    items : Sequence[T]
        The inputs

    Returns
    -------
    List[R]
        The outputs in input order
    """
    n_threads = min(get_n_threads(), len(items))
    if n_threads <= 1:
        return [fn(item) for item in items]
    logger.debug(f"Mapping {len(items)} items over {n_threads} threads")
    with ThreadPoolExecutor(max_workers=n_threads) as executor:
        return list(executor.map(fn, items))
