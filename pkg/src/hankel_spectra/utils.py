import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, TypeVar

from src.constants import THREADS_ENV

T = TypeVar("T")
R = TypeVar("R")


def ensure_dir(path: Path) -> None:
    path.mkdir(parents=True, exist_ok=True)


def thread_count() -> int:
    """Worker cap from HANKEL_SPECTRA_THREADS; 0 (the default) means run sequentially."""
    raw = os.getenv(THREADS_ENV, "0").strip() or "0"
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"{THREADS_ENV} must be a non-negative integer, got {raw!r}") from exc
    if value < 0:
        raise ValueError(f"{THREADS_ENV} must be a non-negative integer, got {raw!r}")
    return value


def fan_out(func: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    """Map ``func`` over ``items``; results keep the input order."""
    items = list(items)
    workers = thread_count() if threads is None else threads
    if workers <= 0 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(func, items))
