from __future__ import annotations

"""Fan-out of independent work items (replications, grid points).

Results always come back in input order, so output never depends on which
worker finishes first.
"""

import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Callable, Sequence, TypeVar

from tqdm import tqdm

T = TypeVar("T")
R = TypeVar("R")

logger = logging.getLogger("abft.worker")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str = "INFO") -> None:
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), format=LOG_FORMAT)


def ordered_map(
    fn: Callable[[T], R],
    items: Sequence[T],
    workers: int = 1,
    progress: bool = False,
    desc: str | None = None,
) -> list[R]:
    """Apply ``fn`` to every item; ``fn`` and items must be picklable when workers > 1."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in tqdm(items, desc=desc, disable=not progress, leave=False)]

    logger.info("Dispatching %s items to %s worker processes", len(items), workers)
    results: list[R | None] = [None] * len(items)
    with ProcessPoolExecutor(max_workers=workers) as executor:
        futures = {executor.submit(fn, item): i for i, item in enumerate(items)}
        for fut in tqdm(
            as_completed(futures), total=len(futures), desc=desc, disable=not progress, leave=False
        ):
            i = futures[fut]
            try:
                results[i] = fut.result()
            except Exception as exc:  # noqa: BLE001
                logger.exception("Work item %s failed: %s", i, exc)
                for pending in futures:
                    pending.cancel()
                raise
    return results  # type: ignore[return-value]
