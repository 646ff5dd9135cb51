import logging
import math
import threading
from concurrent import futures
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from sortbench import config
from sortbench.core_sort import baseline_sort, merge

log = logging.getLogger(__name__)

POOL_KINDS = ("process", "thread")


class PoolClosedError(RuntimeError):
    """Raised when work is submitted to a pool that has already been closed."""


class TaskFailedError(RuntimeError):
    """A task in a mapped batch raised. `index` is the position of its input."""

    def __init__(self, index: int, cause: BaseException):
        super().__init__(f"Task for input {index} failed: {cause!r}")
        self.index = index
        self.cause = cause


@dataclass
class ChunkPlan:
    """The input split into at most `worker_count` contiguous chunks of `chunk_size`."""
    total_length: int
    chunk_size: int
    chunks: list = field(default_factory=list)


class AsyncResult:
    """
    Handle for a batch submitted with map_async.
    get() blocks until every task has finished and returns results in submission order.
    The outcome is cached, so repeated get() calls return the same list (or re-raise
    the same failure).
    """
    def __init__(self, batch: list):
        self._batch = batch
        self._lock = threading.Lock()
        self._results = None
        self._error = None

    @property
    def state(self) -> str:
        return "ready" if self.ready() else "pending"

    def ready(self) -> bool:
        return all(f.done() for f in self._batch)

    def get(self, timeout: Optional[float] = None) -> list:
        with self._lock:
            if self._results is None and self._error is None:
                try:
                    self._results = self._collect(timeout)
                except TaskFailedError as e:
                    self._error = e
            if self._error is not None:
                raise self._error
            return self._results

    def _collect(self, timeout: Optional[float]) -> list:
        done, not_done = futures.wait(self._batch, timeout=timeout, return_when=futures.FIRST_EXCEPTION)
        failed = [i for i, f in enumerate(self._batch) if f in done and f.exception() is not None]
        if failed:
            index = failed[0]
            # Tasks that have not started yet are dropped; running ones finish on their own.
            for pending in not_done:
                pending.cancel()
            cause = self._batch[index].exception()
            log.error(f"Task for input {index} failed, aborting batch of {len(self._batch)}: {cause!r}")
            raise TaskFailedError(index, cause) from cause
        if not_done:
            raise TimeoutError(f"{len(not_done)} of {len(self._batch)} tasks still running after {timeout}s.")
        return [f.result() for f in self._batch]


class WorkerPool:
    """
    A fixed number of execution lanes to which batches of pure tasks are submitted.
    Process lanes side-step the GIL for CPU-bound chunk sorts; thread lanes start faster
    and accept closures.
    """
    def __init__(self, workers: int, kind: str = config.POOL_KIND):
        if workers < 1:
            raise ValueError(f"A worker pool needs at least one worker, got {workers}.")
        if kind not in POOL_KINDS:
            raise ValueError(f"Unknown pool kind '{kind}'. Choose from {POOL_KINDS}.")
        self.worker_count = workers
        self.kind = kind
        self.state = "open"
        self._lock = threading.Lock()
        if kind == "process":
            self._executor = futures.ProcessPoolExecutor(max_workers=workers)
        else:
            self._executor = futures.ThreadPoolExecutor(max_workers=workers, thread_name_prefix="sortbench-pool")
        log.debug(f"Opened {kind} pool with {workers} workers.")

    def map_async(self, task: Callable, inputs: Sequence) -> AsyncResult:
        with self._lock:
            if self.state == "closed":
                raise PoolClosedError("Cannot submit tasks to a closed pool.")
            # A batch is submitted whole or not at all.
            batch = [self._executor.submit(task, item) for item in inputs]
        return AsyncResult(batch)

    def map(self, task: Callable, inputs: Sequence) -> list:
        return self.map_async(task, inputs).get()

    def close(self):
        """Stops accepting work, lets in-flight tasks finish and releases the workers. Idempotent."""
        with self._lock:
            if self.state == "closed":
                return
            self.state = "closed"
            self._executor.shutdown(wait=True)
        log.debug(f"Closed {self.kind} pool with {self.worker_count} workers.")

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()


def pool_create(workers: int, kind: Optional[str] = None) -> WorkerPool:
    return WorkerPool(workers, kind or config.POOL_KIND)


def pool_map(pool: WorkerPool, task: Callable, inputs: Sequence) -> list:
    return pool.map(task, inputs)


def pool_map_async(pool: WorkerPool, task: Callable, inputs: Sequence) -> AsyncResult:
    return pool.map_async(task, inputs)


def pool_close(pool: WorkerPool):
    pool.close()


def chunk_array(arr: Sequence, workers: int) -> ChunkPlan:
    """
    Splits `arr` into contiguous chunks of ceil(len / workers) elements.
    Empty trailing chunks are dropped, so a plan can hold fewer chunks than workers.
    """
    if workers < 1:
        raise ValueError(f"Chunking needs at least one worker, got {workers}.")
    total = len(arr)
    size = math.ceil(total / workers)  # 0 for an empty input
    chunks = []
    if size:
        for i in range(workers):
            chunk = list(arr[size * i:size * (i + 1)])
            if chunk:
                chunks.append(chunk)
    return ChunkPlan(total_length=total, chunk_size=size, chunks=chunks)


def merge_chunks(chunks: Sequence[Sequence]) -> list:
    """Merges sorted chunks pairwise (0+1, 2+3, ...) until one list remains."""
    runs = [list(c) for c in chunks]
    if not runs:
        return []
    while len(runs) > 1:
        paired = [merge(runs[i], runs[i + 1]) for i in range(0, len(runs) - 1, 2)]
        # odd run out waits for the next round
        if len(runs) % 2:
            paired.append(runs[-1])
        runs = paired
    return runs[0]


def pool_mergesort(arr: Sequence, workers: int, kind: Optional[str] = None) -> list:
    """
    Shared-memory merge sort: chunk the input, sort each chunk on its own worker with
    the native sort, close the pool, then merge the sorted chunks on the caller's lane.
    """
    plan = chunk_array(arr, workers)
    pool = pool_create(workers, kind)
    try:
        sorted_chunks = pool.map(baseline_sort, plan.chunks)
    finally:
        pool.close()
    return merge_chunks(sorted_chunks)
