import logging
from dataclasses import dataclass
from typing import Optional, Sequence

from sortbench import config
from sortbench.core_sort import baseline_sort, mergesort_classic, mergesort_cutoff
from sortbench.mp_tree import SubsortKind, is_power_of_two, mp_mergesort
from sortbench.shared_pool import pool_mergesort

log = logging.getLogger(__name__)

ALGORITHMS = ("seq", "cutoff", "sorted", "mp", "mpi")
SUBSORTS = ("sorted", "mp")


@dataclass(frozen=True)
class SortSpec:
    """Everything needed to run one sort: the algorithm and its parallelism knobs."""
    algo: str
    workers: int = 1
    ranks: int = 1
    cutoff: int = config.DEFAULT_CUTOFF
    subsort: str = "sorted"
    backend: str = config.DEFAULT_BACKEND
    pool_kind: Optional[str] = None
    timeout: Optional[float] = None

    def __post_init__(self):
        if self.algo not in ALGORITHMS:
            raise ValueError(f"Unknown algorithm '{self.algo}'. Choose from {ALGORITHMS}.")
        if self.workers < 1:
            raise ValueError(f"Worker count must be at least 1, got {self.workers}.")
        if self.cutoff < 1:
            raise ValueError(f"Cutoff must be at least 1, got {self.cutoff}.")
        if self.algo == "mpi":
            if not is_power_of_two(self.ranks):
                raise ValueError(f"mpi needs a power-of-two rank count, got {self.ranks}.")
            if self.subsort not in SUBSORTS:
                raise ValueError(f"Unknown subsort '{self.subsort}'. Choose from {SUBSORTS}.")

    @property
    def record_subsort(self) -> str:
        """The subsort column of a BenchRecord: none for every single-level sort."""
        return self.subsort if self.algo == "mpi" else "none"

    @property
    def record_workers(self) -> int:
        """Cores used per node, the c column of a BenchRecord."""
        if self.algo == "mp" or (self.algo == "mpi" and self.subsort == "mp"):
            return self.workers
        return 1

    @property
    def record_ranks(self) -> int:
        return self.ranks if self.algo == "mpi" else 1

    def subsort_kind(self) -> SubsortKind:
        if self.subsort == "mp":
            return SubsortKind.pool(self.workers, self.pool_kind)
        return SubsortKind.baseline()

    def label(self) -> str:
        if self.algo == "mpi":
            return f"mpi(p={self.ranks}, subsort={self.subsort}, c={self.record_workers})"
        if self.algo == "mp":
            return f"mp(c={self.workers})"
        if self.algo == "cutoff":
            return f"cutoff(t={self.cutoff})"
        return self.algo


def round_up_to_ranks(size: int, ranks: int) -> int:
    """Smallest multiple of `ranks` that is at least `size`."""
    return -(-size // ranks) * ranks


def run_sort(spec: SortSpec, data: Sequence) -> list:
    """Runs the algorithm named by `spec` on `data` and returns the sorted list."""
    if spec.algo == "seq":
        return mergesort_classic(data)
    if spec.algo == "cutoff":
        return mergesort_cutoff(data, spec.cutoff)
    if spec.algo == "sorted":
        return baseline_sort(data)
    if spec.algo == "mp":
        return pool_mergesort(data, spec.workers, spec.pool_kind)
    return mp_mergesort(spec.ranks, subsort=spec.subsort_kind(), backend=spec.backend,
                        data=data, timeout=spec.timeout)
