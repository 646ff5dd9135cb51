import logging
from dataclasses import dataclass
from typing import Optional, Sequence

from sortbench import config
from sortbench import transport
from sortbench.core_sort import baseline_sort, generate_array, merge
from sortbench.shared_pool import pool_mergesort
from sortbench.transport import RankContext

log = logging.getLogger(__name__)

MERGE_TAG = 0

SUBSORT_BASELINE = "baseline"
SUBSORT_POOL = "pool"


@dataclass(frozen=True)
class SubsortKind:
    """
    Which sort each rank runs on its scattered chunk.
    baseline gives message-passing merge sort; pool(workers) gives the hybrid variant.
    """
    selector: str = SUBSORT_BASELINE
    workers: int = 1
    pool_kind: Optional[str] = None

    def __post_init__(self):
        if self.selector not in (SUBSORT_BASELINE, SUBSORT_POOL):
            raise ValueError(f"Unknown subsort '{self.selector}'.")
        if self.selector == SUBSORT_POOL and self.workers < 1:
            raise ValueError(f"Pool subsort needs at least one worker, got {self.workers}.")

    @classmethod
    def baseline(cls):
        return cls(SUBSORT_BASELINE)

    @classmethod
    def pool(cls, workers: int, pool_kind: Optional[str] = None):
        return cls(SUBSORT_POOL, workers, pool_kind)


@dataclass(frozen=True)
class TreeRole:
    split: int
    role: str  # "left_child_parent", "right_child" or "inactive"


def is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def tree_role(rank: int, split: int) -> TreeRole:
    if split <= rank < 2 * split:
        return TreeRole(split, "right_child")
    if rank < split:
        return TreeRole(split, "left_child_parent")
    return TreeRole(split, "inactive")


def tree_schedule(size: int) -> list:
    """
    The (sender, receiver) pairs of every merge round, first round first.
    Round k pairs the upper half of the still-active ranks with the lower half.
    """
    if not is_power_of_two(size):
        raise ValueError(f"Tree merge needs a power-of-two world, got {size}.")
    rounds = []
    split = size // 2
    while split >= 1:
        rounds.append([(rank, rank - split) for rank in range(split, 2 * split)])
        split //= 2
    return rounds


def local_subsort(chunk: Sequence, subsort: SubsortKind) -> list:
    if subsort.selector == SUBSORT_POOL:
        return pool_mergesort(chunk, subsort.workers, subsort.pool_kind)
    return baseline_sort(chunk)


def tree_merge(ctx: RankContext, local: Sequence) -> Optional[list]:
    """
    Halving merge loop over tree_schedule(size). Each round, ranks in [split, 2*split)
    send their sorted array to rank - split and drop out; ranks below split receive and
    merge. Rank 0 ends up with everything and returns it; every other rank returns None.
    """
    local = list(local)
    for pairs in tree_schedule(ctx.size):
        # One pair per receiver, so the round's split is its pair count.
        split = len(pairs)
        role = tree_role(ctx.rank, split).role
        if role == "right_child":
            transport.send(ctx, local, ctx.rank - split, MERGE_TAG)
            break
        if role == "left_child_parent":
            tmp = transport.recv(ctx, ctx.rank + split, MERGE_TAG)
            # Partners hold equal-sized runs in every round.
            if len(tmp) != len(local):
                raise ValueError(f"Rank {ctx.rank} expected {len(local)} elements from rank {ctx.rank + split}, got {len(tmp)}.")
            local = merge(local, tmp)
    return local if ctx.rank == 0 else None


def _validate(world_size: int, n: int):
    if not is_power_of_two(world_size):
        raise ValueError(f"World size must be a power of two, got {world_size}.")
    if n % world_size:
        raise ValueError(f"Array length {n} is not divisible by world size {world_size}.")


def mp_mergesort(world_size: int, n: int = 0, seed: int = config.DEFAULT_SEED,
                 subsort: SubsortKind = SubsortKind(), backend: str = config.DEFAULT_BACKEND,
                 data: Optional[Sequence] = None, timeout: Optional[float] = None,
                 world: Optional[transport.World] = None) -> list:
    """
    Message-passing merge sort. Rank 0 generates generate_array(n, seed) (or takes
    `data` when given), scatters it, every rank subsorts its chunk and the tree merge
    leaves the sorted array at rank 0, which is returned.
    """
    if data is not None:
        n = len(data)
    _validate(world_size, n)
    if world is None:
        world = transport.World(world_size, backend, timeout)
    elif world.size != world_size:
        raise ValueError(f"World has {world.size} ranks but {world_size} were requested.")

    def rank_main(ctx: RankContext):
        unsorted = None
        if ctx.is_root:
            unsorted = list(data) if data is not None else generate_array(n, seed)
        # Non-root ranks pass no buffer and receive their chunk.
        local = transport.scatter(ctx, unsorted, root=0)
        local = local_subsort(local, subsort)
        return tree_merge(ctx, local)

    results = world.spawn(rank_main)
    log.info(f"mp_mergesort sorted {n} elements on {world_size} ranks ({subsort.selector} subsort).")
    return results[0]
