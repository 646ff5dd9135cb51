import pytest

from sortbench import transport
from sortbench.core_sort import generate_array, mergesort_classic
from sortbench.mp_tree import (
    MERGE_TAG,
    SubsortKind,
    is_power_of_two,
    local_subsort,
    mp_mergesort,
    tree_merge,
    tree_role,
    tree_schedule,
)
from sortbench.transport import RankFailedError, World


def test_is_power_of_two():
    assert [n for n in range(0, 20) if is_power_of_two(n)] == [1, 2, 4, 8, 16]


def test_tree_role():
    assert tree_role(5, 4).role == "right_child"
    assert tree_role(1, 4).role == "left_child_parent"
    assert tree_role(3, 2).role == "right_child"
    assert tree_role(5, 2).role == "inactive"


@pytest.mark.parametrize("size", [1, 2, 4, 8, 16, 64])
def test_schedule_rounds_are_perfect_matchings(size):
    rounds = tree_schedule(size)
    assert len(rounds) == size.bit_length() - 1
    active = set(range(size))
    for pairs in rounds:
        senders = [s for s, _ in pairs]
        receivers = [r for _, r in pairs]
        assert len(set(senders)) == len(senders)
        assert len(set(receivers)) == len(receivers)
        assert set(senders) | set(receivers) == active
        active = set(receivers)
    assert active == {0}
    assert sum(len(pairs) for pairs in rounds) == size - 1


def test_schedule_for_eight_ranks():
    assert tree_schedule(8) == [
        [(4, 0), (5, 1), (6, 2), (7, 3)],
        [(2, 0), (3, 1)],
        [(1, 0)],
    ]


def test_schedule_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        tree_schedule(6)


def test_local_subsort():
    assert local_subsort([3, 1, 2], SubsortKind.baseline()) == [1, 2, 3]
    assert local_subsort([3, 1, 2], SubsortKind.pool(2, "thread")) == [1, 2, 3]


def test_subsort_kind_validation():
    with pytest.raises(ValueError):
        SubsortKind("quick")
    with pytest.raises(ValueError):
        SubsortKind.pool(0)


def test_tree_merge_single_rank_sends_nothing():
    world = World(1)
    assert world.spawn(lambda ctx: tree_merge(ctx, [3, 4])) == [[3, 4]]
    assert world.message_log == []


def test_tree_merge_two_ranks():
    chunks = [[1, 3], [2, 4]]
    results = World(2).spawn(lambda ctx: tree_merge(ctx, chunks[ctx.rank]))
    assert results == [[1, 2, 3, 4], None]


@pytest.mark.parametrize("backend", ["in-process", "socket"])
@pytest.mark.parametrize("size", [2, 4, 8])
def test_tree_merge_traffic_matches_schedule(backend, size, rng):
    chunk = 16
    chunks = [sorted(rng.randrange(1000) for _ in range(chunk)) for _ in range(size)]
    world = World(size, backend)
    results = world.spawn(lambda ctx: tree_merge(ctx, chunks[ctx.rank]))

    assert results[0] == sorted(x for c in chunks for x in c)
    assert all(r is None for r in results[1:])
    merges = [m for m in world.message_log if m[2] == MERGE_TAG]
    assert len(merges) == size - 1

    # A run sent in round k has grown to chunk * 2**k elements.
    rounds = {}
    for src, dst, _, length in merges:
        rounds.setdefault(length, []).append((src, dst))
    assert len(rounds) == size.bit_length() - 1
    observed = [sorted(rounds[chunk * 2**k]) for k in range(len(rounds))]
    assert observed == tree_schedule(size)


def test_tree_merge_rejects_length_mismatch():
    def entry(ctx):
        return tree_merge(ctx, [1, 2] if ctx.rank == 0 else [3])

    with pytest.raises(RankFailedError) as excinfo:
        World(2, timeout=5).spawn(entry)
    assert excinfo.value.rank == 0


def test_mp_mergesort_fixed_example():
    data = [6, 2, 8, 4, 3, 7, 1, 5]
    assert mp_mergesort(4, data=data) == [1, 2, 3, 4, 5, 6, 7, 8]


def test_mp_mergesort_single_rank():
    assert mp_mergesort(1, n=8, seed=5) == sorted(generate_array(8, 5))


def test_hybrid_sort_on_eight_ranks():
    result = mp_mergesort(8, n=10**4, seed=42, subsort=SubsortKind.pool(2, "thread"))
    assert result == mergesort_classic(generate_array(10**4, 42))


def test_mp_mergesort_rejects_bad_shapes():
    with pytest.raises(ValueError):
        mp_mergesort(3, n=9)
    with pytest.raises(ValueError):
        mp_mergesort(4, n=10)


def test_mp_mergesort_is_deterministic():
    assert mp_mergesort(4, n=400, seed=9) == mp_mergesort(4, n=400, seed=9)


@pytest.mark.parametrize("backend", ["in-process", "socket"])
@pytest.mark.parametrize("subsort", [SubsortKind.baseline(), SubsortKind.pool(2, "thread")])
@pytest.mark.parametrize("ranks", [1, 2, 4, 8])
def test_mp_mergesort_matches_classic(backend, subsort, ranks):
    for n in (ranks, 64 * ranks, 10**4 // ranks * ranks):
        expected = mergesort_classic(generate_array(n, 3))
        assert mp_mergesort(ranks, n=n, seed=3, subsort=subsort, backend=backend) == expected


def test_scatter_sends_one_chunk_per_non_root_rank():
    world = World(4)
    mp_mergesort(4, n=16, seed=1, world=world)
    scatters = [m for m in world.message_log if m[2] == transport.SCATTER_TAG]
    assert [(src, dst, length) for src, dst, _, length in scatters] == [(0, 1, 4), (0, 2, 4), (0, 3, 4)]
