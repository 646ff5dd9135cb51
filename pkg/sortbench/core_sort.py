import logging
from collections import Counter
from typing import Sequence

import numpy as np

from sortbench import config

log = logging.getLogger(__name__)

# generate_array draws with numpy's PCG64 bit generator; changing this breaks
# reproducibility of every recorded benchmark input.
GENERATOR_NAME = "PCG64"


def merge(left: Sequence, right: Sequence) -> list:
    """
    Merges two sorted sequences into a new sorted list.
    The merge is stable: on equal keys the element from `left` comes first.
    """
    left_length, right_length = len(left), len(right)
    left_index, right_index = 0, 0
    merged = []
    while left_index < left_length and right_index < right_length:
        if right[right_index] < left[left_index]:
            merged.append(right[right_index])
            right_index += 1
        else:
            merged.append(left[left_index])
            left_index += 1
    if left_index < left_length:
        merged.extend(left[left_index:])
    else:
        merged.extend(right[right_index:])
    return merged


def mergesort_classic(arr: Sequence) -> list:
    """
    Classic recursive merge sort, splitting all the way down to single elements.
    Returns a new list; the input is never mutated.
    """
    if len(arr) < 2:
        return list(arr)
    mid = len(arr) // 2
    left = mergesort_classic(arr[:mid])
    right = mergesort_classic(arr[mid:])
    return merge(left, right)


def mergesort_cutoff(arr: Sequence, threshold: int = config.DEFAULT_CUTOFF) -> list:
    """
    Hybrid merge sort. Subarrays shorter than `threshold` are handed to the
    native sort instead of being split further.
    """
    if threshold < 1:
        raise ValueError(f"Cutoff threshold must be at least 1, got {threshold}.")
    return _mergesort_cutoff(arr, threshold)


def _mergesort_cutoff(arr: Sequence, threshold: int) -> list:
    n = len(arr)
    if n < threshold or n < 2:
        return baseline_sort(arr)
    mid = n // 2
    left = _mergesort_cutoff(arr[:mid], threshold)
    right = _mergesort_cutoff(arr[mid:], threshold)
    return merge(left, right)


def baseline_sort(arr: Sequence) -> list:
    """Native sort (Timsort), used both as the oracle and as the pool's chunk sort."""
    return sorted(arr)


def generate_array(n: int, seed: int = config.DEFAULT_SEED) -> list:
    """
    Returns `n` integers drawn uniformly from [0, n).
    The same (n, seed) pair always yields the same list. Values come from numpy's
    PCG64 generator through `Generator.integers`, whose bounded sampling is unbiased.
    """
    if n < 0:
        raise ValueError(f"Array length must be non-negative, got {n}.")
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"Seed must fit in an unsigned 64-bit integer, got {seed}.")
    if n == 0:
        return []
    generator = np.random.Generator(np.random.PCG64(seed))
    values = generator.integers(0, n, size=n, dtype=np.int64)
    log.debug(f"Generated {n} values with {GENERATOR_NAME} seed {seed}.")
    return values.tolist()


def is_sorted(arr: Sequence) -> bool:
    """True iff `arr` is non-decreasing. Empty and single-element arrays are sorted."""
    return all(not (arr[i + 1] < arr[i]) for i in range(len(arr) - 1))


def is_permutation(candidate: Sequence, original: Sequence) -> bool:
    """Multiset equality, the second half of every correctness check."""
    return len(candidate) == len(original) and Counter(candidate) == Counter(original)
