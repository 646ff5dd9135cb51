import random

import pytest

from sortbench.bench import BenchRecord

# Single-node results: (c, sort, time, speedup, efficiency), size 10^7.
SINGLE_NODE_ROWS = [
    (1, "mp", 7.724, 1.000, 1.000),
    (4, "mp", 3.474, 2.223, 0.556),
    (8, "mp", 3.164, 2.441, 0.305),
    (12, "mp", 2.487, 3.106, 0.259),
    (16, "mp", 2.820, 2.739, 0.171),
    (20, "mp", 2.858, 2.703, 0.135),
    (24, "mp", 2.830, 2.730, 0.114),
    (1, "seq", 85.611, None, None),
    (1, "sorted", 3.860, None, None),
]


@pytest.fixture
def single_node_rows():
    return list(SINGLE_NODE_ROWS)


@pytest.fixture
def single_node_records():
    return [
        BenchRecord(p=1, c=c, size=10**7, sort=sort, subsort="none", time=t,
                    speedup=s, efficiency=e, user="bench", node="node01")
        for c, sort, t, s, e in SINGLE_NODE_ROWS
    ]


@pytest.fixture
def rng():
    return random.Random(1234)
