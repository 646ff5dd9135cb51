import os

import pytest

from sortbench.bench import RunPlan, run_plan

pytestmark = [
    pytest.mark.slow,
    pytest.mark.skipif(os.getenv("SORTBENCH_SLOW") != "1", reason="set SORTBENCH_SLOW=1 to run timing benchmarks"),
    pytest.mark.skipif((os.cpu_count() or 1) < 4, reason="needs at least 4 cores"),
]


def test_four_process_workers_beat_one():
    plan = RunPlan(algorithms=["mp"], sizes=[10**7], workers=[1, 4], repetitions=1, pool_kind="process")
    reference, parallel = run_plan(plan)
    assert parallel.speedup >= 1.5
    assert reference.speedup == 1.0
