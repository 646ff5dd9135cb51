import io
import time

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sortbench import bench
from sortbench.algorithms import ALGORITHMS
from sortbench.bench import (
    CSV_HEADER,
    BenchRecord,
    CellVerificationError,
    PlanError,
    RunPlan,
    StopWatch,
    StopWatchError,
    cross_ratios,
    efficiency,
    emit_csv,
    format_table,
    load_plan,
    parse_csv,
    records_to_csv,
    run_plan,
    speedup,
)


def test_stopwatch_measures_sleep():
    watch = StopWatch()
    watch.start("a")
    time.sleep(0.1)
    elapsed = watch.stop("a")
    assert 0.1 <= elapsed < 0.5


def test_stopwatch_accumulates_across_intervals():
    watch = StopWatch()
    for _ in range(2):
        watch.start("a")
        time.sleep(0.05)
        watch.stop("a")
    assert watch.elapsed("a") >= 0.1
    assert not watch.is_running("a")


def test_stopwatch_elapsed_while_running():
    watch = StopWatch()
    watch.start("a")
    time.sleep(0.02)
    assert watch.is_running("a")
    assert watch.elapsed("a") >= 0.02


def test_stopwatch_misuse():
    watch = StopWatch()
    with pytest.raises(StopWatchError):
        watch.stop("never")
    with pytest.raises(StopWatchError):
        watch.elapsed("never")
    watch.start("a")
    with pytest.raises(StopWatchError):
        watch.start("a")


def test_stopwatch_summary_and_table():
    watch = StopWatch()
    watch.start("sort")
    watch.stop("sort")
    assert [label for label, _ in watch.summary()] == ["sort"]
    table = watch.benchmark_table()
    assert table.splitlines()[0].split() == ["timer", "time"]
    assert table.splitlines()[1].startswith("sort")
    watch.clear()
    assert watch.summary() == []


def test_module_stopwatch():
    bench.stopwatch_start("module-timer")
    assert bench.stopwatch_stop("module-timer") >= 0
    assert bench.stopwatch_elapsed("module-timer") >= 0


def test_speedup_and_efficiency_examples():
    assert speedup(7.724, 2.487) == pytest.approx(3.106, abs=0.001)
    assert efficiency(3.106, 12) == pytest.approx(0.259, abs=0.001)
    assert speedup(1.0, 1.0) == 1.0
    assert speedup(85.611, 2.487) == pytest.approx(34.42, abs=0.01)


def test_single_node_table_is_self_consistent(single_node_rows):
    reference = next(t for c, sort, t, _, _ in single_node_rows if sort == "mp" and c == 1)
    for c, sort, t, s, e in single_node_rows:
        if s is None:
            continue
        assert speedup(reference, t) == pytest.approx(s, abs=0.001)
        assert efficiency(s, c) == pytest.approx(e, abs=0.001)


def test_ratio_arguments_must_be_positive():
    with pytest.raises(ValueError):
        speedup(0, 1)
    with pytest.raises(ValueError):
        speedup(1, -1)
    with pytest.raises(ValueError):
        efficiency(1.0, 0)


def test_emit_csv_single_record():
    record = BenchRecord(p=1, c=4, size=10**7, sort="mp", subsort="none", time=3.474,
                         speedup=2.223, efficiency=0.556, user="bench", node="node01")
    stream = io.StringIO()
    emit_csv([record], stream)
    assert stream.getvalue() == (
        "p,c,size,sort,subsort,time,speedup,efficiency,user,node\n"
        "1,4,10000000,mp,none,3.474,2.223,0.556,bench,node01\n"
    )


def test_emit_csv_empty_and_missing_ratios():
    assert records_to_csv([]) == ",".join(CSV_HEADER) + "\n"
    row = records_to_csv([BenchRecord(1, 1, 10, "seq", "none", 0.5, user="u", node="n")]).splitlines()[1]
    assert row == "1,1,10,seq,none,0.500,,,u,n"


def test_emit_csv_to_path(tmp_path, single_node_records):
    path = tmp_path / "bench.csv"
    emit_csv(single_node_records, str(path))
    assert b"\r\n" not in path.read_bytes()
    assert parse_csv(str(path)) == single_node_records


names = st.text(alphabet="abcdefghijklmnopqrstuvwxyz-", min_size=1, max_size=12)
thousandths = st.integers(min_value=1, max_value=10**6).map(lambda v: v / 1000)
records = st.builds(
    BenchRecord,
    p=st.integers(min_value=1, max_value=64),
    c=st.integers(min_value=1, max_value=64),
    size=st.integers(min_value=0, max_value=10**9),
    sort=st.sampled_from(ALGORITHMS),
    subsort=st.sampled_from(["none", "sorted", "mp"]),
    time=thousandths,
    speedup=st.none() | thousandths,
    efficiency=st.none() | thousandths,
    user=names,
    node=names,
)


@given(st.lists(records, max_size=20))
def test_parse_csv_reads_back_emitted_records(rows):
    assert parse_csv(io.StringIO(records_to_csv(rows))) == rows


def test_parse_csv_rejects_wrong_header():
    with pytest.raises(ValueError):
        parse_csv(io.StringIO("a,b,c\n1,2,3\n"))
    assert parse_csv(io.StringIO("")) == []


def test_run_plan_attaches_ratios():
    plan = RunPlan(algorithms=["mp"], sizes=[10**4], workers=[1, 2], repetitions=1,
                   pool_kind="thread", user="u", node="n")
    first, second = run_plan(plan)
    assert (first.c, second.c) == (1, 2)
    assert first.speedup == 1.0
    assert first.efficiency == 1.0
    assert second.speedup == round(first.time / second.time, 3)
    assert second.efficiency == round(second.speedup / 2, 3)


def test_run_plan_keeps_fastest_repetition():
    watch = StopWatch()
    plan = RunPlan(algorithms=["seq"], sizes=[2000], seeds=[1], repetitions=3)
    [record] = run_plan(plan, watch)
    times = [t for _, t in watch.summary()]
    assert len(times) == 3
    assert record.time == max(round(min(times), 3), bench.TIME_RESOLUTION)
    assert record.speedup is None
    assert (record.p, record.c, record.subsort) == (1, 1, "none")


def test_run_plan_rounds_mpi_sizes_up():
    plan = RunPlan(algorithms=["mpi"], sizes=[10], ranks=[4], repetitions=1)
    [record] = run_plan(plan)
    assert record.size == 12
    assert (record.p, record.c, record.subsort) == (4, 1, "sorted")


def test_run_plan_aborts_on_unsorted_output(monkeypatch):
    monkeypatch.setattr(bench, "run_sort", lambda spec, data: sorted(data, reverse=True))
    plan = RunPlan(algorithms=["seq"], sizes=[100], repetitions=1)
    with pytest.raises(CellVerificationError) as excinfo:
        run_plan(plan)
    assert excinfo.value.size == 100


def test_plan_validation():
    with pytest.raises(PlanError):
        RunPlan(algorithms=["bogo"], sizes=[10]).validate()
    with pytest.raises(PlanError):
        RunPlan(algorithms=["seq"], sizes=[10], repetitions=0).validate()
    with pytest.raises(PlanError):
        RunPlan(algorithms=["mpi"], sizes=[10], ranks=[3]).validate()


def test_plan_specs_cover_the_grid():
    plan = RunPlan(algorithms=["seq", "mp", "mpi"], sizes=[8], workers=[1, 4], ranks=[2],
                   subsorts=["sorted", "mp"])
    labels = [spec.label() for spec in plan.specs()]
    assert labels == [
        "seq", "mp(c=1)", "mp(c=4)",
        "mpi(p=2, subsort=sorted, c=1)", "mpi(p=2, subsort=mp, c=1)", "mpi(p=2, subsort=mp, c=4)",
    ]


def test_load_plan(tmp_path):
    path = tmp_path / "plan.env"
    path.write_text("algos=seq,mp\nsizes=100,200\nworkers=1,2\nseeds=1,2\nreps=2\nuser=bench\n")
    plan = load_plan(str(path))
    assert plan.algorithms == ["seq", "mp"]
    assert plan.sizes == [100, 200]
    assert plan.workers == [1, 2]
    assert plan.seeds == [1, 2]
    assert plan.repetitions == 2
    assert plan.user == "bench"


@pytest.mark.parametrize("text", [
    "sizes=100\n",
    "algos=seq\n",
    "algos=seq\nsizes=ten\n",
    "algos=quick\nsizes=10\n",
    "algos=seq\nsizes=,\n",
    "algos=seq\nsizes=10\nreps=,\n",
    "algos=seq\nsizes=10\ncutoff=4,8\n",
    "algos=mp\nsizes=10\nreference_workers=0\n",
])
def test_load_plan_rejects_malformed_files(tmp_path, text):
    path = tmp_path / "plan.env"
    path.write_text(text)
    with pytest.raises(PlanError):
        load_plan(str(path))


def test_load_plan_missing_file(tmp_path):
    with pytest.raises(PlanError):
        load_plan(str(tmp_path / "absent.env"))


def test_cross_ratios(single_node_records):
    rows = {(r.sort, r.c): (vs_seq, vs_sorted) for r, vs_seq, vs_sorted in cross_ratios(single_node_records)}
    vs_seq, vs_sorted = rows[("mp", 12)]
    assert vs_seq == pytest.approx(34.42, abs=0.01)
    assert vs_sorted == pytest.approx(3.860 / 2.487)
    assert ("seq", 1) not in rows


def test_format_table(single_node_records):
    lines = format_table(single_node_records).splitlines()
    assert lines[0].split() == list(CSV_HEADER[:8])
    assert len(lines) == len(single_node_records) + 1
    assert lines[-1].split()[-2:] == ["---", "---"]
