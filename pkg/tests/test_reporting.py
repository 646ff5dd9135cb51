import dataclasses
import io

from sortbench.bench import RunPlan, parse_csv, records_to_csv, run_plan
from sortbench.reporting import build_report, check_consistency, write_report


def test_single_node_table_gives_time_by_cores(single_node_records):
    report = build_report(single_node_records)
    assert report.warnings == []
    mp_series = [s for s in report.time_vs_cores if s.name == "time_vs_cores_mp_p1_none_n10000000"]
    assert len(mp_series) == 1
    assert [c for c, _ in mp_series[0].points] == [1, 4, 8, 12, 16, 20, 24]
    assert mp_series[0].points[3] == (12, 2.487)


def test_speedup_series_only_for_rows_with_ratios(single_node_records):
    report = build_report(single_node_records)
    names = [s.name for s in report.speedup_vs_size]
    assert len(names) == 7
    assert all(name.startswith("speedup_vs_size_mp_p1_none_c") for name in names)


def test_tampered_speedup_is_flagged(single_node_records):
    tampered = [dataclasses.replace(r, speedup=3.5) if r.sort == "mp" and r.c == 12 else r for r in single_node_records]
    warnings = check_consistency(tampered)
    assert len(warnings) == 2  # speedup, and efficiency no longer equal to speedup / c
    assert "c=12" in warnings[0]


def test_speedup_without_reference_row_is_flagged(single_node_records):
    rows = [r for r in single_node_records if not (r.sort == "mp" and r.c == 1)]
    assert len(check_consistency(rows)) == 6


def test_empty_input_gives_empty_report():
    report = build_report([])
    assert report.all_series() == []
    assert report.warnings == []


def test_series_text_layout(single_node_records):
    series = build_report(single_node_records).time_vs_cores[0]
    lines = series.to_text().splitlines()
    assert lines[0] == f"# {series.name}"
    assert lines[1] == "cores time"


def test_report_files_are_reproducible(tmp_path, single_node_records):
    first = write_report(build_report(single_node_records), tmp_path / "a")
    second = write_report(build_report(single_node_records), tmp_path / "b")
    assert len(first) == len(second) == 10
    for a, b in zip(first, second):
        with open(a, "rb") as fa, open(b, "rb") as fb:
            assert fa.read() == fb.read()


def test_plan_with_other_reference_workers_is_consistent():
    plan = RunPlan(algorithms=["mp"], sizes=[20000], workers=[2, 4], reference_workers=2,
                   repetitions=1, pool_kind="thread")
    records = run_plan(plan)
    assert (records[0].c, records[0].speedup) == (2, 1.0)
    assert check_consistency(records) == []
    assert build_report(parse_csv(io.StringIO(records_to_csv(records)))).warnings == []


def test_reference_row_is_found_without_a_c1_row(single_node_records):
    rows = [r for r in single_node_records if r.sort == "mp" and r.c >= 4]
    reference = rows[0]
    rescaled = [dataclasses.replace(r, speedup=round(reference.time / r.time, 3),
                                    efficiency=round(reference.time / r.time / r.c, 3)) for r in rows]
    assert check_consistency(rescaled) == []
