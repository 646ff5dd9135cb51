import logging
import os
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

from sortbench import config
from sortbench.bench import BenchRecord, speedup

log = logging.getLogger(__name__)


@dataclass
class Series:
    """One plottable line: a name, the column headings and the (x, y) points sorted by x."""
    name: str
    x_label: str
    y_label: str
    points: list = field(default_factory=list)

    def to_text(self) -> str:
        lines = [f"# {self.name}", f"{self.x_label} {self.y_label}"]
        lines += [f"{x} {y:.3f}" for x, y in self.points]
        return "\n".join(lines) + "\n"


@dataclass
class Report:
    time_vs_cores: list = field(default_factory=list)
    speedup_vs_size: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def all_series(self) -> list:
        return self.time_vs_cores + self.speedup_vs_size


def _group_name(sort: str, p: int, subsort: str) -> str:
    return f"{sort}_p{p}_{subsort}"


def _reference_rows(records: Sequence[BenchRecord], tolerance: float) -> dict:
    """
    The speedup reference of every group: the lowest-c row whose stored speedup is 1,
    which is the plan's reference_workers row. Groups without one fall back to c=1.
    """
    references = {}
    for r in sorted(records, key=lambda r: r.c):
        if r.speedup is not None and abs(r.speedup - 1.0) <= tolerance:
            references.setdefault(r.group_key(), r)
    for r in records:
        if r.c == 1:
            references.setdefault(r.group_key(), r)
    return references


def check_consistency(records: Sequence[BenchRecord], tolerance: float = config.SPEEDUP_TOLERANCE) -> list:
    """
    Recomputes speedup from the time column against the reference row of the same
    (sort, p, subsort, size) group and returns a message for every stored value that
    disagrees by more than `tolerance`. Efficiency is checked as speedup / c.
    """
    references = _reference_rows(records, tolerance)
    problems = []
    for r in records:
        if r.speedup is None:
            continue
        reference = references.get(r.group_key())
        if reference is None:
            problems.append(f"{r.sort} p={r.p} c={r.c} size={r.size}: stored speedup has no reference row.")
            continue
        expected = speedup(reference.time, r.time)
        if abs(expected - r.speedup) > tolerance:
            problems.append(f"{r.sort} p={r.p} c={r.c} size={r.size}: stored speedup {r.speedup:.3f} "
                            f"but time column gives {expected:.3f}.")
        if r.efficiency is not None and abs(r.speedup / r.c - r.efficiency) > tolerance:
            problems.append(f"{r.sort} p={r.p} c={r.c} size={r.size}: stored efficiency {r.efficiency:.3f} "
                            f"but speedup / c gives {r.speedup / r.c:.3f}.")
    return problems


def build_report(records: Sequence[BenchRecord]) -> Report:
    """
    Derives the plot data: time by cores for every (sort, p, subsort, size) group, and
    speedup by size for every (sort, p, subsort, c) among rows that carry a speedup.
    Series and points come out in a fixed order so the output depends only on the input.
    """
    report = Report(warnings=check_consistency(records))

    by_size = defaultdict(list)
    by_cores = defaultdict(list)
    for r in records:
        by_size[(r.sort, r.p, r.subsort, r.size)].append((r.c, r.time))
        if r.speedup is not None:
            by_cores[(r.sort, r.p, r.subsort, r.c)].append((r.size, r.speedup))

    for (sort, p, subsort, size), points in sorted(by_size.items()):
        report.time_vs_cores.append(Series(
            name=f"time_vs_cores_{_group_name(sort, p, subsort)}_n{size}",
            x_label="cores", y_label="time", points=sorted(points)))
    for (sort, p, subsort, c), points in sorted(by_cores.items()):
        report.speedup_vs_size.append(Series(
            name=f"speedup_vs_size_{_group_name(sort, p, subsort)}_c{c}",
            x_label="size", y_label="speedup", points=sorted(points)))
    return report


def write_report(report: Report, directory) -> list:
    """Writes one `<series name>.dat` file per series and returns the paths written."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for series in report.all_series():
        path = os.path.join(directory, f"{series.name}.dat")
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(series.to_text())
        paths.append(path)
    log.info(f"Wrote {len(paths)} plot-data files to {directory}.")
    return paths
