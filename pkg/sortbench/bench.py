import csv
import io
import logging
import os
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from dotenv import dotenv_values

from sortbench import config
from sortbench.algorithms import ALGORITHMS, SUBSORTS, SortSpec, round_up_to_ranks, run_sort
from sortbench.core_sort import generate_array, is_permutation, is_sorted

log = logging.getLogger(__name__)

CSV_HEADER = ("p", "c", "size", "sort", "subsort", "time", "speedup", "efficiency", "user", "node")

# Times are reported to the millisecond; a run faster than that is recorded as one unit.
TIME_RESOLUTION = 0.001

PARALLEL_SORTS = ("mp", "mpi")


class StopWatchError(RuntimeError):
    """Raised for stop-before-start and for reads of labels that were never started."""


class CellVerificationError(RuntimeError):
    """A plan cell produced output that is not a sorted permutation of its input."""

    def __init__(self, cell: str, size: int, seed: int):
        super().__init__(f"Cell {cell} produced an unsorted result for size {size}, seed {seed}.")
        self.cell = cell
        self.size = size
        self.seed = seed


class PlanError(ValueError):
    """A benchmark plan that is missing keys or holds values that cannot be run."""


class StopWatch:
    """
    Named timers on the monotonic clock. Starting and stopping one label repeatedly
    accumulates its time. Each instance belongs to one thread.
    """
    def __init__(self):
        self._timers = {}  # label -> {"start": float | None, "accumulated": float}

    def start(self, label: str):
        timer = self._timers.setdefault(label, {"start": None, "accumulated": 0.0})
        if timer["start"] is not None:
            raise StopWatchError(f"Timer '{label}' is already running.")
        timer["start"] = time.perf_counter()

    def stop(self, label: str) -> float:
        timer = self._timers.get(label)
        if timer is None or timer["start"] is None:
            raise StopWatchError(f"Timer '{label}' was stopped without being started.")
        timer["accumulated"] += time.perf_counter() - timer["start"]
        timer["start"] = None
        return timer["accumulated"]

    def elapsed(self, label: str) -> float:
        timer = self._timers.get(label)
        if timer is None:
            raise StopWatchError(f"No timer named '{label}'.")
        running = time.perf_counter() - timer["start"] if timer["start"] is not None else 0.0
        return timer["accumulated"] + running

    def is_running(self, label: str) -> bool:
        timer = self._timers.get(label)
        return timer is not None and timer["start"] is not None

    def clear(self):
        self._timers.clear()

    def summary(self) -> list:
        return [(label, self.elapsed(label)) for label in self._timers]

    def benchmark_table(self) -> str:
        """Renders the timers as a label/seconds table."""
        rows = self.summary()
        width = max([len("timer")] + [len(label) for label, _ in rows])
        lines = [f"{'timer':<{width}}  {'time':>10}"]
        lines += [f"{label:<{width}}  {seconds:>10.3f}" for label, seconds in rows]
        return "\n".join(lines)


# Module-level watch for callers that just want named timers.
STOPWATCH = StopWatch()


def stopwatch_start(label: str):
    STOPWATCH.start(label)


def stopwatch_stop(label: str) -> float:
    return STOPWATCH.stop(label)


def stopwatch_elapsed(label: str) -> float:
    return STOPWATCH.elapsed(label)


def speedup(t_ref: float, t: float) -> float:
    if t_ref <= 0 or t <= 0:
        raise ValueError(f"Speedup needs positive times, got t_ref={t_ref}, t={t}.")
    return t_ref / t


def efficiency(s: float, c: int) -> float:
    if c < 1:
        raise ValueError(f"Efficiency needs at least one core, got c={c}.")
    if s <= 0:
        raise ValueError(f"Efficiency needs a positive speedup, got {s}.")
    return s / c


@dataclass
class BenchRecord:
    """One benchmark row, in the column order of the CSV report."""
    p: int
    c: int
    size: int
    sort: str
    subsort: str
    time: float
    speedup: Optional[float] = None
    efficiency: Optional[float] = None
    user: str = config.BENCH_USER
    node: str = config.BENCH_NODE

    def group_key(self) -> tuple:
        """Rows that share this key differ only in c and are compared against each other."""
        return (self.sort, self.p, self.subsort, self.size)


def _format_ratio(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.3f}"


def emit_csv(records: Iterable[BenchRecord], destination):
    """
    Writes the header and one row per record, in input order. `destination` is a path or
    a text stream. Times and ratios carry three decimals; absent ratios are empty fields.
    """
    if isinstance(destination, (str, os.PathLike)):
        with open(destination, "w", encoding="utf-8", newline="") as f:
            _write_csv(records, f)
        log.info(f"Wrote benchmark CSV to {destination}.")
    else:
        _write_csv(records, destination)


def _write_csv(records: Iterable[BenchRecord], stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        writer.writerow([r.p, r.c, r.size, r.sort, r.subsort, f"{r.time:.3f}",
                         _format_ratio(r.speedup), _format_ratio(r.efficiency), r.user, r.node])


def records_to_csv(records: Iterable[BenchRecord]) -> str:
    buffer = io.StringIO()
    _write_csv(records, buffer)
    return buffer.getvalue()


def parse_csv(source) -> list:
    """Inverse of emit_csv. `source` is a path or a text stream."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8", newline="") as f:
            return _read_csv(f)
    return _read_csv(source)


def _read_csv(stream) -> list:
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None:
        return []
    if tuple(header) != CSV_HEADER:
        raise ValueError(f"Unexpected CSV header {header}; expected {','.join(CSV_HEADER)}.")
    records = []
    for line_number, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            raise ValueError(f"CSV line {line_number} has {len(row)} fields, expected {len(CSV_HEADER)}.")
        try:
            records.append(BenchRecord(
                p=int(row[0]), c=int(row[1]), size=int(row[2]), sort=row[3], subsort=row[4],
                time=float(row[5]),
                speedup=float(row[6]) if row[6] else None,
                efficiency=float(row[7]) if row[7] else None,
                user=row[8], node=row[9],
            ))
        except ValueError as e:
            raise ValueError(f"CSV line {line_number} is malformed: {e}") from e
    return records


@dataclass
class RunPlan:
    """A benchmark grid. Each (algorithm, size, parallelism) combination is one cell."""
    algorithms: list
    sizes: list
    workers: list = field(default_factory=lambda: [1])
    ranks: list = field(default_factory=lambda: [1])
    seeds: list = field(default_factory=lambda: [config.DEFAULT_SEED])
    repetitions: int = config.DEFAULT_REPETITIONS
    subsorts: list = field(default_factory=lambda: ["sorted"])
    backend: str = config.DEFAULT_BACKEND
    reference_workers: int = config.DEFAULT_REFERENCE_WORKERS
    cutoff: int = config.DEFAULT_CUTOFF
    pool_kind: Optional[str] = None
    timeout: Optional[float] = None
    user: str = config.BENCH_USER
    node: str = config.BENCH_NODE

    def validate(self):
        if self.reference_workers < 1:
            raise PlanError(f"reference_workers must be at least 1, got {self.reference_workers}.")
        if self.repetitions < 1:
            raise PlanError(f"Repetitions must be at least 1, got {self.repetitions}.")
        if not self.algorithms or not self.sizes or not self.seeds:
            raise PlanError("A plan needs at least one algorithm, one size and one seed.")
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown:
            raise PlanError(f"Unknown algorithms {unknown}. Choose from {ALGORITHMS}.")
        bad_subsorts = [s for s in self.subsorts if s not in SUBSORTS]
        if bad_subsorts:
            raise PlanError(f"Unknown subsorts {bad_subsorts}. Choose from {SUBSORTS}.")
        if any(n < 0 for n in self.sizes):
            raise PlanError(f"Sizes must be non-negative, got {self.sizes}.")
        if any(w < 1 for w in self.workers):
            raise PlanError(f"Worker counts must be at least 1, got {self.workers}.")
        try:
            self.specs()
        except ValueError as e:
            raise PlanError(str(e)) from e

    def specs(self) -> list:
        """Every SortSpec the plan runs, per algorithm in plan order."""
        specs = []
        common = dict(cutoff=self.cutoff, backend=self.backend, pool_kind=self.pool_kind, timeout=self.timeout)
        for algo in self.algorithms:
            if algo == "mp":
                specs += [SortSpec(algo, workers=w, **common) for w in self.workers]
            elif algo == "mpi":
                for p in self.ranks:
                    for subsort in self.subsorts:
                        counts = self.workers if subsort == "mp" else [1]
                        specs += [SortSpec(algo, workers=w, ranks=p, subsort=subsort, **common) for w in counts]
            else:
                specs.append(SortSpec(algo, **common))
        return specs


def _parse_int_list(values: dict, key: str, default: list) -> list:
    raw = values.get(key)
    if raw is None or not raw.strip():
        return list(default)
    try:
        parsed = [int(item) for item in raw.split(",") if item.strip()]
    except ValueError as e:
        raise PlanError(f"Plan key '{key}' must be a comma separated list of integers, got '{raw}'.") from e
    if not parsed:
        raise PlanError(f"Plan key '{key}' holds no integers, got '{raw}'.")
    return parsed


def _parse_int(values: dict, key: str, default: int) -> int:
    raw = values.get(key)
    if raw is None or not raw.strip():
        return default
    try:
        return int(raw.strip())
    except ValueError as e:
        raise PlanError(f"Plan key '{key}' must be a single integer, got '{raw}'.") from e


def load_plan(path) -> RunPlan:
    """
    Reads a key=value plan file, e.g.

        algos=mp,mpi
        sizes=10000,100000
        workers=1,2,4
        ranks=1,2,4
        subsorts=sorted,mp
        seeds=42
        reps=3
    """
    if not os.path.isfile(path):
        raise PlanError(f"Plan file {path} does not exist.")
    values = dotenv_values(path)
    if not values.get("algos"):
        raise PlanError(f"Plan {path} does not name any algorithms (key 'algos').")
    if not values.get("sizes"):
        raise PlanError(f"Plan {path} does not name any sizes (key 'sizes').")
    plan = RunPlan(
        algorithms=[a.strip() for a in values["algos"].split(",") if a.strip()],
        sizes=_parse_int_list(values, "sizes", []),
        workers=_parse_int_list(values, "workers", [1]),
        ranks=_parse_int_list(values, "ranks", [1]),
        seeds=_parse_int_list(values, "seeds", [config.DEFAULT_SEED]),
        repetitions=_parse_int(values, "reps", config.DEFAULT_REPETITIONS),
        subsorts=[s.strip() for s in (values.get("subsorts") or "sorted").split(",") if s.strip()],
        backend=values.get("backend") or config.DEFAULT_BACKEND,
        reference_workers=_parse_int(values, "reference_workers", config.DEFAULT_REFERENCE_WORKERS),
        cutoff=_parse_int(values, "cutoff", config.DEFAULT_CUTOFF),
        user=values.get("user") or config.BENCH_USER,
        node=values.get("node") or config.BENCH_NODE,
    )
    plan.validate()
    log.info(f"Loaded plan {path}: {len(plan.specs())} specs x {len(plan.sizes)} sizes.")
    return plan


def _measure_cell(spec: SortSpec, size: int, plan: RunPlan, watch: StopWatch) -> float:
    """Runs one cell for every seed and repetition and returns the fastest verified time."""
    label = spec.label()
    times = []
    for seed in plan.seeds:
        data = generate_array(size, seed)
        for rep in range(plan.repetitions):
            timer = f"{label} n={size} seed={seed} rep={rep}"
            watch.start(timer)
            result = run_sort(spec, data)
            times.append(watch.stop(timer))
            if not (is_sorted(result) and is_permutation(result, data)):
                log.error(f"Verification failed for {label} at size {size}, seed {seed}.")
                raise CellVerificationError(label, size, seed)
    return min(times)


def _attach_ratios(records: list, reference_workers: int):
    references = {r.group_key(): r for r in records if r.sort in PARALLEL_SORTS and r.c == reference_workers}
    for record in records:
        reference = references.get(record.group_key())
        if record.sort not in PARALLEL_SORTS or reference is None:
            continue
        record.speedup = round(speedup(reference.time, record.time), 3)
        record.efficiency = round(efficiency(record.speedup, record.c), 3)


def run_plan(plan: RunPlan, watch: Optional[StopWatch] = None) -> list:
    """
    Executes every cell of the plan in order and returns one BenchRecord per cell.
    Each sorted output is checked before its time is kept. Parallel sorts get speedup
    and efficiency against the cell of the same group with c == reference_workers.
    """
    plan.validate()
    watch = watch or StopWatch()
    records = []
    for spec in plan.specs():
        for requested_size in plan.sizes:
            size = requested_size
            if spec.algo == "mpi" and size % spec.ranks:
                size = round_up_to_ranks(size, spec.ranks)
                log.warning(f"Rounded size {requested_size} up to {size} for {spec.ranks} ranks.")
            best = _measure_cell(spec, size, plan, watch)
            record = BenchRecord(
                p=spec.record_ranks, c=spec.record_workers, size=size, sort=spec.algo,
                subsort=spec.record_subsort, time=max(round(best, 3), TIME_RESOLUTION),
                user=plan.user, node=plan.node,
            )
            records.append(record)
            log.info(f"Cell {spec.label()} n={size}: {record.time:.3f}s")
    _attach_ratios(records, plan.reference_workers)
    return records


def cross_ratios(records: Sequence[BenchRecord]) -> list:
    """
    For every parallel record, how many times faster it ran than the sequential merge
    sort and the native sort of the same size. Returns (record, vs_seq, vs_sorted) rows;
    a ratio is None when the plan had no matching baseline.
    """
    baselines = {(r.sort, r.size): r.time for r in records if r.sort in ("seq", "sorted")}
    rows = []
    for r in records:
        if r.sort not in PARALLEL_SORTS:
            continue
        seq_time = baselines.get(("seq", r.size))
        sorted_time = baselines.get(("sorted", r.size))
        rows.append((r,
                     speedup(seq_time, r.time) if seq_time else None,
                     speedup(sorted_time, r.time) if sorted_time else None))
    return rows


def format_table(records: Sequence[BenchRecord]) -> str:
    """Plain-text summary in the column layout of the CSV."""
    rows = [CSV_HEADER[:8]]
    for r in records:
        rows.append((str(r.p), str(r.c), str(r.size), r.sort, r.subsort, f"{r.time:.3f}",
                     _format_ratio(r.speedup) or "---", _format_ratio(r.efficiency) or "---"))
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in rows)
