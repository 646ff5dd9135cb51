import logging
import time
from dataclasses import dataclass
from typing import Optional

from sortbench import config
from sortbench.algorithms import SortSpec, round_up_to_ranks, run_sort
from sortbench.commands.options import add_common_arguments, config_from_args
from sortbench.core_sort import baseline_sort, generate_array

log = logging.getLogger(__name__)

# Workers given to each rank's pool when the hybrid subsort is verified.
HYBRID_WORKERS = 2


@dataclass
class VerifyFailure:
    algo: str
    size: int
    seed: int
    reason: str = "output differs from the native sort"

    def __str__(self):
        return f"{self.algo} size={self.size} seed={self.seed}: {self.reason}"


def verification_specs(backend: str, pool_kind: Optional[str], timeout: Optional[float]) -> list:
    """Every algorithm configuration the suite checks."""
    common = dict(backend=backend, pool_kind=pool_kind, timeout=timeout)
    specs = [SortSpec("seq", **common), SortSpec("cutoff", **common), SortSpec("sorted", **common)]
    specs += [SortSpec("mp", workers=w, **common) for w in config.VERIFY_WORKER_COUNTS]
    for p in config.VERIFY_RANK_COUNTS:
        specs.append(SortSpec("mpi", ranks=p, subsort="sorted", **common))
        specs.append(SortSpec("mpi", ranks=p, subsort="mp", workers=HYBRID_WORKERS, **common))
    return specs


def run_verification(quick: bool = False, seed: int = config.DEFAULT_SEED, backend: str = config.DEFAULT_BACKEND,
                     pool_kind: Optional[str] = "thread", timeout: Optional[float] = None) -> tuple:
    """
    Compares every algorithm against the native sort over the verification sizes and
    seed, seed+1, ... Stops at the first mismatch or error.
    Returns (cases_checked, first_failure_or_None).
    """
    sizes = [n for n in config.VERIFY_SIZES if not quick or n <= config.VERIFY_QUICK_MAX_SIZE]
    seeds = [seed + i for i in range(config.VERIFY_SEED_COUNT)]
    checked = 0
    for spec in verification_specs(backend, pool_kind, timeout):
        for requested in sizes:
            size = round_up_to_ranks(requested, spec.ranks) if spec.algo == "mpi" else requested
            for s in seeds:
                data = generate_array(size, s)
                try:
                    result = run_sort(spec, data)
                except Exception as e:
                    log.error(f"{spec.label()} raised on size {size}, seed {s}: {e!r}", exc_info=True)
                    return checked, VerifyFailure(spec.label(), size, s, f"raised {e!r}")
                checked += 1
                if result != baseline_sort(data):
                    return checked, VerifyFailure(spec.label(), size, s)
        log.info(f"Verified {spec.label()} over sizes {sizes}.")
    return checked, None


class VerifyCommands:
    """Cross-algorithm equivalence suite."""

    def __init__(self, out):
        self.out = out
        log.debug("VerifyCommands loaded.")

    def register(self, subparsers):
        parser = subparsers.add_parser("verify", help="Check every algorithm against the native sort.")
        parser.add_argument("--quick", action="store_true", help="Cap sizes at 1000.")
        add_common_arguments(parser)
        # Thread lanes keep the suite fast; the pool contract is the same for both kinds.
        parser.set_defaults(handler=self.cmd_verify, pool_kind="thread")

    def cmd_verify(self, args) -> int:
        cli = config_from_args(args)
        started = time.perf_counter()
        checked, failure = run_verification(quick=args.quick, seed=cli.seed, backend=cli.backend,
                                            pool_kind=cli.pool_kind, timeout=cli.timeout)
        elapsed = time.perf_counter() - started
        if failure is not None:
            print(f"FAIL after {checked} cases: {failure}", file=self.out)
            return 1
        print(f"PASS: {checked} cases verified in {elapsed:.1f}s", file=self.out)
        return 0
