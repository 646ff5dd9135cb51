import logging
from dataclasses import dataclass
from typing import Optional

from sortbench import config
from sortbench.algorithms import ALGORITHMS, SUBSORTS, SortSpec
from sortbench.mp_tree import is_power_of_two
from sortbench.transport import BACKENDS

log = logging.getLogger(__name__)

COMMANDS = ("run", "bench", "verify", "report")


class UsageError(ValueError):
    """Flags that are individually valid but cannot be combined, or are out of range."""


@dataclass
class CliConfig:
    """The parsed command line, after env-var defaults have been applied."""
    command: str
    algo: str = "seq"
    subsort: str = "sorted"
    size: int = 1000
    workers: int = 1
    ranks: int = 1
    seed: int = config.DEFAULT_SEED
    repetitions: int = config.DEFAULT_REPETITIONS
    backend: str = config.DEFAULT_BACKEND
    output: Optional[str] = None
    timeout: float = config.WORLD_TIMEOUT_SECONDS
    cutoff: int = config.DEFAULT_CUTOFF
    port: int = config.SOCKET_PORT
    pool_kind: str = config.POOL_KIND

    def validate(self):
        if self.command not in COMMANDS:
            raise UsageError(f"Unknown command '{self.command}'.")
        if self.algo not in ALGORITHMS:
            raise UsageError(f"Unknown algorithm '{self.algo}'. Choose from {ALGORITHMS}.")
        if self.subsort not in SUBSORTS:
            raise UsageError(f"Unknown subsort '{self.subsort}'. Choose from {SUBSORTS}.")
        if self.backend not in BACKENDS:
            raise UsageError(f"Unknown backend '{self.backend}'. Choose from {BACKENDS}.")
        if self.size < 0:
            raise UsageError(f"--size must be non-negative, got {self.size}.")
        if self.workers < 1:
            raise UsageError(f"--workers must be at least 1, got {self.workers}.")
        if self.algo == "mpi" and not is_power_of_two(self.ranks):
            raise UsageError(f"--algo mpi needs --ranks to be a power of two, got {self.ranks}.")
        if self.repetitions < 1:
            raise UsageError(f"--repetitions must be at least 1, got {self.repetitions}.")
        if self.timeout <= 0:
            raise UsageError(f"--timeout must be positive, got {self.timeout}.")
        if not 0 <= self.seed < 2**64:
            raise UsageError(f"--seed must fit in an unsigned 64-bit integer, got {self.seed}.")

    def sort_spec(self) -> SortSpec:
        return SortSpec(self.algo, workers=self.workers, ranks=self.ranks, cutoff=self.cutoff,
                        subsort=self.subsort, backend=self.backend, pool_kind=self.pool_kind,
                        timeout=self.timeout)

    def apply_overrides(self):
        """Pushes transport flags into the config module, where worlds read their defaults."""
        config.SOCKET_PORT = self.port
        config.WORLD_TIMEOUT_SECONDS = self.timeout
        log.debug(f"Transport overrides: port={self.port}, timeout={self.timeout}s.")


def add_common_arguments(parser):
    """Flags shared by every command. Defaults come from the environment via config."""
    parser.add_argument("--seed", type=int, default=config.DEFAULT_SEED, help="Input generator seed.")
    parser.add_argument("--backend", choices=BACKENDS, default=None,
                        help=f"Transport backend for mpi runs (default {config.DEFAULT_BACKEND}, env SORTBENCH_BACKEND).")
    parser.add_argument("--timeout", type=float, default=config.WORLD_TIMEOUT_SECONDS,
                        help="Wall-clock deadline for an mpi world, in seconds (env SORTBENCH_TIMEOUT).")
    parser.add_argument("--port", type=int, default=config.SOCKET_PORT,
                        help="Socket backend rendezvous port; 0 picks free ports (env SORTBENCH_PORT).")
    parser.add_argument("--pool-kind", choices=("process", "thread"), default=config.POOL_KIND,
                        help="Execution lanes used by worker pools.")


def add_sort_arguments(parser):
    parser.add_argument("--algo", choices=ALGORITHMS, default="seq", help="Sorting algorithm.")
    parser.add_argument("--subsort", choices=SUBSORTS, default="sorted", help="Per-rank sort for mpi.")
    parser.add_argument("--size", type=int, default=1000, help="Array length.")
    parser.add_argument("--workers", type=int, default=1, help="Pool workers (mp, or mpi with --subsort mp).")
    parser.add_argument("--ranks", type=int, default=1, help="World size for mpi; must be a power of two.")
    parser.add_argument("--cutoff", type=int, default=config.DEFAULT_CUTOFF, help="Cutoff for --algo cutoff.")


def config_from_args(args) -> CliConfig:
    cli = CliConfig(command=args.command)
    for name in ("algo", "subsort", "size", "workers", "ranks", "seed", "repetitions", "backend",
                 "output", "timeout", "cutoff", "port", "pool_kind"):
        if getattr(args, name, None) is not None:
            setattr(cli, name, getattr(args, name))
    cli.validate()
    cli.apply_overrides()
    return cli
