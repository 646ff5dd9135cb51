import logging

from sortbench.algorithms import round_up_to_ranks, run_sort
from sortbench.bench import StopWatch
from sortbench.commands.options import add_common_arguments, add_sort_arguments, config_from_args
from sortbench.core_sort import baseline_sort, generate_array

log = logging.getLogger(__name__)


class RunCommands:
    """Runs a single sort once and checks it against the native sort."""

    def __init__(self, out):
        self.out = out
        log.debug("RunCommands loaded.")

    def register(self, subparsers):
        parser = subparsers.add_parser("run", help="Generate an input, sort it once and verify the result.")
        add_sort_arguments(parser)
        add_common_arguments(parser)
        parser.set_defaults(handler=self.cmd_run)

    def cmd_run(self, args) -> int:
        """
        Generates generate_array(size, seed), runs the selected algorithm once, prints the
        time and whether the output equals the native sort. Exit 0 only when verified.
        Example: run --algo mpi --subsort mp --ranks 4 --workers 2 --size 10000
        """
        cli = config_from_args(args)
        spec = cli.sort_spec()
        size = cli.size
        if spec.algo == "mpi" and size % spec.ranks:
            size = round_up_to_ranks(size, spec.ranks)
            log.warning(f"Size {cli.size} is not divisible by {spec.ranks} ranks; using {size}.")
            print(f"adjusted size: {cli.size} -> {size} (multiple of {spec.ranks} ranks)", file=self.out)

        data = generate_array(size, cli.seed)
        watch = StopWatch()
        watch.start(spec.label())
        result = run_sort(spec, data)
        elapsed = watch.stop(spec.label())

        verified = result == baseline_sort(data)
        status = "verified" if verified else "FAILED verification"
        print(f"{spec.label()} size={size} seed={cli.seed} time={elapsed:.3f}s {status}", file=self.out)
        if not verified:
            log.error(f"{spec.label()} produced a result that differs from the native sort (size {size}, seed {cli.seed}).")
            return 1
        log.info(f"{spec.label()} sorted {size} elements in {elapsed:.3f}s.")
        return 0
