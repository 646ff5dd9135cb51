import logging
import os

from sortbench.bench import cross_ratios, emit_csv, format_table, load_plan, run_plan
from sortbench.commands.options import add_common_arguments, config_from_args

log = logging.getLogger(__name__)

DEFAULT_CSV = "bench.csv"


class BenchCommands:
    """Runs a whole benchmark plan and writes the CSV report."""

    def __init__(self, out):
        self.out = out
        log.debug("BenchCommands loaded.")

    def register(self, subparsers):
        parser = subparsers.add_parser("bench", help="Run a benchmark plan file and write a CSV report.")
        parser.add_argument("plan", help="key=value plan file (algos, sizes, workers, ranks, subsorts, seeds, reps).")
        parser.add_argument("--output", default=DEFAULT_CSV, help="Where to write the CSV report.")
        parser.add_argument("--repetitions", type=int, default=None,
                            help="Override the plan's reps.")
        add_common_arguments(parser)
        parser.set_defaults(handler=self.cmd_bench)

    def cmd_bench(self, args) -> int:
        """
        Loads the plan, runs every cell, and only then writes the CSV, so a plan that
        fails part-way leaves no partial report behind.
        """
        cli = config_from_args(args)
        plan = load_plan(args.plan)
        # Flags given explicitly win over the plan file.
        if args.repetitions is not None:
            plan.repetitions = cli.repetitions
        if args.backend is not None:
            plan.backend = cli.backend
        plan.pool_kind = cli.pool_kind
        plan.timeout = cli.timeout
        plan.validate()

        records = run_plan(plan)
        output_dir = os.path.dirname(os.path.abspath(cli.output))
        os.makedirs(output_dir, exist_ok=True)
        emit_csv(records, cli.output)

        print(format_table(records), file=self.out)
        ratios = cross_ratios(records)
        if any(vs_seq or vs_sorted for _, vs_seq, vs_sorted in ratios):
            print("\nrelative to single-core baselines:", file=self.out)
            for record, vs_seq, vs_sorted in ratios:
                seq_text = f"{vs_seq:.2f}x vs seq" if vs_seq else "--- vs seq"
                sorted_text = f"{vs_sorted:.2f}x vs sorted" if vs_sorted else "--- vs sorted"
                print(f"  {record.sort} p={record.p} c={record.c} size={record.size}: {seq_text}, {sorted_text}",
                      file=self.out)
        print(f"\nwrote {len(records)} records to {cli.output}", file=self.out)
        return 0
