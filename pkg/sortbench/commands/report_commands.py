import logging

from sortbench.bench import parse_csv
from sortbench.reporting import build_report, write_report

log = logging.getLogger(__name__)

DEFAULT_REPORT_DIR = "report"


class ReportCommands:
    """Turns a benchmark CSV into plot-ready columnar text files."""

    def __init__(self, out):
        self.out = out
        log.debug("ReportCommands loaded.")

    def register(self, subparsers):
        parser = subparsers.add_parser("report", help="Derive time-by-cores and speedup-by-size data from a CSV.")
        parser.add_argument("csv", help="CSV written by the bench command.")
        parser.add_argument("--output", default=DEFAULT_REPORT_DIR, help="Directory for the .dat files.")
        parser.set_defaults(handler=self.cmd_report)

    def cmd_report(self, args) -> int:
        """
        Writes one file per series and warns about any stored speedup or efficiency that
        the time column does not reproduce. Running it twice on one CSV gives identical files.
        """
        try:
            records = parse_csv(args.csv)
        except (OSError, ValueError) as e:
            log.error(f"Could not read benchmark CSV {args.csv}: {e}")
            print(f"error: could not read {args.csv}: {e}", file=self.out)
            return 1

        report = build_report(records)
        for warning in report.warnings:
            log.warning(f"Inconsistent row: {warning}")
            print(f"warning: {warning}", file=self.out)

        paths = write_report(report, args.output)
        for path in paths:
            print(path, file=self.out)
        print(f"{len(records)} records, {len(paths)} series written to {args.output}", file=self.out)
        return 0
