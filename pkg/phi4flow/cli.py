"""
Command-line entry point: phi4-flow eval|counterterms|verify|oracle|schema.
"""
import argparse
import json
import logging
import sys
from typing import List, Optional, Tuple

from phi4flow.config import SUITE_NAMES, RunConfig, load_config
from phi4flow.errors import (
    EXIT_INCONCLUSIVE,
    EXIT_OK,
    EXIT_SUITE_FAILED,
    ConfigError,
    Phi4FlowError,
)
from phi4flow.interfaces import SuiteStatus

logger = logging.getLogger("phi4flow")


def _parse_ln(text: str) -> Tuple[int, int]:
    try:
        l, n = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--ln expects 'l,n', got '{text}'")
    return l, n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phi4-flow",
        description="Perturbative flow equations for lattice phi^4 in four dimensions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="JSON run configuration (required)")
        p.add_argument("--threads", type=int, default=None, help="Worker cap for sweep points and rows")
        p.add_argument("--emit-gnuplot", action="store_true", help="Write gnuplot scripts for sweep tables")
        p.add_argument("--output-dir", default=None, help="Override output.directory")
        p.add_argument("-v", "--verbose", action="store_true", help="Debug logging")

    common(sub.add_parser("eval", help="Evaluate L_{l,n} for each configured momentum row"))
    common(sub.add_parser("counterterms", help="Shoot counterterms d_l, b_l, c_l"))
    verify = sub.add_parser("verify", help="Run verification suites")
    common(verify)
    verify.add_argument("suites", nargs="*", default=[],
                        help=f"Suites to run, any of {', '.join(SUITE_NAMES)} (default: task.suites)")
    verify.add_argument("--ln", type=_parse_ln, default=None, help="Restrict suite cases to one index 'l,n'")
    common(sub.add_parser("oracle", help="Closed-form reference values"))
    schema = sub.add_parser("schema", help="Print the configuration JSON schema")
    schema.add_argument("-v", "--verbose", action="store_true")
    return parser


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(stream=sys.stderr, format="%(message)s", level=logging.DEBUG if verbose else logging.INFO)


def _apply_overrides(config: RunConfig, args) -> RunConfig:
    update = {}
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        update["threads"] = args.threads
    output = {}
    if args.emit_gnuplot:
        output["emit_gnuplot"] = True
    if args.output_dir:
        output["directory"] = args.output_dir
    if output:
        update["output"] = config.output.model_copy(update=output)
    return config.model_copy(update=update) if update else config


def _status_exit(status: SuiteStatus) -> int:
    if status == SuiteStatus.FAIL:
        return EXIT_SUITE_FAILED
    if status == SuiteStatus.INCONCLUSIVE:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)

    if args.command == "schema":
        print(json.dumps(RunConfig.model_json_schema(), indent=2, sort_keys=True))
        return EXIT_OK

    try:
        unknown = [s for s in getattr(args, "suites", []) if s not in SUITE_NAMES]
        if unknown:
            raise ConfigError(f"Unknown suite(s): {unknown}")
        if not args.config:
            raise ConfigError(f"{args.command} requires --config")
        config = _apply_overrides(load_config(args.config), args)
        from phi4flow.pipeline import FlowPipeline
        pipeline = FlowPipeline(config)
        if args.command == "eval":
            pipeline.run_eval()
        elif args.command == "counterterms":
            pipeline.run_counterterms()
        elif args.command == "oracle":
            pipeline.run_oracle()
        elif args.command == "verify":
            _, status = pipeline.run_verify(args.suites or None, args.ln)
            return _status_exit(status)
    except Phi4FlowError as e:
        logger.error(f"[phi4-flow] {type(e).__name__}: {e}")
        return e.exit_code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
