#!/usr/bin/env python3
"""
relaydual command line

Subcommands:
  sweep <config>                      rate-target sweep, CSV output
  verify <instance> <targets> <case>  duality report for one instance
  gen --M --K --seed --out            seeded Rayleigh instance

Exit codes: 0 success, 1 infeasible-only (or failed) results, 2 configuration error.
"""

import argparse
import logging
import os
import sys
from dataclasses import replace
from typing import List, Optional

# 添加项目根目录到路径
current_dir = os.path.dirname(os.path.abspath(__file__))
parent_dir = os.path.dirname(current_dir)
if parent_dir not in sys.path:
    sys.path.insert(0, parent_dir)

from core.channel_model import (  # noqa: E402
    RateTargets,
    StrategyConfig,
    generate_rayleigh,
    load_instance,
    parse_order,
    save_instance,
)
from core.errors import ConfigurationError, DimensionMismatchError, RelayDualError  # noqa: E402
from utils.config_utils import (  # noqa: E402
    DEFAULT_CONFIG_PATH,
    get_barrier_settings,
    get_solver_settings,
    get_tolerances,
    load_config,
    setup_logging,
)
from utils.run_logger import get_run_logger  # noqa: E402
from verification.duality_verifier import save_report, verify_duality  # noqa: E402

from cli.cli_interface import Colors, CLIInterface  # noqa: E402
from cli.sweep_runner import emit_csv, load_sweep_config, run_sweep  # noqa: E402

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_CONFIG = 2

DEFAULT_SWEEP_OUTPUT = "sweep.csv"

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relaydual",
        description="Uplink/downlink duality lab for compression-based relay networks",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=f"""
{Colors.BOLD}Examples:{Colors.ENDC}
  {Colors.CYAN}relaydual gen --M 3 --K 3 --seed 42 --out a.json{Colors.ENDC}
  {Colors.CYAN}relaydual verify a.json 1.0 IV{Colors.ENDC}
  {Colors.CYAN}relaydual verify a.json 0.5,1,1.5 II --decode-order 3,1,2{Colors.ENDC}
  {Colors.CYAN}relaydual sweep configs/reference_sweep.yaml --output out.csv{Colors.ENDC}

{Colors.BOLD}Cases:{Colors.ENDC}
  I    IN/TIN  <-> IN/LIN
  II   IN/SIC  <-> IN/DPC
  III  WZ/TIN  <-> MV/LIN
  IV   WZ/SIC  <-> MV/DPC
        """,
    )
    parser.add_argument(
        "--config", default=DEFAULT_CONFIG_PATH, help="Project configuration file"
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Enable debug logging")
    parser.add_argument("--no-color", action="store_true", help="Plain output")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="Run a rate-target sweep and write CSV")
    sweep.add_argument("sweep_config", help="Sweep YAML/JSON file")
    sweep.add_argument("--output", "-o", help="CSV path (overrides the sweep file)")
    sweep.add_argument("--workers", type=int, help="Grid points solved concurrently")

    verify = sub.add_parser("verify", help="Verify duality on one instance")
    verify.add_argument("instance", help="Instance JSON file")
    verify.add_argument(
        "targets", help="Rate target (bits/symbol): one value for all users or a comma list"
    )
    verify.add_argument("case", help="Strategy case: I, II, III or IV")
    verify.add_argument("--decode-order", help="Uplink decoding order, 1-based comma list")
    verify.add_argument(
        "--decompress-order", help="Uplink decompression order, 1-based comma list"
    )
    verify.add_argument("--report", help="Write the report as JSON")

    gen = sub.add_parser("gen", help="Generate a seeded Rayleigh instance")
    gen.add_argument("--M", type=int, required=True, help="Number of relays")
    gen.add_argument("--K", type=int, required=True, help="Number of users")
    gen.add_argument("--seed", type=int, required=True, help="Philox seed")
    gen.add_argument("--out", required=True, help="Output JSON path")
    gen.add_argument("--sigma2", type=float, default=1.0, help="Noise power (default: 1)")
    gen.add_argument("--cap", type=float, default=3.0, help="Fronthaul capacity (default: 3)")
    return parser


def parse_targets(text: str, num_users: int) -> RateTargets:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigurationError(f"Rate targets must be numbers: '{text}'")
    if len(values) == 1:
        return RateTargets.symmetric(num_users, values[0])
    if len(values) != num_users:
        raise DimensionMismatchError(f"{len(values)} rate targets for {num_users} users")
    return RateTargets(values)


def cmd_gen(args, ui: CLIInterface) -> int:
    instance = generate_rayleigh(args.M, args.K, args.seed, args.sigma2, args.cap)
    path = save_instance(instance, args.out)
    ui.print_status(f"Wrote {args.M}x{args.K} instance (seed {args.seed}) to {path}", "success")
    return EXIT_OK


def cmd_verify(args, config, ui: CLIInterface) -> int:
    instance = load_instance(args.instance)
    targets = parse_targets(args.targets, instance.num_users)
    natural = StrategyConfig.natural(args.case, instance.num_users, instance.num_relays)
    strategy = StrategyConfig(
        natural.case,
        parse_order(args.decode_order, instance.num_users, "decode_order")
        if args.decode_order
        else natural.decode_order,
        parse_order(args.decompress_order, instance.num_relays, "decompress_order")
        if args.decompress_order
        else natural.decompress_order,
    )
    report = verify_duality(
        instance,
        targets,
        strategy,
        get_tolerances(config),
        get_solver_settings(config),
        get_barrier_settings(config),
    )
    ui.print_report(report)
    if args.report:
        path = save_report(report, args.report, instance)
        ui.print_status(f"Report written to {path}", "info")
    if not report.feasible:
        ui.print_status("Rate targets are infeasible", "warning")
        return EXIT_INFEASIBLE
    if not report.passed:
        ui.print_status("Duality checks failed", "error")
        return EXIT_INFEASIBLE
    ui.print_status("Duality verified", "success")
    return EXIT_OK


def cmd_sweep(args, config, ui: CLIInterface) -> int:
    sweep_config = load_sweep_config(args.sweep_config)
    if args.workers is not None:
        sweep_config = replace(sweep_config, workers=args.workers)
    output = args.output or sweep_config.output or DEFAULT_SWEEP_OUTPUT
    ui.print_status(
        f"Sweeping {len(sweep_config.rates)} rate targets over cases "
        f"{', '.join(c.value for c in sweep_config.cases)}",
        "processing",
    )
    table = run_sweep(
        sweep_config,
        get_solver_settings(config),
        get_barrier_settings(config),
        get_tolerances(config),
        get_run_logger(args.config),
    )
    ui.print_sweep_summary(table)
    path = emit_csv(table, output)
    ui.print_status(f"CSV written to {path}", "success")
    if table.all_infeasible:
        ui.print_status("Every grid point is infeasible", "warning")
        return EXIT_INFEASIBLE
    if table.has_mismatch:
        ui.print_status("Some grid points failed the duality checks", "error")
        return EXIT_INFEASIBLE
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # usage errors exit 2, --help exits 0
        return int(e.code) if isinstance(e.code, int) else EXIT_CONFIG

    config = load_config(args.config)
    setup_logging(config, args.verbose)
    ui = CLIInterface(use_color=not args.no_color and sys.stdout.isatty())

    commands = {
        "gen": lambda: cmd_gen(args, ui),
        "verify": lambda: cmd_verify(args, config, ui),
        "sweep": lambda: cmd_sweep(args, config, ui),
    }
    try:
        return commands[args.command]()
    except (ConfigurationError, DimensionMismatchError) as e:
        ui.print_error_box("Configuration error", str(e))
        return EXIT_CONFIG
    except FileNotFoundError as e:
        ui.print_error_box("File not found", str(e))
        return EXIT_CONFIG
    except RelayDualError as e:
        logger.exception("Solver failure")
        ui.print_error_box("Solver error", str(e))
        return EXIT_INFEASIBLE
    except OSError as e:
        ui.print_error_box("I/O error", str(e))
        return EXIT_CONFIG
    except KeyboardInterrupt:
        print(f"\n{Colors.WARNING}⚠️  Interrupted by user{Colors.ENDC}")
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
