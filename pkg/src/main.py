"""Main entry point for the adjoint-deis experiment driver."""
import argparse
import sys
from pathlib import Path
from typing import List, Optional

# Add src to path
sys.path.insert(0, str(Path(__file__).parent))

from utils.logger import add_run_log, logger, remove_run_log
from config import EXIT_CONFIG_ERROR, EXIT_NUMERICAL_ERROR, EXIT_OK
from utils.errors import ConfigError, ContractError, DomainError, NumericalError

from pipelines.commands import cmd_convergence, cmd_cycle_check, cmd_grad, cmd_optimize, cmd_sample
from pipelines.run_config import load_run_config

COMMANDS = {
    "sample": "Run the sampler and write the trajectory JSON",
    "grad": "Solve the adjoint over a trajectory and write gradients JSON",
    "convergence": "Sweep adjoint step counts and fit convergence orders",
    "optimize": "Guided generation by gradient descent on x_T / z / theta",
    "cycle-check": "Invert an SDE sample with Cycle-SDE and report the replay error",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adjoint-deis", description="AdjointDEIS experiments on toy diffusion models")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, type=Path, help="JSON run config")
        p.add_argument("--out", default=None, help="Output directory (overrides config.output)")
        p.add_argument("--seed", default=None, type=int, help="Seed override (overrides config.seed)")
        if name == "grad":
            p.add_argument("--trajectory", default=None, type=Path,
                           help="Trajectory JSON from `sample`; sampled fresh when omitted")
    return parser


def run(args: argparse.Namespace):
    cfg = load_run_config(args.config, seed=args.seed, out=args.out)
    handler = add_run_log(cfg.output_dir, args.command)
    try:
        if args.command == "sample":
            return cmd_sample(cfg)
        if args.command == "grad":
            return cmd_grad(cfg, args.trajectory)
        if args.command == "convergence":
            return cmd_convergence(cfg)
        if args.command == "optimize":
            return cmd_optimize(cfg)
        return cmd_cycle_check(cfg)
    finally:
        remove_run_log(handler)


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one subcommand, map failures to exit codes."""
    args = build_parser().parse_args(argv)
    logger.info("=" * 60)
    logger.info(f"adjoint-deis {args.command}")
    logger.info("=" * 60)

    try:
        outputs = run(args)
    except (ConfigError, ContractError, DomainError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_CONFIG_ERROR
    except NumericalError as e:
        logger.error(f"{args.command} failed with a numerical error: {e}")
        return EXIT_NUMERICAL_ERROR

    logger.success(f"{args.command} completed: {outputs}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
