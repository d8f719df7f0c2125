import argparse
import logging
import sys
from typing import List, Optional

import torch

from .core.config import settings
from .core.exceptions import EXIT_CONFIG_ERROR, EXIT_SOLVER_FAILURE, SolverSuiteError
from .api.routes import experiments

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=settings.APP_NAME,
        description="Galerkin, residual-minimization, SUPG, PINN and VPINN solvers "
                    "for advection-dominated diffusion, compared against exact solutions",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    experiments.register(subparsers)
    return parser


def configure_runtime() -> None:
    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
        format=settings.LOG_FORMAT,
    )
    if settings.NUM_THREADS:
        torch.set_num_threads(settings.NUM_THREADS)
    logger.debug(f"{settings.APP_NAME} {settings.VERSION}, torch threads: {torch.get_num_threads()}")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on usage errors, matching the config error code
        return EXIT_CONFIG_ERROR if e.code else 0
    configure_runtime()

    try:
        return args.handler(args)
    except SolverSuiteError as e:
        logger.error(f"{type(e).__name__}: {e.detail}")
        return e.exit_code
    except Exception as e:
        logger.error(f"Unexpected error: {str(e)}", exc_info=True)
        return EXIT_SOLVER_FAILURE


if __name__ == "__main__":
    sys.exit(main())
