import argparse
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from scripts.config import KINDS, load_config
from scripts.experiments import run_experiment
from scripts.logging_config import logger
from utils.errors import AnosovLabError, ConfigInvalid

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Run an anosovlab experiment from a JSON config.")
    parser.add_argument('subcommand', choices=KINDS, help='Experiment to run')
    parser.add_argument('--config', type=str, required=True, help='Path to the experiment config JSON')
    parser.add_argument('--out', type=str, default=None, help='Output directory (overrides the config)')
    parser.add_argument('--seed', type=int, default=None, help='Unsigned 64-bit seed (overrides the config)')
    parser.add_argument('--workers', type=int, default=None, help='Worker processes (overrides the config)')
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    # Step 1: Load and validate the config
    try:
        config = load_config(args.config)
        if config.kind != args.subcommand:
            raise ConfigInvalid(f"Config is for {config.kind!r}, not {args.subcommand!r}")
        config = config.with_overrides(out_dir=args.out, seed=args.seed, workers=args.workers)
    except ConfigInvalid as e:
        logger.error(f"Invalid config: {e}")
        return EXIT_CONFIG

    # Step 2: Run the experiment and write reports
    try:
        files = run_experiment(config)
    except ConfigInvalid as e:
        logger.error(f"Invalid config: {e}")
        return EXIT_CONFIG
    except AnosovLabError as e:
        logger.error(f"Experiment failed: {e}")
        return EXIT_FAILED

    for path in files:
        logger.info(f"Wrote {path}")
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
