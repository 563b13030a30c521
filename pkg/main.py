import argparse
import logging
import sys

from config.settings import LOG_LEVEL
from src.bench.config import load_config
from src.bench.io import generate_dataset
from src.bench.runner import run_experiment
from src.bench.summary import summarize
from src.exceptions import BenchError, ConfigError, DatasetFormatError, ValidationError

# Setup logging
logging.basicConfig(
    level=getattr(logging, LOG_LEVEL.upper(), logging.INFO),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[logging.StreamHandler()]
)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as e:
        logger.error(f"Invalid config: {e}")
        return EXIT_CONFIG
    try:
        out = run_experiment(cfg, output_dir=args.output)
    except (ConfigError, DatasetFormatError, ValidationError) as e:
        logger.error(f"Invalid experiment input: {e}")
        return EXIT_CONFIG
    except Exception as e:
        logger.error(f"Experiment failed: {e}", exc_info=True)
        return EXIT_RUNTIME
    logger.info(f"Results written to {out}")
    return EXIT_OK


def cmd_summarize(args) -> int:
    try:
        frame = summarize(args.dir)
    except BenchError as e:
        logger.error(f"Cannot summarize {args.dir}: {e}")
        return EXIT_CONFIG
    except Exception as e:
        logger.error(f"Summary failed: {e}", exc_info=True)
        return EXIT_RUNTIME
    print(frame.to_string(index=False))
    return EXIT_OK


def cmd_gen_data(args) -> int:
    try:
        ds = generate_dataset(args.spec, args.out)
    except (ConfigError, ValidationError) as e:
        logger.error(f"Invalid data spec: {e}")
        return EXIT_CONFIG
    except Exception as e:
        logger.error(f"Data generation failed: {e}", exc_info=True)
        return EXIT_RUNTIME
    logger.info(f"Generated {ds.n} samples with d={ds.d} into {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Semi-stochastic gradient benchmark: S3GD against SGD, SSGD, Prox-SVRG and SCV"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run an experiment config")
    run.add_argument("config", help="Path to the experiment .ini file")
    run.add_argument("--output", default=None, help="Output directory (overrides [output] dir)")
    run.set_defaults(handler=cmd_run)

    summary = commands.add_parser("summarize", help="Rebuild summary.csv from an experiment directory")
    summary.add_argument("dir", help="Experiment output directory")
    summary.set_defaults(handler=cmd_summarize)

    gen = commands.add_parser("gen-data", help="Write a synthetic dataset in LIBSVM format")
    gen.add_argument("spec", help="Spec file with a [data] section")
    gen.add_argument("out", help="Output LIBSVM file")
    gen.set_defaults(handler=cmd_gen_data)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
