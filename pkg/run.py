"""
Run script for the photonic hybrid precoding simulator
Parses the command line, resolves the scenario and writes CSV outputs
"""
import argparse
import logging
import sys

from config import DEFAULT_WORKERS, EXIT_IO, EXIT_OK, EXIT_USAGE, LOG_LEVEL
from src.errors import SimulationError, UsageError
from src.scenario import (
    PRESET_NAMES,
    apply_overrides,
    execute,
    job_summary,
    load_scenario,
    preset_job,
)

logger = logging.getLogger("run")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="run.py",
        description="Photonic hybrid precoding simulator for mmWave RoF multiuser MIMO",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="Run a scenario file or a figure preset")
    simulate.add_argument("--scenario", help="JSON scenario file")
    simulate.add_argument("--preset", choices=PRESET_NAMES, help="Figure preset")
    simulate.add_argument("--seed", type=int, help="Override the scenario seed")
    simulate.add_argument("--trials", type=int, help="Override the number of trials")
    simulate.add_argument("--out", help="Output CSV path")
    simulate.add_argument("--workers", type=int, default=DEFAULT_WORKERS,
                          help="Worker processes (wall time only, never output bytes)")
    return parser


def resolve_job(args):
    """Scenario file, optionally layered on a preset, then command-line overrides"""
    if args.scenario:
        # --preset supplies the defaults the file's explicit fields override
        job = load_scenario(args.scenario, preset_name=args.preset)
    elif args.preset:
        job = preset_job(args.preset)
    else:
        raise UsageError("simulate needs --scenario or --preset")
    return apply_overrides(job, seed=args.seed, trials=args.trials, output=args.out)


def main(argv=None) -> int:
    """Main run function"""
    logging.basicConfig(level=getattr(logging, LOG_LEVEL.upper(), logging.INFO),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)

    try:
        if args.workers < 1:
            raise UsageError(f"--workers must be at least 1, got {args.workers}")
        job = resolve_job(args)
        logger.info(f"Resolved job: {job_summary(job)}")
        written = execute(job, workers=args.workers)
    except SimulationError as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"❌ I/O failure: {e}", file=sys.stderr)
        return EXIT_IO
    except KeyboardInterrupt:
        print("\n👋 Simulation stopped by user", file=sys.stderr)
        return EXIT_USAGE

    for path in written:
        print(f"✅ {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
