"""
NMSpectral CLI Gateway.

Provides command-line access to:
- run       execute the experiment a config describes
- validate  check a config without computing anything
- scan      run a measure scan (the config's experiment must be measure_scan)

Exit codes: 0 success, 1 configuration error, 2 honest non-convergence,
3 other numerical failure.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pyda_models.models import ExperimentConfig, ExperimentKind, WeightMode, kappa_lower_bound
from src import __version__
from src.cli.artifacts import ArtifactWriter
from src.cli.config_loader import apply_overrides, load_config
from src.cli.experiments import EXIT_NUMERICAL, RUNNERS
from src.core.errors import ConfigurationError, NMSpectralError
from src.core.settings import get_settings

logger = logging.getLogger(__name__)

EXIT_CONFIG = 1


class CLIGateway:
    def __init__(self):
        self.parser = argparse.ArgumentParser(
            prog="solver",
            description="Spectral Nash-Moser experiments",
            usage="solver [command] <config> [options]",
        )
        self.subparsers = self.parser.add_subparsers(dest="command", help="Available commands")
        self._setup_parsers()

    def _setup_parsers(self):
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument("config", help="Path to the experiment YAML file")
        common.add_argument("--output-dir", default=None, help="Directory for report.json and CSV files")
        common.add_argument("--seed", type=int, default=None, help="Override the config seed")
        common.add_argument("--threads", type=int, default=None, help="Worker threads (wins over NMSPECTRAL_THREADS)")
        common.add_argument("--weight-mode", choices=[m.value for m in WeightMode], default=None,
                            help="Sobolev weight family")
        common.add_argument("--log-level", default=None, help="Logging level (DEBUG, INFO, ...)")

        # ── Run ──
        self.subparsers.add_parser("run", parents=[common], help="Run the configured experiment")

        # ── Validate ──
        self.subparsers.add_parser("validate", parents=[common], help="Check a config without running it")

        # ── Scan ──
        self.subparsers.add_parser("scan", parents=[common], help="Run a measure scan config")

    def run(self, argv: Optional[List[str]] = None) -> int:
        args = self.parser.parse_args(argv)
        if not args.command:
            self.parser.print_help()
            return EXIT_CONFIG

        settings = get_settings()
        _configure_logging(args.log_level or settings.log_level)

        try:
            cfg = self._load(args)
            if args.command == "validate":
                return self._validate(cfg)
            if args.command == "scan" and cfg.experiment != ExperimentKind.MEASURE_SCAN:
                raise ConfigurationError(
                    f"scan needs a measure_scan experiment, got '{cfg.experiment.value}'", key="experiment"
                )
            return self._execute(cfg, settings.resolve_threads(args.threads))
        except ConfigurationError as e:
            print(f"configuration error: {e}", file=sys.stderr)
            return EXIT_CONFIG
        except NMSpectralError as e:
            print(f"numerical failure: {e}", file=sys.stderr)
            return EXIT_NUMERICAL
        except KeyboardInterrupt:
            print("\nOperation cancelled.", file=sys.stderr)
            return EXIT_NUMERICAL

    # ── implementation ───────────────────────────────────

    def _load(self, args: argparse.Namespace) -> ExperimentConfig:
        cfg = load_config(args.config)
        weight_mode = WeightMode(args.weight_mode) if args.weight_mode else None
        return apply_overrides(cfg, seed=args.seed, output_dir=args.output_dir, weight_mode=weight_mode)

    def _validate(self, cfg: ExperimentConfig) -> int:
        """Print OK and the resolved configuration."""
        resolved = cfg.model_dump(mode="json")
        resolved["resolved"] = {
            "epsilon": cfg.problem.resolved_epsilon(),
            "kappa0": cfg.params.resolved_kappa0(cfg.problem.basis),
            "kappa_bound": kappa_lower_bound(cfg.params.tau, cfg.problem.rho, cfg.problem.basis),
            "schedule": [cfg.params.scale(i) for i in range(cfg.params.max_steps + 1)],
        }
        print("OK")
        print(json.dumps(resolved, indent=2, sort_keys=True))
        return 0

    def _execute(self, cfg: ExperimentConfig, threads: int) -> int:
        output_dir = Path(cfg.output_dir or get_settings().output_root)
        writer = ArtifactWriter(output_dir, cfg, __version__)
        logger.info("running %s experiment (seed=%d, threads=%d)", cfg.experiment.value, cfg.seed, threads)
        outcome = RUNNERS[cfg.experiment](cfg, writer, threads)
        print(outcome.summary)
        for path in writer.written:
            print(f"  wrote {path}")
        return outcome.exit_code


def _configure_logging(level: str) -> None:
    logging.basicConfig(level=getattr(logging, str(level).upper(), logging.INFO),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv: Optional[List[str]] = None) -> int:
    cli = CLIGateway()
    return cli.run(argv)


if __name__ == "__main__":
    sys.exit(main())
