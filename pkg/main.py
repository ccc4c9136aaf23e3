#!/usr/bin/env python3
"""
Solenoid Green Functions
Command-line entry point: mode spectra, proper-time kernels, propagators,
nonrelativistic Green functions and the verification suite.
"""

import argparse
import logging
import os
import sys
import traceback

# Add src directory to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from src import __version__
from src.cli import cmd_kernel, cmd_nonrel, cmd_propagate, cmd_spectrum, cmd_verify
from src.errors import NumericalError, ValidationError
from src.modes import Extension
from src.result_writer import ResultWriter
from src.run_config import RunConfig, load_run_config

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_VERIFICATION = 3

TABLE_COMMANDS = {
    'spectrum': cmd_spectrum,
    'kernel': cmd_kernel,
    'propagate': cmd_propagate,
    'nonrel': cmd_nonrel,
}


def parse_arguments(argv=None):
    """Parse command line arguments."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        '--config',
        help='JSON run configuration (defaults apply to every missing section)'
    )
    common.add_argument(
        '--out',
        help='Output directory (overrides the config and SOLENOID_GREEN_OUTPUT_DIR)'
    )
    common.add_argument(
        '--format',
        choices=['csv', 'json'],
        help='Table format (default: from config, csv)'
    )
    common.add_argument(
        '--threads',
        type=int,
        help='Worker threads for sweeps, checks and quadrature batches'
    )
    common.add_argument(
        '--extension',
        choices=[ext.value for ext in Extension],
        help='Self-adjoint extension Theta (default: from config, -pi/2)'
    )
    common.add_argument(
        '--verbose', '-v',
        action='store_true',
        help='Enable verbose output and debug logging'
    )

    parser = argparse.ArgumentParser(
        description='Green functions of the Dirac equation in the magnetic-solenoid field',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s spectrum --out results
  %(prog)s kernel --config run.json --uniform
  %(prog)s propagate --config run.json --threads 4
  %(prog)s nonrel --config run.json --extension +pi/2
  %(prog)s verify --only sum-identity --only y-equivalence
        """
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    subparsers = parser.add_subparsers(dest='command', required=True)

    subparsers.add_parser('spectrum', parents=[common], help='Tabulate omega and eps over a mode grid')
    kernel = subparsers.add_parser('kernel', parents=[common], help='Evaluate proper-time kernels on an s grid')
    kernel.add_argument(
        '--uniform',
        action='store_true',
        help='Use the integer-flux (uniform field) kernel'
    )
    subparsers.add_parser('propagate', parents=[common], help='Contour-integrated Delta or S per point pair')
    subparsers.add_parser('nonrel', parents=[common], help='Nonrelativistic retarded Green functions')
    verify = subparsers.add_parser('verify', parents=[common], help='Run the verification suite')
    verify.add_argument(
        '--only',
        action='append',
        metavar='CHECK_ID',
        help='Run only this check (repeatable)'
    )

    return parser.parse_args(argv)


def apply_overrides(run: RunConfig, args) -> RunConfig:
    """Fold command-line flags into the run configuration."""
    data = run.to_dict()
    if args.extension:
        data['extension'] = args.extension
    if args.format:
        data['output']['format'] = args.format
    if args.threads is not None:
        data['threads'] = args.threads
    if getattr(args, 'uniform', False):
        data['kernel']['uniform'] = True
    return RunConfig.from_dict(data)


def run_command(args) -> int:
    """Run one sub-command and return its exit code."""
    run = apply_overrides(load_run_config(args.config), args)
    output_dir = args.out or run.output_dir()
    writer = ResultWriter(output_dir)

    if args.verbose:
        print(f"Solenoid Green Functions {__version__} - {args.command}")
        print(f"Field: eB={run.field.eB}, l0={run.field.l0}, mu={run.field.mu}, M={run.field.M}, "
              f"dim={run.field.dim.value}, Theta={run.extension.value}")
        print(f"Threads: {run.threads}, output: {output_dir}")

    if args.command == 'verify':
        report = cmd_verify(run, args.only, run.threads)
        report = {'version': __version__, **report}
        filepath = writer.save_report(report, 'verify_report')
        for result in report['results']:
            status = 'PASS' if result['pass'] else 'FAIL'
            if args.verbose or not result['pass']:
                print(f"  {status} {result['check-id']:<26} residual {result['residual']:.3e} "
                      f"(tolerance {result['tolerance']:.1e})")
        print(f"{report['checks']} checks, {report['failed']} failed")
        print(f"Report: {filepath}")
        return EXIT_OK if report['pass'] else EXIT_VERIFICATION

    columns, rows = TABLE_COMMANDS[args.command](run, run.threads)
    filepath = writer.save_table(rows, columns, args.command, run.output.format)
    if args.verbose:
        print(f"{len(rows)} rows")
    print(f"Output: {filepath}")
    return EXIT_OK


def main(argv=None):
    """Main application function."""
    args = parse_arguments(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format='%(levelname)s %(name)s: %(message)s'
    )

    try:
        code = run_command(args)

    except KeyboardInterrupt:
        print("\nOperation cancelled by user.")
        code = EXIT_VALIDATION

    except ValidationError as e:
        print(f"\nError: {e}")
        if args.verbose:
            traceback.print_exc()
        code = EXIT_VALIDATION

    except NumericalError as e:
        print(f"\nNumerical failure: {e}")
        if args.verbose:
            traceback.print_exc()
        code = EXIT_NUMERICAL

    sys.exit(code)


if __name__ == "__main__":
    main()
