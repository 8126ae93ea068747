"""
Main entry point for soltrans
Configures logging, registers subcommands and dispatches to their handlers
"""
import argparse
import logging
import re
import sys
from logging.handlers import RotatingFileHandler
from typing import List, Optional

from pythonjsonlogger.json import JsonFormatter

from soltrans import __version__
from soltrans.config import LOG_FORMAT, LOG_JSON, LOG_LEVEL, LOGS_PATH
from soltrans.errors import Sol3Error, UsageError
from soltrans.handlers import classify, figure, integrate, mesh, sweep, verify
from soltrans.handlers.common import EXIT_USAGE
from soltrans.middlewares.command_logger import command_logger

logger = logging.getLogger(__name__)

_logging_configured = False


def setup_logging(level: str = LOG_LEVEL, json_logs: bool = LOG_JSON, to_file: bool = True):
    """
    Console handler on stderr plus a rotating log file (max 10MB per file, keep 5 backups)
    Standard output is reserved for command results
    """
    global _logging_configured
    if _logging_configured:
        return

    formatter = JsonFormatter(LOG_FORMAT) if json_logs else logging.Formatter(LOG_FORMAT)
    handlers: List[logging.Handler] = []

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(getattr(logging, level))
    console_handler.setFormatter(formatter)
    handlers.append(console_handler)

    if to_file:
        try:
            LOGS_PATH.mkdir(parents=True, exist_ok=True)
            file_handler = RotatingFileHandler(
                LOGS_PATH / 'soltrans.log',
                maxBytes=10 * 1024 * 1024,  # 10MB
                backupCount=5,
                encoding='utf-8'
            )
            file_handler.setLevel(getattr(logging, level))
            file_handler.setFormatter(formatter)
            handlers.append(file_handler)
        except OSError as e:
            print(f"⚠️  Log file disabled: {e}", file=sys.stderr)

    logging.basicConfig(level=getattr(logging, level), handlers=handlers)
    _logging_configured = True


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting"""

    _QUOTED = re.compile(r"'([^']*)'")

    def error(self, message: str):
        match = self._QUOTED.search(message)
        raise UsageError(message, match.group(1) if match else None)


# Options whose values may start with a minus sign, e.g. --theta0 -pi/2 or --V -1,0,0
SIGNED_OPTIONS = frozenset({'--X', '--V', '--theta0', '--smax', '--u-range'})


def join_signed_values(argv: List[str]) -> List[str]:
    """Rewrite `--opt -value` as `--opt=-value` so argparse does not read the value as a flag"""
    joined: List[str] = []
    i = 0
    while i < len(argv):
        token = argv[i]
        if token in SIGNED_OPTIONS and i + 1 < len(argv) and argv[i + 1].startswith('-') \
                and not argv[i + 1].startswith('--'):
            joined.append(f"{token}={argv[i + 1]}")
            i += 2
            continue
        joined.append(token)
        i += 1
    return joined


def register_handlers(subparsers):
    """Register all subcommands"""
    for module in (classify, integrate, mesh, figure, verify, sweep):
        module.register(subparsers)


def build_parser() -> CliParser:
    parser = CliParser(
        prog='soltrans',
        description="Translating solitons of the mean curvature flow in Sol3",
    )
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    parser.add_argument('-v', '--verbose', action='store_true', help="debug logging")
    subparsers = parser.add_subparsers(dest='command', metavar='COMMAND', required=True)
    register_handlers(subparsers)
    return parser


def cli_main(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments and run one subcommand

    Returns:
        0 on success, 1 on usage or domain errors, 2 when verification fails
    """
    setup_logging()
    try:
        args = build_parser().parse_args(join_signed_values(sys.argv[1:] if argv is None else list(argv)))
        if args.verbose:
            logging.getLogger().setLevel(logging.DEBUG)
        return command_logger(args.handler, args)
    except SystemExit as e:
        # --help and --version
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    except UsageError as e:
        logger.error(f"❌ Usage error: {e}")
        print(f"soltrans: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Sol3Error as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(cli_main())
