"""
Command logging middleware
Logs every subcommand invocation with its arguments, outcome and duration
Can be enabled/disabled via LOG_COMMANDS in .env
"""
import argparse
import logging
import time
from datetime import datetime
from typing import Any, Callable, Dict

from soltrans.config import LOG_COMMANDS

logger = logging.getLogger(__name__)

Handler = Callable[[argparse.Namespace], int]


class CommandLogger:
    """
    Wraps subcommand handlers
    Controlled by LOG_COMMANDS environment variable
    """

    def __init__(self, enabled: bool = LOG_COMMANDS):
        self.enabled = enabled

    def __call__(self, handler: Handler, args: argparse.Namespace) -> int:
        """
        Log the command, run it and log its exit code

        Args:
            handler: subcommand handler
            args: parsed arguments

        Returns:
            Handler exit code
        """
        if not self.enabled:
            return handler(args)

        logger.info(self._format_log_message(args))
        started = time.perf_counter()
        code = handler(args)
        logger.info(f"Command {args.command} finished with exit code {code} "
                    f"in {time.perf_counter() - started:.2f}s")
        return code

    def _format_log_message(self, args: argparse.Namespace) -> str:
        timestamp = datetime.now().strftime('%Y-%m-%d %H:%M:%S')
        details = self._details(vars(args))
        details_str = ", ".join(f"{k}={v}" for k, v in details.items()) if details else "no details"
        return f"[{timestamp}] Command: {args.command} | {details_str}"

    @staticmethod
    def _details(values: Dict[str, Any]) -> Dict[str, Any]:
        out = {}
        for key, value in sorted(values.items()):
            if key in ('command', 'handler') or value is None:
                continue
            if hasattr(value, 'as_tuple'):
                value = ",".join(f"{c:g}" for c in value.as_tuple())
            out[key] = value
        return out


# Singleton instance
command_logger = CommandLogger()
