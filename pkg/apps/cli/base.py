import logging
import os
import sys

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError, handle_default_options

from core.utils.exception_handler import InvalidConfigError, command_exception_handler

logger = logging.getLogger(__name__)


class ReportedCommandError(CommandError):
    """A CommandError whose `error:` line is already on stdout."""


def resolve_threads(flag=None):
    """Worker count: DEFOCUS_THREADS env var, then --threads, then settings, then all cores."""
    env = os.getenv("DEFOCUS_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError as exc:
            raise InvalidConfigError(f"DEFOCUS_THREADS must be an integer, got {env!r}") from exc
        if value > 0:
            return value
    if flag is not None:
        if flag < 1:
            raise InvalidConfigError(f"--threads must be at least 1, got {flag}")
        return flag
    return settings.DEFOCUS["THREADS"] or os.cpu_count() or 1


class DefocusCommand(BaseCommand):
    """
    Base for engine commands. Subclasses implement `run(threads, **options)`
    and return a CommandReport; known failures print one `error:` line on
    stdout and end with exit code 1 (validation) or 2 (runtime).
    """

    requires_system_checks = []

    def add_arguments(self, parser):
        parser.add_argument("--threads", type=int, help="Worker threads for the PSF layer")

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        # argument errors raise CommandError (exit 1) instead of exiting with 2
        parser.called_from_command_line = False
        return parser

    @property
    def command_name(self):
        return self.__module__.rsplit(".", 1)[-1]

    def run(self, threads, **options):
        raise NotImplementedError("subclasses of DefocusCommand must provide a run() method")

    def handle(self, *args, **options):
        threads = resolve_threads(options.pop("threads", None))
        logger.info("%s started with %d threads", self.command_name, threads)
        report = self.run(threads=threads, **options)
        logger.info("%s finished", self.command_name)
        return report.render()

    def execute(self, *args, **options):
        try:
            return super().execute(*args, **options)
        except ReportedCommandError:
            raise
        except Exception as exc:
            outcome = command_exception_handler(exc)
            if outcome is None:
                raise
            self.stdout.write(outcome.report)
            raise ReportedCommandError(outcome.report, returncode=outcome.exit_code) from exc

    def run_from_argv(self, argv):
        self._called_from_command_line = True
        try:
            parser = self.create_parser(argv[0], argv[1])
            options = parser.parse_args(argv[2:])
            cmd_options = vars(options)
            args = cmd_options.pop("args", ())
            handle_default_options(options)
            self.execute(*args, **cmd_options)
        except CommandError as exc:
            if not isinstance(exc, ReportedCommandError):
                self.stdout.write(command_exception_handler(exc).report)
            sys.exit(exc.returncode)
