from dataclasses import dataclass

from core.utils.exception_handler import EXIT_SUCCESS


@dataclass(frozen=True)
class CommandOutcome:
    """Exit code and stdout text of one command run. A failed run's report ends in an `error:` line."""

    exit_code: int
    report: str

    @property
    def ok(self):
        return self.exit_code == EXIT_SUCCESS

    @property
    def error_line(self):
        lines = [line for line in self.report.splitlines() if line.startswith("error:")]
        return lines[-1] if lines else None
