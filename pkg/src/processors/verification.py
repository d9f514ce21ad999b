"""Pass/fail bookkeeping for oscsym experiments.

Each processor returns an ExperimentOutcome: the report tables it produced and
a VerificationResult with one check per invariant or bound.  A failing
experiment becomes a failed check; its siblings still run.
"""

import math
from dataclasses import dataclass, field
from typing import Callable

from logger_setup import get_logger
from operators.errors import OscsymError
from services.report_service import ReportTable

logger = get_logger()


@dataclass
class VerificationCheck:
    """Result of a single verification check."""
    name: str
    passed: bool
    detail: str = ""


@dataclass
class VerificationResult:
    """Aggregated verification results."""
    checks: list[VerificationCheck] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed: bool, detail: str = "") -> VerificationCheck:
        check = VerificationCheck(name, bool(passed), detail)
        self.checks.append(check)
        if not check.passed:
            logger.error(f"Check failed: {name} — {detail}")
        return check

    def at_most(self, name: str, value: float, bound: float, detail: str = "") -> VerificationCheck:
        """Record value <= bound; NaN fails."""
        passed = math.isfinite(value) and value <= bound
        text = f"{value:.4g} <= {bound:.4g}" if passed else f"{value:.4g} > {bound:.4g}"
        return self.add(name, passed, f"{text}{'; ' + detail if detail else ''}")

    def within(self, name: str, value: float, lower: float, upper: float, detail: str = "") -> VerificationCheck:
        """Record lower <= value <= upper; NaN fails."""
        passed = math.isfinite(value) and lower <= value <= upper
        text = f"{value:.4g} in [{lower:.4g}, {upper:.4g}]" if passed else f"{value:.4g} outside [{lower:.4g}, {upper:.4g}]"
        return self.add(name, passed, f"{text}{'; ' + detail if detail else ''}")

    def extend(self, other: "VerificationResult", prefix: str = "") -> None:
        for check in other.checks:
            self.checks.append(VerificationCheck(f"{prefix}{check.name}", check.passed, check.detail))

    def summary_lines(self) -> list[str]:
        """Return formatted summary lines for the console."""
        lines = ["", "VERIFICATION SUMMARY", "=" * 40]
        for check in self.checks:
            icon = "✓" if check.passed else "✗"
            line = f"  {icon} {check.name}"
            if check.detail:
                line += f" — {check.detail}"
            lines.append(line)

        passed = sum(1 for c in self.checks if c.passed)
        failed = sum(1 for c in self.checks if not c.passed)
        lines.append("")
        lines.append(f"{passed} passed, {failed} failed")
        return lines


@dataclass
class ExperimentOutcome:
    """Tables and checks produced by one subcommand."""
    name: str
    tables: list[ReportTable] = field(default_factory=list)
    verification: VerificationResult = field(default_factory=VerificationResult)

    @property
    def all_passed(self) -> bool:
        return self.verification.all_passed

    def merge(self, other: "ExperimentOutcome") -> None:
        self.tables.extend(other.tables)
        self.verification.extend(other.verification, prefix=f"{other.name}: ")


def guarded(outcome: ExperimentOutcome, name: str, func: Callable[[], None]) -> bool:
    """Run one experiment; an OscsymError becomes a failed check named ``name``.

    Returns:
        True when the experiment ran to completion.
    """
    try:
        func()
        return True
    except OscsymError as e:
        logger.error(f"{name} failed: {type(e).__name__}: {e}")
        outcome.verification.add(name, False, f"{type(e).__name__}: {e}")
        return False
