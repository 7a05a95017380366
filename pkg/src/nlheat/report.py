"""Structured pass/fail reporting for experiment runs.

Every check carries an anchor: a stable identifier of the mathematical
property being tested (e.g. ``energy-monotone``), so report lines stay
greppable across runs.  Line format, one check per line:

    name status measured expected tol anchor
"""

from dataclasses import dataclass, field

__all__ = ["CheckResult", "RunReport", "check_pass", "check_fail", "check_na", "check_bool"]


def _fmt(x):
    if x is None:
        return "-"
    if isinstance(x, str):
        return x
    return f"{x:.6g}"


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str  # pass | fail | not_applicable
    measured: object = None
    expected: object = None
    tol: object = None
    anchor: str = ""

    def line(self):
        return " ".join(
            [self.name, self.status, _fmt(self.measured), _fmt(self.expected), _fmt(self.tol), self.anchor or "-"]
        )


def check_pass(name, anchor, measured=None, expected=None, tol=None):
    return CheckResult(name, "pass", measured, expected, tol, anchor)


def check_fail(name, anchor, measured=None, expected=None, tol=None):
    return CheckResult(name, "fail", measured, expected, tol, anchor)


def check_na(name, anchor, measured=None):
    return CheckResult(name, "not_applicable", measured, None, None, anchor)


def check_bool(name, anchor, ok, measured=None, expected=None, tol=None):
    return CheckResult(name, "pass" if ok else "fail", measured, expected, tol, anchor)


@dataclass
class RunReport:
    name: str
    config_echo: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    wall_time: float = 0.0

    def add(self, check):
        self.checks.append(check)

    @property
    def failed(self):
        return [c for c in self.checks if c.status == "fail"]

    @property
    def exit_code(self):
        return 1 if self.failed else 0

    def render(self):
        lines = [f"# report {self.name}"]
        for key in sorted(self.config_echo):
            lines.append(f"# config {key} {self.config_echo[key]}")
        lines.append(f"# wall_time_s {self.wall_time:.3f}")
        lines.extend(c.line() for c in self.checks)
        lines.append(
            f"# summary pass={sum(c.status == 'pass' for c in self.checks)}"
            f" fail={len(self.failed)}"
            f" not_applicable={sum(c.status == 'not_applicable' for c in self.checks)}"
        )
        return "\n".join(lines) + "\n"

    def write(self, path):
        with open(path, "w", newline="\n") as fh:
            fh.write(self.render())
