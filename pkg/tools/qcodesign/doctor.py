"""Environment diagnostics for the qcodesign CLI."""

from __future__ import annotations

import importlib
import json
import os
import sys
from dataclasses import asdict, dataclass
from typing import List, Optional

from . import __version__

REQUIRED_MODULES = (
    ("numpy", "1.22"),
    ("scipy", "1.8"),
)
OPTIONAL_MODULES = (
    ("pytest", "7.0"),
    ("mkdocs", "1.5"),
)


@dataclass
class CheckResult:
    name: str
    ok: bool
    message: str
    detail: Optional[str] = None
    optional: bool = False


def run_doctor(json_output: bool = False) -> int:
    checks: List[CheckResult] = [check_python()]
    checks.extend(check_module(name, minimum) for name, minimum in REQUIRED_MODULES)
    checks.extend(check_module(name, minimum, optional=True) for name, minimum in OPTIONAL_MODULES)
    checks.append(check_parallelism())

    has_errors = any(not c.ok and not c.optional for c in checks)

    print(f"qcodesign {__version__}")
    for check in checks:
        if check.ok:
            status = "OK"
        elif check.optional:
            status = "WARN"
        else:
            status = "FAIL"
        print(f"[{status}] {check.name} - {check.message}")
        if check.detail:
            print(f"       {check.detail}")

    if json_output:
        payload = [asdict(c) for c in checks]
        print(json.dumps(payload, indent=2), file=sys.stderr)

    return 0 if not has_errors else 1


def check_python() -> CheckResult:
    major, minor = sys.version_info[:2]
    version = sys.version.split()[0]
    if (major, minor) >= (3, 9):
        return CheckResult("python", True, f"Python {version} (OK)")
    return CheckResult("python", False, f"Python {version} (expected >= 3.9)")


def _version_tuple(text: str) -> tuple:
    parts = []
    for piece in text.split(".")[:2]:
        digits = "".join(ch for ch in piece if ch.isdigit())
        parts.append(int(digits or 0))
    return tuple(parts)


def check_module(name: str, minimum: str, optional: bool = False) -> CheckResult:
    try:
        module = importlib.import_module(name)
    except ImportError as exc:
        hint = "pip install -r requirements.txt"
        return CheckResult(name, False, f"{name} not importable", detail=f"{exc}; {hint}", optional=optional)

    version = getattr(module, "__version__", "unknown")
    if version != "unknown" and _version_tuple(version) < _version_tuple(minimum):
        return CheckResult(
            name, False, f"{name} {version} (expected >= {minimum})", optional=optional
        )
    return CheckResult(name, True, f"{name} {version}", optional=optional)


def check_parallelism() -> CheckResult:
    cpus = os.cpu_count()
    if cpus is None:
        return CheckResult(
            "threads",
            False,
            "CPU count unavailable",
            detail="--threads defaults to 1; pass it explicitly",
            optional=True,
        )
    return CheckResult("threads", True, f"{cpus} CPUs available (default --threads)")
