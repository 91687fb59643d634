"""Shared store for the per-criterion verdict lines printed at the end of a run."""

LINES: list[str] = []


def record(number: str, passed: bool, detail: str) -> None:
    line = f"{'PASS' if passed else 'FAIL'}  criterion {number}: {detail}"
    LINES.append(line)
    print(line)
