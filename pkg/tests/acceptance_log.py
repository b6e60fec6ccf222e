"""Verdict lines for the acceptance suite, echoed in pytest's terminal summary."""

LINES = []


def record(number: int, ok: bool, detail: str) -> bool:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    LINES.append(line)
    print(line)
    return ok
