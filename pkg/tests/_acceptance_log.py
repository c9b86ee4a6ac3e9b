"""Collects one verdict per acceptance criterion for the end-of-run summary."""

RESULTS: dict[int, tuple[bool, str]] = {}
N_CRITERIA = 10


def report(n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = (bool(ok), detail)
    print(line(n))


def line(n: int) -> str:
    if n not in RESULTS:
        return f"criterion {n}: NOT RUN"
    ok, detail = RESULTS[n]
    return f"criterion {n}: {'PASS' if ok else 'FAIL'} | {detail}"
