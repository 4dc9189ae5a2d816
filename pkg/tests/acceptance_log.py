"""One pass/fail line per acceptance criterion, collected across the session."""
import time
from contextlib import contextmanager

RESULTS = []


class Check:
    def __init__(self):
        self.items = []

    def __call__(self, label, ok, detail):
        self.items.append((label, bool(ok), detail))
        return bool(ok)


@contextmanager
def criterion(number, title, runtime_limit):
    """Collect sub-checks, time the block and record a single verdict line."""
    check = Check()
    start = time.perf_counter()
    error = None
    try:
        yield check
    except Exception as exc:  # recorded, then re-raised so pytest shows the traceback
        error = exc
    elapsed = time.perf_counter() - start
    check("runtime", elapsed < runtime_limit, f"{elapsed:.1f}s < {runtime_limit:g}s")
    passed = error is None and all(ok for _, ok, _ in check.items)
    parts = [f"{label} {'ok' if ok else 'FAILED'} ({detail})" for label, ok, detail in check.items]
    if error is not None:
        parts.append(f"error: {type(error).__name__}: {error}")
    line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: " + "; ".join(parts)
    RESULTS.append(line)
    print(line)
    if error is not None:
        raise error
    failed = [f"{label} ({detail})" for label, ok, detail in check.items if not ok]
    assert not failed, f"criterion {number} failed: " + ", ".join(failed)
