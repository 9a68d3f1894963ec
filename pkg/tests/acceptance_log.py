"""Collects one pass/fail line per acceptance criterion for the terminal summary."""
RESULTS = []


def report(name, ok, detail=""):
    RESULTS.append((name, bool(ok), detail))
    print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}", flush=True)
    return ok
