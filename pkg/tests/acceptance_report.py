"""Collects one PASS/FAIL line per acceptance criterion."""

_RESULTS = {}


def record(number, ok, detail):
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    _RESULTS[number] = line
    print(line, flush=True)
    return ok


def lines():
    return [_RESULTS[k] for k in sorted(_RESULTS)]
