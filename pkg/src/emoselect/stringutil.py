"""Short human-readable renderings of durations, sizes and evaluation counts."""

import math

# (unit size, suffix, whole units only), smallest first
_TIME_SCALE: tuple[tuple[int, str, bool], ...] = (
    (1, "ns", True),
    (10**3, "µs", True),
    (10**6, "ms", True),
    (10**9, "s", False),
    (60 * 10**9, "minutes", False),
    (3600 * 10**9, "hours", False),
    (86400 * 10**9, "days", False),
)
_BYTE_SCALE: tuple[tuple[int, str, bool], ...] = (
    (1, "B", True),
    (2**10, "KiB", True),
    (2**20, "MiB", False),
)


def _scaled(value: int, scale: tuple[tuple[int, str, bool], ...]) -> str:
    unit, suffix, whole = scale[0]
    for candidate in scale[1:]:
        if value < candidate[0]:
            break
        unit, suffix, whole = candidate
    if whole:
        return f"{value // unit} {suffix}"
    return f"{value / unit:.1f} {suffix}"


def format_time_ns(ns: int) -> str:
    """perf_counter_ns differences, from ns up to days."""
    return _scaled(ns, _TIME_SCALE)


def format_bytes(num_bytes: int) -> str:
    return _scaled(num_bytes, _BYTE_SCALE)


def format_evals(evals: int) -> str:
    """Compact evaluation counts, e.g. 200000 -> "2.0e5"."""
    if evals < 10_000:
        return str(evals)
    exponent = int(math.floor(math.log10(evals)))
    return f"{evals / 10**exponent:.1f}e{exponent}"
