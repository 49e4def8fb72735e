"""Distribution comparison metrics."""

import warnings


def mse(a, b):
    """Mean squared error between two frequency distributions.

    Averages the squared frequency gap over the union of subgraph types
    that appear in either distribution (a type missing from one side
    contributes its full frequency squared). Two empty distributions
    compare as 0.0 with a warning.

    Accepts FrequencyDistribution objects or plain {code: freq} mappings.
    """
    fa = _freqs(a)
    fb = _freqs(b)
    codes = set(fa) | set(fb)
    if not codes:
        warnings.warn("mse of two empty distributions", stacklevel=2)
        return 0.0
    total = 0.0
    for code in codes:
        diff = fa.get(code, 0.0) - fb.get(code, 0.0)
        total += diff * diff
    return total / len(codes)


def _freqs(dist):
    if hasattr(dist, "entries"):
        return {str(code): float(freq) for code, _count, freq in dist.entries()}
    return {str(k): float(v) for k, v in dict(dist).items()}
