"""Independent reference implementations used to freeze expected test values.

Everything here is deliberately written in plain Python (explicit sorts,
loops and cumulative sets) so it shares no code path with the package.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np


def rank_oracle(q: float, n: int) -> int:
    """Nearest-rank index via exact rational arithmetic: max(1, ceil(q*n/100))."""
    if q == 0:
        return 1
    return max(1, math.ceil(Fraction(str(q)) * n / 100))


def percentile_oracle(values, q: float) -> float:
    ordered = sorted(float(v) for v in np.asarray(values).ravel())
    return ordered[rank_oracle(q, len(ordered)) - 1]


def focus_count_oracle(values, lower_bound: float) -> int:
    """Sort-and-count: pixels at or above the lower_bound percentile value."""
    flat = [float(v) for v in np.asarray(values).ravel()]
    cut = percentile_oracle(flat, lower_bound)
    return sum(1 for v in flat if v >= cut)


def saliency_ratio_oracle(values, lower_bound: float) -> float:
    flat = [float(v) for v in np.asarray(values).ravel()]
    cut = percentile_oracle(flat, lower_bound)
    return sum(v for v in flat if v >= cut) / sum(flat)


def brute_force_deletion_area(model, x, c, saliency, steps, baseline):
    """Deletion curve by hand: explicit descending sort with index tie-break,
    per-step pixel replacement in loops, trapezoid rule as a plain sum."""
    x_arr = np.asarray(x, dtype=np.float64)
    flat = [float(v) for v in np.asarray(saliency).ravel()]
    n = len(flat)
    order = sorted(range(n), key=lambda i: (-flat[i], i))
    height, width = np.asarray(saliency).shape
    confs = []
    for s in range(steps + 1):
        k = (s * n) // steps
        img = x_arr.copy()
        for idx in order[:k]:
            r, col = divmod(idx, width)
            for ch in range(x_arr.shape[0]):
                img[ch, r, col] = baseline
        confs.append(model.predict_confidence(img, c))
    h = 1.0 / steps
    return sum(h * (a + b) / 2.0 for a, b in zip(confs, confs[1:]))


def brute_force_rcap(model, x, c, saliency, baseline, lower_bound, interval):
    """Direct recover-and-predict: explicit sort, explicit cumulative sets,
    pixel-by-pixel recovery, plain sum of ratio x confidence products."""
    sal = [[float(v) for v in row] for row in np.asarray(saliency)]
    height = len(sal)
    width = len(sal[0])
    flat = [v for row in sal for v in row]
    total = sum(flat)
    ordered = sorted(flat)
    j = int(round((100 - lower_bound) / interval))
    x_arr = np.asarray(x, dtype=np.float64)
    channels = x_arr.shape[0]
    products = []
    for k in range(1, j + 1):
        q = 100 - k * interval
        threshold = ordered[rank_oracle(q, len(ordered)) - 1]
        members = [v for v in flat if v >= threshold]
        ratio = sum(members) / total
        recovered = np.empty_like(x_arr)
        for ch in range(channels):
            for r in range(height):
                for col in range(width):
                    if sal[r][col] >= threshold:
                        recovered[ch, r, col] = x_arr[ch, r, col]
                    else:
                        recovered[ch, r, col] = baseline
        conf = model.predict_confidence(recovered, c)
        products.append(ratio * conf)
    return sum(products) / j
