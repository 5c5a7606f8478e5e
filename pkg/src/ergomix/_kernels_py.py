"""Pure-NumPy implementations of the hot inner-loop kernels.

This is the fallback backend used when the compiled extension
(``ergomix._kernels``) is not available. Both backends implement the same
functions with the same argument conventions and the same arithmetic
expression order, so their results agree to the last few ulps (the only
difference is the libm vs. NumPy ``exp``).
"""

import numpy as np


def gauss_box(out, xs, ys, mx, my, i11, i12, i22, norm):
    """Fill ``out[i, j]`` with ``norm * exp(-0.5 * q(xs[j], ys[i]))``.

    ``q`` is the Mahalanobis quadratic form with precision entries
    ``i11, i12, i22`` around mean ``(mx, my)``.
    """
    dx = xs - mx
    dy = ys - my
    q = (i11 * dx * dx)[None, :] + (2.0 * i12 * dx)[None, :] * dy[:, None]
    q += (i22 * dy * dy)[:, None]
    np.multiply(norm, np.exp(-0.5 * q), out=out)


def abs_sum(a):
    """Sum of absolute values of a 1-D array."""
    return float(np.abs(a).sum())


def masked_sum(a, idx):
    """Sum of ``a`` gathered at flat indices ``idx``."""
    return float(a[idx].sum())


def masked_abs_sum(a, idx):
    """Sum of ``|a|`` gathered at flat indices ``idx``."""
    return float(np.abs(a[idx]).sum())


def nearest_negative_scan(values, xs, ys, px, py):
    """Flat index of the negative cell closest to ``(px, py)``, or -1.

    Ties in squared distance resolve to the lowest row-major index.
    """
    neg = values < 0.0
    if not neg.any():
        return -1
    dx = xs - px
    dy = ys - py
    d2 = (dx * dx)[None, :] + (dy * dy)[:, None]
    d2 = np.where(neg, d2, np.inf)
    return int(np.argmin(d2))


def nearest_negative_among(vals, cx, cy, px, py):
    """Position of the negative entry of ``vals`` closest to ``(px, py)``.

    ``cx``/``cy`` give the coordinates of each candidate. Returns -1 when no
    entry is negative; ties resolve to the lowest position.
    """
    neg = vals < 0.0
    if not neg.any():
        return -1
    dx = cx - px
    dy = cy - py
    d2 = dx * dx + dy * dy
    d2 = np.where(neg, d2, np.inf)
    return int(np.argmin(d2))
