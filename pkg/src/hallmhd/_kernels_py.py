"""Pure-numpy versions of the compiled kernels (same signatures)."""

import numpy as np


def cross(a, b):
    out = np.empty_like(a)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


def power_sum(f, p):
    m2 = np.einsum("ci,ci->i", f, f)
    if p == 2.0:
        return float(np.sum(m2))
    if p == 1.0:
        return float(np.sum(np.sqrt(m2)))
    return float(np.sum(m2 ** (0.5 * p)))


def max_magnitude(f):
    return float(np.sqrt(np.max(np.einsum("ci,ci->i", f, f))))


def shell_energies(power, lo, w_lo, w_hi, nshells):
    keep = lo >= 0
    s = lo[keep]
    pw = power[keep]
    out = np.bincount(s, weights=pw * w_lo[keep] ** 2, minlength=nshells + 1)
    out += np.bincount(s + 1, weights=pw * w_hi[keep] ** 2, minlength=nshells + 1)
    return out[:nshells].astype(np.float64)
