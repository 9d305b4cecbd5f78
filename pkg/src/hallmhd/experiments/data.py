"""Initial-data families: random divergence-free, Taylor-Green-like, single shell."""

from __future__ import annotations

import math

import numpy as np

from ..field_core import SpectralField, _fft, curl, leray_coeffs
from ..littlewood_paley import CHI_INNER, build_partition
from ..time_integration import critical_indices, block_norm_pair

FAMILIES = ("random", "taylor_green", "single_shell")


def random_divfree(grid, rng, slope=2.0, k_cut=None, k_low=None):
    """Mean-zero divergence-free field with coefficient amplitude ~ |k|^-slope.

    Real white noise is transformed, shaped by ``|k|^-slope``, restricted to
    the 2/3 band (and to ``k_low <= |k| <= k_cut`` when given), then
    Leray-projected. The result is not normalized.
    """
    noise = rng.standard_normal((3,) + grid.physical_shape)
    c = _fft(noise, grid)
    k = grid.kmag
    shape = np.zeros_like(k)
    np.power(k, -slope, out=shape, where=k > 0)
    keep = grid.dealias_mask & (k > 0)
    if k_cut is not None:
        keep &= k <= k_cut
    if k_low is not None:
        keep &= k >= k_low
    c = leray_coeffs(c * (shape * keep), grid)
    c[:, 0, 0, 0] = 0.0
    return SpectralField(grid, c, True)


def taylor_green_pair(grid):
    """Taylor-Green velocity and a rotated copy as magnetic field, lowest box mode."""
    x, y, z = (grid.k_min * a for a in grid.coordinates())
    u = np.stack([np.sin(x) * np.cos(y) * np.cos(z), -np.cos(x) * np.sin(y) * np.cos(z), 0.0 * x])
    b = np.stack([0.0 * x, np.sin(y) * np.cos(z) * np.cos(x), -np.cos(y) * np.sin(z) * np.cos(x)])
    return SpectralField(grid, _fft(u, grid), True), SpectralField(grid, _fft(b, grid), True)


def single_shell(grid, rng, j):
    """Random divergence-free field supported on the plateau of shell ``j``."""
    lo, hi = 2.0**j * 4.0 / 3.0, 2.0**j * 1.5
    f = random_divfree(grid, rng, slope=0.0, k_cut=hi, k_low=lo)
    if not np.any(f.coeffs):
        raise ValueError(f"shell {j} plateau contains no lattice modes on this grid")
    return f


def critical_size(u0, b0, p=2.0, q=2.0, partition=None):
    """``||u0||_{B^{3/p-1}_{p,1}} + ||b0||_{B^{3/q-1}_{q,1}} + ||curl b0||_{B^{3/q-1}_{q,1}}``."""
    grid = u0.grid
    part = partition or build_partition(grid)
    su, sb, _ = critical_indices(p, q)
    nu = block_norm_pair(u0.coeffs, grid, su, p, part)[0]
    nb = block_norm_pair(b0.coeffs, grid, sb, q, part)[0]
    nj = block_norm_pair(curl(b0).coeffs, grid, sb, q, part)[0]
    return nu + nb + nj


def make_initial(grid, family="random", seed=0, amplitude=0.1, p=2.0, q=2.0, slope=2.0, k_cut=None, shell=None):
    """Data ``(u0, b0, J0 = curl b0)`` scaled so that :func:`critical_size` equals ``amplitude``."""
    if family not in FAMILIES:
        raise ValueError(f"unknown data family {family!r}")
    if not amplitude >= 0:
        raise ValueError("amplitude must be non-negative")
    rng = np.random.default_rng(seed)
    if family == "random":
        u0 = random_divfree(grid, rng, slope, k_cut)
        b0 = random_divfree(grid, rng, slope, k_cut)
    elif family == "taylor_green":
        u0, b0 = taylor_green_pair(grid)
    else:
        j = shell if shell is not None else math.floor(math.log2(grid.band_kmax / 3.0 / CHI_INNER))
        u0 = single_shell(grid, rng, j)
        b0 = single_shell(grid, rng, j)
    size = critical_size(u0, b0, p, q)
    scale = amplitude / size if size > 0 else 0.0
    u0 = u0 * scale
    b0 = b0 * scale
    return u0, b0, curl(b0)
