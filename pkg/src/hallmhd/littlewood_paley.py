"""Dyadic frequency decomposition, homogeneous Besov norms and related diagnostics.

The low-pass profile ``chi`` equals 1 on ``|xi| <= 3/4`` and 0 on
``|xi| >= 4/3`` with a polynomial smoothstep in between. The annulus bump is
``phi(xi) = chi(xi / 2) - chi(xi)``, supported in ``3/4 <= |xi| <= 8/3`` and
equal to 1 on ``4/3 <= |xi| <= 3/2``. Shell ``j`` multiplies by
``phi(2^-j |k|)`` with ``k`` the physical wavevector.

Only the shells ``j_min..j_max`` that the grid resolves are kept: below
``j_min`` no nonzero lattice mode exists, above ``j_max`` everything is
outside the dealiased band. Multipliers are restricted to the band, so
content outside it is invisible to every norm here and is reported as
excluded.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .field_core import (
    GridMismatchError,
    SpectralField,
    _fft,
    _ifft,
    curl_inv,
    lp_norm_values,
    multi_indices,
    tensor_gradient,
)

CHI_INNER = 0.75
CHI_OUTER = 4.0 / 3.0

_SMOOTHSTEPS = {
    "cubic": lambda t: t * t * (3.0 - 2.0 * t),
    "quintic": lambda t: t**3 * (10.0 + t * (-15.0 + 6.0 * t)),
    "septic": lambda t: t**4 * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t))),
}


def chi(r, transition="quintic"):
    """Radial low-pass profile evaluated at radii ``r``."""
    step = _SMOOTHSTEPS[transition]
    t = np.clip((np.asarray(r, dtype=np.float64) - CHI_INNER) / (CHI_OUTER - CHI_INNER), 0.0, 1.0)
    return 1.0 - step(t)


def phi(r, transition="quintic"):
    """Annulus bump ``chi(r/2) - chi(r)``."""
    return chi(0.5 * np.asarray(r, dtype=np.float64), transition) - chi(r, transition)


@dataclass(frozen=True)
class BesovIndex:
    s: float
    p: float = 2.0
    r: float = 1.0

    def __post_init__(self):
        if not (self.p >= 1):
            raise ValueError(f"Besov p must be >= 1, got {self.p}")
        if not (self.r >= 1):
            raise ValueError(f"Besov r must be >= 1, got {self.r}")


class DyadicPartition:
    """Shell multipliers on one grid; build with :func:`build_partition`."""

    def __init__(self, grid, transition="quintic"):
        if transition not in _SMOOTHSTEPS:
            raise ValueError(f"unknown transition profile {transition!r}")
        self.grid = grid
        self.transition = transition
        self.j_min = math.floor(math.log2(CHI_INNER * grid.k_min))
        kmax = grid.band_kmax
        j = self.j_min
        while 2.0 ** (j + 1) * CHI_INNER < kmax:
            j += 1
        self.j_max = j
        if self.j_max - self.j_min + 1 < 3:
            raise ValueError(f"grid n={grid.n} too small to host three dyadic shells")

        kmag = grid.kmag
        band = grid.dealias_mask & (kmag > 0)
        self.band = band
        mult = np.empty((self.nshells,) + grid.spectral_shape)
        for i, jj in enumerate(self.shells):
            mult[i] = np.where(band, phi(kmag * 2.0**-jj, transition), 0.0)
        self.multipliers = mult

        # Compact per-mode form: every mode touches at most two adjacent shells.
        nz = mult > 0
        has = nz.any(axis=0)
        lo = np.where(has, np.argmax(nz, axis=0), -1).astype(np.int32)
        idx = np.clip(lo, 0, self.nshells - 1)
        w_lo = np.take_along_axis(mult, idx[None], 0)[0] * has
        hi_idx = np.clip(lo + 1, 0, self.nshells - 1)
        w_hi = np.where(lo + 1 < self.nshells, np.take_along_axis(mult, hi_idx[None], 0)[0], 0.0) * has
        self._lo = np.ascontiguousarray(lo.ravel())
        self._w_lo = np.ascontiguousarray(w_lo.ravel())
        self._w_hi = np.ascontiguousarray(w_hi.ravel())

    @property
    def shells(self):
        return list(range(self.j_min, self.j_max + 1))

    @property
    def nshells(self):
        return self.j_max - self.j_min + 1

    def slot(self, j):
        if not self.j_min <= j <= self.j_max:
            raise ValueError(f"shell {j} outside resolved range [{self.j_min}, {self.j_max}]")
        return j - self.j_min

    def multiplier(self, j):
        return self.multipliers[self.slot(j)]

    def low_pass_multiplier(self, j):
        """Multiplier of ``S_j = sum_{l <= j-1} Delta_l`` (mean excluded)."""
        if j <= self.j_min:
            return np.zeros(self.grid.spectral_shape)
        top = min(j - 1, self.j_max)
        return self.multipliers[: top - self.j_min + 1].sum(axis=0)

    def unity_defect(self):
        """Max deviation of the shell sum from 1 over nonzero band modes."""
        total = self.multipliers.sum(axis=0)
        return float(np.max(np.abs(total[self.band] - 1.0)))

    def shell_powers(self, power):
        """Sum ``power * phi_j^2`` per shell; ``power`` has the spectral shape."""
        flat = np.ascontiguousarray(power, dtype=np.float64).ravel()
        return kernels.shell_energies(flat, self._lo, self._w_lo, self._w_hi, self.nshells)


@lru_cache(maxsize=16)
def build_partition(grid, transition="quintic"):
    return DyadicPartition(grid, transition)


# --------------------------------------------------------------------------
# shell projections


def shell_project(u, j, partition=None):
    """``Delta_j u``."""
    part = partition or build_partition(u.grid)
    return SpectralField(u.grid, u.coeffs * part.multiplier(j), u.is_divfree)


def low_pass(u, j, partition=None):
    """``S_j u`` (homogeneous: the mean is not included)."""
    part = partition or build_partition(u.grid)
    return SpectralField(u.grid, u.coeffs * part.low_pass_multiplier(j), u.is_divfree)


@dataclass
class ShellDecomposition:
    source: SpectralField
    shells: dict
    excluded_fraction: float


def decompose(u, partition=None):
    part = partition or build_partition(u.grid)
    blocks = {j: shell_project(u, j, part) for j in part.shells}
    return ShellDecomposition(u, blocks, excluded_fraction(u, part))


def excluded_fraction(u, partition=None):
    """Fraction of L^2 energy (mean excluded) outside the resolved shells."""
    part = partition or build_partition(u.grid)
    power = _mode_power(u.coeffs, u.grid)
    power[0, 0, 0] = 0.0
    total = float(power.sum())
    if total == 0.0:
        return 0.0
    return float(power[~part.band].sum()) / total


# --------------------------------------------------------------------------
# Besov norms


@dataclass
class BesovValue:
    value: float
    index: BesovIndex
    shells: list = field(default_factory=list)  # [(j, 2^{js} ||Delta_j u||_{L^p})]
    excluded_fraction: float = 0.0

    def as_dict(self):
        return {
            "value": self.value,
            "s": self.index.s,
            "p": self.index.p,
            "r": self.index.r,
            "excluded_fraction": self.excluded_fraction,
            "shells": [{"j": j, "contribution": c} for j, c in self.shells],
        }


def _mode_power(coeffs, grid):
    c = coeffs.reshape((-1,) + grid.spectral_shape)
    return grid.volume * grid.hermitian_weight * np.einsum("c...,c...->...", c.real, c.real) + (
        grid.volume * grid.hermitian_weight * np.einsum("c...,c...->...", c.imag, c.imag)
    )


def shell_lp_norms(u, p, partition=None, symbol=None):
    """``||Delta_j u||_{L^p}`` for each resolved shell.

    ``symbol`` optionally multiplies the coefficients first (for derivatives).
    """
    part = partition or build_partition(u.grid)
    grid = u.grid
    c = u.coeffs if symbol is None else u.coeffs * symbol
    if p == 2:
        return np.sqrt(np.maximum(part.shell_powers(_mode_power(c, grid)), 0.0))
    out = np.empty(part.nshells)
    for i in range(part.nshells):
        block = _ifft(c * part.multipliers[i], grid)
        out[i] = lp_norm_values(block, p, grid)
    return out


def _combine(contrib, r):
    if r == math.inf:
        return float(np.max(contrib, initial=0.0))
    if r == 1:
        return float(np.sum(contrib))
    return float(np.sum(contrib**r) ** (1.0 / r))


def besov_norm(u, idx, partition=None, warn_mean=True):
    """Truncated homogeneous Besov norm with its per-shell breakdown."""
    part = partition or build_partition(u.grid)
    if warn_mean:
        scale = float(np.max(np.abs(u.coeffs), initial=0.0))
        if scale > 0 and float(np.max(np.abs(u.coeffs[:, 0, 0, 0]))) > 1e-12 * scale:
            warnings.warn("field has a nonzero mean, which a homogeneous norm ignores", stacklevel=2)
    norms = shell_lp_norms(u, idx.p, part)
    weights = 2.0 ** (idx.s * np.asarray(part.shells, dtype=np.float64))
    contrib = weights * norms
    return BesovValue(
        _combine(contrib, idx.r),
        idx,
        list(zip(part.shells, contrib.tolist())),
        excluded_fraction(u, part),
    )


def besov(u, s, p=2.0, r=1.0, partition=None):
    """Shorthand returning only the value of ``||u||_{B^s_{p,r}}``."""
    return besov_norm(u, BesovIndex(s, p, r), partition, warn_mean=False).value


def derivative_besov(u, m, s, p=2.0, r=1.0, partition=None):
    """``max_{|alpha| = m} ||d^alpha u||_{B^s_{p,r}}``."""
    part = partition or build_partition(u.grid)
    kd = u.grid.kd
    weights = 2.0 ** (s * np.asarray(part.shells, dtype=np.float64))
    best = 0.0
    for alpha in multi_indices(m):
        sym = np.ones(u.grid.spectral_shape, dtype=np.complex128)
        for a in alpha:
            sym = sym * (1j * kd[a])
        best = max(best, _combine(weights * shell_lp_norms(u, p, part, sym), r))
    return best


# --------------------------------------------------------------------------
# Bony decomposition


def _blocks_physical(u, part):
    """Physical-space blocks: index 0 is the mean, then one per shell."""
    grid = u.grid
    mean = np.zeros((u.ncomp,) + grid.physical_shape)
    mean += u.coeffs[:, 0, 0, 0].real[:, None, None, None]
    out = [mean]
    for i in range(part.nshells):
        out.append(_ifft(u.coeffs * part.multipliers[i], grid))
    return out


def bony_terms(u, v, partition=None):
    """Return ``(T_u v, T_v u, R(u, v))`` of the componentwise product.

    The mean of each factor is treated as one extra block below ``j_min``
    so that the three pieces add up to ``u v`` exactly, mean included.
    Products are formed in physical space and truncated to the 2/3 band.
    """
    if u.grid != v.grid:
        raise GridMismatchError("fields live on different grids")
    part = partition or build_partition(u.grid)
    grid = u.grid
    bu = _blocks_physical(u, part)
    bv = _blocks_physical(v, part)
    nb = len(bu)
    shape = np.broadcast_shapes(bu[0].shape, bv[0].shape)
    t_uv = np.zeros(shape)
    t_vu = np.zeros(shape)
    rem = np.zeros(shape)
    low_u = np.zeros(bu[0].shape)
    low_v = np.zeros(bv[0].shape)
    for q in range(nb):
        if q >= 2:
            low_u += bu[q - 2]
            low_v += bv[q - 2]
            t_uv += low_u * bv[q]
            t_vu += low_v * bu[q]
        for qq in (q - 1, q, q + 1):
            if 0 <= qq < nb:
                rem += bu[q] * bv[qq]
    mask = grid.dealias_mask
    return tuple(SpectralField(grid, _fft(x, grid) * mask) for x in (t_uv, t_vu, rem))


def bony_paraproduct(u, v, partition=None):
    """``T_u v``."""
    return bony_terms(u, v, partition)[0]


def bony_remainder(u, v, partition=None):
    """``R(u, v)``."""
    return bony_terms(u, v, partition)[2]


def dealiased_product(u, v):
    """Componentwise product ``u v`` truncated to the 2/3 band."""
    if u.grid != v.grid:
        raise GridMismatchError("fields live on different grids")
    grid = u.grid
    return SpectralField(grid, _fft(_ifft(u.coeffs, grid) * _ifft(v.coeffs, grid), grid) * grid.dealias_mask)


# --------------------------------------------------------------------------
# Bernstein and commutator diagnostics


def bernstein_ratio(u, j, k, p, q, partition=None):
    """``||D^k u||_{L^q} / (2^{j(k + 3(1/p - 1/q))} ||u||_{L^p})`` for ``u`` restricted to shell ``j``.

    ``D^k`` is the maximum over multi-indices of order ``k``.
    """
    if q < p:
        raise ValueError("Bernstein ratio requires q >= p")
    part = partition or build_partition(u.grid)
    grid = u.grid
    c = u.coeffs * part.multiplier(j)
    base = lp_norm_values(_ifft(c, grid), p, grid)
    if base == 0.0:
        return 0.0
    kd = grid.kd
    top = 0.0
    for alpha in multi_indices(k):
        sym = np.ones(grid.spectral_shape, dtype=np.complex128)
        for a in alpha:
            sym = sym * (1j * kd[a])
        top = max(top, lp_norm_values(_ifft(c * sym, grid), q, grid))
    inv_p = 0.0 if p == math.inf else 1.0 / p
    inv_q = 0.0 if q == math.inf else 1.0 / q
    lam = 2.0**j
    return top / (lam ** (k + 3.0 * (inv_p - inv_q)) * base)


@dataclass
class CommutatorValue:
    lhs: float
    rhs: float

    @property
    def ratio(self):
        return self.lhs / self.rhs if self.rhs > 0 else 0.0


def commutator_block_norm(w, z, partition=None):
    """``sum_j 2^{3j/2} ||[Delta_j, w x] z||_{L^2}`` against ``||grad w||_{B^{3/2}_{2,1}} ||z||_{B^{1/2}_{2,1}}``.

    Products are taken in physical space and truncated to the 2/3 band; the
    gradient norm uses the pointwise Frobenius magnitude.
    """
    if w.grid != z.grid:
        raise GridMismatchError("fields live on different grids")
    part = partition or build_partition(w.grid)
    grid = w.grid
    mask = grid.dealias_mask
    wp = np.ascontiguousarray(_ifft(w.coeffs, grid).reshape(3, -1))
    zp = np.ascontiguousarray(_ifft(z.coeffs, grid).reshape(3, -1))
    wz = _fft(kernels.cross(wp, zp).reshape((3,) + grid.physical_shape), grid) * mask
    lhs = 0.0
    for i, j in enumerate(part.shells):
        m = part.multipliers[i]
        zj = np.ascontiguousarray(_ifft(z.coeffs * m, grid).reshape(3, -1))
        w_zj = _fft(kernels.cross(wp, zj).reshape((3,) + grid.physical_shape), grid) * mask
        comm = wz * m - w_zj
        lhs += 2.0 ** (1.5 * j) * math.sqrt(float(np.sum(_mode_power(comm, grid))))
    rhs = besov(tensor_gradient(w), 1.5, 2, 1, part) * besov(z, 0.5, 2, 1, part)
    return CommutatorValue(lhs, rhs)


# --------------------------------------------------------------------------
# product-law ratios


def product_law_ratio(law, a, b, partition=None, p=2.0, q=2.0, theta=0.5):
    """Ratio of a product norm to the right-hand side of the matching product law.

    ``law`` is one of ``"law1"`` (``a`` in B^{3/p}_{p,1}, ``b`` in
    B^{3/q}_{q,1}, product in B^{3/q}_{q,1}), ``"law0"`` (product in
    B^{3/p}_{p,1} against the B^{3/q -+ theta}_{q,1} norms) or ``"law2"``
    (``(curl^-1 a) . grad b`` in B^{3/q}_{q,1}).
    """
    part = partition or build_partition(a.grid)
    if law == "law1":
        s1, s2 = 3.0 / p, 3.0 / q
        prod = dealiased_product(a, b)
        num = besov(prod, s1 + s2 - 3.0 / p, q, 1, part)
        den = besov(a, s1, p, 1, part) * besov(b, s2, q, 1, part)
    elif law == "law0":
        if q < p or not (3.0 / p - 3.0 / q <= theta <= 1.0):
            raise ValueError("theta outside the admissible range for law0")
        prod = dealiased_product(a, b)
        num = besov(prod, 3.0 / p, p, 1, part)
        lo, hi = 3.0 / q - theta, 3.0 / q + theta
        den = besov(a, lo, q, 1, part) * besov(b, hi, q, 1, part) + besov(a, hi, q, 1, part) * besov(
            b, lo, q, 1, part
        )
    elif law == "law2":
        c = curl_inv(a)
        grid = a.grid
        cp = _ifft(c.coeffs, grid)
        gb = _ifft(tensor_gradient(b).coeffs, grid).reshape((3, 3) + grid.physical_shape)
        adv = np.einsum("j...,ij...->i...", cp, gb)
        prod = SpectralField(grid, _fft(adv, grid) * grid.dealias_mask)
        num = besov(prod, 3.0 / q, q, 1, part)
        den = besov(a, 3.0 / q - 1.0, q, 1, part) * besov(b, 3.0 / q + 1.0, q, 1, part)
    else:
        raise ValueError(f"unknown product law {law!r}")
    return num / den if den > 0 else 0.0


def interpolation_ratio(u, s, s_tilde, theta, p=2.0, partition=None):
    """``||u||_{B^{theta s + (1-theta) s~}_{p,1}} / (||u||_{B^s}^theta ||u||_{B^{s~}}^{1-theta})``.

    Hoelder on the shell sum bounds this by 1 for every field.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie in (0, 1)")
    part = partition or build_partition(u.grid)
    mid = besov(u, theta * s + (1.0 - theta) * s_tilde, p, 1, part)
    a = besov(u, s, p, 1, part)
    b = besov(u, s_tilde, p, 1, part)
    den = a**theta * b ** (1.0 - theta)
    return mid / den if den > 0 else 0.0
