"""Spectral fields on the periodic box and the exact Fourier-side operators.

Conventions
-----------
* The box is ``[0, L)^3`` sampled at ``n^3`` points, ``x_i = i L / n``.
* Coefficients use the real-to-complex layout of ``rfftn`` over the last
  three axes: shape ``(ncomp, n, n, n//2 + 1)``. Hermitian symmetry of the
  full spectrum is implicit except on the ``kz = 0`` and ``kz = n/2`` planes.
* The forward transform carries ``1/n^3``, so a constant field ``c`` has
  zero-mode coefficient ``c`` and ``||f||_{L^2}^2 = L^3 sum_k |f_k|^2``.
* Mode index ``m`` along an axis lies in ``(-n/2, n/2]``; its wavenumber is
  ``(2 pi / L) m``. Derivative symbols vanish on the Nyquist index so that
  derivatives of real fields stay real; the heat symbol uses the true ``|k|^2``.
* The dealiased band keeps ``|m_x|, |m_y|, |m_z| <= (n - 1) // 3``.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations_with_replacement

import numpy as np
import scipy.fft as sfft

from . import kernels

SNAPSHOT_MAGIC = b"HMH1"
_HEADER = struct.Struct("<4sIddB")


class ShapeError(ValueError):
    pass


class GridMismatchError(ValueError):
    pass


class ZeroModeError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform periodic collocation grid with ``n`` points per axis."""

    n: int
    L: float = 2.0 * math.pi

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 8 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 8, got {self.n!r}")
        if not self.L > 0:
            raise ValueError(f"box length must be positive, got {self.L!r}")

    @property
    def dk(self):
        return 2.0 * math.pi / self.L

    @property
    def k_min(self):
        return self.dk

    @property
    def physical_shape(self):
        return (self.n, self.n, self.n)

    @property
    def spectral_shape(self):
        return (self.n, self.n, self.n // 2 + 1)

    @property
    def cutoff(self):
        """Largest retained mode index per axis under the 2/3 rule."""
        return (self.n - 1) // 3

    @property
    def volume(self):
        return self.L**3

    @property
    def cell_volume(self):
        return (self.L / self.n) ** 3

    @cached_property
    def mode_indices(self):
        """Integer mode index per axis, Nyquist reported as +n/2."""
        n = self.n
        m = np.fft.fftfreq(n, 1.0 / n).astype(np.int64)
        m[n // 2] = n // 2
        mz = np.arange(n // 2 + 1, dtype=np.int64)
        return m, m.copy(), mz

    @cached_property
    def wavenumbers(self):
        """Physical wavenumbers ``(2 pi / L) m`` per axis (1-D arrays)."""
        mx, my, mz = self.mode_indices
        return self.dk * mx, self.dk * my, self.dk * mz

    @cached_property
    def kd(self):
        """Derivative symbols, broadcastable to the spectral shape."""
        n = self.n
        kx, ky, kz = (k.copy() for k in self.wavenumbers)
        kx[n // 2] = 0.0
        ky[n // 2] = 0.0
        kz[n // 2] = 0.0
        return (kx[:, None, None], ky[None, :, None], kz[None, None, :])

    @cached_property
    def kd_vec(self):
        """Derivative symbols as a dense ``(3, n, n, n//2+1)`` array."""
        return np.stack(np.broadcast_arrays(*self.kd)).astype(np.float64)

    @cached_property
    def kd2(self):
        kx, ky, kz = self.kd
        return kx**2 + ky**2 + kz**2

    @cached_property
    def inv_kd2(self):
        k2 = self.kd2
        out = np.zeros_like(k2)
        np.divide(1.0, k2, out=out, where=k2 > 0)
        return out

    @cached_property
    def k2(self):
        kx, ky, kz = self.wavenumbers
        return kx[:, None, None] ** 2 + ky[None, :, None] ** 2 + kz[None, None, :] ** 2

    @cached_property
    def kmag(self):
        return np.sqrt(self.k2)

    @cached_property
    def dealias_mask(self):
        mx, my, mz = self.mode_indices
        K = self.cutoff
        return (
            (np.abs(mx)[:, None, None] <= K)
            & (np.abs(my)[None, :, None] <= K)
            & (mz[None, None, :] <= K)
        )

    @cached_property
    def hermitian_weight(self):
        """Multiplicity of each stored mode in the full spectrum (1 or 2)."""
        n = self.n
        w = np.full(self.spectral_shape, 2.0)
        w[..., 0] = 1.0
        w[..., n // 2] = 1.0
        return w

    @cached_property
    def band_kmax(self):
        """Largest |k| inside the dealiased band (cube corner)."""
        return self.dk * self.cutoff * math.sqrt(3.0)

    def coordinates(self):
        x = np.arange(self.n) * (self.L / self.n)
        return np.meshgrid(x, x, x, indexing="ij")


class SpectralField:
    """Fourier coefficients of a real field with ``ncomp`` components.

    Instances are treated as immutable values; the coefficient array is
    marked read-only.
    """

    __slots__ = ("grid", "coeffs", "is_divfree")

    def __init__(self, grid, coeffs, is_divfree=False):
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        if coeffs.ndim == 3:
            coeffs = coeffs[None]
        if coeffs.shape[1:] != grid.spectral_shape:
            raise ShapeError(
                f"coefficient shape {coeffs.shape} does not match grid {grid.spectral_shape}"
            )
        if coeffs.flags.writeable:
            if coeffs.base is not None:
                coeffs = coeffs.copy()
            coeffs.flags.writeable = False
        self.grid = grid
        self.coeffs = coeffs
        self.is_divfree = bool(is_divfree)

    @classmethod
    def zeros(cls, grid, ncomp=3):
        return cls(grid, np.zeros((ncomp,) + grid.spectral_shape, np.complex128), True)

    @property
    def ncomp(self):
        return self.coeffs.shape[0]

    @property
    def mean(self):
        return self.coeffs[:, 0, 0, 0].real.copy()

    def physical(self):
        return inverse(self)

    def _check(self, other):
        if isinstance(other, SpectralField):
            if other.grid != self.grid:
                raise GridMismatchError("fields live on different grids")
            return other.coeffs
        return other

    def __add__(self, other):
        flag = self.is_divfree and getattr(other, "is_divfree", False)
        return SpectralField(self.grid, self.coeffs + self._check(other), flag)

    def __sub__(self, other):
        flag = self.is_divfree and getattr(other, "is_divfree", False)
        return SpectralField(self.grid, self.coeffs - self._check(other), flag)

    def __mul__(self, scalar):
        if isinstance(scalar, SpectralField):
            return NotImplemented
        return SpectralField(self.grid, self.coeffs * scalar, self.is_divfree)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return SpectralField(self.grid, self.coeffs / scalar, self.is_divfree)

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs, self.is_divfree)

    def component(self, i):
        return ScalarField(self.grid, self.coeffs[i])

    def __repr__(self):
        return f"SpectralField(n={self.grid.n}, L={self.grid.L:g}, ncomp={self.ncomp})"


class ScalarField(SpectralField):
    """Single-component field (pressure, divergences)."""

    __slots__ = ()

    def __init__(self, grid, coeffs, is_divfree=False):
        super().__init__(grid, coeffs, False)
        if self.ncomp != 1:
            raise ShapeError("a scalar field has exactly one component")

    def __repr__(self):
        return f"ScalarField(n={self.grid.n}, L={self.grid.L:g})"


def _wrap(grid, coeffs, divfree=False):
    if coeffs.shape[0] == 1:
        return ScalarField(grid, coeffs)
    return SpectralField(grid, coeffs, divfree)


def _fft(values, grid):
    return sfft.rfftn(values, axes=(-3, -2, -1), workers=kernels.thread_count()) / grid.n**3


def _ifft(coeffs, grid):
    n = grid.n
    return sfft.irfftn(
        coeffs * n**3, s=(n, n, n), axes=(-3, -2, -1), workers=kernels.thread_count()
    )


def transform(grid, samples):
    """Physical samples ``(n,n,n)`` or ``(ncomp,n,n,n)`` -> spectral field."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.shape[-3:] != grid.physical_shape or samples.ndim not in (3, 4):
        raise ShapeError(f"samples of shape {samples.shape} do not match grid n={grid.n}")
    scalar = samples.ndim == 3
    coeffs = _fft(samples if not scalar else samples[None], grid)
    return _wrap(grid, coeffs)


def inverse(field):
    """Spectral field -> physical samples of shape ``(ncomp, n, n, n)``."""
    return _ifft(field.coeffs, field.grid)


def product_to_spectral(grid, values, dealias=True):
    """Forward transform of physical products, truncated to the 2/3 band."""
    c = _fft(values, grid)
    if dealias:
        c *= grid.dealias_mask
    return c


def dealias(field):
    return _wrap(field.grid, field.coeffs * field.grid.dealias_mask, field.is_divfree)


def full_spectrum(field):
    """Expand to the full ``(ncomp, n, n, n)`` spectrum in FFT index order."""
    n = field.grid.n
    c = field.coeffs
    full = np.empty((c.shape[0], n, n, n), dtype=np.complex128)
    full[..., : n // 2 + 1] = c
    neg = (-np.arange(n)) % n
    # entry (i, j, n - l) for l = 1..n/2-1 is conj of (-i, -j, l)
    mirrored = np.conj(c[:, neg][:, :, neg][..., 1 : n // 2])
    full[..., n // 2 + 1 :] = mirrored[..., ::-1]
    return full


def hermitian_defect(field):
    """Max deviation from c(-k) = conj(c(k)) on the self-conjugate planes."""
    n = field.grid.n
    neg = (-np.arange(n)) % n
    worst = 0.0
    for iz in (0, n // 2):
        plane = field.coeffs[..., iz]
        mirror = np.conj(plane[:, neg][:, :, neg])
        worst = max(worst, float(np.max(np.abs(plane - mirror), initial=0.0)))
    return worst


# --------------------------------------------------------------------------
# differential operators


def divergence(f):
    kx, ky, kz = f.grid.kd
    c = f.coeffs
    out = 1j * (kx * c[0] + ky * c[1] + kz * c[2])
    return ScalarField(f.grid, out)


def gradient(phi):
    kx, ky, kz = phi.grid.kd
    c = phi.coeffs[0]
    return SpectralField(phi.grid, np.stack([1j * kx * c, 1j * ky * c, 1j * kz * c]))


def _curl_coeffs(c, grid):
    kx, ky, kz = grid.kd
    return np.stack(
        [
            1j * (ky * c[2] - kz * c[1]),
            1j * (kz * c[0] - kx * c[2]),
            1j * (kx * c[1] - ky * c[0]),
        ]
    )


def curl(f):
    return SpectralField(f.grid, _curl_coeffs(f.coeffs, f.grid), True)


def laplacian(f):
    return _wrap(f.grid, -f.grid.kd2 * f.coeffs, f.is_divfree)


def _require_mean_zero(f, what):
    zero = np.abs(f.coeffs[:, 0, 0, 0])
    scale = max(float(np.max(np.abs(f.coeffs))), 1e-300)
    if np.any(zero > 1e-12 * scale):
        raise ZeroModeError(f"zero-mode not invertible ({what} requires mean-zero input)")


def curl_inv(J):
    """``i k x J(k) / |k|^2``; the zero mode of the result is zero."""
    _require_mean_zero(J, "curl_inv")
    return SpectralField(J.grid, _curl_coeffs(J.coeffs, J.grid) * J.grid.inv_kd2, True)


def leray_coeffs(c, grid):
    kx, ky, kz = grid.kd
    kdotc = (kx * c[0] + ky * c[1] + kz * c[2]) * grid.inv_kd2
    return np.stack([c[0] - kx * kdotc, c[1] - ky * kdotc, c[2] - kz * kdotc])


def leray_project(f):
    return SpectralField(f.grid, leray_coeffs(f.coeffs, f.grid), True)


def inverse_laplacian(phi):
    """``(-Delta)^{-1}`` with the zero mode annihilated."""
    return _wrap(phi.grid, phi.coeffs * phi.grid.inv_kd2)


def heat_factor(grid, kappa, t):
    if t < 0:
        raise ValueError("heat propagation time must be non-negative")
    if kappa < 0:
        raise ValueError("diffusivity must be non-negative")
    return np.exp(-kappa * t * grid.k2)


def heat_propagate(f, kappa, t):
    """Exact heat flow ``exp(kappa t Delta) f``."""
    return _wrap(f.grid, f.coeffs * heat_factor(f.grid, kappa, t), f.is_divfree)


def multi_indices(order):
    """All multi-indices of the given order as sorted axis tuples."""
    return list(combinations_with_replacement(range(3), order))


def derivative(f, axes):
    """Apply ``d/dx_{a1} ... d/dx_{am}`` for the axes in ``axes``."""
    kd = f.grid.kd
    sym = np.ones(f.grid.spectral_shape, dtype=np.complex128)
    for a in axes:
        sym = sym * (1j * kd[a])
    return _wrap(f.grid, f.coeffs * sym)


def tensor_gradient(f):
    """``d_j f^i`` as a 9-component field ordered (i, j)."""
    kd = f.grid.kd
    return SpectralField(f.grid, np.stack([1j * kd[j] * f.coeffs[i] for i in range(f.ncomp) for j in range(3)]))


# --------------------------------------------------------------------------
# norms and inner products


def l2_norm_coeffs(c, grid):
    """Parseval L^2 norm of (stacked) coefficients."""
    w = grid.hermitian_weight
    total = 0.0
    for comp in c.reshape((-1,) + grid.spectral_shape):
        total += float(np.sum(w * (comp.real**2 + comp.imag**2)))
    return math.sqrt(grid.volume * total)


def l2_inner(f, g):
    """Real L^2 inner product computed from coefficients."""
    if f.grid != g.grid:
        raise GridMismatchError("fields live on different grids")
    w = f.grid.hermitian_weight
    s = np.sum(w * (f.coeffs * np.conj(g.coeffs)).real)
    return float(f.grid.volume * s)


def lp_norm_values(values, p, grid):
    """Rectangle-rule L^p norm of physical samples ``(ncomp, n, n, n)``."""
    if p != math.inf and p < 1:
        raise ValueError(f"L^p exponent must be >= 1 or inf, got {p}")
    flat = np.ascontiguousarray(values.reshape(values.shape[0], -1), dtype=np.float64)
    if p == math.inf:
        return kernels.max_magnitude(flat)
    return (kernels.power_sum(flat, float(p)) * grid.cell_volume) ** (1.0 / p)


def lp_norm(f, p):
    """L^p norm by grid quadrature; vector fields use the pointwise magnitude."""
    if p != math.inf and p < 1:
        raise ValueError(f"L^p exponent must be >= 1 or inf, got {p}")
    return lp_norm_values(inverse(f), p, f.grid)


# --------------------------------------------------------------------------
# dilation


def rescale_field(f, lam, amplitude_power):
    """Return ``lam**amplitude_power * f(lam x)`` on the same lattice.

    Mode ``m`` moves to ``lam * m``. Content that would land at or beyond
    the Nyquist index cannot be represented and raises ``ValueError``.
    """
    grid = f.grid
    n = grid.n
    lam = int(lam)
    if lam < 1:
        raise ValueError("dilation factor must be >= 1")
    if n % lam:
        raise ValueError(f"dilation factor {lam} does not divide n={n}")
    if lam == 1:
        return _wrap(grid, f.coeffs.copy(), f.is_divfree)
    mx, my, mz = grid.mode_indices
    lim = n // 2
    sx = np.nonzero(np.abs(lam * mx) < lim)[0]
    sz = np.nonzero(lam * mz < lim)[0]
    keep = np.zeros(grid.spectral_shape, dtype=bool)
    keep[np.ix_(sx, sx, sz)] = True
    lost = np.abs(f.coeffs[:, ~keep])
    scale = max(float(np.max(np.abs(f.coeffs))), 1e-300)
    if lost.size and float(np.max(lost)) > 1e-13 * scale:
        raise ValueError("dilation exceeds grid: content would move past the Nyquist index")
    tx = (lam * mx[sx]) % n
    tz = lam * mz[sz]
    out = np.zeros_like(f.coeffs)
    out[:, tx[:, None, None], tx[None, :, None], tz[None, None, :]] = (
        float(lam) ** amplitude_power * f.coeffs[:, sx[:, None, None], sx[None, :, None], sz[None, None, :]]
    )
    return _wrap(grid, out, f.is_divfree)


# --------------------------------------------------------------------------
# snapshots


def write_snapshot(path, fields, t=0.0):
    """Write fields to the ``HMH1`` snapshot format (all components concatenated)."""
    if isinstance(fields, SpectralField):
        fields = [fields]
    grid = fields[0].grid
    comps = [f for f in fields]
    ncomp = sum(f.ncomp for f in comps)
    if ncomp > 255:
        raise ValueError("too many components for a snapshot")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SNAPSHOT_MAGIC, grid.n, float(grid.L), float(t), ncomp))
        for f in comps:
            if f.grid != grid:
                raise GridMismatchError("snapshot fields must share a grid")
            full = full_spectrum(f)
            inter = np.empty(full.shape + (2,), dtype="<f8")
            inter[..., 0] = full.real
            inter[..., 1] = full.imag
            fh.write(inter.tobytes(order="C"))


def read_snapshot(path):
    """Read an ``HMH1`` snapshot; returns ``(grid, t, field)`` with all components."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ValueError("truncated snapshot header")
        magic, n, L, t, ncomp = _HEADER.unpack(head)
        if magic != SNAPSHOT_MAGIC:
            raise ValueError(f"bad snapshot magic {magic!r}")
        grid = Grid(int(n), float(L))
        count = ncomp * n**3 * 2
        raw = np.frombuffer(fh.read(count * 8), dtype="<f8")
        if raw.size != count:
            raise ValueError("truncated snapshot payload")
    full = raw.reshape(ncomp, n, n, n, 2)
    c = full[..., : n // 2 + 1, 0] + 1j * full[..., : n // 2 + 1, 1]
    return grid, t, SpectralField(grid, c)
