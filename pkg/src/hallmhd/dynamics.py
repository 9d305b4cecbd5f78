"""Hall-MHD right-hand sides, bilinear forms and structural residuals.

Nonlinear terms are evaluated pseudo-spectrally: factors are brought to
physical space, multiplied pointwise, transformed back and truncated to the
2/3 band. Diffusion is not part of any right-hand side here; the integrator
applies it exactly.

Two formulations are provided and kept as separate code paths:

* extended: unknowns (u, b, J) with
  ``u_t - mu Lap u = Qa(b, b) - Qa(u, u)``,
  ``b_t - nu Lap b = Qb(u - eps J, b)``,
  ``J_t - nu Lap J = curl Qb(u - eps J, curl^-1 J)``;
* original: unknowns (u, b) with the advective momentum source projected
  and the induction source ``curl((u - eps curl b) x b)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .field_core import (
    GridMismatchError,
    ScalarField,
    SpectralField,
    _curl_coeffs,
    _fft,
    _ifft,
    curl,
    l2_inner,
    l2_norm_coeffs,
    leray_coeffs,
    lp_norm_values,
)

_SYM = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
_SYM_INDEX = {(0, 0): 0, (0, 1): 1, (0, 2): 2, (1, 1): 3, (1, 2): 4, (2, 2): 5}


@dataclass(frozen=True)
class HallParams:
    mu: float
    nu: float
    eps: float = 0.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"viscosity must be positive, got {self.mu}")
        if not self.nu > 0:
            raise ValueError(f"resistivity must be positive, got {self.nu}")
        if not self.eps >= 0:
            raise ValueError(f"Hall coefficient must be non-negative, got {self.eps}")


@dataclass(frozen=True)
class HallState:
    u: SpectralField
    b: SpectralField
    J: SpectralField
    params: HallParams
    t: float = 0.0

    @classmethod
    def from_data(cls, u0, b0, params, t=0.0):
        """State with the current initialized consistently as ``curl b0``."""
        return cls(u0, b0, curl(b0), params, t)

    @property
    def grid(self):
        return self.u.grid

    def stacked(self):
        return np.concatenate([self.u.coeffs, self.b.coeffs, self.J.coeffs])

    @classmethod
    def from_stacked(cls, grid, c, params, t):
        return cls(
            SpectralField(grid, c[0:3], True),
            SpectralField(grid, c[3:6], True),
            SpectralField(grid, c[6:9], True),
            params,
            t,
        )

    def with_time(self, t):
        return replace(self, t=t)


def _same_grid(*fields):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridMismatchError("fields live on different grids")
    return g


def _mask(grid, dealias):
    return grid.dealias_mask if dealias else 1.0


def _sym_divergence(T, grid):
    """Row divergence ``sum_k d_k T_jk`` of a symmetric tensor stored as 6 components."""
    kx, ky, kz = grid.kd
    k = (kx, ky, kz)
    out = np.empty((3,) + grid.spectral_shape, dtype=np.complex128)
    for j in range(3):
        acc = 0.0
        for kk in range(3):
            acc = acc + k[kk] * T[_SYM_INDEX[tuple(sorted((j, kk)))]]
        out[j] = 1j * acc
    return out


def _antisym_divergence(A, grid):
    """Row divergence of an antisymmetric tensor stored as (A01, A02, A12)."""
    kx, ky, kz = grid.kd
    a01, a02, a12 = A
    return np.stack(
        [
            1j * (ky * a01 + kz * a02),
            1j * (-kx * a01 + kz * a12),
            1j * (-kx * a02 - ky * a12),
        ]
    )


def _sym_tensor(vp, wp):
    """Physical components of ``v (x) w + w (x) v``."""
    return np.stack([vp[i] * wp[j] + wp[i] * vp[j] for i, j in _SYM])


def _antisym_tensor(vp, wp):
    """Physical components of ``v (x) w - w (x) v`` (upper triangle)."""
    return np.stack([vp[i] * wp[j] - wp[i] * vp[j] for i, j in ((0, 1), (0, 2), (1, 2))])


def _qa_phys(vp, wp, grid, dealias=True):
    T = _fft(_sym_tensor(vp, wp), grid) * _mask(grid, dealias)
    return leray_coeffs(0.5 * _sym_divergence(T, grid), grid)


def _qb_phys(vp, wp, grid, dealias=True):
    A = _fft(_antisym_tensor(vp, wp), grid) * _mask(grid, dealias)
    return _antisym_divergence(A, grid)


def q_a(v, w, dealias=True):
    """``Qa(v, w) = 1/2 P(div(v (x) w) + div(w (x) v))``."""
    grid = _same_grid(v, w)
    return SpectralField(grid, _qa_phys(_ifft(v.coeffs, grid), _ifft(w.coeffs, grid), grid, dealias), True)


def q_b(v, w, dealias=True):
    """``Qb(v, w) = div(v (x) w) - div(w (x) v)``."""
    grid = _same_grid(v, w)
    return SpectralField(grid, _qb_phys(_ifft(v.coeffs, grid), _ifft(w.coeffs, grid), grid, dealias), True)


def cross_product(v, w, dealias=True):
    """Pointwise ``v x w`` through the compiled kernel."""
    grid = _same_grid(v, w)
    vp = np.ascontiguousarray(_ifft(v.coeffs, grid).reshape(3, -1))
    wp = np.ascontiguousarray(_ifft(w.coeffs, grid).reshape(3, -1))
    c = kernels.cross(vp, wp).reshape((3,) + grid.physical_shape)
    return SpectralField(grid, _fft(c, grid) * _mask(grid, dealias))


def electron_velocity(s):
    """``v = u - eps J``."""
    return SpectralField(s.grid, s.u.coeffs - s.params.eps * s.J.coeffs, True)


# --------------------------------------------------------------------------
# right-hand sides on stacked coefficient arrays (used by the integrator)


def nonlinear_extended(c, grid, params, dealias=True):
    """Sources of the extended system for stacked coefficients ``(9, ...)``."""
    u, b, J = c[0:3], c[3:6], c[6:9]
    up = _ifft(u, grid)
    bp = _ifft(b, grid)
    vc = u - params.eps * J
    vp = _ifft(vc, grid) if params.eps else up
    cinv = _curl_coeffs(J, grid) * grid.inv_kd2
    cp = _ifft(cinv, grid)
    m = _mask(grid, dealias)
    T = _fft(_sym_tensor(bp, bp) - _sym_tensor(up, up), grid) * m
    du = leray_coeffs(0.5 * _sym_divergence(T, grid), grid)
    db = _qb_phys(vp, bp, grid, dealias)
    dJ = _curl_coeffs(_qb_phys(vp, cp, grid, dealias), grid)
    return np.concatenate([du, db, dJ])


def _gradient_phys(c, grid):
    """Physical ``d_j c^i`` as an array of shape ``(3, 3, n, n, n)``."""
    kd = grid.kd
    g = _ifft(np.stack([1j * kd[j] * c[i] for i in range(3) for j in range(3)]), grid)
    return g.reshape((3, 3) + grid.physical_shape)


def _lorentz_minus_advection(u, b, grid, dealias=True):
    """Coefficients of ``b.grad b - u.grad u`` (not projected)."""
    up, bp = _ifft(u, grid), _ifft(b, grid)
    F = np.einsum("j...,ij...->i...", bp, _gradient_phys(b, grid))
    F -= np.einsum("j...,ij...->i...", up, _gradient_phys(u, grid))
    return _fft(F, grid) * _mask(grid, dealias)


def nonlinear_original(c, grid, params, dealias=True):
    """Sources of the original (u, b) system for stacked coefficients ``(6, ...)``."""
    u, b = c[0:3], c[3:6]
    du = leray_coeffs(_lorentz_minus_advection(u, b, grid, dealias), grid)
    e = _ifft(u - params.eps * _curl_coeffs(b, grid), grid)
    bp = _ifft(b, grid)
    emf = kernels.cross(np.ascontiguousarray(e.reshape(3, -1)), np.ascontiguousarray(bp.reshape(3, -1)))
    db = _curl_coeffs(_fft(emf.reshape((3,) + grid.physical_shape), grid) * _mask(grid, dealias), grid)
    return np.concatenate([du, db])


def rhs_extended(s, dealias=True):
    """Nonlinear sources ``(du, db, dJ)`` of the extended system."""
    out = nonlinear_extended(s.stacked(), s.grid, s.params, dealias)
    g = s.grid
    return tuple(SpectralField(g, out[3 * i : 3 * i + 3], True) for i in range(3))


def rhs_original(s, dealias=True):
    """Nonlinear sources ``(du, db)`` of the original system (J is not used)."""
    c = np.concatenate([s.u.coeffs, s.b.coeffs])
    out = nonlinear_original(c, s.grid, s.params, dealias)
    g = s.grid
    return SpectralField(g, out[0:3], True), SpectralField(g, out[3:6], True)


def pressure_recover(s, dealias=True):
    """Total pressure closing ``u_t + u.grad u + grad pi - b.grad b - mu Lap u = 0``.

    From the divergence of the balance, ``Lap pi = div(b.grad b - u.grad u)``;
    the mean of ``pi`` is set to zero.
    """
    grid = s.grid
    kd = grid.kd
    Fh = _lorentz_minus_advection(s.u.coeffs, s.b.coeffs, grid, dealias)
    divF = 1j * (kd[0] * Fh[0] + kd[1] * Fh[1] + kd[2] * Fh[2])
    return ScalarField(grid, -divF * grid.inv_kd2)


def momentum_residual(states, dt, dealias=True):
    """Relative L^2 norm of ``u_t + u.grad u + grad pi - b.grad b - mu Lap u``.

    ``states`` are five equally spaced snapshots; the balance is evaluated at
    the middle one with ``u_t`` from the fourth-order central stencil.
    """
    if len(states) != 5:
        raise ValueError("momentum residual needs exactly five snapshots")
    s_mid = states[2]
    grid = s_mid.grid
    kd = grid.kd
    um2, um1, _, up1, up2 = (s.u.coeffs for s in states)
    dudt = (-up2 + 8.0 * up1 - 8.0 * um1 + um2) / (12.0 * dt)
    u = s_mid.u.coeffs
    Fh = _lorentz_minus_advection(u, s_mid.b.coeffs, grid, dealias)
    pi = pressure_recover(s_mid, dealias).coeffs[0]
    gradpi = np.stack([1j * kd[i] * pi for i in range(3)])
    lap = -s_mid.params.mu * grid.kd2 * u
    res = dudt - Fh + gradpi - lap
    scale = l2_norm_coeffs(dudt, grid) + l2_norm_coeffs(Fh, grid) + l2_norm_coeffs(lap, grid)
    return l2_norm_coeffs(res, grid) / scale if scale > 0 else 0.0


# --------------------------------------------------------------------------
# structural residuals


@dataclass
class CancellationResidual:
    integrated: float  # <curl((curl v) x b), v> normalized
    pointwise: float  # <(curl v) x b, curl v> normalized


def hall_cancellation_residual(v, b, floor=1e-300):
    """Normalized values of the two forms of the Hall-term cancellation."""
    grid = _same_grid(v, b)
    w = curl(v)
    wp = np.ascontiguousarray(_ifft(w.coeffs, grid).reshape(3, -1))
    bp = np.ascontiguousarray(_ifft(b.coeffs, grid).reshape(3, -1))
    wxb = kernels.cross(wp, bp)
    scale = l2_norm_coeffs(w.coeffs, grid) ** 2 * lp_norm_values(bp, math.inf, grid) + floor
    pointwise = float(np.sum(wxb * wp)) * grid.cell_volume
    flux = SpectralField(grid, _fft(wxb.reshape((3,) + grid.physical_shape), grid) * grid.dealias_mask)
    integrated = l2_inner(curl(flux), v)
    return CancellationResidual(abs(integrated) / scale, abs(pointwise) / scale)


def energy(s):
    """``1/2 ||u||^2 + 1/2 ||b||^2``."""
    g = s.grid
    return 0.5 * (l2_norm_coeffs(s.u.coeffs, g) ** 2 + l2_norm_coeffs(s.b.coeffs, g) ** 2)


def dissipation(s):
    """``mu ||grad u||^2 + nu ||grad b||^2``."""
    g = s.grid
    w = g.hermitian_weight * g.kd2 * g.volume
    gu = float(np.sum(w * np.abs(s.u.coeffs) ** 2))
    gb = float(np.sum(w * np.abs(s.b.coeffs) ** 2))
    return s.params.mu * gu + s.params.nu * gb


def energy_balance_residual(states, dt=None):
    """Max relative imbalance of ``dE/dt + dissipation`` at interior snapshots.

    ``states`` are consecutive, equally spaced snapshots; ``dE/dt`` is the
    central difference. The result is normalized by the dissipation.
    """
    states = list(states)
    if len(states) < 3:
        raise ValueError("energy balance needs at least three snapshots")
    if dt is None:
        dt = states[1].t - states[0].t
    E = [energy(s) for s in states]
    worst = 0.0
    for i in range(1, len(states) - 1):
        dEdt = (E[i + 1] - E[i - 1]) / (2.0 * dt)
        diss = dissipation(states[i])
        if diss == 0.0:
            continue
        worst = max(worst, abs(dEdt + diss) / diss)
    return worst
