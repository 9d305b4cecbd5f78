"""Shared experiment configuration and trajectory bookkeeping."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from ..dynamics import HallParams, HallState
from ..field_core import Grid
from ..littlewood_paley import build_partition
from ..time_integration import IntegratorConfig, block_norm_pair, critical_indices
from .data import make_initial
from .report import admissibility


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 32
    L: float = 2.0 * math.pi
    mu: float = 0.1
    nu: float = 0.1
    eps: float = 0.5
    family: str = "random"
    amplitude: float = 0.05
    slope: float = 2.0
    k_cut: float | None = None
    p: float = 2.0
    q: float = 2.0
    seed: int = 0
    seeds: tuple = (1, 2, 3, 4, 5)
    dt: float = 0.025
    t_end: float = 10.0
    scheme: str = "if_rk4"
    stride: int = 1
    # decay fits
    m_orders: tuple = (1, 2)
    slope_tol: float = 0.25
    w_growth_exponent: float = 0.25
    min_window_decades: float = 0.5
    # stability
    eta: float = 1e-3
    calibration_margin: float = 2.0
    gronwall_C: float = 1.0
    control_factor: float = 10.0
    # Picard
    picard_T: float = 0.5
    picard_dt: float = 0.05
    picard_tol: float = 1e-10
    picard_n_max: int = 80

    def grid(self):
        return Grid(int(self.n), float(self.L))

    def params(self, eps=None):
        return HallParams(self.mu, self.nu, self.eps if eps is None else eps)

    def integrator(self, **overrides):
        kw = dict(dt=self.dt, t_end=self.t_end, scheme=self.scheme, snapshot_stride=self.stride)
        kw.update(overrides)
        return IntegratorConfig(**kw)

    def data(self, grid=None, seed=None, amplitude=None):
        return make_initial(
            grid or self.grid(),
            self.family,
            self.seed if seed is None else seed,
            self.amplitude if amplitude is None else amplitude,
            self.p,
            self.q,
            self.slope,
            self.k_cut,
        )

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)

    def describe(self):
        d = dataclasses.asdict(self)
        d["admissibility"] = admissibility(self.p, self.q)
        return d


class NormRecorder:
    """Monitor callback collecting per-snapshot critical and two-higher norms of (u, b, J)."""

    def __init__(self, grid, p=2.0, q=2.0):
        self.grid = grid
        self.p, self.q = p, q
        self.part = build_partition(grid)
        self.idx = critical_indices(p, q)
        self.times = []
        self.lo = []
        self.hi = []

    def __call__(self, t, state):
        lo, hi = [], []
        exps = (self.p, self.q, self.q)
        for f, fld in enumerate((state.u, state.b, state.J)):
            a, b = block_norm_pair(fld.coeffs, self.grid, self.idx[f], exps[f], self.part)
            lo.append(a)
            hi.append(b)
        self.times.append(t)
        self.lo.append(lo)
        self.hi.append(hi)

    def arrays(self):
        return np.asarray(self.times), np.asarray(self.lo), np.asarray(self.hi)


def combined_functional(times, lo, hi, weights):
    """Running value of ``sum_f sup_{[0,t]} lo_f + w_f int_0^t hi_f`` at every sample."""
    times = np.asarray(times)
    sup = np.maximum.accumulate(lo, axis=0).sum(axis=1)
    inc = 0.5 * (hi[1:] + hi[:-1]) * np.diff(times)[:, None]
    integ = np.vstack([np.zeros((1, hi.shape[1])), np.cumsum(inc, axis=0)])
    return sup + integ @ np.asarray(weights)


def state_from_data(u0, b0, J0, params):
    return HallState(u0, b0, J0, params, 0.0)
