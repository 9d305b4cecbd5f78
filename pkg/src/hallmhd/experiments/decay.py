"""Windowed algebraic decay of derivative norms."""

from __future__ import annotations

import math

import numpy as np

from ..field_core import multi_indices
from ..littlewood_paley import build_partition, shell_lp_norms
from ..time_integration import critical_indices, evolve
from .common import ExperimentConfig, state_from_data
from .report import ExperimentReport


def decay_defaults():
    """Large-box configuration used for the decay fits."""
    return ExperimentConfig(n=64, L=8.0 * math.pi, mu=1.0, nu=1.0, eps=0.5, amplitude=0.1, dt=0.02, t_end=6.0)


class DerivativeRecorder:
    """Records ``max_{|alpha|=m} ||d^alpha f||_{B^s_{p,1}}`` for u and b, with shell centroids."""

    def __init__(self, grid, orders, p=2.0, q=2.0):
        self.grid = grid
        self.orders = tuple(orders)
        self.part = build_partition(grid)
        self.js = np.asarray(self.part.shells, dtype=np.float64)
        su, sb, _ = critical_indices(p, q)
        self.spec = ((su, p), (sb, q))
        kd = grid.kd
        self.symbols = {}
        for m in self.orders:
            syms = []
            for alpha in multi_indices(m):
                sym = np.ones(grid.spectral_shape, dtype=np.complex128)
                for a in alpha:
                    sym = sym * (1j * kd[a])
                syms.append(sym)
            self.symbols[m] = syms
        self.times = []
        self.values = {m: [] for m in self.orders}
        self.centroids = {m: [] for m in self.orders}

    def __call__(self, t, state):
        self.times.append(t)
        for m in self.orders:
            total = 0.0
            contrib_sum = np.zeros_like(self.js)
            for fld, (s, p) in zip((state.u, state.b), self.spec):
                best, best_c = -1.0, None
                for sym in self.symbols[m]:
                    c = 2.0 ** (s * self.js) * shell_lp_norms(fld, p, self.part, sym)
                    if c.sum() > best:
                        best, best_c = float(c.sum()), c
                total += best
                contrib_sum += best_c
            self.values[m].append(total)
            w = contrib_sum.sum()
            self.centroids[m].append(float((2.0**self.js * contrib_sum).sum() / w) if w > 0 else 0.0)


def fit_window(times, centroid, k_start, k_end):
    """Indices of samples with ``k_end <= centroid < k_start`` (t > 0)."""
    times = np.asarray(times)
    c = np.asarray(centroid)
    sel = np.nonzero((times > 0) & (c < k_start) & (c >= k_end))[0]
    return sel


def loglog_slope(times, values):
    x = np.log(np.asarray(times))
    y = np.log(np.asarray(values))
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = max(len(x) - 2, 1)
    se = math.sqrt(float(resid @ resid) / dof / float(((x - x.mean()) ** 2).sum())) if len(x) > 2 else math.inf
    return float(coef[0]), se


def run_decay(cfg=None, nonlinear=True, name=None):
    """Fit ``log ||D^m (u, b)||`` against ``log t`` inside the self-similar window.

    The window opens when the contribution-weighted shell centroid falls below
    half the dealiasing cutoff and closes when it falls below ``2 k_min``.
    """
    cfg = cfg or decay_defaults()
    grid = cfg.grid()
    params = cfg.params()
    report = ExperimentReport(name or ("decay" if nonlinear else "decay_heat"), cfg.describe())
    u0, b0, J0 = cfg.data(grid, cfg.seed)
    rec = DerivativeRecorder(grid, cfg.m_orders, cfg.p, cfg.q)
    traj = evolve(state_from_data(u0, b0, J0, params), cfg.integrator(nonlinear=nonlinear), monitor=rec, keep_states=False)
    if traj.diverged:
        report.status = "diverged"
        report.scalars["last_valid_time"] = traj.last_valid_time
        return report
    k_start = 0.5 * grid.cutoff * grid.dk
    k_end = 2.0 * grid.k_min
    report.scalars["window_k_start"] = k_start
    report.scalars["window_k_end"] = k_end
    t = np.asarray(rec.times)
    inconclusive = False
    for m in cfg.m_orders:
        vals = np.asarray(rec.values[m])
        cen = np.asarray(rec.centroids[m])
        report.add_series(f"D{m}_norm", t, vals)
        report.add_series(f"D{m}_centroid", t, cen)
        sel = fit_window(t, cen, k_start, k_end)
        if len(sel) < 4 or math.log10(t[sel[-1]] / t[sel[0]]) < cfg.min_window_decades:
            inconclusive = True
            report.scalars[f"m{m}_window"] = None
            continue
        tw, vw = t[sel], vals[sel]
        slope, se = loglog_slope(tw, vw)
        report.scalars[f"m{m}_window"] = [float(tw[0]), float(tw[-1])]
        report.scalars[f"m{m}_slope_stderr"] = se
        report.check(f"m={m}: log-log slope", slope, (-m / 2.0 - cfg.slope_tol, -m / 2.0 + cfg.slope_tol), "in")
        W = np.maximum.accumulate(tw ** (m / 2.0) * vw)
        growth = float(W[-1] / W[0])
        allowed = float((tw[-1] / tw[0]) ** cfg.w_growth_exponent)
        report.add_series(f"W{m}", tw, W)
        report.check(f"m={m}: W(t_end)/W(t_start) on window", growth, allowed, "<=")
    if inconclusive:
        report.status = "inconclusive"
    return report
