"""Integrating-factor Runge-Kutta time stepping and Picard iteration.

The linear part ``kappa Lap`` of every equation is integrated exactly by the
heat factor ``E_h = exp(-kappa |k|^2 h)`` (``mu`` for u, ``nu`` for b and J);
only the nonlinear sources go through the Runge-Kutta stages. One step of
the scheme is a quadrature of the Duhamel integral over ``[t, t + h]``.

The Picard iteration reuses that quadrature: with ``W_L`` the free (heat)
flow of the data and ``S(W) = Phi_h(W) - E_h W`` the nonlinear increment of
one step, iterate ``n`` is

    w^n_{m+1} = E_h w^n_m + S(W_L(t_m) + w^{n-1}_m),   w^n_0 = 0,   w^0 = 0,

whose fixed point is exactly the time-marched solution minus ``W_L``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import HallState, nonlinear_extended, nonlinear_original
from .field_core import SpectralField, _curl_coeffs, heat_propagate, l2_norm_coeffs, leray_coeffs
from .littlewood_paley import build_partition, shell_lp_norms

SCHEMES = ("if_rk2", "if_rk4")
FORMULATIONS = ("extended", "original")


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    t_end: float
    scheme: str = "if_rk4"
    snapshot_stride: int = 1
    dealias: bool = True
    formulation: str = "extended"
    nonlinear: bool = True
    blowup_factor: float = 1e6

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be non-negative, got {self.t_end}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"unknown formulation {self.formulation!r}")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")
        n = round(self.t_end / self.dt)
        if abs(n * self.dt - self.t_end) > 1e-9 * max(1.0, self.t_end):
            raise ValueError("t_end must be an integer multiple of dt")

    @property
    def nsteps(self):
        return int(round(self.t_end / self.dt))


class _Stepper:
    """One IF-RK step on stacked coefficients (u, b[, J])."""

    def __init__(self, grid, params, cfg, ncomp):
        self.grid = grid
        self.params = params
        self.cfg = cfg
        self.ncomp = ncomp
        h = cfg.dt
        kappa = np.array([params.mu] * 3 + [params.nu] * (ncomp - 3))[:, None, None, None]
        self.E = np.exp(-kappa * h * grid.k2[None])
        self.E2 = np.exp(-kappa * 0.5 * h * grid.k2[None])

    def N(self, c):
        if not self.cfg.nonlinear:
            return np.zeros_like(c)
        if self.cfg.formulation == "extended":
            return nonlinear_extended(c, self.grid, self.params, self.cfg.dealias)
        return nonlinear_original(c, self.grid, self.params, self.cfg.dealias)

    def step(self, c):
        h = self.cfg.dt
        E, E2 = self.E, self.E2
        if self.cfg.scheme == "if_rk2":
            k1 = self.N(c)
            k2 = self.N(E * (c + h * k1))
            return E * c + 0.5 * h * (E * k1 + k2)
        k1 = self.N(c)
        k2 = self.N(E2 * (c + 0.5 * h * k1))
        k3 = self.N(E2 * c + 0.5 * h * k2)
        k4 = self.N(E * c + h * (E2 * k3))
        return E * c + (h / 6.0) * (E * k1 + 2.0 * E2 * (k2 + k3) + k4)

    def increment(self, c):
        """Nonlinear part ``Phi_h(c) - E_h c`` of one step."""
        return self.step(c) - self.E * c


def _project(c, grid):
    """Leray-project each 3-block and clear the mean; return the relative change."""
    out = np.empty_like(c)
    for i in range(0, c.shape[0], 3):
        out[i : i + 3] = leray_coeffs(c[i : i + 3], grid)
    out[:, 0, 0, 0] = 0.0
    base = l2_norm_coeffs(c, grid)
    change = l2_norm_coeffs(out - c, grid) / base if base > 0 else 0.0
    return out, change


@dataclass
class Trajectory:
    times: list
    states: list
    diverged: bool = False
    last_valid_time: float = 0.0
    max_projection: float = 0.0
    final: HallState | None = None


def _state_from(grid, c, params, t, formulation):
    if formulation == "original":
        c = np.concatenate([c, _curl_coeffs(c[3:6], grid)])
    return HallState.from_stacked(grid, c, params, t)


class Marcher:
    """Step-by-step integrator; :func:`evolve` drives one to completion.

    ``coeffs`` holds the current stacked coefficients and ``t`` the time.
    ``advance()`` performs one step and returns False once the run has ended
    (finished or diverged).
    """

    def __init__(self, state, cfg):
        self.grid = state.grid
        self.params = state.params
        self.cfg = cfg
        if cfg.formulation == "extended":
            c = state.stacked()
        else:
            c = np.concatenate([state.u.coeffs, state.b.coeffs])
        self.coeffs = c.copy()
        self.stepper = _Stepper(self.grid, self.params, cfg, c.shape[0])
        self.size0 = max(l2_norm_coeffs(c, self.grid), 1e-300)
        self.t0 = state.t
        self.t = state.t
        self.steps = 0
        self.diverged = False
        self.max_projection = 0.0

    @property
    def done(self):
        return self.diverged or self.steps >= self.cfg.nsteps

    @property
    def at_snapshot(self):
        return self.steps % self.cfg.snapshot_stride == 0 or self.steps == self.cfg.nsteps

    def state(self):
        return _state_from(self.grid, self.coeffs, self.params, self.t, self.cfg.formulation)

    def advance(self):
        if self.done:
            return False
        nxt = self.stepper.step(self.coeffs)
        size = l2_norm_coeffs(nxt, self.grid)
        if not np.isfinite(size) or size > self.cfg.blowup_factor * self.size0:
            self.diverged = True
            return False
        self.coeffs, change = _project(nxt, self.grid)
        self.max_projection = max(self.max_projection, change)
        self.steps += 1
        self.t = self.t0 + self.steps * self.cfg.dt
        return True


def evolve(state, cfg, monitor=None, keep_states=True):
    """Advance ``state`` to ``cfg.t_end``.

    ``monitor(t, state)`` is called at every snapshot (including t=0). A run
    that produces non-finite values or grows beyond ``blowup_factor`` times
    its initial size stops and is marked diverged.
    """
    march = Marcher(state, cfg)
    traj = Trajectory([], [], last_valid_time=state.t)

    def record():
        s = march.state()
        traj.times.append(s.t)
        if keep_states:
            traj.states.append(s)
        if monitor is not None:
            monitor(s.t, s)

    record()
    while march.advance():
        traj.last_valid_time = march.t
        if march.at_snapshot:
            record()
    traj.diverged = march.diverged
    traj.max_projection = march.max_projection
    traj.final = march.state()
    return traj


def free_solution(u0, b0, J0, params, t):
    """Exact heat flow of the data: ``(e^{mu t Lap} u0, e^{nu t Lap} b0, e^{nu t Lap} J0)``."""
    return HallState(
        heat_propagate(u0, params.mu, t),
        heat_propagate(b0, params.nu, t),
        heat_propagate(J0, params.nu, t),
        params,
        t,
    )


# --------------------------------------------------------------------------
# trajectory functionals


def critical_indices(p=2.0, q=2.0):
    """Regularity of the critical spaces for (u, b, J)."""
    return (3.0 / p - 1.0, 3.0 / q - 1.0, 3.0 / q - 1.0)


def block_norm_pair(c3, grid, s, p, partition):
    """``(||f||_{B^s_{p,1}}, ||f||_{B^{s+2}_{p,1}})`` from one set of shell norms."""
    norms = shell_lp_norms(SpectralField(grid, c3), p, partition)
    js = np.asarray(partition.shells, dtype=np.float64)
    return float(np.sum(2.0 ** (s * js) * norms)), float(np.sum(2.0 ** ((s + 2.0) * js) * norms))


def trapezoid(values, times):
    values = np.asarray(values, dtype=np.float64)
    times = np.asarray(times, dtype=np.float64)
    if values.size < 2:
        return 0.0
    return float(np.sum(0.5 * (values[1:] + values[:-1]) * np.diff(times)))


@dataclass
class EFunctional:
    """Sup-in-time critical norms and weighted time integrals per field."""

    sup: tuple
    integral: tuple
    weights: tuple

    @property
    def value(self):
        return float(sum(self.sup) + sum(w * i for w, i in zip(self.weights, self.integral)))


def norm_series(coeff_list, grid, p=2.0, q=2.0, partition=None):
    """Per-time critical norms ``lo[k, f]`` and two-higher norms ``hi[k, f]`` for f in (u, b, J)."""
    part = partition or build_partition(grid)
    idx = critical_indices(p, q)
    exps = (p, q, q)
    lo = np.zeros((len(coeff_list), 3))
    hi = np.zeros((len(coeff_list), 3))
    for k, c in enumerate(coeff_list):
        for f in range(3):
            lo[k, f], hi[k, f] = block_norm_pair(c[3 * f : 3 * f + 3], grid, idx[f], exps[f], part)
    return lo, hi


def e_functional(coeff_list, times, grid, params, p=2.0, q=2.0, partition=None):
    """``sum_f sup_t ||f||_{B^{s_f}} + kappa_f int ||f||_{B^{s_f + 2}}`` over (u, b, J)."""
    lo, hi = norm_series(coeff_list, grid, p, q, partition)
    sup = tuple(float(x) for x in lo.max(axis=0))
    integral = tuple(trapezoid(hi[:, f], times) for f in range(3))
    return EFunctional(sup, integral, (params.mu, params.nu, params.nu))


# --------------------------------------------------------------------------
# Picard iteration


@dataclass
class PicardReport:
    iterates: int = 0
    functionals: list = field(default_factory=list)  # E-functional of each iterate
    deltas: list = field(default_factory=list)  # delta^n, n = 1, 2, ...
    ratios: list = field(default_factory=list)  # delta^n / delta^{n-1}, n >= 2
    bound: float = 0.0  # M = max_n E(w^n)
    converged: bool = False
    noncontracting: bool = False
    diverged: bool = False

    @property
    def worst_ratio(self):
        return max(self.ratios) if self.ratios else 0.0

    def as_dict(self):
        return {
            "iterates": self.iterates,
            "functionals": self.functionals,
            "deltas": self.deltas,
            "ratios": self.ratios,
            "bound": self.bound,
            "worst_ratio": self.worst_ratio,
            "converged": self.converged,
            "noncontracting": self.noncontracting,
            "diverged": self.diverged,
        }


@dataclass
class PicardResult:
    times: list
    free: list  # stacked coefficients of W_L at each step
    correction: list  # last iterate w^n at each step

    def solution(self, m):
        return self.free[m] + self.correction[m]


def picard_solve(u0, b0, J0, params, T, dt, n_max=60, tol=1e-10, p=2.0, q=2.0, scheme="if_rk4", dealias=True):
    """Picard iteration on the discrete Duhamel formula of the extended system."""
    grid = u0.grid
    cfg = IntegratorConfig(dt=dt, t_end=T, scheme=scheme, dealias=dealias)
    part = build_partition(grid)
    c0 = np.concatenate([u0.coeffs, b0.coeffs, J0.coeffs])
    stepper = _Stepper(grid, params, cfg, 9)
    N = cfg.nsteps
    times = [m * dt for m in range(N + 1)]
    free = [c0.copy()]
    for _ in range(N):
        free.append(stepper.E * free[-1])
    prev = [np.zeros_like(c0) for _ in range(N + 1)]
    report = PicardReport()
    streak = 0
    for n in range(1, n_max + 1):
        cur = [np.zeros_like(c0)]
        for m in range(N):
            inc = stepper.increment(free[m] + prev[m])
            nxt, _ = _project(stepper.E * cur[m] + inc, grid)
            cur.append(nxt)
        if not all(np.all(np.isfinite(x)) for x in cur):
            report.diverged = True
            report.iterates = n
            break
        report.iterates = n
        report.functionals.append(e_functional(cur, times, grid, params, p, q, part).value)
        diff = [a - b for a, b in zip(cur, prev)]
        delta = e_functional(diff, times, grid, params, p, q, part).value
        report.deltas.append(delta)
        if n >= 2:
            ratio = delta / report.deltas[-2] if report.deltas[-2] > 0 else 0.0
            report.ratios.append(ratio)
            streak = streak + 1 if ratio >= 1.0 else 0
        prev = cur
        if delta < tol:
            report.converged = True
            break
        if streak >= 3:
            report.noncontracting = True
            break
        if not math.isfinite(delta) or delta > 1e12:
            report.diverged = True
            break
    report.bound = max(report.functionals) if report.functionals else 0.0
    return PicardResult(times, free, prev), report


def sup_besov_difference(a_list, b_list, grid, p=2.0, q=2.0, partition=None):
    """``max_t`` of the summed critical norms of the difference of two trajectories."""
    diff = [a - b for a, b in zip(a_list, b_list)]
    lo, _ = norm_series(diff, grid, p, q, partition)
    return float(lo.sum(axis=1).max())


@dataclass
class ThresholdResult:
    threshold: float
    probes: list  # [(amplitude, worst_ratio)]


def worst_ratio_at(make_data, amplitude, params, T, dt, probe_iterates=5, p=2.0, q=2.0):
    u0, b0, J0 = make_data(amplitude)
    _, rep = picard_solve(u0, b0, J0, params, T, dt, n_max=probe_iterates, tol=0.0, p=p, q=q)
    if rep.diverged:
        return math.inf
    return rep.worst_ratio


def locate_contraction_threshold(
    make_data, params, T, dt, a0=0.1, bisections=10, probe_iterates=5, p=2.0, q=2.0, a_max=1e4
):
    """Largest amplitude whose worst contraction ratio stays below 1 (bisection in log scale)."""
    probes = []

    def ok(a):
        r = worst_ratio_at(make_data, a, params, T, dt, probe_iterates, p, q)
        probes.append((a, r))
        return r < 1.0

    lo, hi = None, None
    a = a0
    if ok(a):
        lo = a
        while hi is None:
            a *= 2.0
            if a > a_max:
                raise RuntimeError("no non-contracting amplitude found below a_max")
            if ok(a):
                lo = a
            else:
                hi = a
    else:
        hi = a
        while lo is None:
            a *= 0.5
            if a < 1e-12:
                raise RuntimeError("no contracting amplitude found")
            if ok(a):
                lo = a
            else:
                hi = a
    for _ in range(bisections):
        mid = math.sqrt(lo * hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return ThresholdResult(lo, probes)
