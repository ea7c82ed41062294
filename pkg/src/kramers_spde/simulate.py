"""Spectral Galerkin SDE integration and first-hitting-time Monte Carlo.

The truncated field y(t) solves dy_k = -dV/dy_k dt + sqrt(2 eps) dW_k with
independent Brownian motions on every stored (real) coordinate.  The drift
splits into the stiff linear part -nu_k y_k, treated implicitly
(semi_implicit scheme) or exactly (exponential scheme), plus the transform
of -U'(u(.)).

Replica streams come from counter-based Philox generators keyed by
seed XOR replica_index, consumed strictly sequentially per replica, so a
replica's trajectory is bit-identical whether it runs alone or inside a
vectorized batch.  Hitting of the sup-norm ball around u*_+ is checked every
check_every steps on a refined evaluation grid; the recorded tau is the
first checked time.  Replicas that reach t_max are censored and reported
separately (their exclusion makes the mean a lower bound).

Also here: the exact 1D potential-theory oracles used to validate the d=0
reduction (mean first passage by double quadrature, and the
expected-time = J/capacity identity).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad

from .errors import AllCensored, NonFinite, QuadratureNotConverged
from .potential import LocalPotential
from .spectral import (BoundaryCondition, NEUMANN, FourierState, TransformPlan,
                       default_grid_size, mode_frequencies, next_fast_len, sup_dist)

_MASK64 = (1 << 64) - 1
_BLOCK_CHECKS = 64  # noise-block size in units of check_every


@dataclass(frozen=True)
class SimConfig:
    """Everything needed to reproduce a transition-time simulation."""

    pot: LocalPotential
    bc: BoundaryCondition
    L: float
    d: int
    eps: float
    dt: float
    t_max: float
    r: float = 0.3
    rho: float = 0.3
    check_every: int = 10
    refine: int = 8
    seed: int = 0
    scheme: str = "semi_implicit"
    n_grid: int | None = None
    start_well: str = "minus"

    def __post_init__(self):
        if self.eps < 0.0 or self.dt <= 0.0 or self.t_max <= 0.0:
            raise ValueError("need eps >= 0, dt > 0, t_max > 0")
        if self.r <= 0.0 or self.rho <= 0.0:
            raise ValueError("ball radii must be positive")
        gap = self.pot.u_plus - self.pot.u_minus
        if self.r + self.rho >= gap:
            raise ValueError(
                f"start/target balls overlap: r + rho = {self.r + self.rho} "
                f">= u_+ - u_- = {gap}")
        if self.scheme not in ("semi_implicit", "exponential"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.check_every < 1 or self.refine < 4:
            raise ValueError("check_every >= 1 and refine >= 4 required")
        if self.start_well not in ("minus", "plus"):
            raise ValueError("start_well must be 'minus' or 'plus'")


@dataclass(frozen=True)
class TransitionSample:
    tau: float | None
    censored: bool
    steps: int
    seed_used: int


@dataclass(frozen=True)
class TransitionStats:
    n: int
    mean: float
    stderr: float
    min: float
    max: float
    censored: int
    mean_is_lower_bound: bool
    eps: float
    d: int
    dt: float


class _DenseTransform:
    """Dense-matrix twin of TransformPlan for small cutoffs (d <= 32).

    Same quadrature projection as the fast transforms (identical up to
    roundoff) but evaluated as two small matrix products, which is several
    times faster per step at simulation batch sizes.
    """

    def __init__(self, plan: TransformPlan):
        self.bc, self.L, self.d, self.n = plan.bc, plan.L, plan.d, plan.n
        x = plan.grid()
        rows = [np.full(self.n, 1.0 / math.sqrt(self.L))]
        for k in range(1, self.d + 1):
            if self.bc is NEUMANN:
                rows.append(np.sqrt(2.0 / self.L) * np.cos(k * math.pi * x / self.L))
            else:
                rows.append(np.sqrt(2.0 / self.L) * np.cos(2 * math.pi * k * x / self.L))
                rows.append(np.sqrt(2.0 / self.L) * np.sin(2 * math.pi * k * x / self.L))
        self._synth = np.array(rows)                      # (ncoeff, n)
        self._proj = (self.L / self.n) * self._synth.T    # (n, ncoeff)
        self._plan = plan

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        return coeffs @ self._synth

    def analyze(self, values: np.ndarray) -> np.ndarray:
        return values @ self._proj

    def endpoint_values(self, coeffs: np.ndarray) -> np.ndarray:
        return self._plan.endpoint_values(coeffs)


class _Engine:
    """Vectorized stepping over a batch of replicas sharing one SimConfig."""

    def __init__(self, cfg: SimConfig, nonlinear: bool = True):
        self.cfg = cfg
        pot = cfg.pot
        n_grid = cfg.n_grid or default_grid_size(cfg.d, pot.p0)
        self.plan = TransformPlan(cfg.bc, cfg.L, cfg.d, n_grid)
        if cfg.d <= 32:
            self.plan = _DenseTransform(self.plan)
        self.nu = mode_frequencies(cfg.bc, cfg.L, cfg.d)
        self.nonlinear = nonlinear
        self._dU = pot._deriv[1]
        start_u = pot.u_minus if cfg.start_well == "minus" else pot.u_plus
        target_u = pot.u_plus if cfg.start_well == "minus" else pot.u_minus
        self.start = FourierState.constant(start_u, cfg.bc, cfg.L, cfg.d).coeffs
        n_ref = next_fast_len(cfg.refine * (2 * cfg.d + 2), real=True)
        self.ref_plan = TransformPlan(cfg.bc, cfg.L, cfg.d, n_ref)
        if cfg.d <= 32:
            self.ref_plan = _DenseTransform(self.ref_plan)
        tgt = FourierState.constant(target_u, cfg.bc, cfg.L, cfg.d).coeffs
        self.target_grid = self.ref_plan.synthesize(tgt)
        self.target_ends = self.ref_plan.endpoint_values(tgt)
        self.target_grid_mean = tgt[0]
        dt = cfg.dt
        self.noise_base = math.sqrt(2.0 * cfg.eps * dt)
        if cfg.scheme == "semi_implicit":
            self.denom = 1.0 + self.nu * dt
        else:
            em = np.exp(-self.nu * dt)
            self.exp_mul = em
            small = self.nu * dt < 1e-8
            with np.errstate(divide="ignore", invalid="ignore"):
                self.phi1dt = np.where(small, dt * (1.0 - 0.5 * self.nu * dt),
                                       (1.0 - em) / np.where(small, 1.0, self.nu))
                var = np.where(small, 2.0 * cfg.eps * dt * (1.0 - self.nu * dt),
                               cfg.eps * (-np.expm1(-2.0 * self.nu * dt))
                               / np.where(small, 1.0, self.nu))
            self.noise_std = np.sqrt(var)

    def drift_nonlinear(self, y: np.ndarray) -> np.ndarray:
        if not self.nonlinear:
            return np.zeros_like(y)
        if self.cfg.d == 0:  # constant field: the transform collapses
            s = math.sqrt(self.cfg.L)
            return -s * np.polyval(self._dU, y / s)
        u = self.plan.synthesize(y)
        return -self.plan.analyze(np.polyval(self._dU, u))

    def step(self, y: np.ndarray, xi: np.ndarray) -> np.ndarray:
        cfg = self.cfg
        N = self.drift_nonlinear(y)
        if cfg.scheme == "semi_implicit":
            return (y + cfg.dt * N + self.noise_base * xi) / self.denom
        return self.exp_mul * y + self.phi1dt * N + self.noise_std * xi

    def sup_to_target(self, y: np.ndarray) -> np.ndarray:
        if self.cfg.d == 0:
            tgt = self.target_grid[0]
            return np.abs(y[:, 0] / math.sqrt(self.cfg.L) - tgt)
        grid = np.abs(self.ref_plan.synthesize(y) - self.target_grid).max(axis=-1)
        ends = np.abs(self.ref_plan.endpoint_values(y) - self.target_ends).max(axis=-1)
        return np.maximum(grid, ends)

    def hit_mask(self, y: np.ndarray, rho: float) -> np.ndarray:
        """sup_to_target(y) < rho, with an exact mean-mode pre-filter.

        The field average deviates from the target by |y_0 - t_0|/sqrt(L),
        a lower bound for the sup distance, so rows failing it need no
        transform.
        """
        mean_dist = np.abs(y[:, 0] - self.target_grid_mean) / math.sqrt(self.cfg.L)
        cand = mean_dist < rho
        out = np.zeros(len(y), dtype=bool)
        if np.any(cand):
            out[cand] = self.sup_to_target(y[cand]) < rho
        return out


def step(state: FourierState, cfg: SimConfig, gaussians: np.ndarray) -> FourierState:
    """One time step of the chosen scheme driven by the supplied normals."""
    gaussians = np.asarray(gaussians, dtype=float)
    if gaussians.shape != state.coeffs.shape:
        raise ValueError("need one standard normal per stored coordinate")
    eng = _Engine(cfg)
    out = eng.step(state.coeffs[None, :], gaussians[None, :])[0]
    if not np.all(np.isfinite(out)):
        raise NonFinite("state left the representable range (reduce dt?)")
    return state.with_coeffs(out)


def _replica_generator(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=(seed ^ index) & _MASK64))


def _run_batch(cfg: SimConfig, replica_indices: list[int]) -> list[TransitionSample]:
    eng = _Engine(cfg)
    m = len(replica_indices)
    gens = [_replica_generator(cfg.seed, i) for i in replica_indices]
    order = np.arange(m)
    y = np.tile(eng.start, (m, 1))
    ncf = y.shape[1]
    max_steps = int(math.ceil(cfg.t_max / cfg.dt))
    results: dict[int, TransitionSample] = {}
    block = cfg.check_every * _BLOCK_CHECKS
    step_no = 0
    while len(order) and step_no < max_steps:
        b = min(block, max_steps - step_no)
        b -= b % cfg.check_every
        b = b or cfg.check_every
        noise = np.empty((b, len(order), ncf))
        for row, pos in enumerate(order):
            noise[:, row, :] = gens[pos].standard_normal((b, ncf))
        j = 0
        while j < b:
            for _ in range(cfg.check_every):
                y = eng.step(y, noise[j])
                j += 1
            step_no_check = step_no + j
            if not np.all(np.isfinite(y)):
                bad = order[~np.all(np.isfinite(y), axis=1)][0]
                raise NonFinite(
                    f"replica {replica_indices[bad]} diverged at step {step_no_check}")
            hit = eng.hit_mask(y, cfg.rho)
            if np.any(hit):
                for pos in order[hit]:
                    results[pos] = TransitionSample(
                        tau=step_no_check * cfg.dt, censored=False,
                        steps=step_no_check,
                        seed_used=(cfg.seed ^ replica_indices[pos]) & _MASK64)
                keep = ~hit
                y = y[keep]
                noise = noise[:, keep, :]
                order = order[keep]
                if not len(order):
                    break
        step_no += b
    for pos in order:
        results[pos] = TransitionSample(
            tau=None, censored=True, steps=max_steps,
            seed_used=(cfg.seed ^ replica_indices[pos]) & _MASK64)
    return [results[i] for i in range(m)]


def sample_transition(cfg: SimConfig) -> TransitionSample:
    """Integrate one replica from the starting well until it hits the target ball."""
    return _run_batch(cfg, [0])[0]


def _stats_from_samples(samples: list[TransitionSample], cfg: SimConfig) -> TransitionStats:
    taus = [s.tau for s in samples if not s.censored]
    censored = sum(1 for s in samples if s.censored)
    if not taus:
        raise AllCensored(f"all {len(samples)} replicas censored at t_max = {cfg.t_max}")
    n = len(taus)
    mean = math.fsum(taus) / n
    var = math.fsum((t - mean) ** 2 for t in taus) / max(n - 1, 1)
    return TransitionStats(
        n=n, mean=mean, stderr=math.sqrt(var / n), min=min(taus), max=max(taus),
        censored=censored, mean_is_lower_bound=censored > 0,
        eps=cfg.eps, d=cfg.d, dt=cfg.dt)


def mc_stats(cfg: SimConfig, n_replicas: int, threads: int = 1,
             _replica_indices: list[int] | None = None) -> TransitionStats:
    """Monte Carlo transition-time statistics over independent replicas.

    Replica i uses the stream keyed by seed XOR i; aggregation is
    order-independent (compensated summation).  threads > 1 splits replicas
    across worker processes.
    """
    if n_replicas < 2:
        raise ValueError("need at least 2 replicas")
    indices = _replica_indices if _replica_indices is not None else list(range(n_replicas))
    if threads <= 1 or len(indices) < 2 * threads:
        samples = _run_batch(cfg, indices)
    else:
        chunks = [list(indices[i::threads]) for i in range(threads)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_run_batch, [cfg] * threads, chunks))
        by_index = {}
        for chunk, part in zip(chunks, parts):
            by_index.update(dict(zip(chunk, part)))
        samples = [by_index[i] for i in indices]
    return _stats_from_samples(samples, cfg)


def run_replicas(cfg: SimConfig, n_replicas: int, threads: int = 1) -> list[TransitionSample]:
    """Per-replica samples (CSV-friendly); same streams as mc_stats."""
    indices = list(range(n_replicas))
    if threads <= 1 or n_replicas < 2 * threads:
        return _run_batch(cfg, indices)
    chunks = [indices[i::threads] for i in range(threads)]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(_run_batch, [cfg] * threads, chunks))
    by_index = {}
    for chunk, part in zip(chunks, parts):
        by_index.update(dict(zip(chunk, part)))
    return [by_index[i] for i in indices]


def sample_path(cfg: SimConfig, n_steps: int, record_every: int = 1,
                linear_only: bool = False) -> np.ndarray:
    """Coefficient trajectory of replica 0 (diagnostics: OU variance,
    equilibrium histograms, scheme consistency).  linear_only drops the
    nonlinear drift, leaving independent Ornstein-Uhlenbeck modes."""
    eng = _Engine(cfg, nonlinear=not linear_only)
    gen = _replica_generator(cfg.seed, 0)
    y = eng.start[None, :].copy()
    out = np.empty((n_steps // record_every, y.shape[1]))
    for i in range(n_steps):
        y = eng.step(y, gen.standard_normal((1, y.shape[1])))
        if (i + 1) % record_every == 0:
            out[(i + 1) // record_every - 1] = y[0]
    if not np.all(np.isfinite(y)):
        raise NonFinite("trajectory diverged")
    return out


@dataclass(frozen=True)
class GalerkinErrorRow:
    d: int
    sup_error: float


@dataclass(frozen=True)
class GalerkinErrorTable:
    rows: tuple[GalerkinErrorRow, ...]
    slope: float
    d_reference: int
    T: float


def galerkin_error(cfg: SimConfig, d_list: list[int], T: float,
                   u0: FourierState | None = None) -> GalerkinErrorTable:
    """Coupled-noise Galerkin truncation errors against a reference run.

    All runs share the mode-wise Wiener increments of the reference
    dimension d_ref = 2 max(d_list) (modes |k| <= d see the same draws, by
    truncation of the reference noise).  Reports sup over checked times of
    the sup-norm distance to the reference, plus the log-log slope in d.
    """
    if sorted(d_list) != list(d_list) or len(d_list) < 2:
        raise ValueError("d_list must be ascending with at least two entries")
    d_ref = 2 * max(d_list)
    dims = list(d_list) + [d_ref]
    engines = [_Engine(replace(cfg, d=di, n_grid=None)) for di in dims]
    if u0 is None:
        states = [e.start[None, :].copy() for e in engines]
    else:
        if u0.d != d_ref or u0.bc is not cfg.bc:
            raise ValueError(f"u0 must live at the reference dimension d={d_ref}")
        states = [u0.coeffs[None, : e.nu.shape[0]].copy() for e in engines]
    gen = _replica_generator(cfg.seed, 0)
    n_steps = int(round(T / cfg.dt))
    ncf_ref = engines[-1].nu.shape[0]
    errs = np.zeros(len(d_list))
    for start_step in range(0, n_steps, cfg.check_every):
        b = min(cfg.check_every, n_steps - start_step)
        noise = gen.standard_normal((b, ncf_ref))
        for j in range(b):
            for e_i, eng in enumerate(engines):
                nc = eng.nu.shape[0]
                states[e_i] = eng.step(states[e_i], noise[j : j + 1, :nc])
        ref_state = FourierState(cfg.bc, cfg.L, d_ref, states[-1][0])
        for i, di in enumerate(d_list):
            st = FourierState(cfg.bc, cfg.L, di, states[i][0])
            errs[i] = max(errs[i], sup_dist(st, ref_state, cfg.refine))
        if not all(np.all(np.isfinite(s)) for s in states):
            raise NonFinite("a coupled run diverged")
    slope = float(np.polyfit(np.log(np.asarray(d_list, float)), np.log(errs), 1)[0])
    rows = tuple(GalerkinErrorRow(d, float(e)) for d, e in zip(d_list, errs))
    return GalerkinErrorTable(rows=rows, slope=slope, d_reference=d_ref, T=T)


# ---------------------------------------------------------------------------
# 1D potential-theory oracles


def reduced_potential_1d(pot: LocalPotential, L: float):
    """The d=0 Galerkin reduction: V1(y0) = L U(y0 / sqrt(L))."""
    s = math.sqrt(L)

    def V1(y: float) -> float:
        return L * float(pot.derivative(y / s, 0))

    return V1


def _quad(f, a, b, rtol, points=None) -> float:
    val, err = quad(f, a, b, epsabs=0.0, epsrel=rtol, limit=400, points=points)
    if err > 50 * rtol * max(abs(val), 1e-300):
        raise QuadratureNotConverged(
            f"adaptive quadrature error {err:.2e} on value {val:.6e}")
    return val


def _support_floor(V1, lo_hint: float, hi: float, eps: float) -> tuple[float, float]:
    """(z_lo, floor): left truncation point and the potential floor.

    z_lo is where exp(-(V1-floor)/eps) falls below ~1e-33 of its peak.
    """
    grid = np.linspace(lo_hint - 5.0, hi, 4001)
    vals = np.array([V1(float(g)) for g in grid])
    floor = float(vals.min())
    z = grid[0]
    while V1(z) < floor + 76.0 * eps:
        z -= 0.5
        if z < grid[0] - 1e4:
            raise QuadratureNotConverged("potential does not confine on the left")
    return z, floor


def oracle_mfpt_1d(V1, eps: float, start: float, target: float,
                   rtol: float = 1e-8) -> float:
    """Exact 1D mean first-passage time by double quadrature.

    E[tau] = (1/eps) int_start^target e^{V1(x)/eps} int_{-inf}^x e^{-V1(z)/eps} dz dx
    for target > start (mirrored otherwise), with the inner integral
    truncated where its integrand is below ~1e-33 of the peak.
    """
    if target == start:
        return 0.0
    if target < start:
        return oracle_mfpt_1d(lambda x: V1(-x), eps, -start, -target, rtol)
    z_lo, floor = _support_floor(V1, start, target, eps)
    xs = np.linspace(start, target, 1001)
    vx = np.array([V1(float(x)) for x in xs])
    ceil_ = float(vx.max())
    x_peak = float(xs[np.argmax(vx)])

    def inner(x: float) -> float:
        return _quad(lambda z: math.exp(-(V1(z) - floor) / eps), z_lo, x, rtol * 0.1)

    def outer_integrand(x: float) -> float:
        return math.exp((V1(x) - ceil_) / eps) * inner(x)

    pts = [x_peak] if start < x_peak < target else None
    I = _quad(outer_integrand, start, target, rtol, points=pts)
    scale = (ceil_ - floor) / eps
    if scale > 600.0:
        raise ValueError("barrier/eps too large for a plain float result")
    return I * math.exp(scale) / eps


def oracle_identity_1d(V1, eps: float, A: tuple[float, float], B: tuple[float, float],
                       rtol: float = 1e-8) -> tuple[float, float, float, float]:
    """Check of the potential-theory identity E_nu[tau_B] = J / capacity in 1D.

    A and B are intervals with A left of B.  Returns (Etau, J, cap, residual)
    where Etau is the mean first-passage from the right edge of A to the left
    edge of B (where the equilibrium measure concentrates), cap the 1D
    capacity, J the equilibrium-potential integral, and
    residual = |Etau * cap - J| / J.
    """
    a1, a2 = A
    b1, b2 = B
    if not (a1 < a2 < b1 < b2):
        raise ValueError("need a1 < a2 < b1 < b2")
    z_lo, floor = _support_floor(V1, a1, b2, eps)
    xs = np.linspace(a2, b1, 1001)
    vx = np.array([V1(float(x)) for x in xs])
    ceil_ = float(vx.max())
    x_peak = float(xs[np.argmax(vx)])

    def w(x: float) -> float:  # e^{(V1-ceil)/eps}, the harmonic-function weight
        return math.exp((V1(x) - ceil_) / eps)

    pts = [x_peak] if a2 < x_peak < b1 else None
    Z = _quad(w, a2, b1, rtol, points=pts)
    log_cap = math.log(eps) - ceil_ / eps - math.log(Z)

    def h(x: float) -> float:  # P_x[hit A before B] on [a2, b1]
        return _quad(w, x, b1, rtol, points=[x_peak] if x < x_peak else None) / Z

    def mu(x: float) -> float:
        return math.exp(-(V1(x) - floor) / eps)

    J_left = _quad(mu, z_lo, a2, rtol)
    J_mid = _quad(lambda x: h(x) * mu(x), a2, b1, rtol)
    log_J = math.log(J_left + J_mid) - floor / eps
    Etau = oracle_mfpt_1d(V1, eps, a2, b1, rtol)
    residual = abs(math.exp(math.log(Etau) + log_cap - log_J) - 1.0)
    return Etau, math.exp(log_J), math.exp(log_cap), residual
