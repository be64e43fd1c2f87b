"""Time-stepping engines that push the ensemble along the tempered curve.

Variants: plain Stein transport (Euler flow of the ridge-regression velocity
field along the prior-to-posterior curve), the adjusted variant with interspersed
SVGD steps targeting the current intermediate density, an SVGD baseline targeting
the posterior directly, a gradient-free variant that co-evolves per-particle score
vectors instead of calling grad h, and a weighted variant whose particle weights
absorb the regularisation bias.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import diagnostics as diag
from . import kernels, stein
from .errors import DimensionMismatchError, NumericalError, UnsupportedKernelError
from .kernels import KernelConfig, KernelFamily
from .targets import TargetProblem

logger = logging.getLogger(__name__)


class Variant(str, Enum):
    STEIN_TRANSPORT = "stein_transport"
    ADJUSTED = "adjusted"
    SVGD = "svgd"
    GRADIENT_FREE = "gradient_free"
    WEIGHTED = "weighted"


class AdjustOptimizer(str, Enum):
    PLAIN = "plain"
    ADAGRAD = "adagrad"


#: Homotopy variants advance an internal time from 0 to 1; SVGD does not.
HOMOTOPY_VARIANTS = (Variant.STEIN_TRANSPORT, Variant.ADJUSTED,
                     Variant.GRADIENT_FREE, Variant.WEIGHTED)


@dataclass
class AdagradParams:
    learning_rate: float = 0.1
    decay: float = 0.9
    eps: float = 1e-6


@dataclass
class AdagradState:
    """Per-particle, per-coordinate squared-update accumulator."""

    accumulator: np.ndarray
    step_count: int = 0


@dataclass
class Schedule:
    """Run configuration: grid size, regularisation, variant and variant knobs.

    The time grid is equidistant, t_n = n / n_steps. ``svgd_steps`` applies to
    the SVGD variant only; its update uses ``adjust_optimizer`` (plain steps of
    size ``dt_adjust``, or the Adagrad parameters). ``score_update`` selects the
    gradient-free score evolution: "lemma" applies the full chain rule for the
    score along the flow, "eq10" drops the Jacobian term.
    """

    n_steps: int
    lam: float
    variant: Variant
    n_adjust: int = 0
    dt_adjust: float = 0.1
    adjust_optimizer: AdjustOptimizer = AdjustOptimizer.PLAIN
    svgd_steps: int = 100
    adagrad: AdagradParams = field(default_factory=AdagradParams)
    score_update: str = "lemma"

    def __post_init__(self):
        self.variant = Variant(self.variant)
        self.adjust_optimizer = AdjustOptimizer(self.adjust_optimizer)
        if self.n_steps < 1:
            raise NumericalError(f"n_steps must be positive, got {self.n_steps}")
        if self.lam <= 0.0:
            raise NumericalError(f"lambda must be positive, got {self.lam}")
        if self.n_adjust < 0:
            raise NumericalError(f"n_adjust must be nonnegative, got {self.n_adjust}")
        if self.dt_adjust <= 0.0:
            raise NumericalError(f"dt_adjust must be positive, got {self.dt_adjust}")
        if self.svgd_steps < 1:
            raise NumericalError(f"svgd_steps must be positive, got {self.svgd_steps}")
        if self.score_update not in ("lemma", "eq10"):
            raise NumericalError(f"unknown score_update {self.score_update!r}")

    @property
    def dt(self) -> float:
        return 1.0 / self.n_steps


@dataclass
class Ensemble:
    """Particle positions with weights, homotopy time and (gradient-free) scores."""

    positions: np.ndarray
    weights: np.ndarray
    t: float = 0.0
    scores: np.ndarray | None = None

    def __post_init__(self):
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float)
        n = self.positions.shape[0]
        if self.weights.shape != (n,):
            raise DimensionMismatchError(f"weights {self.weights.shape} for {n} particles")
        if np.any(self.weights < 0.0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise NumericalError("weights must be nonnegative and sum to one")
        if self.scores is not None:
            self.scores = np.asarray(self.scores, dtype=float)
            if self.scores.shape != self.positions.shape:
                raise DimensionMismatchError("scores must match positions in shape")

    @property
    def n_particles(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]


@dataclass
class DiagnosticsRecord:
    step: int
    t: float
    grad_evals: int
    ksd: float
    mean: np.ndarray
    cov_trace_over_d: float
    logz_partial: float
    ess: float
    accuracy: float | None = None


@dataclass
class RunResult:
    ensemble: Ensemble
    records: list[DiagnosticsRecord]
    log_z: float
    grad_evals: int
    h_evals: int
    snapshots: list[tuple[int, np.ndarray]] = field(default_factory=list)


class _EvalCounter:
    """Wraps a target so that per-particle grad-h and h evaluations are counted."""

    def __init__(self, target: TargetProblem):
        self.grad_evals = 0
        self.h_evals = 0
        base_grad, base_h = target.grad_h, target.h

        def counted_grad(x):
            self.grad_evals += 1 if np.asarray(x).ndim == 1 else np.asarray(x).shape[0]
            return base_grad(x)

        def counted_h(x):
            self.h_evals += 1 if np.asarray(x).ndim == 1 else np.asarray(x).shape[0]
            return base_h(x)

        self.target = dataclasses.replace(target, grad_h=counted_grad, h=counted_h)


def interp_score(target: TargetProblem, t: float, x: np.ndarray) -> np.ndarray:
    """Score of the tempered density: -t grad_h(x) + prior score(x)."""
    return -t * target.grad_h(x) + target.prior_score(x)


def logz_accumulate(ts: np.ndarray, h_means: np.ndarray) -> float:
    """log Z_1 estimate: negative trapezoid rule over per-node ensemble means of h."""
    ts = np.asarray(ts, dtype=float)
    h_means = np.asarray(h_means, dtype=float)
    if ts.shape != h_means.shape or ts.size < 2:
        raise NumericalError("need at least two (t, mean h) nodes for the trapezoid rule")
    return float(-np.trapezoid(h_means, ts))


def _transport_core(ens, target, kernel, lam, dt, step_index):
    """One Euler step of the transport system; grad_h is evaluated once per particle."""
    sigma2 = kernels.resolve_bandwidth(kernel, ens.positions)
    scores = ens.scores if ens.scores is not None else interp_score(target, ens.t, ens.positions)
    xi = stein.ksd_gram(ens.positions, scores, kernel, sigma2)
    h_values = target.h(ens.positions)
    try:
        solved = stein.solve_phi(xi, h_values, ens.weights, lam)
    except NumericalError as exc:
        raise NumericalError(str(exc), step=step_index) from exc
    v = stein.velocity(ens.positions, ens.positions, scores, solved.phi,
                       ens.weights, kernel, sigma2)
    new_positions = ens.positions + dt * v
    if not np.all(np.isfinite(new_positions)):
        raise NumericalError("non-finite particle positions", step=step_index)
    return new_positions, scores, solved, h_values, sigma2, v


def stein_transport_step(ens: Ensemble, target: TargetProblem, kernel: KernelConfig,
                         lam: float, dt: float) -> Ensemble:
    """Advance the ensemble by one transport step of size dt."""
    if ens.t + dt > 1.0 + 1e-12:
        raise NumericalError(f"step would leave the unit interval (t={ens.t}, dt={dt})")
    new_positions, _, _, _, _, _ = _transport_core(ens, target, kernel, lam, dt, None)
    return Ensemble(new_positions, ens.weights.copy(), t=ens.t + dt)


def svgd_direction(positions: np.ndarray, scores: np.ndarray, kernel: KernelConfig,
                   sigma2: float) -> np.ndarray:
    """Update direction (1/N) sum_j (k(x_i, x_j) s_j + grad_y k(x_i, x_j))."""
    n = positions.shape[0]
    return stein.velocity(positions, positions, scores, np.ones(n),
                          np.full(n, 1.0 / n), kernel, sigma2)


def svgd_step(ens: Ensemble, score_fn, kernel: KernelConfig, dt: float,
              opt: AdagradState | None = None,
              params: AdagradParams | None = None) -> Ensemble:
    """One SVGD update against the fixed score field ``score_fn``.

    Plain update when ``opt`` is None; otherwise the RMS-style Adagrad of the
    reference implementation: a <- decay a + (1 - decay) u o u, then
    x <- x + lr u / (eps + sqrt(a)). The optimizer state is mutated in place.
    """
    sigma2 = kernels.resolve_bandwidth(kernel, ens.positions)
    scores = np.atleast_2d(np.asarray(score_fn(ens.positions), dtype=float))
    u = svgd_direction(ens.positions, scores, kernel, sigma2)
    if opt is None:
        new_positions = ens.positions + dt * u
    else:
        p = params if params is not None else AdagradParams(learning_rate=dt)
        opt.accumulator = p.decay * opt.accumulator + (1.0 - p.decay) * u * u
        opt.step_count += 1
        new_positions = ens.positions + p.learning_rate * u / (p.eps + np.sqrt(opt.accumulator))
    return Ensemble(new_positions, ens.weights.copy(), t=ens.t, scores=ens.scores)


def _score_evolution(positions, ens_scores, phi, weights, sigma2, d, mode):
    """Right-hand side of the gradient-free score update (squared-exponential kernel).

    "eq10" is -sum_j c_j (hess_x k . P_j + grad_x cross_div k); "lemma" adds the
    Jacobian term of the full chain rule, -(grad v) P, which for a stationary
    kernel folds into hess_x terms in P_i and a kernel-gradient term.
    """
    X, P = positions, ens_scores
    c = weights * phi
    r2 = kernels.sq_dists(X, X)
    k = np.exp(-r2 / (2.0 * sigma2))
    kc = k * c[None, :]
    a = X @ P.T                              # a_ij = x_i . p_j
    e = np.einsum("ij,ij->i", X, P)          # x_i . p_i
    b = a - e[None, :]                       # (x_i - x_j) . p_j
    m = kc * b / sigma2**2
    hess_dot_pj = m.sum(axis=1)[:, None] * X - m @ X - (kc @ P) / sigma2
    g = kc * ((d + 2.0) / sigma2**2 - r2 / sigma2**3)
    grad_cross = -(g.sum(axis=1)[:, None] * X - g @ X)
    dscores = -(hess_dot_pj + grad_cross)
    if mode == "eq10":
        return dscores
    b_i = e[:, None] - a.T                   # (x_i - x_j) . p_i
    m_i = kc * b_i / sigma2**2
    hess_dot_pi = m_i.sum(axis=1)[:, None] * X - m_i @ X - kc.sum(axis=1)[:, None] * P / sigma2
    q = kc * (P @ P.T) / sigma2
    grad_k_dot = -(q.sum(axis=1)[:, None] * X - q @ X)
    return dscores + hess_dot_pi - grad_k_dot


@dataclass
class _DiagOptions:
    every: int = 1
    ksd_every: int = 1
    kernel: KernelConfig = field(
        default_factory=lambda: KernelConfig(family=KernelFamily.INVERSE_MULTIQUADRIC))
    test_set: tuple[np.ndarray, np.ndarray] | None = None
    snapshot_every: int = 0


class _Recorder:
    """Collects per-step diagnostics; owns the log-Z node list."""

    def __init__(self, target, counter, opts: _DiagOptions, score_free: bool):
        self._counter = counter
        self._opts = opts
        if score_free:
            self._target_score = None
        else:
            self._target_score = lambda x: interp_score(target, 1.0, x)
        self.records: list[DiagnosticsRecord] = []
        self.snapshots: list[tuple[int, np.ndarray]] = []
        self._logz_ts: list[float] = []
        self._logz_h: list[float] = []

    def add_logz_node(self, t: float, h_mean: float):
        self._logz_ts.append(t)
        self._logz_h.append(h_mean)

    @property
    def log_z(self) -> float:
        if len(self._logz_ts) < 2:
            return float("nan")
        return logz_accumulate(np.asarray(self._logz_ts), np.asarray(self._logz_h))

    def emit(self, step: int, ens: Ensemble, force: bool = False):
        if not force and step != 0 and step % self._opts.every != 0:
            return
        moments = diag.moments(ens) if ens.n_particles >= 2 else None
        ksd_val = float("nan")
        ksd_due = force or (self._opts.ksd_every > 0
                            and step % (self._opts.every * self._opts.ksd_every) == 0)
        if self._target_score is not None and ksd_due:
            ksd_val = stein.ksd(ens.positions, ens.weights, self._target_score,
                                self._opts.kernel)
        accuracy = None
        if self._opts.test_set is not None:
            accuracy = diag.test_accuracy(ens, *self._opts.test_set)
        logz_partial = 0.0 if len(self._logz_ts) < 2 else self.log_z
        self.records.append(DiagnosticsRecord(
            step=step,
            t=ens.t,
            grad_evals=self._counter.grad_evals,
            ksd=ksd_val,
            mean=(moments.mean if moments else ens.positions.mean(axis=0)).copy(),
            cov_trace_over_d=moments.trace_over_d if moments else 0.0,
            logz_partial=logz_partial,
            ess=diag.ess(ens.weights),
            accuracy=accuracy,
        ))
        if self._opts.snapshot_every and step % self._opts.snapshot_every == 0 and step > 0:
            self.snapshots.append((step, ens.positions.copy()))


def run_variant(target: TargetProblem, kernel: KernelConfig, schedule: Schedule,
                rng: np.random.Generator, n_particles: int, *,
                diagnostics_every: int = 1, ksd_every: int = 1,
                test_set=None, snapshot_every: int = 0) -> RunResult:
    """Run the configured variant from fresh prior samples and collect diagnostics."""
    counter = _EvalCounter(target)
    counted = counter.target
    opts = _DiagOptions(every=diagnostics_every, ksd_every=ksd_every,
                        test_set=test_set, snapshot_every=snapshot_every)
    recorder = _Recorder(target, counter, opts,
                         score_free=schedule.variant is Variant.GRADIENT_FREE)

    positions = target.prior_sample(rng, n_particles)
    weights = np.full(n_particles, 1.0 / n_particles)

    if schedule.variant is Variant.SVGD:
        ens = Ensemble(positions, weights, t=1.0)
        recorder.emit(0, ens)
        opt = None
        if schedule.adjust_optimizer is AdjustOptimizer.ADAGRAD:
            opt = AdagradState(np.zeros_like(ens.positions))
        score_fn = lambda x: interp_score(counted, 1.0, x)
        for step in range(1, schedule.svgd_steps + 1):
            ens = svgd_step(ens, score_fn, kernel, schedule.dt_adjust, opt, schedule.adagrad)
            recorder.emit(step, ens, force=step == schedule.svgd_steps)
        return RunResult(ens, recorder.records, float("nan"),
                         counter.grad_evals, counter.h_evals, recorder.snapshots)

    scores0 = None
    if schedule.variant is Variant.GRADIENT_FREE:
        if kernel.family is not KernelFamily.SQUARED_EXPONENTIAL:
            raise UnsupportedKernelError("gradient-free dynamics need the squared-exponential kernel")
        scores0 = counted.prior_score(positions)
    ens = Ensemble(positions, weights, t=0.0, scores=scores0)
    recorder.emit(0, ens)

    dt = schedule.dt
    adjust_state = None
    if schedule.n_adjust and schedule.adjust_optimizer is AdjustOptimizer.ADAGRAD:
        adjust_state = AdagradState(np.zeros_like(ens.positions))

    for n in range(schedule.n_steps):
        t_n = n * dt
        if schedule.variant is Variant.ADJUSTED and schedule.n_adjust:
            score_fn = lambda x, t=t_n: interp_score(counted, t, x)
            for _ in range(schedule.n_adjust):
                ens = svgd_step(ens, score_fn, kernel,
                                schedule.dt_adjust, adjust_state, schedule.adagrad)
        try:
            new_positions, scores, solved, h_values, sigma2, _ = _transport_core(
                ens, counted, kernel, schedule.lam, dt, n)
        except NumericalError as exc:
            if exc.step is None:
                raise NumericalError(str(exc), step=n) from exc
            raise
        recorder.add_logz_node(t_n, float(ens.weights @ h_values))

        new_weights = ens.weights
        new_scores = None
        if schedule.variant is Variant.WEIGHTED:
            new_weights = ens.weights * np.exp(-schedule.lam * solved.phi * dt)
            new_weights = new_weights / new_weights.sum()
            if diag.ess(new_weights) < 0.1 * n_particles:
                logger.warning("step %d: effective sample size below 0.1 N", n)
        elif schedule.variant is Variant.GRADIENT_FREE:
            dscores = _score_evolution(ens.positions, ens.scores, solved.phi, ens.weights,
                                       sigma2, ens.dim, schedule.score_update)
            new_scores = ens.scores + dt * dscores
            if not np.all(np.isfinite(new_scores)):
                raise NumericalError("non-finite evolved scores", step=n)

        ens = Ensemble(new_positions, new_weights.copy(), t=(n + 1) * dt, scores=new_scores)
        recorder.emit(n + 1, ens, force=n + 1 == schedule.n_steps)

    recorder.add_logz_node(1.0, float(ens.weights @ counted.h(ens.positions)))
    final_logz = recorder.log_z
    if recorder.records:
        recorder.records[-1].logz_partial = final_logz
    return RunResult(ens, recorder.records, final_logz,
                     counter.grad_evals, counter.h_evals, recorder.snapshots)


def _named_run(variant: Variant, doc: str):
    def runner(target, kernel, schedule, rng, n_particles, **kwargs):
        if schedule.variant is not variant:
            raise NumericalError(f"schedule variant {schedule.variant.value} is not "
                                 f"{variant.value}")
        return run_variant(target, kernel, schedule, rng, n_particles, **kwargs)
    runner.__name__ = f"{variant.value}_run"
    runner.__doc__ = doc + " See run_variant for the keyword options."
    return runner


stein_transport_run = _named_run(
    Variant.STEIN_TRANSPORT,
    "Euler flow of the ridge-regression velocity field from t=0 to t=1.")
adjusted_run = _named_run(
    Variant.ADJUSTED,
    "Transport with n_adjust interspersed SVGD steps targeting each intermediate density.")
svgd_run = _named_run(
    Variant.SVGD,
    "SVGD baseline targeting the posterior directly for schedule.svgd_steps updates.")
gradient_free_run = _named_run(
    Variant.GRADIENT_FREE,
    "Transport that co-evolves per-particle scores; grad h is never evaluated.")
weighted_run = _named_run(
    Variant.WEIGHTED,
    "Transport with multiplicative particle weights absorbing the regularisation bias.")
