"""Low-rank + sparse decomposition solvers.

The main iteration alternates a soft-thresholded outlier update

    S_{k+1} = soft_threshold(Y - L_k R_k^T, zeta_{k+1})

with scaled gradient steps on the factors of ``X = L R^T``

    L_{k+1} = L_k - eta (L_k R_k^T + S_{k+1} - Y) R_k (R_k^T R_k)^{-1}
    R_{k+1} = R_k - eta (L_k R_k^T + S_{k+1} - Y)^T L_k (L_k^T L_k)^{-1}

seeded by a spectral initialization (threshold Y once, then a rank-r SVD).
The Gram-scaled steps make the per-iteration progress insensitive to the
conditioning of the low-rank part.  A baseline variant replaces the
soft-threshold with top-fraction sparsification.

Thresholds and step sizes come from a schedule source: a learned
:class:`~lrpca.schedule.ParamSchedule`, a :class:`FixedSchedule`, or an
:class:`OracleSchedule` that recomputes the theoretical threshold
``zeta_k = ||L_{k-1} R_{k-1}^T - X_true||_inf`` from ground truth at every
iteration (useful to verify the guaranteed geometric contraction).
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import (InvalidFraction, InvalidInput, InvalidThreshold,
                     MissingGroundTruth, SingularGram)
from .linalg import gram_solve, truncated_svd
from .operators import _sparsify_unchecked, soft_threshold
from .schedule import ParamSchedule
from .validation import check_matrix, check_rank, check_same_shape

__all__ = [
    "FactorPair", "SolverState", "StopRule", "SolveTrace",
    "FixedSchedule", "OracleSchedule",
    "spectral_init", "lrpca_step", "scaledgd_step",
    "solve", "solve_scaledgd", "residual_rel",
]


@dataclass(frozen=True)
class FactorPair:
    """The (L, R) factorization state with X = L @ R.T."""

    L: np.ndarray
    R: np.ndarray

    @property
    def rank(self):
        return self.L.shape[1]

    def product(self):
        return self.L @ self.R.T


@dataclass(frozen=True)
class SolverState:
    factors: FactorPair
    S: np.ndarray
    iteration: int

    def low_rank(self):
        return self.factors.product()


@dataclass(frozen=True)
class StopRule:
    """When to stop iterating.

    mode 'residual_rel' stops once ||Y - X - S||_F / ||Y||_F < tolerance,
    mode 'iterate_change' once the max of the relative changes in X and S
    between consecutive iterations drops below tolerance, and 'fixed_iters'
    runs exactly ``max_iters`` iterations.  ``max_iters`` caps every mode.
    """

    mode: str = "residual_rel"
    tolerance: float = 1e-4
    max_iters: int = 100

    def __post_init__(self):
        if self.mode not in ("residual_rel", "iterate_change", "fixed_iters"):
            raise InvalidInput(f"unknown stop mode {self.mode!r}")
        if self.max_iters < 0:
            raise InvalidInput("max_iters must be >= 0")
        if self.tolerance < 0:
            raise InvalidInput("tolerance must be >= 0")


@dataclass
class SolveTrace:
    """Per-iteration diagnostics; row 0 describes the initialization."""

    iters: list = field(default_factory=list)
    zetas: list = field(default_factory=list)
    etas: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    rel_errs: list = field(default_factory=list)
    wall_ms: list = field(default_factory=list)

    def append(self, k, zeta, eta, residual, rel_err, wall):
        self.iters.append(k)
        self.zetas.append(zeta)
        self.etas.append(eta)
        self.residuals.append(residual)
        self.rel_errs.append(rel_err)
        self.wall_ms.append(wall)

    def __len__(self):
        return len(self.iters)

    @property
    def iterations(self):
        """Number of update iterations executed (excludes initialization)."""
        return len(self.iters) - 1

    def rows(self):
        return list(zip(self.iters, self.zetas, self.etas, self.residuals,
                        self.rel_errs, self.wall_ms))


@dataclass(frozen=True)
class FixedSchedule:
    """Constant threshold and step size (zeta is also used for init)."""

    zeta: float
    eta: float


@dataclass(frozen=True)
class OracleSchedule:
    """Theoretical thresholds computed from ground truth on the fly."""

    eta: float = 0.5


def residual_rel(Y, X, S):
    """Relative reconstruction residual ``||Y - X - S||_F / ||Y||_F``."""
    Ym = check_matrix(Y, "Y")
    Xm = check_matrix(X, "X")
    Sm = check_matrix(S, "S")
    check_same_shape(Ym, Xm, Sm)
    ny = np.linalg.norm(Ym)
    if ny == 0.0:
        raise InvalidInput("Y must be nonzero")
    return float(np.linalg.norm(Ym - Xm - Sm) / ny)


def spectral_init(Y, r, zeta0, seed=0):
    """Initial state: ``S_0 = soft_threshold(Y, zeta0)``, factors from the
    rank-r SVD of ``Y - S_0`` (L = U sqrt(Sigma), R = V sqrt(Sigma))."""
    Ym = check_matrix(Y, "Y")
    r = check_rank(r, *Ym.shape)
    S0 = soft_threshold(Ym, zeta0)
    return _factor_state(Ym, S0, r, seed)


def _factor_state(Y, S0, r, seed):
    f = truncated_svd(Y - S0, r, seed=seed)
    root = np.sqrt(f.sigma)
    return SolverState(FactorPair(f.U * root, f.V * root), S0, 0)


def _scaled_update(factors, W, eta):
    # Both factor updates read the pre-step L and R.
    L, R = factors.L, factors.R
    L_new = L - eta * gram_solve(W @ R, R.T @ R)
    R_new = R - eta * gram_solve(W.T @ L, L.T @ L)
    return FactorPair(L_new, R_new)


def _block_rows(n_rows, n_cols):
    # Aim for ~4 MB row slabs so consecutive elementwise ops stay in cache.
    return max(1, min(n_rows, int(524288 // max(n_cols, 1)) or 1))


def _step_soft(factors, zeta, eta, T, out_S=None, out_W=None):
    """One thresholded iteration given the residual ``T = Y - L R^T``.

    Returns (factors', S, W) with ``W = L R^T + S - Y``.  For the soft
    threshold, W is just the residual clipped to [-zeta, zeta] and negated,
    and ``S = T + W`` recovers the thresholded matrix exactly.  The
    elementwise work runs over row slabs into preallocated buffers, which
    keeps the iteration free of large temporaries.
    """
    W = out_W if out_W is not None else np.empty_like(T)
    S = out_S if out_S is not None else np.empty_like(T)
    step = _block_rows(*T.shape)
    for i in range(0, T.shape[0], step):
        sl = slice(i, i + step)
        np.clip(T[sl], -zeta, zeta, out=W[sl])
        np.negative(W[sl], out=W[sl])
        np.add(T[sl], W[sl], out=S[sl])
    return _scaled_update(factors, W, eta), S, W


def _step_sparsify(factors, alpha_tilde, eta, T, out_S=None, out_W=None):
    S_new = _sparsify_unchecked(T, alpha_tilde)
    W = np.subtract(S_new, T, out=out_W) if out_W is not None else S_new - T
    return _scaled_update(factors, W, eta), S_new, W


def _norm_diff(A, B):
    """``||A - B||_F`` accumulated over row slabs without big temporaries."""
    step = _block_rows(*A.shape)
    acc = 0.0
    for i in range(0, A.shape[0], step):
        D = A[i:i + step] - B[i:i + step]
        acc += float((D * D).sum())
    return np.sqrt(acc)


def lrpca_step(state, Y, zeta, eta):
    """One soft-threshold + scaled-gradient iteration from ``state``."""
    Ym = check_matrix(Y, "Y")
    if zeta < 0:
        raise InvalidThreshold(f"threshold must be >= 0, got {zeta}")
    factors, S, _ = _step_soft(state.factors, zeta, eta,
                               Ym - state.low_rank())
    return SolverState(factors, S, state.iteration + 1)


def scaledgd_step(state, Y, alpha_tilde, eta):
    """One baseline iteration using top-fraction sparsification."""
    Ym = check_matrix(Y, "Y")
    if not 0.0 <= alpha_tilde <= 1.0:
        raise InvalidFraction(f"fraction must be in [0, 1], got {alpha_tilde}")
    factors, S, _ = _step_sparsify(state.factors, alpha_tilde, eta,
                                   Ym - state.low_rank())
    return SolverState(factors, S, state.iteration + 1)


def _resolve_schedule(schedule, truth):
    """Return (zeta0, params_fn) where params_fn(k, X_cur) -> (zeta, eta)."""
    if isinstance(schedule, ParamSchedule):
        return schedule.zeta0, lambda k, X: schedule.at(k)
    if isinstance(schedule, FixedSchedule):
        if schedule.zeta < 0:
            raise InvalidThreshold(f"threshold must be >= 0, got {schedule.zeta}")
        return schedule.zeta, lambda k, X: (schedule.zeta, schedule.eta)
    if isinstance(schedule, OracleSchedule):
        if truth is None:
            raise MissingGroundTruth("oracle schedule requires the true low-rank matrix")
        zeta0 = float(np.abs(truth).max())
        return zeta0, lambda k, X: (float(np.abs(X - truth).max()), schedule.eta)
    raise InvalidInput(f"unsupported schedule source {type(schedule).__name__}")


def _rel_change(new, old):
    denom = np.linalg.norm(old)
    diff = np.linalg.norm(new - old)
    if denom == 0.0:
        return 0.0 if diff == 0.0 else float("inf")
    return float(diff / denom)


def _run(Y, stop, truth, init_fn, params_fn, step_kernel):
    trace = SolveTrace()
    ny = np.linalg.norm(Y)
    nt = np.linalg.norm(truth) if truth is not None else None

    def record(k, zeta, eta, X, resid_fro, wall):
        res = float(resid_fro / ny) if ny > 0 else 0.0
        rel = (float(np.linalg.norm(X - truth) / nt)
               if truth is not None and nt > 0 else float("nan"))
        trace.append(k, zeta, eta, res, rel, wall)

    t0 = time.perf_counter()
    state, zeta0 = init_fn()
    X = state.low_rank()
    S = state.S
    T = Y - X  # residual against the current factors; feeds the next step
    record(0, zeta0, float("nan"), X, _norm_diff(T, S),
           (time.perf_counter() - t0) * 1e3)

    # Ping-pong buffers: the previous X and S stay live for the
    # iterate-change stop while the next iteration writes the other pair.
    S_bufs = (np.empty_like(Y), np.empty_like(Y))
    X_bufs = (np.empty_like(Y), np.empty_like(Y))
    W_buf = np.empty_like(Y)
    flip = 0

    k = 0
    while k < stop.max_iters:
        if stop.mode == "residual_rel" and trace.residuals[-1] < stop.tolerance:
            break
        k += 1
        zeta, eta = params_fn(k, X)
        t0 = time.perf_counter()
        try:
            factors, S_new, W = step_kernel(state.factors, zeta, eta, T,
                                            out_S=S_bufs[flip], out_W=W_buf)
        except SingularGram as exc:
            raise SingularGram(
                f"Gram factorization collapsed at iteration {k}: {exc}") from exc
        X_new = np.matmul(factors.L, factors.R.T, out=X_bufs[flip])
        np.subtract(Y, X_new, out=T)
        resid_fro = _norm_diff(T, S_new)
        wall = (time.perf_counter() - t0) * 1e3
        if stop.mode == "iterate_change":
            change = max(_rel_change(X_new, X), _rel_change(S_new, S))
        state = SolverState(factors, S_new, k)
        X, S = X_new, S_new
        flip = 1 - flip
        record(k, zeta, eta, X, resid_fro, wall)
        if stop.mode == "iterate_change" and change < stop.tolerance:
            break
    return X, S, trace


def solve(Y, r, schedule, stop=StopRule(), truth=None, seed=0):
    """Decompose ``Y`` into a rank-r part and a sparse part.

    Parameters
    ----------
    Y : array_like
        Observed matrix.
    r : int
        Target rank of the low-rank part.
    schedule : ParamSchedule | FixedSchedule | OracleSchedule
        Source of per-iteration (zeta, eta).  The oracle source requires
        ``truth``.
    stop : StopRule
    truth : array_like, optional
        True low-rank matrix; enables the oracle schedule and fills the
        ``rel_err`` trace column.
    seed : int
        Seed for the initialization SVD; fixes the output bit-for-bit.

    Returns
    -------
    (X_hat, S_hat, trace)
    """
    Ym = check_matrix(Y, "Y")
    r = check_rank(r, *Ym.shape)
    if truth is not None:
        truth = check_matrix(truth, "truth")
        check_same_shape(Ym, truth)
    zeta0, params_fn = _resolve_schedule(schedule, truth)

    def init():
        return spectral_init(Ym, r, zeta0, seed=seed), zeta0

    return _run(Ym, stop, truth, init, params_fn, _step_soft)


def solve_scaledgd(Y, r, alpha_tilde, eta, stop=StopRule(), truth=None, seed=0):
    """Baseline solver: top-fraction sparsification with a fixed step size.

    Initialization mirrors the main solver, with the sparsification operator
    in place of the threshold: ``S_0 = T_alpha(Y)``.
    """
    Ym = check_matrix(Y, "Y")
    r = check_rank(r, *Ym.shape)
    if not 0.0 <= alpha_tilde <= 1.0:
        raise InvalidFraction(f"fraction must be in [0, 1], got {alpha_tilde}")
    if truth is not None:
        truth = check_matrix(truth, "truth")
        check_same_shape(Ym, truth)

    def init():
        S0 = _sparsify_unchecked(Ym, alpha_tilde)
        return _factor_state(Ym, S0, r, seed), alpha_tilde

    return _run(Ym, stop, truth, init,
                lambda k, X: (alpha_tilde, eta), _step_sparsify)
