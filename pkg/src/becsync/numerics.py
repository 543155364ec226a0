"""Numeric kernels shared by the physics modules.

Complex state vectors are plain ``numpy`` arrays of ``complex128``.  The
kernels here are:

* :func:`integrate_ode` -- adaptive embedded Runge-Kutta propagation with
  uniform dense sampling,
* :func:`tridiag_eigen` -- symmetric tridiagonal eigenproblem by Sturm-sequence
  bisection and inverse iteration,
* :func:`polar_quadrature` -- Gauss-Legendre x periodic trapezoid rule on a
  polar phase-space grid,
* :func:`log_gamma`.
"""

from __future__ import annotations

import cmath
import enum
import functools
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
import scipy.linalg
import scipy.special
from scipy.integrate import solve_ivp

__all__ = [
    "IntegrationError",
    "EigenConvergenceError",
    "TridiagSym",
    "EigenSystem",
    "Measure",
    "PolarGrid",
    "OdeSamples",
    "integrate_ode",
    "tridiag_eigen",
    "polar_quadrature",
    "log_gamma",
    "gauss_legendre",
]

_EPS = np.finfo(float).eps
# scipy refuses tighter relative tolerances than this
_RTOL_FLOOR = 100 * _EPS


class IntegrationError(RuntimeError):
    """Raised when the adaptive integrator cannot proceed."""

    def __init__(self, message, time):
        super().__init__(f"{message} (t = {time!r})")
        self.time = time


class EigenConvergenceError(RuntimeError):
    """Raised when inverse iteration fails for an eigenvalue."""

    def __init__(self, index):
        super().__init__(f"inverse iteration did not converge for eigenvalue {index}")
        self.index = index


# ---------------------------------------------------------------------------
# ODE integration
# ---------------------------------------------------------------------------


class OdeSamples(NamedTuple):
    t: np.ndarray
    y: np.ndarray  # shape (samples, dim)


def integrate_ode(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0,
    t_span: tuple[float, float],
    rel_tol: float = 1e-10,
    samples: int = 2,
    abs_tol: float | None = None,
) -> OdeSamples:
    """Integrate ``dy/dt = rhs(t, y)`` and sample at uniformly spaced times.

    The Dormand-Prince 8(5,3) pair is used with dense output, so the sample
    grid does not constrain the step size.  ``t_span`` may run backwards.

    Args:
        rhs: derivative map ``(t, y) -> dy/dt`` on complex vectors.
        y0: initial state, complex array-like.
        t_span: ``(t0, t1)``, both finite.
        rel_tol: relative local error tolerance, in ``[1e-14, 1e-4]``.
        samples: number of output times including both endpoints (>= 2).
        abs_tol: absolute tolerance; defaults to ``1e-3 * rel_tol``.

    Returns:
        ``OdeSamples(t, y)`` with ``y[i]`` the state at ``t[i]``.

    Raises:
        IntegrationError: step-size underflow or a non-finite state.
    """
    if not 1e-14 <= rel_tol <= 1e-4:
        raise ValueError(f"rel_tol must lie in [1e-14, 1e-4], got {rel_tol}")
    t0, t1 = (float(t) for t in t_span)
    if not (np.isfinite(t0) and np.isfinite(t1)):
        raise ValueError("t_span must be finite")
    if samples < 2:
        raise ValueError("samples must be at least 2")
    y0 = np.asarray(y0, dtype=complex).ravel()
    t_eval = np.linspace(t0, t1, samples)
    if t0 == t1:
        return OdeSamples(t_eval, np.tile(y0, (samples, 1)))

    reached = [t0]

    def guarded(t, y):
        reached[0] = t
        dy = rhs(t, y)
        # one sum catches any inf or nan component at scalar cost
        if not cmath.isfinite(complex(dy.sum())):
            raise IntegrationError("non-finite derivative", t)
        return dy

    rtol = max(rel_tol, _RTOL_FLOOR)
    atol = 1e-3 * rel_tol if abs_tol is None else abs_tol
    sol = solve_ivp(guarded, (t0, t1), y0, method="DOP853", t_eval=t_eval,
                    rtol=rtol, atol=atol)
    if sol.status != 0:
        # sol.t only holds the requested samples; report where the stepper stalled
        raise IntegrationError(sol.message, float(reached[0]))
    y = sol.y.T
    if not np.all(np.isfinite(y)):
        raise IntegrationError("non-finite state", t1)
    # solve_ivp evaluates dense output at t_eval; pin the endpoints exactly
    t = sol.t.copy()
    t[0], t[-1] = t0, t1
    return OdeSamples(t, y)


# ---------------------------------------------------------------------------
# Symmetric tridiagonal eigenproblem
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TridiagSym:
    """Real symmetric tridiagonal matrix stored as diagonal and off-diagonal."""

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=float).ravel()
        e = np.asarray(self.offdiag, dtype=float).ravel()
        if d.size < 1:
            raise ValueError("empty tridiagonal matrix")
        if e.size != d.size - 1:
            raise ValueError(f"offdiag must have length {d.size - 1}, got {e.size}")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))):
            raise ValueError("tridiagonal entries must be finite")
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", e)

    @property
    def dim(self) -> int:
        return self.diag.size

    def norm(self) -> float:
        """Infinity norm (= 1-norm, by symmetry)."""
        a = np.abs(self.diag).copy()
        ae = np.abs(self.offdiag)
        a[:-1] += ae
        a[1:] += ae
        return float(a.max())

    def matvec(self, v):
        v = np.asarray(v)
        out = self.diag[:, None] * v if v.ndim == 2 else self.diag * v
        if self.dim > 1:
            e = self.offdiag[:, None] if v.ndim == 2 else self.offdiag
            out[:-1] += e * v[1:]
            out[1:] += e * v[:-1]
        return out

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


@dataclass(frozen=True)
class EigenSystem:
    values: np.ndarray  # ascending
    vectors: np.ndarray  # columns


def _sturm_count(d, e2, x):
    """Number of eigenvalues strictly below each shift in ``x``."""
    x = np.asarray(x, dtype=float)
    count = np.zeros(x.shape, dtype=int)
    tiny = _EPS * _EPS
    # pivots smaller than tiny are clamped (LAPACK pivmin) so the recurrence cannot overflow
    q = d[0] - x
    q = np.where(np.abs(q) < tiny, -tiny, q)
    count += q < 0
    for i in range(1, d.size):
        q = d[i] - x - e2[i - 1] / q
        q = np.where(np.abs(q) < tiny, -tiny, q)
        count += q < 0
    return count


def _split_blocks(d, e):
    """Index ranges of unreduced diagonal blocks (negligible couplings cut)."""
    cut = np.abs(e) <= _EPS * (np.abs(d[:-1]) + np.abs(d[1:]))
    starts = [0] + [i + 1 for i in np.flatnonzero(cut)]
    stops = starts[1:] + [d.size]
    return list(zip(starts, stops)), cut


def _bisect_all(d, e, tol_abs):
    n = d.size
    if n == 1:
        return d.copy()
    e2 = e * e
    ae = np.abs(e)
    radius = np.zeros(n)
    radius[:-1] += ae
    radius[1:] += ae
    lo0 = float(np.min(d - radius))
    hi0 = float(np.max(d + radius))
    span = hi0 - lo0
    lo0 -= 2 * _EPS * max(span, abs(lo0)) + tol_abs
    hi0 += 2 * _EPS * max(span, abs(hi0)) + tol_abs
    idx = np.arange(n)
    lo = np.full(n, lo0)
    hi = np.full(n, hi0)
    for _ in range(200):
        width = hi - lo
        floor = 2 * _EPS * np.maximum(np.abs(lo), np.abs(hi))
        active = width > np.maximum(tol_abs, floor)
        if not np.any(active):
            break
        mid = 0.5 * (lo + hi)
        c = _sturm_count(d, e2, mid)
        upper = active & (c > idx)
        lower = active & ~(c > idx)
        hi = np.where(upper, mid, hi)
        lo = np.where(lower, mid, lo)
    return 0.5 * (lo + hi)


def _inverse_iteration(d, e, values, scale, index_offset):
    """Eigenvectors of one unreduced block, reorthogonalized inside clusters.

    Returns the Rayleigh-quotient eigenvalues alongside the vectors.
    """
    n = d.size
    if n == 1:
        return values.copy(), np.ones((1, 1))
    vecs = np.zeros((n, n))
    refined = values.copy()
    ab = np.zeros((3, n))
    ab[0, 1:] = e
    ab[2, :-1] = e
    cluster_gap = 1e-3 * scale
    target = 1e-12 * scale
    cluster_start = 0
    for i, lam in enumerate(values):
        if i > 0 and values[i] - values[i - 1] > cluster_gap:
            cluster_start = i
        # separate coincident shifts so the solves differ
        shift = lam + (i - cluster_start) * 10 * _EPS * scale
        ab[1] = d - shift
        ok = False
        for restart in range(4):
            rng = np.random.default_rng(1_000_003 * (index_offset + i) + restart)
            x = rng.uniform(-1.0, 1.0, n)
            for _ in range(6):
                try:
                    x = scipy.linalg.solve_banded((1, 1), ab, x, check_finite=False)
                except (np.linalg.LinAlgError, ValueError):
                    ab[1] = d - shift - _EPS * scale
                    x = scipy.linalg.solve_banded((1, 1), ab, x, check_finite=False)
                for j in range(cluster_start, i):
                    x -= (vecs[:, j] @ x) * vecs[:, j]
                nrm = np.linalg.norm(x)
                if not np.isfinite(nrm) or nrm == 0.0:
                    break
                x /= nrm
                tx = _tri_apply(d, e, x)
                rho = float(x @ tx)
                resid = np.linalg.norm(tx - rho * x)
                if resid <= target:
                    ok = True
                    break
            if ok:
                break
        if not ok:
            raise EigenConvergenceError(index_offset + i)
        # one extra solve past the residual test pushes the cross-overlap with
        # other eigenvectors from resid/gap down to roundoff
        y = scipy.linalg.solve_banded((1, 1), ab, x, check_finite=False)
        for j in range(cluster_start, i):
            y -= (vecs[:, j] @ y) * vecs[:, j]
        nrm = np.linalg.norm(y)
        if np.isfinite(nrm) and nrm > 0.0:
            x = y / nrm
            rho = float(x @ _tri_apply(d, e, x))
        k = np.argmax(np.abs(x))
        vecs[:, i] = x if x[k] > 0 else -x
        refined[i] = rho
    return refined, vecs


def _tri_apply(d, e, x):
    y = d * x
    y[:-1] += e * x[1:]
    y[1:] += e * x[:-1]
    return y


def tridiag_eigen(h: TridiagSym, tol: float = 1e-14) -> EigenSystem:
    """All eigenpairs of a symmetric tridiagonal matrix.

    Eigenvalues come from bisection on Sturm sequence counts, bracketed to
    ``tol * ||h||``; eigenvectors from inverse iteration with
    Gram-Schmidt reorthogonalization among clustered eigenvalues.  Negligible
    couplings split the matrix into independent blocks first, so an exactly
    diagonal input returns permuted unit vectors.

    Raises:
        EigenConvergenceError: inverse iteration failed after bounded restarts.
    """
    if not 1e-14 <= tol <= 1e-8:
        raise ValueError(f"tol must lie in [1e-14, 1e-8], got {tol}")
    d, e = h.diag, h.offdiag
    n = d.size
    scale = max(h.norm(), np.finfo(float).tiny)
    blocks, _ = _split_blocks(d, e)
    all_vals, all_vecs = [], []
    offset = 0
    for start, stop in blocks:
        db = d[start:stop]
        eb = e[start:stop - 1]
        vals = _bisect_all(db, eb, tol * scale)
        # Rayleigh quotients of the converged vectors sharpen the bracketed values
        vals, vecs_b = _inverse_iteration(db, eb, vals, scale, offset)
        full = np.zeros((n, stop - start))
        full[start:stop] = vecs_b
        all_vals.append(vals)
        all_vecs.append(full)
        offset += stop - start
    values = np.concatenate(all_vals)
    vectors = np.concatenate(all_vecs, axis=1)
    order = np.argsort(values, kind="stable")
    return EigenSystem(values[order], vectors[:, order])


# ---------------------------------------------------------------------------
# Polar quadrature
# ---------------------------------------------------------------------------


class Measure(str, enum.Enum):
    """Phase-space area element used for polar integrals.

    ``STANDARD`` is ``d^2 alpha / pi = r dr dtheta / pi``.  ``PAPER`` drops the
    Jacobian: ``dr dtheta / pi``.
    """

    STANDARD = "standard"
    PAPER = "paper"


@dataclass(frozen=True)
class PolarGrid:
    r_max: float
    n_r: int = 240
    n_theta: int = 128
    measure: Measure = Measure.STANDARD
    r: np.ndarray = field(init=False, repr=False, compare=False)
    theta: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (np.isfinite(self.r_max) and self.r_max > 0):
            raise ValueError("r_max must be positive and finite")
        if self.n_r < 2:
            raise ValueError("n_r must be at least 2")
        if self.n_theta < 1:
            raise ValueError("n_theta must be at least 1")
        object.__setattr__(self, "measure", Measure(self.measure))
        r, wr = gauss_legendre(self.n_r, 0.0, self.r_max)
        theta = 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta
        wt = np.full(self.n_theta, 2.0 * np.pi / self.n_theta)
        if self.measure is Measure.STANDARD:
            wr = wr * r
        weights = np.outer(wr, wt) / np.pi
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def for_occupation(cls, n_max, **kwargs):
        """Grid sized for states with at most ``n_max`` quanta per mode.

        ``r_max = sqrt(4 (n_max + 1))``, floored at 6 so the Gaussian tail of
        low-occupation states (``e^{-r_max^2}``) stays below 1e-15.
        """
        return cls(r_max=max(float(np.sqrt(4.0 * (n_max + 1))), 6.0), **kwargs)

    @property
    def shape(self):
        return (self.n_r, self.n_theta)

    def points(self) -> np.ndarray:
        """Complex amplitudes ``r e^{i theta}`` at the nodes, shape ``(n_r, n_theta)``."""
        return self.r[:, None] * np.exp(1j * self.theta)[None, :]

    def with_measure(self, measure) -> "PolarGrid":
        return PolarGrid(self.r_max, self.n_r, self.n_theta, Measure(measure))

    def refined(self, factor=2) -> "PolarGrid":
        return PolarGrid(self.r_max, factor * self.n_r, factor * self.n_theta, self.measure)

    def describe(self) -> dict:
        return {"r_max": self.r_max, "n_r": self.n_r, "n_theta": self.n_theta,
                "measure": self.measure.value}


@functools.lru_cache(maxsize=64)
def _leggauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gauss_legendre(n, a, b):
    """Gauss-Legendre nodes and weights on ``[a, b]``."""
    x, w = _leggauss(int(n))
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def polar_quadrature(f, grid: PolarGrid) -> float:
    """Integrate a scalar field over the disc ``r <= r_max``.

    ``f`` is either a callable ``f(r, theta)`` broadcasting over a column of
    radii and a row of angles, or an array of samples of shape ``grid.shape``.
    """
    if callable(f):
        vals = f(grid.r[:, None], grid.theta[None, :])
    else:
        vals = f
    vals = np.broadcast_to(np.asarray(vals, dtype=float), grid.shape)
    if not np.all(np.isfinite(vals)):
        raise ValueError("integrand is not finite on all grid nodes")
    return float(np.sum(vals * grid.weights))


def log_gamma(x):
    """Natural log of the Gamma function for ``x > 0`` (scalar or array)."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("log_gamma is defined here only for x > 0")
    out = scipy.special.gammaln(arr)
    return float(out) if out.ndim == 0 else out
