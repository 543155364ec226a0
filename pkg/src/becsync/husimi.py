"""Husimi Q-functions of two-mode states.

Coherent-state overlaps are formed from the scaled Fock amplitudes

    u_k(alpha) = exp(-|alpha|^2 / 2) (alpha*)^k / sqrt(k!)

evaluated in log-magnitude form, so every factor is bounded by one and large
occupations do not overflow.  Two phase-space measures are supported for the
marginals (see :class:`becsync.numerics.Measure`): ``standard`` marginals are
the true reduced Q-functions and carry ``k!`` weights, ``paper`` marginals carry
``Gamma(k + 1/2)`` weights and belong with the ``dr dtheta / pi`` area element.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .focksector import FockStateN
from .fullspace import TwoModeState
from .numerics import Measure, PolarGrid, log_gamma

__all__ = [
    "QGrid",
    "GridResolutionWarning",
    "fock_amplitudes",
    "q_joint_fixedN",
    "q_bound_fixedN",
    "q_joint_full",
    "q_joint_grid",
    "q_marginal_fixedN",
    "q_marginal_full",
    "q_marginal",
    "q_snapshot",
    "state_matrix",
]


class GridResolutionWarning(RuntimeWarning):
    pass


MODES = ("A", "B")


def _which(mode):
    m = str(mode).upper()
    if m not in MODES:
        raise ValueError(f"mode must be 'A' or 'B', got {mode!r}")
    return m


def fock_amplitudes(alpha, kmax):
    """``u_k(alpha)`` for ``k = 0..kmax``; the Fock index is the last axis."""
    alpha = np.asarray(alpha, dtype=complex)
    k = np.arange(kmax + 1, dtype=float)
    r = np.abs(alpha)[..., None]
    logmag = -0.5 * r * r - 0.5 * log_gamma(k + 1.0)
    # r**0 is one even at r = 0 (the discarded 0 * log 0 branch is nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        logmag = logmag + np.where(k == 0, 0.0, k * np.log(r))
    phase = np.exp(-1j * np.angle(alpha)[..., None] * k)
    return np.exp(logmag) * phase


def state_matrix(state) -> np.ndarray:
    """Square coefficient array ``M[k, l]`` for either state family."""
    if isinstance(state, FockStateN):
        N = state.N
        m = np.zeros((N + 1, N + 1), dtype=complex)
        j = np.arange(N + 1)
        m[j, N - j] = state.c
        return m
    if isinstance(state, TwoModeState):
        return state.matrix()
    raise TypeError(f"unsupported state type {type(state).__name__}")


def q_joint_fixedN(c: FockStateN, alpha_a, alpha_b):
    """Joint Q-function of a fixed-N state (broadcasts over the two points)."""
    N = c.N
    ua = fock_amplitudes(alpha_a, N)
    ub = fock_amplitudes(alpha_b, N)[..., ::-1]  # index N - j
    psi = np.sum(c.c * ua * ub, axis=-1)
    return np.abs(psi) ** 2


def q_bound_fixedN(N, alpha_a, alpha_b):
    """Upper envelope ``(|a_A|^2 + |a_B|^2)^N exp(-(...)) / N!`` of any sector-N Q."""
    s = np.abs(np.asarray(alpha_a)) ** 2 + np.abs(np.asarray(alpha_b)) ** 2
    with np.errstate(divide="ignore"):
        logs = np.log(s)
    out = np.exp(np.where(N == 0, 0.0, N * logs) - s - log_gamma(N + 1.0))
    return out


def q_joint_full(s: TwoModeState, alpha_a, alpha_b):
    """Joint Q-function of a truncated-space state (broadcasts over points)."""
    m = s.matrix()
    n = s.n_trunc
    ua = fock_amplitudes(alpha_a, n)
    ub = fock_amplitudes(alpha_b, n)
    psi = np.einsum("...k,kl,...l->...", ua, m, ub)
    return np.abs(psi) ** 2


def q_joint_grid(state, points_a, points_b):
    """Joint Q on the outer product of two point sets; shape ``(len(a), len(b))``."""
    m = state_matrix(state)
    n = m.shape[0] - 1
    ua = fock_amplitudes(np.ravel(points_a), n)
    ub = fock_amplitudes(np.ravel(points_b), n)
    psi = ua @ m @ ub.T
    return np.abs(psi) ** 2


def _occupation_weights(kmax, convention):
    k = np.arange(kmax + 1, dtype=float)
    if Measure(convention) is Measure.STANDARD:
        return np.ones_like(k)
    return np.exp(log_gamma(k + 0.5) - log_gamma(k + 1.0))


def q_marginal_fixedN(c: FockStateN, alpha, which_mode="A", convention="standard"):
    """Single-mode marginal of a fixed-N state.

    Under ``standard`` this is ``exp(-|a|^2) sum_j |C_j|^2 |a|^{2j} / j!`` for
    mode A; under ``paper`` each term is multiplied by
    ``Gamma(N - j + 1/2) / (N - j)!``.  Mode B exchanges ``j`` and ``N - j``.
    """
    mode = _which(which_mode)
    N = c.N
    alpha = np.asarray(alpha, dtype=complex)
    pop = c.populations
    occ = np.arange(N + 1) if mode == "A" else N - np.arange(N + 1)
    other = N - occ
    u = np.abs(fock_amplitudes(alpha, N)) ** 2  # exp(-r^2) r^{2k}/k!
    w = pop * _occupation_weights(N, convention)[other]
    return np.sum(u[..., occ] * w, axis=-1)


def q_marginal_full(s: TwoModeState, alpha, which_mode="A", convention="standard"):
    """Single-mode marginal of a truncated-space state.

    ``sum_l w_l |sum_k C[k, l] u_k(alpha)|^2`` for mode A, where ``w_l = 1``
    (standard) or ``Gamma(l + 1/2) / l!`` (paper).
    """
    mode = _which(which_mode)
    m = s.matrix()
    if mode == "B":
        m = m.T
    n = s.n_trunc
    u = fock_amplitudes(alpha, n)
    psi = u @ m  # [..., l]
    w = _occupation_weights(n, convention)
    return np.sum(np.abs(psi) ** 2 * w, axis=-1)


def q_marginal(state, alpha, which_mode="A", convention="standard"):
    if isinstance(state, FockStateN):
        return q_marginal_fixedN(state, alpha, which_mode, convention)
    if isinstance(state, TwoModeState):
        return q_marginal_full(state, alpha, which_mode, convention)
    raise TypeError(f"unsupported state type {type(state).__name__}")


@dataclass(frozen=True)
class QGrid:
    grid: PolarGrid
    values: np.ndarray  # (n_r, n_theta)
    which_mode: str = "A"
    convention: str = "standard"

    def boundary_max(self) -> float:
        return float(self.values[-1].max())

    def integral(self) -> float:
        return float(np.sum(self.values * self.grid.weights))

    def mean_square_radius(self) -> float:
        """``<|alpha|^2>`` under the grid measure, normalized by the integral."""
        r2 = (self.grid.r ** 2)[:, None]
        return float(np.sum(self.values * r2 * self.grid.weights) / self.integral())

    def argmax_radius(self) -> float:
        i = np.unravel_index(np.argmax(self.values), self.values.shape)[0]
        return float(self.grid.r[i])

    def rows(self):
        """``(r, theta, q)`` rows in r-major order."""
        rr, tt = np.meshgrid(self.grid.r, self.grid.theta, indexing="ij")
        return np.column_stack([rr.ravel(), tt.ravel(), self.values.ravel()])

    def write(self, csv_path, state_descriptor=None):
        """CSV ``r,theta,q`` plus a JSON sidecar next to it."""
        from .io import write_csv, write_sidecar

        write_csv(csv_path, ["r", "theta", "q"], self.rows())
        meta = {
            "kind": "q_snapshot",
            "mode": self.which_mode,
            "convention": self.convention,
            "grid": self.grid.describe(),
            "state": state_descriptor or {},
        }
        return write_sidecar(csv_path, meta)


def q_snapshot(state, grid: PolarGrid, which_mode="A", convention="standard",
               boundary_tol=1e-6) -> QGrid:
    """Marginal Q of one mode sampled on a polar grid."""
    mode = _which(which_mode)
    conv = Measure(convention).value
    values = q_marginal(state, grid.points(), mode, conv)
    qg = QGrid(grid, values, mode, conv)
    if qg.boundary_max() > boundary_tol:
        warnings.warn(f"Q at r_max={grid.r_max:.3g} is {qg.boundary_max():.3g}; "
                      "grid does not cover the state", GridResolutionWarning, stacklevel=2)
    return qg
