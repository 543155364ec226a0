"""Dynamics in the truncated two-mode space ``k + l <= n``.

Storage layout
--------------
Coefficients ``C[k, l]`` (``k`` atoms in mode A, ``l`` in mode B) are kept in a
flat vector of length ``D = (n+1)(n+2)/2`` ordered by total number and then by
``k``::

    index(k, l) = N (N + 1) / 2 + k,   N = k + l

so every fixed-``N`` sector is a contiguous slice whose internal order matches
:class:`becsync.focksector.FockStateN` (``j = k``).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import focksector
from .focksector import FockStateN, QuantumParams
from .numerics import TridiagSym, integrate_ode, log_gamma, tridiag_eigen

__all__ = [
    "TwoModeState",
    "FullMoments",
    "dimension",
    "flat_index",
    "sector_slice",
    "coherent_initial",
    "build_blocks",
    "evolve_full",
    "evolve_full_ode",
    "full_rhs",
    "full_moments",
    "energy_expectation",
    "sector_norms",
    "truncation_deficit",
]

log = logging.getLogger(__name__)


def dimension(n_trunc: int) -> int:
    return (n_trunc + 1) * (n_trunc + 2) // 2


def flat_index(k: int, l: int) -> int:
    N = k + l
    return N * (N + 1) // 2 + k


def sector_slice(N: int) -> slice:
    start = N * (N + 1) // 2
    return slice(start, start + N + 1)


def _triangle(n):
    """Arrays ``(k, l)`` of occupations in flat storage order."""
    ks, ls = [], []
    for N in range(n + 1):
        k = np.arange(N + 1)
        ks.append(k)
        ls.append(N - k)
    return np.concatenate(ks), np.concatenate(ls)


@dataclass(frozen=True)
class TwoModeState:
    n_trunc: int
    c: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=complex).ravel()
        if c.size != dimension(self.n_trunc):
            raise ValueError(f"expected {dimension(self.n_trunc)} coefficients, got {c.size}")
        norm = float(np.vdot(c, c).real)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state not normalized: sum |C|^2 = {norm!r}")
        object.__setattr__(self, "c", c)

    @property
    def dim(self):
        return self.c.size

    def matrix(self) -> np.ndarray:
        """Square ``(n+1, n+1)`` array ``M[k, l]``, zero outside the triangle."""
        n = self.n_trunc
        k, l = _triangle(n)
        m = np.zeros((n + 1, n + 1), dtype=complex)
        m[k, l] = self.c
        return m

    @classmethod
    def from_matrix(cls, m, n_trunc=None):
        m = np.asarray(m, dtype=complex)
        n = m.shape[0] - 1 if n_trunc is None else n_trunc
        k, l = _triangle(n)
        return cls(n, m[k, l])

    @classmethod
    def from_sector(cls, state: FockStateN, n_trunc=None):
        n = state.N if n_trunc is None else n_trunc
        if state.N > n:
            raise ValueError("sector lies above the truncation")
        c = np.zeros(dimension(n), dtype=complex)
        c[sector_slice(state.N)] = state.c
        return cls(n, c)

    @classmethod
    def from_unnormalized(cls, n_trunc, c):
        c = np.asarray(c, dtype=complex)
        return cls(n_trunc, c / np.linalg.norm(c))

    def sector(self, N) -> np.ndarray:
        return self.c[sector_slice(N)]


@dataclass(frozen=True)
class FullMoments:
    a_A_mean: complex
    a_B_mean: complex
    n_A: float
    var_n_A: float
    n_B: float
    x_A: float
    p_A: float
    x_B: float
    p_B: float
    mean_x_minus: float
    mean_p_minus: float
    var_x_minus: float
    var_p_minus: float


def coherent_initial(alpha0: complex, n_trunc: int, poisson_window: bool = False,
                     max_deficit: float = 1e-2) -> TwoModeState:
    """``|alpha0> (x) |0>`` truncated to ``k <= n_trunc`` and renormalized.

    With ``poisson_window`` only ``k`` within ``|alpha0|^2 +- |alpha0|`` is kept
    (the deficit check is skipped for the window, which discards mass by design).

    Raises:
        ValueError: truncation loses more than ``max_deficit`` of the norm.
    """
    alpha0 = complex(alpha0)
    nbar = abs(alpha0) ** 2
    k = np.arange(n_trunc + 1)
    logmag = -0.5 * nbar + k * (np.log(abs(alpha0)) if alpha0 != 0 else 0.0) \
        - 0.5 * log_gamma(k + 1.0)
    if alpha0 == 0:
        logmag = np.where(k == 0, 0.0, -np.inf)
    ck = np.exp(logmag) * np.exp(1j * np.angle(alpha0) * k)
    deficit = 1.0 - float(np.sum(np.abs(ck) ** 2))
    if poisson_window:
        spread = np.sqrt(nbar)
        ck = np.where((k >= nbar - spread) & (k <= nbar + spread), ck, 0.0)
        if not np.any(ck):
            raise ValueError("Poisson window is empty")
    elif deficit > max_deficit:
        raise ValueError(f"truncation n={n_trunc} loses {deficit:.3g} of the norm "
                         f"for |alpha0|^2 = {nbar:.3g}")
    if deficit > 0:
        log.debug("coherent truncation deficit %.3e renormalized", deficit)
    c = np.zeros(dimension(n_trunc), dtype=complex)
    c[[flat_index(int(kk), 0) for kk in k]] = ck
    return TwoModeState.from_unnormalized(n_trunc, c)


def truncation_deficit(alpha0, n_trunc) -> float:
    """Poisson mass of ``|alpha0>`` above ``n_trunc``."""
    nbar = abs(complex(alpha0)) ** 2
    k = np.arange(n_trunc + 1)
    if nbar == 0:
        return 0.0
    return float(1.0 - np.sum(np.exp(-nbar + k * np.log(nbar) - log_gamma(k + 1.0))))


def build_blocks(n_trunc: int, delta=0.0, g=1.0, chi=0.0) -> list[TridiagSym]:
    """Sector Hamiltonians ``N = 0..n_trunc`` (block ``N`` has size ``N+1``)."""
    return [focksector.build_hamiltonian(QuantumParams(delta, g, chi, N))
            for N in range(n_trunc + 1)]


def evolve_full(s0: TwoModeState, blocks, times, renormalize=True) -> list[TwoModeState]:
    """Propagate each sector slice with its own block, spectrally."""
    if len(blocks) != s0.n_trunc + 1:
        raise ValueError("need one block per sector 0..n_trunc")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.zeros((times.size, s0.dim), dtype=complex)
    for N, h in enumerate(blocks):
        sl = sector_slice(N)
        c = s0.c[sl]
        if not np.any(c):
            continue
        out[:, sl] = focksector._spectral(h, c, times, tridiag_eigen(h))
    if renormalize:
        out /= np.linalg.norm(out, axis=1, keepdims=True)
    return [TwoModeState(s0.n_trunc, row) for row in out]


def full_rhs(n_trunc, delta, g, chi):
    """Derivative map of the ``(k, l)`` coefficient equations on flat storage.

    Written directly from the two-index couplings, independent of the block
    decomposition used by :func:`evolve_full`.
    """
    k, l = _triangle(n_trunc)
    kf, lf = k.astype(float), l.astype(float)
    diag = delta * (kf - lf) + chi * (kf ** 2 + lf ** 2 + 4 * kf * lf - kf - lf)
    rate = g + (kf + lf - 1) * chi
    up = np.array([flat_index(a + 1, b - 1) if b > 0 else -1 for a, b in zip(k, l)])
    dn = np.array([flat_index(a - 1, b + 1) if a > 0 else -1 for a, b in zip(k, l)])
    w_up = np.where(up >= 0, np.sqrt(lf * (kf + 1)) * rate, 0.0)
    w_dn = np.where(dn >= 0, np.sqrt(kf * (lf + 1)) * rate, 0.0)
    up = np.where(up >= 0, up, 0)
    dn = np.where(dn >= 0, dn, 0)

    def rhs(_t, c):
        return -1j * (diag * c + w_up * c[up] + w_dn * c[dn])

    return rhs


def evolve_full_ode(s0: TwoModeState, delta, g, chi, t_max, samples, rel_tol=1e-13):
    rhs = full_rhs(s0.n_trunc, delta, g, chi)
    out = integrate_ode(rhs, s0.c, (0.0, t_max), rel_tol=rel_tol, samples=samples,
                        abs_tol=1e-16)
    return out.t, out.y


def energy_expectation(s: TwoModeState, blocks) -> float:
    e = 0.0
    for N, h in enumerate(blocks):
        c = s.c[sector_slice(N)]
        e += float(np.vdot(c, h.matvec(c)).real)
    return e


def sector_norms(s: TwoModeState) -> np.ndarray:
    return np.array([np.vdot(s.sector(N), s.sector(N)).real for N in range(s.n_trunc + 1)])


def _lowering(n):
    return np.diag(np.sqrt(np.arange(1, n + 1, dtype=float)), 1)


def full_moments(s: TwoModeState) -> FullMoments:
    """First and second moments of the mode and error quadratures.

    Uses ``x = a + a^dag`` and ``p = i (a^dag - a)`` per mode.  The error mode
    ``b = (a_A - a_B)/sqrt 2`` gives ``x_- = b + b^dag``, ``p_- = i (b^dag - b)``
    and all expectations reduce to ``<b>``, ``<b^2>`` and ``<b^dag b>``, which only
    need lowering operators acting on the stored state.
    """
    m = s.matrix()
    n = s.n_trunc
    low = _lowering(n)
    aA = low @ m          # (a_A psi)[k, l] = sqrt(k+1) C[k+1, l]
    aB = m @ low.T        # (a_B psi)[k, l] = sqrt(l+1) C[k, l+1]
    aAA = low @ aA
    aBB = aB @ low.T
    aAB = low @ aB

    def ev(x, y):
        return complex(np.vdot(x, y))

    mA = ev(m, aA)
    mB = ev(m, aB)
    nA = ev(aA, aA).real
    nB = ev(aB, aB).real
    k = np.arange(n + 1)
    popk = np.sum(np.abs(m) ** 2, axis=1)
    var_nA = max(float(popk @ (k * k)) - nA * nA, 0.0)
    cross = ev(aA, aB)    # <a_A^dag a_B>
    b1 = (mA - mB) / np.sqrt(2)
    b2 = (ev(m, aAA) + ev(m, aBB) - 2 * ev(m, aAB)) / 2
    bdb = (nA + nB - 2 * cross.real) / 2
    mean_x = 2 * b1.real
    mean_p = 2 * b1.imag
    var_x = 2 * bdb + 1 + 2 * b2.real - mean_x ** 2
    var_p = 2 * bdb + 1 - 2 * b2.real - mean_p ** 2
    return FullMoments(
        a_A_mean=mA, a_B_mean=mB, n_A=nA, var_n_A=var_nA, n_B=nB,
        x_A=2 * mA.real, p_A=2 * mA.imag, x_B=2 * mB.real, p_B=2 * mB.imag,
        mean_x_minus=mean_x, mean_p_minus=mean_p,
        var_x_minus=float(var_x), var_p_minus=float(var_p),
    )
