"""Exact dynamics in the fixed-atom-number sector.

A state is ``sum_j C_j |j, N-j>`` with ``j`` the occupation of mode A.  The
Hamiltonian is tridiagonal in this basis and evolution is done spectrally.
Energies are in units of ``g`` with ``hbar = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import EigenSystem, TridiagSym, integrate_ode, tridiag_eigen

__all__ = [
    "QuantumParams",
    "FockStateN",
    "SectorMoments",
    "build_hamiltonian",
    "evolve_fock",
    "evolve_fock_ode",
    "trapped_phase_evolution",
    "spectrum_vs_chi",
    "sector_moments",
    "paper_fluctuations",
    "energy_expectation",
    "time_unit",
]


@dataclass(frozen=True)
class QuantumParams:
    delta: float = 0.0
    g: float = 1.0
    chi: float = 0.0
    N: int = 1

    def __post_init__(self):
        if not all(np.isfinite(v) for v in (self.delta, self.g, self.chi)):
            raise ValueError("couplings must be finite")
        if not self.g > 0:
            raise ValueError("g must be positive")
        if int(self.N) != self.N or self.N < 0:
            raise ValueError("N must be a non-negative integer")
        object.__setattr__(self, "N", int(self.N))

    def with_N(self, N):
        return QuantumParams(self.delta, self.g, self.chi, N)

    @property
    def hopping(self):
        """Effective tunnelling rate ``g + chi (N - 1)``."""
        return self.g + self.chi * (self.N - 1)


def time_unit(p: QuantumParams) -> float:
    """Display time unit ``pi / (1 + (N-1) chi / g)`` in units of ``1/g``."""
    return float(np.pi / (1.0 + (p.N - 1) * p.chi / p.g))


@dataclass(frozen=True)
class FockStateN:
    N: int
    c: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=complex).ravel()
        if c.size != self.N + 1:
            raise ValueError(f"expected {self.N + 1} coefficients, got {c.size}")
        norm = float(np.vdot(c, c).real)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state not normalized: sum |C_j|^2 = {norm!r}")
        object.__setattr__(self, "c", c)

    @classmethod
    def number_state(cls, N, j=None):
        """``|j, N-j>``; defaults to all atoms in mode A (``|N, 0>``)."""
        c = np.zeros(N + 1, dtype=complex)
        c[N if j is None else j] = 1.0
        return cls(N, c)

    @classmethod
    def uniform(cls, N):
        return cls(N, np.full(N + 1, 1.0 / np.sqrt(N + 1), dtype=complex))

    @classmethod
    def from_unnormalized(cls, c):
        c = np.asarray(c, dtype=complex).ravel()
        return cls(c.size - 1, c / np.linalg.norm(c))

    @property
    def populations(self):
        return np.abs(self.c) ** 2


@dataclass(frozen=True)
class SectorMoments:
    n_A: float
    var_n_A: float
    cross: complex  # <a_A^dag a_B>
    var_x_minus: float
    var_p_minus: float
    mean_x_minus: float = 0.0
    mean_p_minus: float = 0.0


def build_hamiltonian(p: QuantumParams) -> TridiagSym:
    N = p.N
    j = np.arange(N + 1, dtype=float)
    d, c = p.delta, p.chi
    diag = c * N * N - (c + d) * N + 2 * j * (d + c * N) - 2 * c * j * j
    js = j[1:]
    off = np.sqrt(js * (N - js + 1)) * p.hopping
    return TridiagSym(diag, off)


def _check_state(c0: FockStateN, p: QuantumParams):
    if c0.N != p.N:
        raise ValueError(f"state has N={c0.N} but parameters have N={p.N}")


def _spectral(h: TridiagSym, c, times, eig: EigenSystem | None = None):
    eig = tridiag_eigen(h) if eig is None else eig
    v = eig.vectors
    amp = v.T @ c
    phases = np.exp(-1j * np.outer(times, eig.values))
    return (phases * amp) @ v.T


def evolve_fock(c0: FockStateN, p: QuantumParams, times, renormalize=True) -> list[FockStateN]:
    """Spectral propagation ``C(t) = V exp(-i Lambda t) V^T C(0)``.

    Negative times propagate backwards.  ``renormalize`` divides out the
    roundoff drift of the norm (about 1e-14); switch it off to inspect it.
    """
    _check_state(c0, p)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    out = _spectral(build_hamiltonian(p), c0.c, times)
    if renormalize:
        out /= np.linalg.norm(out, axis=1, keepdims=True)
    return [FockStateN(p.N, row) for row in out]


def evolve_fock_ode(c0: FockStateN, p: QuantumParams, t_max, samples, rel_tol=1e-13):
    """Direct adaptive integration of the coefficient equations (cross-check path)."""
    _check_state(c0, p)
    h = build_hamiltonian(p)
    out = integrate_ode(lambda _t, y: -1j * h.matvec(y), c0.c, (0.0, t_max),
                        rel_tol=rel_tol, samples=samples, abs_tol=1e-16)
    return out.t, out.y


def trapped_phase_evolution(c0: FockStateN, p: QuantumParams, t: float) -> FockStateN:
    """Analytic evolution when ``g + (N-1) chi = 0``: pure phases per level."""
    _check_state(c0, p)
    if abs(p.hopping) > 1e-12:
        raise ValueError(f"trapping condition g + (N-1) chi = 0 violated ({p.hopping!r})")
    diag = build_hamiltonian(p).diag
    return FockStateN(p.N, c0.c * np.exp(-1j * diag * t))


def spectrum_vs_chi(N, delta, g, chi_values):
    """Ascending eigenvalues for each ``chi``; returns ``(chi, levels[n_chi, N+1])``."""
    chi_values = np.asarray(chi_values, dtype=float)
    levels = np.empty((chi_values.size, N + 1))
    for i, chi in enumerate(chi_values):
        levels[i] = tridiag_eigen(build_hamiltonian(QuantumParams(delta, g, chi, N))).values
    return chi_values, levels


def energy_expectation(c: FockStateN, p: QuantumParams) -> float:
    h = build_hamiltonian(p)
    return float(np.vdot(c.c, h.matvec(c.c)).real)


def sector_moments(c: FockStateN) -> SectorMoments:
    """Number statistics and exact error-operator variances.

    All moments that change the total number vanish in the sector, so the
    quadrature means are exactly zero and
    ``var(x_-) = var(p_-) = N + 1 - 2 Re <a_A^dag a_B>``.
    """
    N = c.N
    j = np.arange(N + 1)
    pop = c.populations
    n_A = float(pop @ j)
    var_n = max(float(pop @ (j * j)) - n_A * n_A, 0.0)
    amp = np.sqrt((j[:-1] + 1.0) * (N - j[:-1]))
    cross = complex(np.sum(amp * np.conj(c.c[1:]) * c.c[:-1])) if N > 0 else 0j
    var = N + 1 - 2.0 * cross.real
    return SectorMoments(n_A, var_n, cross, var, var, 0.0, 0.0)


def paper_fluctuations(c: FockStateN):
    """``(sigma(x_-), sigma(p_-))`` from the covariance-free sum of mode variances.

    Uses ``sigma^2(x_A) = 2 n_A + 1`` and ``sigma^2(x_B) = 2 (N - n_A) + 1``; this
    omits ``-2 Re <a_A^dag a_B>`` and differs from :func:`sector_moments` by
    exactly that amount in the variance.
    """
    n_A = float(c.populations @ np.arange(c.N + 1))
    var_a = 2 * n_A + 1
    var_b = 2 * (c.N - n_A) + 1
    s = float(np.sqrt(0.5 * (var_a + var_b)))
    return s, s
