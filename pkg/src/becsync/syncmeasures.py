"""Quantum synchronization measures.

Three mutual-information variants are kept separate on purpose:

``direct``
    KL divergence of the joint Q-function from the product of its marginals,
    under ``d^2 alpha / pi`` for both modes.  A genuine mutual information:
    non-negative and zero for product states.
``paper``
    ``-2 * integral(Q_A ln Q_A)`` with the ``Gamma(k + 1/2)`` marginal and the
    ``dr dtheta / pi`` element (for fixed N: ``-4 * integral_0^inf Q ln Q dr``).
    Matches the usual plotted convention; it is not zero for product states.
``von_neumann``
    ``2 S(rho_A)`` for a pure two-mode state.

A fourth, ``wehrl``, is ``-2 * integral(Q_A ln Q_A) d^2 alpha/pi`` with the
standard marginal (twice the Wehrl entropy of mode A).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import focksector, fullspace
from .focksector import FockStateN
from .fullspace import TwoModeState
from .husimi import (GridResolutionWarning, fock_amplitudes, q_marginal,
                     q_marginal_fixedN, state_matrix)
from .numerics import Measure, PolarGrid, gauss_legendre

__all__ = [
    "MeasureSeries",
    "mari_measure",
    "error_variances",
    "reduced_density",
    "von_neumann_mutual",
    "mutual_information_direct",
    "mutual_information_paper_fixedN",
    "mutual_information_paper_full",
    "mutual_information_wehrl",
    "measure_series",
]

DENSITY_FLOOR = 1e-300


def mari_measure(var_x_minus, var_p_minus):
    """``S_c = 1 / (var_x + var_p)`` and its uncertainty bound ``1 / (2 sqrt(var_x var_p))``."""
    vx = np.asarray(var_x_minus, dtype=float)
    vp = np.asarray(var_p_minus, dtype=float)
    if np.any(vx <= 0) or np.any(vp <= 0):
        raise ValueError("variances must be positive")
    s_c = 1.0 / (vx + vp)
    bound = 1.0 / (2.0 * np.sqrt(vx * vp))
    if s_c.ndim == 0:
        return float(s_c), float(bound)
    return s_c, bound


def error_variances(state, variant="exact"):
    """``(var x_-, var p_-)`` for either state family.

    ``variant="paper"`` uses the covariance-free fixed-N formulas.
    """
    if isinstance(state, FockStateN):
        if variant == "paper":
            sx, sp = focksector.paper_fluctuations(state)
            return sx * sx, sp * sp
        m = focksector.sector_moments(state)
        return m.var_x_minus, m.var_p_minus
    if variant == "paper":
        raise ValueError("paper fluctuation formulas apply to fixed-N states only")
    m = fullspace.full_moments(state)
    return m.var_x_minus, m.var_p_minus


def reduced_density(state, which_mode="A") -> np.ndarray:
    m = state_matrix(state)
    if str(which_mode).upper() == "B":
        m = m.T
    return m @ m.conj().T


def _entropy(eigs):
    lam = np.asarray(eigs, dtype=float)
    lam = lam[lam > DENSITY_FLOOR]
    return float(-np.sum(lam * np.log(lam)))


def von_neumann_mutual(state, which_mode="A") -> float:
    """``I = 2 S(rho_A)`` for a pure state (equivalently via ``rho_B``)."""
    if isinstance(state, FockStateN):
        return 2.0 * _entropy(state.populations)
    rho = reduced_density(state, which_mode)
    return 2.0 * _entropy(np.linalg.eigvalsh(rho))


def _default_grid(state, n_r=40, n_theta=40):
    n = state_matrix(state).shape[0] - 1
    return PolarGrid.for_occupation(n, n_r=n_r, n_theta=n_theta)


def _check_mass(mass, label):
    if abs(1.0 - mass) > 1e-6:
        warnings.warn(f"marginal {label} integrates to {mass:.9f} on the grid; "
                      "grid does not resolve the state", GridResolutionWarning, stacklevel=3)


def mutual_information_direct(state, grid_a: PolarGrid | None = None,
                              grid_b: PolarGrid | None = None, chunk=256) -> float:
    """KL divergence of the joint Q from the product of its marginals (nats)."""
    grid_a = (grid_a or _default_grid(state)).with_measure(Measure.STANDARD)
    grid_b = (grid_b or grid_a).with_measure(Measure.STANDARD)
    m = state_matrix(state)
    n = m.shape[0] - 1
    pa = grid_a.points().ravel()
    wa = grid_a.weights.ravel()
    if isinstance(state, FockStateN) and grid_b.n_theta == grid_a.n_theta:
        # sector states depend on theta_A - theta_B only; on a common uniform
        # angle lattice the theta_B sum is n_theta copies of the theta_B = 0 slice
        pb = grid_b.r.astype(complex)
        wb = grid_b.weights.sum(axis=1)
    else:
        pb = grid_b.points().ravel()
        wb = grid_b.weights.ravel()
    qa = q_marginal(state, pa, "A", "standard")
    qb = q_marginal(state, pb, "B", "standard")
    _check_mass(float(wa @ qa), "A")
    _check_mass(float(wb @ qb), "B")
    ua = fock_amplitudes(pa, n)
    ub_m = m @ fock_amplitudes(pb, n).T
    with np.errstate(divide="ignore"):
        log_qb = np.where(qb > DENSITY_FLOOR, np.log(np.maximum(qb, DENSITY_FLOOR)), 0.0)
        log_qa = np.where(qa > DENSITY_FLOOR, np.log(np.maximum(qa, DENSITY_FLOOR)), 0.0)
    total = 0.0
    for start in range(0, pa.size, chunk):
        sl = slice(start, start + chunk)
        q = np.abs(ua[sl] @ ub_m) ** 2
        keep = (q > DENSITY_FLOOR) & (qa[sl, None] > DENSITY_FLOOR) & (qb[None, :] > DENSITY_FLOOR)
        logq = np.log(np.where(keep, q, 1.0))
        integrand = np.where(keep, q * (logq - log_qa[sl, None] - log_qb[None, :]), 0.0)
        total += float(wa[sl] @ integrand @ wb)
    return total


def _neg_q_log_q(q):
    q = np.asarray(q, dtype=float)
    keep = q > DENSITY_FLOOR
    return np.where(keep, -q * np.log(np.where(keep, q, 1.0)), 0.0)


def mutual_information_paper_fixedN(c: FockStateN, n_r=400, r_max=None) -> float:
    """``-4 * integral_0^r_max Q(r) ln Q(r) dr`` with the Gamma-weighted marginal."""
    if r_max is None:
        r_max = float(np.sqrt(4.0 * (c.N + 1))) + 4.0
    r, w = gauss_legendre(n_r, 0.0, r_max)
    q = q_marginal_fixedN(c, r.astype(complex), "A", "paper")
    return float(4.0 * np.sum(w * _neg_q_log_q(q)))


def mutual_information_wehrl(state, grid: PolarGrid | None = None, convention="standard",
                             which_mode="A") -> float:
    """``-2 * integral(Q_A ln Q_A)`` with the marginal and measure of ``convention``."""
    conv = Measure(convention)
    grid = (grid or _default_grid(state, n_r=240, n_theta=128)).with_measure(conv)
    q = q_marginal(state, grid.points(), which_mode, conv.value)
    if conv is Measure.STANDARD:
        _check_mass(float(np.sum(q * grid.weights)), which_mode)
    elif q[-1].max() > 1e-6:
        warnings.warn("Q does not vanish at r_max", GridResolutionWarning, stacklevel=2)
    return float(2.0 * np.sum(_neg_q_log_q(q) * grid.weights))


def mutual_information_paper_full(s: TwoModeState, grid: PolarGrid | None = None) -> float:
    """``-(2/pi) * double integral Q(r, theta) ln Q dr dtheta`` with the Gamma-weighted marginal."""
    return mutual_information_wehrl(s, grid, convention="paper", which_mode="A")


@dataclass
class MeasureSeries:
    times: np.ndarray
    s_c: np.ndarray
    s_c_bound: np.ndarray
    i_ab: dict = field(default_factory=dict)  # variant name -> series
    variants: dict = field(default_factory=dict)  # column name -> description

    def columns(self):
        cols = {"time": self.times, "s_c": self.s_c, "s_c_bound": self.s_c_bound}
        for name, series in self.i_ab.items():
            cols[f"i_ab_{name}"] = series
        return cols

    def write(self, csv_path, extra_meta=None):
        from .io import write_csv, write_sidecar

        cols = self.columns()
        write_csv(csv_path, list(cols), np.column_stack(list(cols.values())))
        meta = {"kind": "measure_series", "columns": self.variants}
        meta.update(extra_meta or {})
        return write_sidecar(csv_path, meta)


_VARIANT_DOC = {
    "direct": "KL divergence of joint Q from product of standard marginals, d^2a/pi",
    "paper": "-2 int Q_A ln Q_A with Gamma(k+1/2) marginal, dr dtheta/pi",
    "von_neumann": "2 S(rho_A)",
    "wehrl": "-2 int Q_A ln Q_A with standard marginal, d^2a/pi",
}


def measure_series(states, times, info_variants=("paper", "von_neumann"), variance="exact",
                   grid: PolarGrid | None = None, kl_grid: PolarGrid | None = None) -> MeasureSeries:
    """Mari measure and the requested mutual-information variants along a run.

    ``grid`` serves the single-mode integrals; the joint integral of the
    ``direct`` variant runs on ``kl_grid`` (its cost is quadratic in the node count).
    """
    times = np.asarray(times, dtype=float)
    var = np.array([error_variances(s, variance) for s in states])
    s_c, bound = mari_measure(var[:, 0], var[:, 1])
    info = {}
    for name in info_variants:
        if name == "von_neumann":
            f = von_neumann_mutual
        elif name == "direct":
            def f(s):
                return mutual_information_direct(s, kl_grid)
        elif name == "paper":
            def f(s):
                if isinstance(s, FockStateN):
                    return mutual_information_paper_fixedN(s)
                return mutual_information_paper_full(s, grid)
        elif name == "wehrl":
            def f(s):
                return mutual_information_wehrl(s, grid)
        else:
            raise ValueError(f"unknown mutual-information variant {name!r}")
        info[name] = np.array([f(s) for s in states])
    variants = {"s_c": f"1/(var x_- + var p_-), {variance} variances",
                "s_c_bound": "1/(2 sqrt(var x_- var p_-))"}
    variants.update({f"i_ab_{k}": _VARIANT_DOC[k] for k in info})
    return MeasureSeries(times, s_c, bound, info, variants)
