"""Classical mean-field dynamics of the two scattering modes.

The normalized amplitudes ``alpha`` (mode A) and ``beta`` (mode B) live on the
shell ``|alpha|^2 + |beta|^2 = 1``; time is the rescaled ``tau = N t`` and all
frequencies are in units of ``g_bar``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import integrate_ode

__all__ = [
    "ModelParams",
    "ClassicalState",
    "Trajectory",
    "PolarState",
    "DEFAULT_INITIAL",
    "derivatives",
    "evolve",
    "quadratures",
    "quadrature_errors",
    "imbalance_phase",
    "polar_state",
    "polar_flow",
    "phase_portrait",
    "covering_areas",
    "trajectory_distance",
    "oscillation_amplitude",
    "energy",
    "trajectory_energy",
]

# amplitudes below this leave the relative phase undefined
PHASE_FLOOR = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Classical couplings; the quantum ones rescaled by ``N``.

    ``delta_bar = delta / N``, ``g_bar = g / N``; ``chi`` enters unscaled.
    """

    delta_bar: float = 0.0
    g_bar: float = 1.0
    chi: float = 0.0

    def __post_init__(self):
        vals = (self.delta_bar, self.g_bar, self.chi)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("model parameters must be finite")
        if not self.g_bar > 0:
            raise ValueError("g_bar must be positive")

    @classmethod
    def from_quantum(cls, delta, g, chi, N):
        return cls(delta_bar=delta / N, g_bar=g / N, chi=chi)


@dataclass(frozen=True)
class ClassicalState:
    alpha: complex
    beta: complex

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", complex(self.beta))
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"state not on the unit shell: |alpha|^2+|beta|^2 = {norm!r}")

    @classmethod
    def normalized(cls, alpha, beta):
        n = np.sqrt(abs(alpha) ** 2 + abs(beta) ** 2)
        return cls(alpha / n, beta / n)

    @classmethod
    def from_polar(cls, r, phi_minus, theta_b=0.0):
        """State with amplitude ratio ``r = r_A / r_B`` and relative phase."""
        rb = 1.0 / np.sqrt(1.0 + r * r)
        ra = r * rb
        return cls(ra * np.exp(1j * (theta_b + phi_minus)), rb * np.exp(1j * theta_b))

    @classmethod
    def from_imbalance(cls, R, phi_minus, theta_b=0.0):
        ra = np.sqrt(0.5 * (1.0 + R))
        rb = np.sqrt(0.5 * (1.0 - R))
        return cls(ra * np.exp(1j * (theta_b + phi_minus)), rb * np.exp(1j * theta_b))

    def swapped(self):
        return ClassicalState(self.beta, self.alpha)

    def as_array(self):
        return np.array([self.alpha, self.beta])


DEFAULT_INITIAL = ClassicalState((1 + 2j) / np.sqrt(6), 1j / np.sqrt(6))


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    def __len__(self):
        return self.times.size

    def state(self, i) -> ClassicalState:
        return ClassicalState(self.alpha[i], self.beta[i])

    def norm(self):
        return np.abs(self.alpha) ** 2 + np.abs(self.beta) ** 2

    @property
    def r_a(self):
        return np.abs(self.alpha)

    @property
    def r_b(self):
        return np.abs(self.beta)

    def window(self, span):
        """Trailing sub-trajectory covering the last ``span`` time units."""
        if span > self.times[-1] - self.times[0] + 1e-12:
            raise ValueError("window exceeds trajectory span")
        keep = self.times >= self.times[-1] - span - 1e-12
        return Trajectory(self.times[keep], self.alpha[keep], self.beta[keep])


@dataclass(frozen=True)
class PolarState:
    r: float
    phi_minus: float

    def __post_init__(self):
        if not (np.isfinite(self.r) and self.r > 0):
            raise ValueError("amplitude ratio r must be positive and finite")
        object.__setattr__(self, "phi_minus", float(np.mod(self.phi_minus, 2 * np.pi)))


def _rhs_pair(a, b, p: ModelParams):
    d, g, c = p.delta_bar, p.g_bar, p.chi
    na = a.real ** 2 + a.imag ** 2
    nb = b.real ** 2 + b.imag ** 2
    fa = d * a + g * b + 2 * c * (1 + nb) * a + c * (1 + na) * b + c * np.conj(b) * a * a
    fb = -d * b + g * a + 2 * c * (1 + na) * b + c * (1 + nb) * a + c * np.conj(a) * b * b
    return -1j * fa, -1j * fb


def derivatives(s: ClassicalState, p: ModelParams):
    """``(d alpha/d tau, d beta/d tau)`` of the mean-field equations."""
    da, db = _rhs_pair(s.alpha, s.beta, p)
    return complex(da), complex(db)


def evolve(s0: ClassicalState, p: ModelParams, t_max: float, samples: int = 2001,
           rel_tol: float = 1e-12) -> Trajectory:
    """Integrate the mean-field equations over ``[0, t_max]``."""
    if not t_max > 0:
        raise ValueError("t_max must be positive")

    d, g, c = p.delta_bar, p.g_bar, p.chi

    def rhs(_t, y):
        # plain complex arithmetic: per-call numpy overhead dominates a 2-vector
        a, b = complex(y[0]), complex(y[1])
        na = a.real * a.real + a.imag * a.imag
        nb = b.real * b.real + b.imag * b.imag
        fa = d * a + g * b + 2 * c * (1 + nb) * a + c * (1 + na) * b + c * b.conjugate() * a * a
        fb = -d * b + g * a + 2 * c * (1 + na) * b + c * (1 + nb) * a + c * a.conjugate() * b * b
        return np.array([-1j * fa, -1j * fb])

    out = integrate_ode(rhs, s0.as_array(), (0.0, t_max), rel_tol=rel_tol, samples=samples)
    return Trajectory(out.t, out.y[:, 0].copy(), out.y[:, 1].copy())


def quadratures(traj: Trajectory):
    """``(x_A, p_A, x_B, p_B)`` with ``alpha = (x_A + i p_A)/sqrt 2``."""
    s2 = np.sqrt(2.0)
    return (s2 * traj.alpha.real, s2 * traj.alpha.imag,
            s2 * traj.beta.real, s2 * traj.beta.imag)


def quadrature_errors(traj: Trajectory):
    """Error quadratures ``x_- = (x_A - x_B)/sqrt 2`` and ``p_-`` per sample."""
    xa, pa, xb, pb = quadratures(traj)
    s2 = np.sqrt(2.0)
    return (xa - xb) / s2, (pa - pb) / s2


def imbalance_phase(traj: Trajectory, unwrap=False):
    """Intensity imbalance ``R_-``, relative phase ``phi_-`` and a validity mask.

    ``phi_-`` is wrapped to ``[0, 2 pi)`` unless ``unwrap`` is set, in which case
    it is continued to the nearest branch sample by sample.  ``valid`` is False
    where either amplitude is below 1e-12 and the phase is meaningless there.
    """
    R = np.abs(traj.alpha) ** 2 - np.abs(traj.beta) ** 2
    valid = (np.abs(traj.alpha) >= PHASE_FLOOR) & (np.abs(traj.beta) >= PHASE_FLOOR)
    phi = np.angle(traj.alpha) - np.angle(traj.beta)
    phi = np.unwrap(phi) if unwrap else np.mod(phi, 2 * np.pi)
    phi = np.where(valid, phi, np.nan)
    return R, phi, valid


def polar_state(s: ClassicalState) -> PolarState:
    if abs(s.beta) < PHASE_FLOOR or abs(s.alpha) < PHASE_FLOOR:
        raise ValueError("polar form needs both amplitudes nonzero")
    return PolarState(abs(s.alpha) / abs(s.beta), np.angle(s.alpha) - np.angle(s.beta))


def polar_flow(ps: PolarState, p: ModelParams):
    """``(dr/dtau, dphi_-/dtau)`` for the amplitude ratio and relative phase."""
    r, phi = ps.r, ps.phi_minus
    gc = p.g_bar + p.chi
    r_dot = -gc * (r * r + 1) * np.sin(phi)
    phi_dot = (-2 * p.delta_bar + 2 * p.chi * (r * r - 1) / (r * r + 1)
               + gc * (r - 1 / r) * np.cos(phi))
    return float(r_dot), float(phi_dot)


def phase_portrait(p: ModelParams, n_orbits=12, rng_seed=0, t_max=30.0, samples=1501,
                   separatrix=True):
    """Orbits in the ``(phi_-, R_-)`` plane from random initial conditions.

    Seeds draw ``R_-(0)`` uniformly in ``(-0.95, 0.95)`` and ``phi_-(0)`` uniformly
    in ``[0, 2 pi)`` from a PCG64 generator.  With ``separatrix`` set, orbits
    started on ``phi_- = pi/2`` and ``3 pi/2`` at ``R_- = 0`` are appended.

    Returns a list of dicts with keys ``seed`` (R0, phi0), ``phi`` (wrapped),
    ``phi_unwrapped``, ``R`` and ``times``.
    """
    if n_orbits < 1:
        raise ValueError("n_orbits must be at least 1")
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    seeds = [(float(rng.uniform(-0.95, 0.95)), float(rng.uniform(0.0, 2 * np.pi)))
             for _ in range(n_orbits)]
    if separatrix:
        seeds += [(0.0, 0.5 * np.pi), (0.0, 1.5 * np.pi)]
    orbits = []
    for R0, phi0 in seeds:
        traj = evolve(ClassicalState.from_imbalance(R0, phi0), p, t_max, samples, rel_tol=1e-10)
        R, phi_u, _ = imbalance_phase(traj, unwrap=True)
        orbits.append({"seed": (R0, phi0), "times": traj.times, "R": R,
                       "phi_unwrapped": phi_u, "phi": np.mod(phi_u, 2 * np.pi)})
    return orbits


def _refined_extremum(y, which):
    """Extreme value of a sampled series with parabolic refinement at interior peaks."""
    i = int(np.argmax(y) if which == "max" else np.argmin(y))
    if 0 < i < y.size - 1:
        y0, y1, y2 = y[i - 1], y[i], y[i + 1]
        den = y0 - 2 * y1 + y2
        if den != 0:
            return float(y1 - 0.125 * (y2 - y0) ** 2 / den)
    return float(y[i])


def _span(y):
    return _refined_extremum(y, "max") - _refined_extremum(y, "min")


def covering_areas(traj: Trajectory, window=None):
    """Areas ``pi (max r^2 - min r^2)`` swept by each mode over the trailing window."""
    w = traj if window is None else traj.window(window)
    return np.pi * _span(np.abs(w.alpha) ** 2), np.pi * _span(np.abs(w.beta) ** 2)


def trajectory_distance(traj: Trajectory, window=None):
    """``min r_A - max r_B`` over the window; negative means the annuli overlap."""
    w = traj if window is None else traj.window(window)
    return _refined_extremum(np.abs(w.alpha), "min") - _refined_extremum(np.abs(w.beta), "max")


def oscillation_amplitude(series, times=None, transient=None, window=None):
    """Half peak-to-peak of a series after discarding a leading transient.

    ``transient`` and ``window`` are in the units of ``times`` (sample indices
    when ``times`` is None).  The transient defaults to 20% of the run and the
    window to everything after it.
    """
    y = np.asarray(series, dtype=float)
    t = np.arange(y.size, dtype=float) if times is None else np.asarray(times, dtype=float)
    t0, t1 = t[0], t[-1]
    if transient is None:
        transient = 0.2 * (t1 - t0)
    start = t0 + transient
    stop = t1 if window is None else start + window
    if stop > t1 + 1e-12 or start > t1:
        raise ValueError("window after the transient lies outside the series")
    keep = (t >= start - 1e-12) & (t <= stop + 1e-12)
    seg = y[keep]
    return 0.5 * float(seg.max() - seg.min())


def energy(s: ClassicalState, p: ModelParams) -> float:
    """Conserved energy of the mean-field flow.

    ``E = delta_bar R + (g_bar + chi)(alpha* beta + alpha beta*) - chi R^2 / 2``
    with ``R = |alpha|^2 - |beta|^2``.  Its Wirtinger gradients reproduce the
    equations of motion up to a term along ``(alpha, beta)`` (a common phase
    rotation, invisible in ``R_-`` and ``phi_-``); at ``chi = 0`` they match
    exactly.
    """
    return float(_energy(s.alpha, s.beta, p))


def _energy(a, b, p):
    R = np.abs(a) ** 2 - np.abs(b) ** 2
    hop = 2.0 * np.real(np.conj(a) * b)
    return p.delta_bar * R + (p.g_bar + p.chi) * hop - 0.5 * p.chi * R * R


def trajectory_energy(traj: Trajectory, p: ModelParams):
    return _energy(traj.alpha, traj.beta, p)
