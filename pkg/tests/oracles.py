"""Independent reference constructions used by the tests.

Everything here is built the slow, obvious way (dense operator matrices in a
product Fock space, closed-form solutions) and shares no code with the
library beyond the state containers.
"""

import numpy as np
from scipy.special import gammaln


def lowering(d):
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1)


def two_mode_ops(d):
    """``(a_A, a_B)`` on the product space of two ``d``-level modes, index ``k*d + l``."""
    a = lowering(d)
    eye = np.eye(d)
    return np.kron(a, eye), np.kron(eye, a)


def dense_hamiltonian(d, delta, g, chi):
    """Second-quantized two-mode Hamiltonian built from operator products."""
    aA, aB = two_mode_ops(d)
    cA, cB = aA.T, aB.T
    nA, nB = cA @ aA, cB @ aB
    N = nA + nB
    eye = np.eye(d * d)
    hop = cA @ aB + cB @ aA
    h = (delta * (nA - nB)
         + chi * (cA @ cA @ aA @ aA + cB @ cB @ aB @ aB)
         + g * hop + 0.5 * chi * ((N - eye) @ hop + hop @ (N - eye))
         + 4 * chi * nA @ nB)
    return h


def embed_matrix(m, d):
    """Coefficient array ``M[k, l]`` (any square size) placed in a ``d*d`` product vector."""
    out = np.zeros((d, d), dtype=complex)
    n = m.shape[0]
    out[:n, :n] = m
    return out.ravel()


def sector_matrix(c):
    N = len(c) - 1
    m = np.zeros((N + 1, N + 1), dtype=complex)
    for j in range(N + 1):
        m[j, N - j] = c[j]
    return m


def rabi_two_level(delta, g, t):
    """``(C_0, C_1)`` for N = 1 from ``|1,0>``; ``H = [[-delta, g], [g, delta]]``."""
    om = np.hypot(delta, g)
    t = np.asarray(t, dtype=float)
    c1 = np.cos(om * t) - 1j * (delta / om) * np.sin(om * t)
    c0 = -1j * (g / om) * np.sin(om * t)
    return c0, c1


def coherent_coeffs(alpha, n):
    k = np.arange(n + 1)
    mag = np.exp(-0.5 * abs(alpha) ** 2 + k * np.log(abs(alpha)) - 0.5 * gammaln(k + 1))
    return mag * np.exp(1j * np.angle(alpha) * k)


def partial_trace_B(psi, d):
    m = psi.reshape(d, d)
    return np.einsum("kl,jl->kj", m, m.conj())


def q_point_bruteforce(m, aA, aB):
    """Joint Q by explicit double sum with plain factorials (small sizes only)."""
    from math import factorial
    n = m.shape[0]
    s = 0j
    for k in range(n):
        for l in range(n):
            if m[k, l] != 0:
                s += m[k, l] * np.conj(aA) ** k * np.conj(aB) ** l / np.sqrt(factorial(k) * factorial(l))
    return abs(s) ** 2 * np.exp(-abs(aA) ** 2 - abs(aB) ** 2)


def random_sector(rng, N):
    c = rng.normal(size=N + 1) + 1j * rng.normal(size=N + 1)
    return c / np.linalg.norm(c)
