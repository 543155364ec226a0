"""
Exact dynamics with a fixed number of atoms
===========================================

In the N-atom sector the Hamiltonian is tridiagonal.  We check the single-atom
Rabi solution, the trapping point g + (N-1) chi = 0 where every occupation is
frozen, and the level structure of three atoms.
"""

import numpy as np

from becsync import focksector as fs
from becsync.focksector import FockStateN, QuantumParams

# one atom, linear coupling: |C_1|^2 = cos^2(Omega t) with Omega = sqrt(delta^2 + g^2)
p = QuantumParams(delta=0.4, g=1.0, chi=0.0, N=1)
t = np.linspace(0, 10, 6)
out = fs.evolve_fock(FockStateN.number_state(1), p, t)
omega = np.hypot(p.delta, p.g)
pop = [abs(s.c[1]) ** 2 for s in out]
print("Rabi |C_1|^2:", np.round(pop, 6))
print("closed form:  ", np.round(np.cos(omega * t) ** 2 + (p.delta / omega * np.sin(omega * t)) ** 2, 6))

# trapping: hopping vanishes, the populations never move
N = 10
p = QuantumParams(0.0, 1.0, -1.0 / (N - 1), N)
c0 = FockStateN.from_unnormalized(np.arange(1, N + 2))
late = fs.evolve_fock(c0, p, [1000.0])[0]
print("trapped population change after t = 1000:", np.abs(late.populations - c0.populations).max())

# three atoms: levels against chi, pairwise degenerate at chi = -1/2
chi, levels = fs.spectrum_vs_chi(3, 0.0, 1.0, np.linspace(-1, 0, 5))
for c, lv in zip(chi, levels):
    print(f"chi={c:+.2f}  levels {np.round(lv, 4)}")

# the time unit used for the long runs
print("time unit at N=15, chi=-0.01:", fs.time_unit(QuantumParams(0.0, 1.0, -0.01, 15)))
