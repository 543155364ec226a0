"""
Phase portraits in the (R_-, phi_-) plane
=========================================

Seed random orbits and classify them: at zero detuning every orbit librates
around a fixed point (tunnelling), at large negative detuning the orbits that
librate around phi = pi sit on the A side (self-trapping on mode A).
"""

import numpy as np

from becsync import meanfield as mf

for delta in (0.0, -1.0):
    orbits = mf.phase_portrait(mf.ModelParams(delta, 1.0, -0.01), n_orbits=12, rng_seed=0)
    print(f"delta_bar = {delta}")
    for o in orbits:
        librating = np.ptp(o["phi_unwrapped"]) < 2 * np.pi
        centre = np.angle(np.mean(np.exp(1j * o["phi"])))
        kind = f"librates about phi={centre:+.2f}" if librating else "runs in phase"
        print(f"  seed R={o['seed'][0]:+.2f} phi={o['seed'][1]:.2f}:  <R>={o['R'].mean():+.3f}  {kind}")
