"""Compare packet transmission from direct time integration with the Floquet
total transmittance at a few carrier energies.

    python scripts/packet_vs_spectrum.py --v0 2 --omega 1.5 --delta 0.6
"""

import argparse

from floquet_invisibility.model import LatticeModel, momentum_from_energy
from floquet_invisibility.single import solve_amplitudes
from floquet_invisibility.timedomain import packet_scattering

if __name__ == "__main__":
    p = argparse.ArgumentParser()
    p.add_argument("--v0", type=float, default=2.0)
    p.add_argument("--omega", type=float, default=1.5)
    p.add_argument("--delta", type=float, default=0.6)
    p.add_argument("--w", type=float, default=100)
    p.add_argument("energies", nargs="*", type=float, default=[-1.2, 0.3, 1.5])
    args = p.parse_args()
    m = LatticeModel.single(args.v0, args.omega, args.delta)
    print(f"{'E':>7} {'T (Floquet)':>12} {'P_right':>12} {'R (Floquet)':>12} {'P_left':>12}")
    for e in args.energies:
        q = momentum_from_energy(e)
        amp = solve_amplitudes(q, m)
        right, left = packet_scattering(m, q, w=args.w)
        print(f"{e:7.3f} {amp.T_total:12.6f} {right:12.6f} {amp.R_total:12.6f} {left:12.6f}")
