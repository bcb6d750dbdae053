"""Oscillation structure: modulation coefficients of a fine reference and the
alternating mode left in Boris runs by the raw starting values.

    python scripts/modulation.py
"""

import math

import numpy as np

from gyrostep import fields
from gyrostep.diagnostics import modulation_fit, split_smooth_oscillatory
from gyrostep.fields import catalog
from gyrostep.integrators import integrate
from gyrostep.reference import reference_trajectory


def main() -> None:
    for eps in (4e-3, 2e-3, 1e-3, 5e-4):
        m = catalog("cubic", eps)
        dt = eps / 10
        T = round(40 * 2 * math.pi * eps / dt) * dt
        ref = reference_trajectory(m, fields.CUBIC_X0, fields.CUBIC_V0, T, output_dt=dt)
        fit = modulation_fit(ref.times, ref.xs, m.eps_eff, K=2)
        print(f"eps={eps:.0e}  |z1|/eps={fit.amplitude(1) / eps:.3f}  "
              f"|z2|/eps^2={fit.amplitude(2) / eps ** 2:.3f}  residual {fit.residual:.1e}")
    h = 1e-2
    for eps in (1e-4, 1e-5, 1e-6):
        z = {}
        for policy in ("raw", "modified"):
            tr = integrate(catalog("cubic", eps), "boris", policy, fields.CUBIC_X0,
                           fields.CUBIC_V0, h, 400)
            z[policy] = float(np.abs(split_smooth_oscillatory(tr)[1]).max())
        print(f"eps={eps:.0e}  max|z| raw {z['raw']:.3e}  modified {z['modified']:.3e}  "
              f"(h^2/eps = {h * h / eps:.0f})")


if __name__ == "__main__":
    main()
