"""Watch a dune travel downstream and erode.

The Burgers flux pushes the profile to the right while the viscous term
flattens it. Both examples are run on 160 elements of [-1, 1] and written
as SVG charts (initial datum solid, final state dotted) to ``demos/out``.
"""

from pathlib import Path

import numpy as np

from fowler.experiments import choose_dt, initial_datum, simulate, table1_config, table2_config
from fowler.output import profile_svg

OUT = Path(__file__).parent / "out"


def describe(name, cfg):
    cfg = cfg(element_counts=(160,), reference_count=640)
    traj = simulate(cfg, 160, choose_dt(cfg))
    x = np.linspace(-1.0, 1.0, 2001)
    u0 = initial_datum(cfg.example_id)(x)
    uT = traj.final(x)
    centre0 = np.sum(x * u0) / np.sum(u0)
    centreT = np.sum(x * uT) / np.sum(uT)
    print(f"{name}: peak {u0.max():.3f} -> {uT.max():.3f}, "
          f"centre of mass {centre0:+.4f} -> {centreT:+.4f} at T = {cfg.T}")
    OUT.mkdir(exist_ok=True)
    path = OUT / f"{name.replace(' ', '_').lower()}.svg"
    path.write_text(profile_svg(x, u0, x, uT, title=f"{name}, T = {cfg.T}"))
    print(f"  chart written to {path}")


if __name__ == "__main__":
    describe("Example 1", table1_config)
    describe("Example 2", table2_config)
