"""Spatial convergence of the Crank-Nicolson / finite-element scheme.

Runs the refinement ladder N = 20, 40, 80, 160 against a 640-element
reference for Example 1 with linear elements, and (with ``--both``) for
Example 2 with quadratic elements, which takes about a minute.

    python3 demos/convergence_table.py [--both]
"""

import sys

from fowler.experiments import run_convergence_study, table1_config, table2_config


def show(title, report):
    print(title)
    print(f"  dt = {float(report.metadata['dt']):.4g}, {report.metadata['steps']} steps, "
          f"eps = {report.metadata['eps']}")
    print(f"  {'N':>5}  {'E_h':>11}  {'R_h':>11}  {'alpha_h':>8}")
    alpha = list(report.alpha) + [None]
    for n, e, r, a in zip(report.element_counts, report.E, report.R, alpha):
        rate = "" if a is None else f"{a:8.4f}"
        print(f"  {n:5d}  {e:11.4e}  {r:11.4e}  {rate}")
    print()


if __name__ == "__main__":
    show("Example 1, r = 2, T = 0.1", run_convergence_study(table1_config(), workers=4))
    if "--both" in sys.argv:
        show("Example 2, r = 3, T = 0.2", run_convergence_study(table2_config(), workers=4))
    else:
        print("(pass --both for the quadratic-element table as well)")
