"""Map the time-step restriction on a grid of (dt, h) pairs.

Cells with ``C1 dt/h^2 + C2 dt/h^(4/3) <= 1`` are run normally; the rest
are run with the gate overridden so the map shows what happens beyond it.
For this problem the midpoint rule keeps the norm bounded far past the
gate, so the restriction is a sufficient condition and not a sharp one.
"""

from fowler.experiments import fit_growth_constant, stability_scan, table1_config

if __name__ == "__main__":
    cfg = table1_config()
    rows = stability_scan(cfg, (8, 12, 16, 24, 32, 48), [0.1 / 4 ** k for k in range(6)],
                          override=True, workers=4)
    print(f"{'h':>8} {'dt':>10} {'lhs':>10}  gate  max |U^n|/|U^0|")
    for r in rows:
        ratio = "-" if r.observed_max_norm_ratio is None else f"{r.observed_max_norm_ratio:.4f}"
        print(f"{r.h:8.4f} {r.dt:10.3e} {r.lhs:10.3g}  {'pass' if r.gate_pass else 'FAIL':4}  {ratio}")
    print(f"\nfitted growth constant C = {fit_growth_constant(rows, cfg.T):.4g}")
