"""The nonlocal term in Fourier space.

Each Fourier mode exp(i k x) is an eigenfunction of the truncated
operator J. Its growth rate ``-eps k^2 - i k s_J`` shows which
wavelengths the nonlocal term destabilises, and how much viscosity
is needed to tame them.
"""

import numpy as np

from fowler.fem_space import FemSpace, interpolate
from fowler.kernel import apply_J_pointwise, build_symbol_table, fourier_symbol, growth_constant_w0
from fowler.mesh import build_uniform_mesh

if __name__ == "__main__":
    table = build_symbol_table(1.0, 8, eps=0.1)
    print(" n   Re s_J     Im s_J     growth rate (eps = 0.1)")
    for n, s, g in zip(table.n, table.s_J, table.linear_rates().real):
        print(f"{n:2d} {s.real:9.4f}  {s.imag:9.4f}  {g:9.4f}")

    for eps in (0.02, 0.1, 0.5, 1.0, 1.5):
        w0, n_star = growth_constant_w0(1.0, 512, eps=eps)
        print(f"eps = {eps:<4}: largest growth rate {w0:8.4f} (mode {n_star})")

    # the finite-element evaluation converges to the symbol
    x = np.array([0.3])
    exact = (fourier_symbol(2, 1.0) * np.exp(2j * np.pi * x)).real[0]
    for N in (16, 64, 256):
        sp = FemSpace(build_uniform_mesh(1.0, N), 3)
        u = interpolate(sp, lambda y: np.cos(2 * np.pi * y))
        print(f"N = {N:3d}: |J[u_h](0.3) - symbol| = {abs(apply_J_pointwise(u, x)[0] - exact):.2e}")
