"""Partitions of the periodic interval [-L, L]."""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Mesh:
    """Periodic 1D mesh with nodes ``-L = x_0 < ... < x_N = L``.

    The last node is the periodic image of the first one, so the mesh has
    ``N = len(nodes) - 1`` elements.
    """

    L: float
    nodes: np.ndarray
    uniform: bool = False
    h: float = field(init=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 3:
            raise ValueError("a mesh needs at least two elements")
        if nodes[0] != -self.L or nodes[-1] != self.L:
            raise ValueError("mesh must start at -L and end at L")
        widths = np.diff(nodes)
        if np.any(widths <= 0):
            raise ValueError("mesh nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "h", float(widths.max()))

    @property
    def n_elements(self) -> int:
        return self.nodes.size - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def period(self) -> float:
        return 2.0 * self.L

    def wrap(self, x):
        """Map coordinates into the half-open period [-L, L)."""
        x = np.asarray(x, dtype=float)
        w = np.mod(x + self.L, self.period) - self.L
        # np.mod can round up to exactly L for tiny negative offsets
        w = np.where(w >= self.L, -self.L, w)
        # values already inside the period are kept bit-for-bit
        return np.where((x >= -self.L) & (x < self.L), x, w)


def build_uniform_mesh(L: float, N: int) -> Mesh:
    """Uniform mesh of ``N`` elements of width ``2L/N`` on [-L, L]."""
    if not L > 0:
        raise ValueError(f"half-period L must be positive, got {L}")
    if int(N) != N or N < 2:
        raise ValueError(f"element count must be an integer >= 2, got {N}")
    N = int(N)
    nodes = -L + (2.0 * L / N) * np.arange(N + 1)
    nodes[-1] = L
    return Mesh(L=float(L), nodes=nodes, uniform=True)


def element_containing(mesh: Mesh, x):
    """Index ``j`` of the element with ``x_j <= x < x_{j+1}`` after wrapping.

    Accepts scalars or arrays.
    """
    xw = mesh.wrap(x)
    j = np.searchsorted(mesh.nodes, xw, side="right") - 1
    j = np.clip(j, 0, mesh.n_elements - 1)
    if np.ndim(j) == 0:
        return int(j)
    return j
