"""Uniform 1D partitions and 2D tensor-product grids.

Cells and interfaces are 0-based here.  Cell ``j`` is ``I_{j+1}`` in
1-based notation, and interface ``j`` sits at ``x_{j+1/2}`` in 1-based notation,
i.e. between cells ``j - 1`` and ``j``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

Topology = Literal["periodic", "bounded"]
_TOPOLOGIES = ("periodic", "bounded")


@dataclass(frozen=True)
class Face:
    """A point where two cell traces meet.

    ``left``/``right`` are the cells on either side; a physical boundary
    face has one of them set to ``None``.  ``normal`` is the outward normal
    of the domain for boundary faces and 0 for interior ones.
    """

    x: float
    left: int | None
    right: int | None

    @property
    def is_boundary(self) -> bool:
        return self.left is None or self.right is None

    @property
    def normal(self) -> int:
        if self.right is None:
            return 1
        if self.left is None:
            return -1
        return 0


@dataclass(frozen=True)
class Mesh1D:
    a: float
    b: float
    n: int
    topology: Topology = "periodic"

    def __post_init__(self):
        if self.topology not in _TOPOLOGIES:
            raise ValueError(f"unknown topology {self.topology!r}")
        if not self.a < self.b:
            raise ValueError(f"need a < b, got a={self.a}, b={self.b}")
        if self.n < 2:
            raise ValueError(f"need at least 2 cells, got {self.n}")

    @property
    def periodic(self) -> bool:
        return self.topology == "periodic"

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.n

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def edges(self) -> np.ndarray:
        return self.a + self.h * np.arange(self.n + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.a + self.h * (np.arange(self.n) + 0.5)

    def to_physical(self, cell, xi):
        return self.a + self.h * (np.asarray(cell) + 0.5) + 0.5 * self.h * np.asarray(xi)

    def interior_faces(self) -> list[Face]:
        """Faces shared by two cells, the periodic wrap (at ``a``) included once."""
        faces = [Face(self.a + self.h * j, j - 1, j) for j in range(1, self.n)]
        if self.periodic:
            faces.append(Face(self.a, self.n - 1, 0))
        return faces

    def boundary_faces(self) -> list[Face]:
        if self.periodic:
            return []
        return [Face(self.a, None, 0), Face(self.b, self.n - 1, None)]

    def faces(self) -> list[Face]:
        return self.interior_faces() + self.boundary_faces()

    def locate(self, x, side: Literal["left", "right"] | None = None):
        """Return ``(cell, xi)`` for physical points ``x``.

        At a cell edge ``side="left"`` picks the cell on the left (trace
        ``v^-``) and ``side="right"`` the one on the right (``v^+``).
        With ``side=None`` an edge point goes to the right-hand cell, except
        at ``b``.
        """
        x = np.asarray(x, dtype=float)
        tol = 1e-12 * max(1.0, abs(self.a), abs(self.b))
        if np.any(x < self.a - tol) or np.any(x > self.b + tol):
            raise ValueError("point outside the mesh domain")
        s = (x - self.a) / self.h
        if side == "left":
            cell = np.ceil(s - 1e-10).astype(int) - 1
        else:
            cell = np.floor(s + 1e-10).astype(int)
        if self.periodic and side is not None:
            cell = np.mod(cell, self.n)
        cell = np.clip(cell, 0, self.n - 1)
        xi = 2.0 * (s - cell) - 1.0
        if self.periodic:
            # wrap traces: x = a seen from the left is cell n-1 at xi = 1
            xi = np.where(xi < -1.5, xi + 2.0 * self.n, xi)
            xi = np.where(xi > 1.5, xi - 2.0 * self.n, xi)
        return cell, np.clip(xi, -1.0, 1.0)


@dataclass(frozen=True)
class Mesh2D:
    x: Mesh1D
    y: Mesh1D

    @property
    def n(self) -> int:
        return self.x.n

    @property
    def m(self) -> int:
        return self.y.n

    @property
    def ncells(self) -> int:
        return self.x.n * self.y.n

    @property
    def dx(self) -> float:
        return self.x.h

    @property
    def dy(self) -> float:
        return self.y.h

    @property
    def diameter(self) -> float:
        return float(np.hypot(self.dx, self.dy))

    @property
    def periodic(self) -> bool:
        return self.x.periodic and self.y.periodic

    def cell_index(self, i, j):
        """Flat index of cell ``(i, j)``; x-cells vary slowest."""
        return np.asarray(i) * self.m + np.asarray(j)


def build_mesh_1d(a: float, b: float, n: int, topology: Topology = "periodic") -> Mesh1D:
    return Mesh1D(float(a), float(b), int(n), topology)


def build_mesh_2d(
    domain: tuple[tuple[float, float], tuple[float, float]],
    n: int,
    m: int,
    topology: Topology | tuple[Topology, Topology] = "periodic",
) -> Mesh2D:
    """Tensor grid over ``domain = ((ax, bx), (ay, by))`` with ``n x m`` cells.

    ``topology`` is either one value for both axes or a per-axis pair.
    """
    if isinstance(topology, str):
        topology = (topology, topology)
    (ax, bx), (ay, by) = domain
    return Mesh2D(build_mesh_1d(ax, bx, n, topology[0]), build_mesh_1d(ay, by, m, topology[1]))
