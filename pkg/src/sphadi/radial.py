"""Composite Gauss-Legendre radial grids."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss


@lru_cache(maxsize=None)
def _gl(order: int):
    x, w = leggauss(order)
    return x, w


@lru_cache(maxsize=None)
def _bary_weights(order: int) -> np.ndarray:
    x, _ = _gl(order)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / np.prod(diff, axis=1)


def lagrange_matrix(order: int, targets: np.ndarray) -> np.ndarray:
    """Interpolation matrix from the ``order`` GL nodes on [-1, 1] to ``targets``."""
    x, _ = _gl(order)
    bw = _bary_weights(order)
    diff = targets[:, None] - x[None, :]
    exact = diff == 0.0
    diff[exact] = 1.0
    tmp = bw[None, :] / diff
    mat = tmp / tmp.sum(axis=1, keepdims=True)
    rows = np.any(exact, axis=1)
    if np.any(rows):
        mat[rows] = exact[rows].astype(float)
    return mat


@lru_cache(maxsize=None)
def _diff_matrix(order: int) -> np.ndarray:
    # derivative of the Lagrange interpolant, on [-1, 1]
    x, _ = _gl(order)
    bw = _bary_weights(order)
    D = np.zeros((order, order))
    for i in range(order):
        for j in range(order):
            if i != j:
                D[i, j] = bw[j] / bw[i] / (x[i] - x[j])
        D[i, i] = -np.sum(D[i])
    return D


@lru_cache(maxsize=64)
def _split_matrix(order: int, pieces: int, sub_order: int):
    """Reference nodes, weights and interpolation matrix for a panel split
    into ``pieces`` equal sub-panels carrying ``sub_order`` GL nodes each."""
    xs, ws = _gl(sub_order)
    edges = np.linspace(-1.0, 1.0, pieces + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * xs[None, :]).ravel()
    weights = (half[:, None] * ws[None, :]).ravel()
    return nodes, weights, lagrange_matrix(order, nodes)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Panels ``breaks[i]..breaks[i+1]`` with ``order`` Gauss-Legendre nodes each.

    ``weights`` include the radial Jacobian r^{d-1}; ``dr`` are the plain
    quadrature weights.
    """

    breaks: np.ndarray
    order: int
    d: int
    nodes: np.ndarray = field(init=False)
    dr: np.ndarray = field(init=False)
    weights: np.ndarray = field(init=False)

    def __post_init__(self):
        b = np.asarray(self.breaks, dtype=float)
        if b.ndim != 1 or b.size < 2 or np.any(np.diff(b) <= 0) or b[0] < 0:
            raise ValueError("breaks must be a strictly increasing array starting at >= 0")
        object.__setattr__(self, "breaks", b)
        x, w = _gl(self.order)
        half = 0.5 * np.diff(b)
        mid = 0.5 * (b[1:] + b[:-1])
        nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        dr = (half[:, None] * w[None, :]).ravel()
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "dr", dr)
        object.__setattr__(self, "weights", dr * nodes ** (self.d - 1))

    @property
    def R_max(self) -> float:
        return float(self.breaks[-1])

    @property
    def n_panels(self) -> int:
        return self.breaks.size - 1

    @property
    def size(self) -> int:
        return self.nodes.size

    @classmethod
    def graded(
        cls,
        R_max: float,
        d: int,
        panel: float = 0.5,
        order: int = 16,
        grading: float = 0.2,
        levels: int = 12,
    ) -> "RadialGrid":
        """Uniform panels of width ``panel`` on [panel, R_max] plus geometric
        refinement towards the origin (ratio ``grading``, ``levels`` panels)."""
        panel = min(panel, R_max)
        n = max(1, int(np.ceil(R_max / panel - 1e-12)))
        uniform = np.linspace(0.0, R_max, n + 1)[1:]
        first = uniform[0]
        inner = first * grading ** np.arange(levels, 0, -1)
        breaks = np.concatenate([[0.0], inner, uniform])
        return cls(breaks, order, d)

    @classmethod
    def geometric(
        cls, r_min: float, R_max: float, d: int, ratio: float = 1.5, order: int = 16
    ) -> "RadialGrid":
        n = max(1, int(np.ceil(np.log(R_max / r_min) / np.log(ratio))))
        return cls(np.geomspace(r_min, R_max, n + 1), order, d)

    def integrate(self, values, power: float | None = None):
        """int values(r) r^{d-1} dr, or int values(r) r^power dr if given."""
        if power is None:
            return np.sum(self.weights * values, axis=-1)
        return np.sum(self.dr * self.nodes**power * values, axis=-1)

    def panel_values(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values).reshape(values.shape[:-1] + (self.n_panels, self.order))

    def derivative(self, values: np.ndarray) -> np.ndarray:
        """Panel-wise spectral derivative (exact for polynomials of degree < order)."""
        D = _diff_matrix(self.order)
        pv = self.panel_values(np.asarray(values))
        scale = 2.0 / np.diff(self.breaks)
        out = np.einsum("ij,...pj->...pi", D, pv) * scale[:, None]
        return out.reshape(values.shape)

    def refined(self, pieces: np.ndarray, sub_order: int):
        """Nodes, plain weights and a panel-wise interpolation operator for a
        refinement that splits panel p into ``pieces[p]`` sub-panels.

        Returns ``(nodes, dr, apply)`` where ``apply(values)`` maps values on
        this grid (last axis) to the refined nodes.
        """
        pieces = np.asarray(pieces, dtype=int)
        nodes, drs, mats = [], [], []
        for p in range(self.n_panels):
            a, b = self.breaks[p], self.breaks[p + 1]
            x, w, mat = _split_matrix(self.order, int(pieces[p]), sub_order)
            nodes.append(0.5 * (a + b) + 0.5 * (b - a) * x)
            drs.append(0.5 * (b - a) * w)
            mats.append(mat)
        order = self.order

        def apply(values: np.ndarray) -> np.ndarray:
            v = np.asarray(values)
            pv = v.reshape(v.shape[:-1] + (-1, order))
            parts = [pv[..., p, :] @ mats[p].T for p in range(len(mats))]
            return np.concatenate(parts, axis=-1)

        return np.concatenate(nodes), np.concatenate(drs), apply

    def truncated(self, n_panels: int) -> "RadialGrid":
        return RadialGrid(self.breaks[: n_panels + 1], self.order, self.d)

    def to_dict(self) -> dict:
        return {"breaks": self.breaks.tolist(), "order": self.order, "d": self.d}

    @classmethod
    def from_dict(cls, doc: dict) -> "RadialGrid":
        return cls(np.asarray(doc["breaks"], dtype=float), int(doc["order"]), int(doc["d"]))
