"""Quadrature grids shared by the deterministic and Monte Carlo modules."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

__all__ = [
    "QuadratureGrid",
    "QuadratureNonConvergence",
    "gauss_legendre",
    "composite_gauss_legendre",
    "graded_edges",
    "polar_disk_grid",
    "annulus_sector_grid",
    "tensor_grid",
]


class QuadratureNonConvergence(ArithmeticError):
    pass


@lru_cache(maxsize=64)
def _leggauss(order: int):
    x, w = leggauss(order)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


@dataclass(frozen=True)
class QuadratureGrid:
    """Nodes and weights of a (possibly multi-dimensional) rule.

    ``nodes`` has shape (m,) for 1-D rules and (m,) complex for planar ones.
    """

    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values) -> float:
        return np.sum(self.weights * values)

    def __len__(self) -> int:
        return len(self.weights)


def gauss_legendre(order: int, a: float, b: float) -> QuadratureGrid:
    x, w = _leggauss(order)
    half = 0.5 * (b - a)
    return QuadratureGrid(a + half * (x + 1.0), half * w)


def composite_gauss_legendre(edges, order: int = 10) -> QuadratureGrid:
    """Gauss-Legendre of ``order`` nodes on each panel between ``edges``."""
    edges = np.asarray(edges, dtype=float)
    x, w = _leggauss(order)
    a = edges[:-1, None]
    half = 0.5 * np.diff(edges)[:, None]
    nodes = (a + half * (x + 1.0)).ravel()
    weights = (half * w).ravel()
    return QuadratureGrid(nodes, weights)


def graded_edges(a: float, b: float, points, scale: float, ratio: float = 3.0, levels: int = 12):
    """Panel edges on [a, b] refined geometrically around ``points``.

    Around each point p the edges p +- scale * ratio**k (k < levels) are
    inserted, so panels shrink to ``scale`` next to p.
    """
    pts = np.asarray(points, dtype=float).ravel()
    offs = scale * ratio ** np.arange(levels)
    cand = [np.array([a, b])]
    if pts.size:
        cand.append(pts)
        cand.append((pts[:, None] + offs[None, :]).ravel())
        cand.append((pts[:, None] - offs[None, :]).ravel())
    e = np.unique(np.concatenate(cand))
    e = e[(e >= a) & (e <= b)]
    return e


def polar_disk_grid(n_radial: int = 64, n_angular: int = 64, radius: float = 1.0,
                    center: complex = 0.0) -> QuadratureGrid:
    """Gauss-Legendre in r times the periodic trapezoid rule in theta."""
    r, wr = _leggauss(n_radial)
    r = 0.5 * radius * (r + 1.0)
    wr = 0.5 * radius * wr * r
    th = 2.0 * np.pi * np.arange(n_angular) / n_angular
    nodes = (center + r[:, None] * np.exp(1j * th[None, :])).ravel()
    weights = (wr[:, None] * np.full(n_angular, 2.0 * np.pi / n_angular)[None, :]).ravel()
    return QuadratureGrid(nodes, weights)


def annulus_sector_grid(r_edges, theta_range, order_r: int = 8, n_theta: int = 64,
                        order_theta: int = 8) -> QuadratureGrid:
    """Composite Gauss-Legendre in r (panels ``r_edges``) times GL in theta.

    ``theta_range`` is (theta_min, theta_max); a full circle should use
    :func:`polar_disk_grid` instead.  The angular interval is split into
    ``n_theta // order_theta`` equal panels.
    """
    rg = composite_gauss_legendre(r_edges, order_r)
    t0, t1 = theta_range
    npan = max(1, n_theta // order_theta)
    tg = composite_gauss_legendre(np.linspace(t0, t1, npan + 1), order_theta)
    nodes = (rg.nodes[:, None] * np.exp(1j * tg.nodes[None, :])).ravel()
    weights = ((rg.weights * rg.nodes)[:, None] * tg.weights[None, :]).ravel()
    return QuadratureGrid(nodes, weights)


def tensor_grid(x_edges, y_edges, order: int = 8) -> QuadratureGrid:
    """Composite tensor Gauss-Legendre rule on a rectangle, nodes as complex."""
    gx = composite_gauss_legendre(x_edges, order)
    gy = composite_gauss_legendre(y_edges, order)
    nodes = (gx.nodes[:, None] + 1j * gy.nodes[None, :]).ravel()
    weights = (gx.weights[:, None] * gy.weights[None, :]).ravel()
    return QuadratureGrid(nodes, weights)
