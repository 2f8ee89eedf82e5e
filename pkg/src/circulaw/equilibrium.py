"""Limiting Stieltjes transform m_c(w, z) of (X - z)^*(X - z) and its density.

m_c is the root with positive imaginary part of

    w m^3 + 2 w m^2 + (w + 1 - |z|^2) m + 1 = 0,

which is the self-consistent equation 1/m = -w(1 + m) + |z|^2 / (1 + m) with
denominators cleared.  For small eta several roots can sit in the upper
half-plane, so the physical root is tracked by continuation in eta from a
height where it is the obvious one (closest to -1/w).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from .linalg import _complex_qr_eigvals
from .quadrature import QuadratureGrid, gauss_legendre

__all__ = [
    "EquilibriumError",
    "NoUpperHalfPlaneRoot",
    "AmbiguousRoot",
    "EdgeProximity",
    "SpectralPoint",
    "EquilibriumParams",
    "EquilibriumValue",
    "edge_parameters",
    "cubic_roots",
    "solve_mc",
    "solve_mc_many",
    "residual",
    "rho_c",
    "support",
    "kappa",
    "equilibrium_value",
    "density_grid",
    "log_mass",
    "log_mass_laplacian",
    "DEFAULT_ETA_LIMIT",
]

DEFAULT_ETA_LIMIT = 1e-9
_IM_TOL = 1e-14
_CLAMP_TOL = 1e-12


class EquilibriumError(ArithmeticError):
    pass


class NoUpperHalfPlaneRoot(EquilibriumError):
    pass


class AmbiguousRoot(EquilibriumError):
    pass


class EdgeProximity(ValueError):
    pass


@dataclass(frozen=True)
class SpectralPoint:
    E: float
    eta: float
    z: complex

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be >= 0")

    @property
    def w(self) -> complex:
        return complex(self.E, self.eta)


@dataclass(frozen=True)
class EquilibriumParams:
    alpha: float
    lambda_minus: float
    lambda_plus: float
    kappa: Optional[float] = None


@dataclass(frozen=True)
class EquilibriumValue:
    m_c: complex
    rho: float
    params: EquilibriumParams


def edge_parameters(z: complex) -> EquilibriumParams:
    """alpha = sqrt(1 + 8|z|^2) and the edges (alpha +- 3)^3 / (8 (alpha +- 1)).

    At z = 0 the lower edge formula has a vanishing denominator and -inf is
    returned.
    """
    a2 = abs(complex(z)) ** 2
    alpha = math.sqrt(1.0 + 8.0 * a2)
    lam_plus = (alpha + 3.0) ** 3 / (8.0 * (alpha + 1.0))
    if alpha == 1.0:
        lam_minus = -math.inf
    else:
        lam_minus = (alpha - 3.0) ** 3 / (8.0 * (alpha - 1.0))
    return EquilibriumParams(alpha, lam_minus, lam_plus)


def support(z: complex) -> tuple:
    p = edge_parameters(z)
    return max(0.0, p.lambda_minus), p.lambda_plus


def kappa(point: SpectralPoint) -> float:
    """Distance from E to the relevant spectral edges (only lambda_+ for |z| <= 1)."""
    p = edge_parameters(point.z)
    if abs(point.z) <= 1.0:
        return abs(point.E - p.lambda_plus)
    return min(abs(point.E - p.lambda_minus), abs(point.E - p.lambda_plus))


# ---------------------------------------------------------------------------
# cubic roots and continuation (compiled)
# ---------------------------------------------------------------------------


@numba.njit(cache=True)
def _poly(m, w, z2):
    return ((w * m + 2.0 * w) * m + (w + 1.0 - z2)) * m + 1.0


@numba.njit(cache=True)
def _dpoly(m, w, z2):
    return (3.0 * w * m + 4.0 * w) * m + (w + 1.0 - z2)


@numba.njit(cache=True)
def _spoly(u, s, w, z2):
    return ((u + 2.0 * s) * u + (w + 1.0 - z2)) * u + s


@numba.njit(cache=True)
def _dspoly(u, s, w, z2):
    return (3.0 * u + 4.0 * s) * u + (w + 1.0 - z2)


@numba.njit(cache=True)
def _roots(w, z2):
    """Roots of the cubic in m.

    For |w| < 1 the substitution m = u / sqrt(w) gives the well-scaled cubic
    u^3 + 2 s u^2 + (w + 1 - |z|^2) u + s = 0 with s = sqrt(w), whose roots
    stay O(1) as w -> 0 while m itself blows up.
    """
    scaled = abs(w) < 1.0
    s = np.sqrt(w)
    c = np.zeros((3, 3), dtype=np.complex128)
    if scaled:
        c[0, 0] = -2.0 * s
        c[0, 1] = -(w + 1.0 - z2)
        c[0, 2] = -s
    else:
        c[0, 0] = -2.0
        c[0, 1] = -(w + 1.0 - z2) / w
        c[0, 2] = -1.0 / w
    c[1, 0] = 1.0
    c[2, 1] = 1.0
    r, its, ok = _complex_qr_eigvals(c)
    for k in range(3):
        m = r[k]
        for _ in range(3):
            if scaled:
                d = _dspoly(m, s, w, z2)
                f = _spoly(m, s, w, z2)
            else:
                d = _dpoly(m, w, z2)
                f = _poly(m, w, z2)
            if d == 0:
                break
            m2 = m - f / d
            if not np.isfinite(m2.real) or not np.isfinite(m2.imag):
                break
            if scaled:
                f2 = _spoly(m2, s, w, z2)
            else:
                f2 = _poly(m2, w, z2)
            if abs(f2) > abs(f):
                break
            m = m2
        r[k] = m / s if scaled else m
    return r, ok


@numba.njit(cache=True)
def _nearest(r, target):
    best = 0
    d1 = np.inf
    d2 = np.inf
    for k in range(3):
        d = abs(r[k] - target)
        if d < d1:
            d2 = d1
            d1 = d
            best = k
        elif d < d2:
            d2 = d
    return best, d1, d2


@numba.njit(cache=True)
def _start(E, z2, eta_top):
    """Physical root at E + i eta_top, where it is the one nearest -1/w."""
    w = complex(E, eta_top)
    r, ok = _roots(w, z2)
    k, d1, d2 = _nearest(r, -1.0 / w)
    return r[k], d1 < 0.3 * d2


@numba.njit(cache=True)
def _follow(E, eta, z2, eta_top, cur):
    """Track the physical root ``cur`` at E + i eta_top down to E + i eta.

    Returns (root, status): 0 ok, 1 no upper half-plane root, 2 ambiguous.
    """
    lt = math.log(eta_top)
    lb = math.log(eta)
    step = 0.25 * math.log(10.0)
    while lt > lb + 1e-15:
        h = min(step, lt - lb)
        tries = 0
        while True:
            nl = lt - h
            w = complex(E, math.exp(nl))
            r, ok = _roots(w, z2)
            k, d1, d2 = _nearest(r, cur)
            if d1 < 0.3 * d2:
                cur = r[k]
                lt = nl
                break
            h *= 0.5
            tries += 1
            if tries > 40:
                return cur, 2
    if not (cur.imag > 0.0):
        return cur, 1
    return cur, 0


@numba.njit(cache=True)
def _solve_batch(Es, etas, z2, eta_tops, order):
    """Continue every root down from eta_top.

    ``order`` lists the points by E, then by decreasing eta; consecutive
    points with equal E share one continuation path.
    """
    n = Es.shape[0]
    out = np.empty(n, dtype=np.complex128)
    status = np.zeros(n, dtype=np.int64)
    prev = -1
    for idx in range(n):
        i = order[idx]
        if prev >= 0 and Es[i] == Es[prev] and status[prev] == 0 and etas[i] <= etas[prev]:
            out[i], status[i] = _follow(Es[i], etas[i], z2, etas[prev], out[prev])
        else:
            cur, ok = _start(Es[i], z2, eta_tops[i])
            if ok:
                out[i], status[i] = _follow(Es[i], etas[i], z2, eta_tops[i], cur)
            else:
                out[i], status[i] = cur, 2
        prev = i
    return out, status


@numba.njit(cache=True)
def _limit_batch(Es, ms, z2):
    """For each real E, the root of the eta = 0 cubic nearest to ms[i]."""
    n = Es.shape[0]
    out = np.empty(n, dtype=np.complex128)
    for i in range(n):
        w = complex(Es[i], 0.0)
        if Es[i] == 0.0:
            out[i] = ms[i]
            continue
        r, ok = _roots(w, z2)
        k, d1, d2 = _nearest(r, ms[i])
        out[i] = r[k]
    return out


def _eta_top(E: np.ndarray, z2: float) -> np.ndarray:
    lam_plus = edge_parameters(math.sqrt(z2)).lambda_plus
    return 10.0 * (np.abs(E) + lam_plus + 1.0)


def cubic_roots(w: complex, z: complex) -> np.ndarray:
    """All three roots of the cubic, Newton-polished."""
    r, ok = _roots(complex(w), float(abs(complex(z)) ** 2))
    return r


def residual(m, w, z) -> np.ndarray:
    """|1/m + w(1 + m) - |z|^2/(1 + m)|."""
    m = np.asarray(m, dtype=complex)
    z2 = abs(complex(z)) ** 2
    return np.abs(1.0 / m + w * (1.0 + m) - z2 / (1.0 + m))


def solve_mc_many(w, z) -> np.ndarray:
    """Vectorized :func:`solve_mc` over an array of w (same z)."""
    w = np.asarray(w, dtype=complex)
    shape = w.shape
    w = w.ravel()
    if np.any(~(w.imag > 0)):
        raise NoUpperHalfPlaneRoot("solve_mc requires Im w > 0")
    z2 = float(abs(complex(z)) ** 2)
    E = np.ascontiguousarray(w.real)
    eta = np.ascontiguousarray(w.imag)
    top = np.maximum(_eta_top(E, z2), eta)
    order = np.lexsort((-eta, E))
    out, status = _solve_batch(E, eta, z2, top, order)
    if np.any(status == 2):
        i = int(np.flatnonzero(status == 2)[0])
        raise AmbiguousRoot(f"cannot separate upper half-plane roots at w={w[i]}, |z|^2={z2}")
    if np.any(status == 1):
        i = int(np.flatnonzero(status == 1)[0])
        raise NoUpperHalfPlaneRoot(f"continued root left the upper half-plane at w={w[i]}")
    return out.reshape(shape)


def solve_mc(w: complex, z: complex) -> complex:
    """m_c(w, z) for Im w > 0.

    Raises
    ------
    NoUpperHalfPlaneRoot
        If Im w <= 0 or the tracked root does not end in the upper half-plane.
    AmbiguousRoot
        If continuation cannot separate two candidate roots.
    """
    w = complex(w)
    if not w.imag > 0:
        raise NoUpperHalfPlaneRoot("solve_mc requires Im w > 0")
    return complex(solve_mc_many(np.array([w]), z)[0])


def rho_c(x, z: complex, eta_limit: float = DEFAULT_ETA_LIMIT):
    """Limiting density of (X - z)^*(X - z) at real x (scalar or array).

    m_c is evaluated at x + i eta_limit; the boundary value is then the
    eta = 0 root of the cubic nearest to it, which removes the O(sqrt(eta))
    smoothing error next to the 1/sqrt(x) singularity at the origin.  Values
    outside [max(0, lambda_-), lambda_+] below the clamp tolerance are 0.
    At x = 0 the density is +inf for |z| <= 1 (an x^{-1/2} or x^{-1/3}
    singularity) and 0 for |z| > 1.
    """
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    z2 = float(abs(complex(z)) ** 2)
    dens = np.full(x.shape, np.inf if z2 <= 1.0 else 0.0)
    nz = x != 0.0
    if np.any(nz):
        xs = np.ascontiguousarray(x[nz])
        # continue far enough below |x| that the eta = 0 root is the nearest one
        eta = np.minimum(eta_limit, 1e-6 * np.abs(xs))
        m = solve_mc_many(xs + 1j * eta, z)
        m0 = _limit_batch(xs, m, z2)
        dens[nz] = np.maximum(m0.imag, 0.0) / np.pi
    lo, hi = support(z)
    outside = (x < lo) | (x > hi)
    dens = np.where(outside & (dens < _CLAMP_TOL), 0.0, dens)
    return float(dens[0]) if scalar else dens


def equilibrium_value(point: SpectralPoint) -> EquilibriumValue:
    p = edge_parameters(point.z)
    params = EquilibriumParams(p.alpha, p.lambda_minus, p.lambda_plus, kappa(point))
    if point.eta > 0:
        m = solve_mc(point.w, point.z)
        dens = m.imag / np.pi
    else:
        # boundary value: the eta = 0 root nearest the continued one, as in rho_c
        x = np.array([float(point.E)])
        eta = min(DEFAULT_ETA_LIMIT, max(1e-6 * abs(point.E), 1e-300))
        m_eta = solve_mc_many(x + 1j * eta, point.z)
        m = complex(_limit_batch(x, m_eta, float(abs(point.z) ** 2))[0])
        dens = rho_c(point.E, point.z)
    return EquilibriumValue(m, float(dens), params)


# ---------------------------------------------------------------------------
# integrals against rho_c
# ---------------------------------------------------------------------------


def _reference_rule(order: int) -> QuadratureGrid:
    return gauss_legendre(order, 0.0, 1.0)


def density_grid(z: complex, order: int = 200, power_left: int = 6,
                 power_right: int = 2) -> QuadratureGrid:
    """Rule on the support of rho_c(., z) adapted to its endpoint behavior.

    The support [s0, s1] is split at its midpoint; the left half is mapped
    by x = s0 + h t^power_left (absorbs x^{-1/2} / x^{-1/3} / sqrt edges) and
    the right half by x = s1 - h t^power_right (sqrt edge).
    """
    s0, s1 = support(z)
    h = 0.5 * (s1 - s0)
    ref = _reference_rule(order)
    t, wt = ref.nodes, ref.weights
    xl = s0 + h * t ** power_left
    wl = h * power_left * t ** (power_left - 1) * wt
    xr = s1 - h * t ** power_right
    wr = h * power_right * t ** (power_right - 1) * wt
    return QuadratureGrid(np.concatenate([xl, xr]), np.concatenate([wl, wr]))


def log_mass(z: complex, grid: Optional[QuadratureGrid] = None, order: int = 200,
             eta_limit: float = DEFAULT_ETA_LIMIT) -> float:
    """Integral of log(x) rho_c(x, z) dx over the support."""
    if grid is None:
        grid = density_grid(z, order)
    return float(np.sum(grid.weights * np.log(grid.nodes) * rho_c(grid.nodes, z, eta_limit)))


def log_mass_laplacian(z: complex, x_grid: Optional[QuadratureGrid] = None,
                       dz: float = 1e-3, order: int = 200) -> float:
    """Five-point central-difference Laplacian in z of :func:`log_mass`.

    ``x_grid`` is an optional reference rule on [0, 1] reused (mapped onto
    each support) for all five stencil points.

    Raises
    ------
    EdgeProximity
        If z is within 2 dz of the unit circle.
    """
    z = complex(z)
    if abs(abs(z) - 1.0) < 2.0 * dz:
        raise EdgeProximity(f"|z|={abs(z)} is within 2*dz of the unit circle")
    if x_grid is not None:
        order = len(x_grid)

    def L(zz):
        return log_mass(zz, density_grid(zz, order))

    vals = [L(z + dz), L(z - dz), L(z + 1j * dz), L(z - 1j * dz)]
    return (sum(vals) - 4.0 * L(z)) / dz ** 2
