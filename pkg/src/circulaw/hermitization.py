"""Hermitization of X: spectra of (X - z)^*(X - z) and the identities built on them.

The Girko identity turns a linear statistic of the eigenvalues of X into a
Laplacian-weighted integral of log |det(X - z)|^2, and the Helffer-Sjostrand
formula writes tr phi(Y^*Y) as a plane integral of the Stieltjes transform.
Both sides of each identity are computed here so they can be compared.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import equilibrium
from .linalg import LinalgError, gram_eigenvalues_batch, hermitian_eigenvalues
from .quadrature import (
    QuadratureGrid,
    QuadratureNonConvergence,
    composite_gauss_legendre,
    polar_disk_grid,
)

__all__ = [
    "SpectrumFailure",
    "TestFunction",
    "CutoffLog",
    "smoothstep",
    "smoothstep_prime",
    "smoothstep_second",
    "chi",
    "chi_prime",
    "phi_eps",
    "phi_eps_prime",
    "singular_spectrum",
    "girko_lhs",
    "girko_rhs",
    "stieltjes_from_eigenvalues",
    "hs_trace",
    "z_statistic",
    "ExtremeDiagnostics",
    "extreme_eigen_diagnostics",
]


class SpectrumFailure(LinalgError):
    pass


# ---------------------------------------------------------------------------
# smooth primitives
# ---------------------------------------------------------------------------


def smoothstep(x):
    """Quintic smoothstep: 0 for x <= 1, 1 for x >= 2, 6t^5 - 15t^4 + 10t^3 at x = 1 + t."""
    t = np.clip(np.asarray(x, dtype=float) - 1.0, 0.0, 1.0)
    return t ** 3 * (t * (6.0 * t - 15.0) + 10.0)


def smoothstep_prime(x):
    t = np.clip(np.asarray(x, dtype=float) - 1.0, 0.0, 1.0)
    return 30.0 * t ** 2 * (1.0 - t) ** 2


def smoothstep_second(x):
    t = np.clip(np.asarray(x, dtype=float) - 1.0, 0.0, 1.0)
    return 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t)


def chi(y, halfwidth: float = 1.0):
    """Even cutoff equal to 1 on |y| <= halfwidth/2 and 0 for |y| >= halfwidth."""
    return 1.0 - smoothstep(2.0 * np.abs(np.asarray(y, dtype=float)) / halfwidth)


def chi_prime(y, halfwidth: float = 1.0):
    y = np.asarray(y, dtype=float)
    return -np.sign(y) * (2.0 / halfwidth) * smoothstep_prime(2.0 * np.abs(y) / halfwidth)


# ---------------------------------------------------------------------------
# test functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TestFunction:
    """Radial bump f(u) = (1 - |u|^2)^4 on the unit disk, centred at z0, zoomed by n^a.

    The zoomed function is f_{z0}(mu) = n^{2a} f(n^a (mu - z0)).
    """

    z0: complex = 0.0
    a: float = 0.0
    profile: str = "RadialBump4"

    __test__ = False  # keep pytest from collecting the class

    def __post_init__(self):
        if self.profile != "RadialBump4":
            raise ValueError(f"unknown profile {self.profile!r}")
        if not 0.0 <= self.a <= 0.5:
            raise ValueError("zoom exponent a must lie in [0, 1/2]")
        object.__setattr__(self, "z0", complex(self.z0))

    # unzoomed profile --------------------------------------------------
    @staticmethod
    def f(u):
        s = np.abs(np.asarray(u)) ** 2
        return np.where(s < 1.0, (1.0 - np.minimum(s, 1.0)) ** 4, 0.0)

    @staticmethod
    def grad(u):
        """Gradient as the complex number f_x + i f_y."""
        u = np.asarray(u, dtype=complex)
        s = np.abs(u) ** 2
        c = np.where(s < 1.0, -8.0 * (1.0 - np.minimum(s, 1.0)) ** 3, 0.0)
        return c * u

    @staticmethod
    def laplacian(u):
        s = np.abs(np.asarray(u)) ** 2
        q = 1.0 - np.minimum(s, 1.0)
        return np.where(s < 1.0, 48.0 * s * q ** 2 - 16.0 * q ** 3, 0.0)

    # zoomed versions ---------------------------------------------------
    def scale(self, n: int) -> float:
        return float(n) ** self.a

    def zoomed(self, mu, n: int):
        s = self.scale(n)
        return s ** 2 * self.f(s * (np.asarray(mu) - self.z0))

    def zoomed_grad(self, mu, n: int):
        s = self.scale(n)
        return s ** 3 * self.grad(s * (np.asarray(mu) - self.z0))

    def zoomed_laplacian(self, mu, n: int):
        s = self.scale(n)
        return s ** 4 * self.laplacian(s * (np.asarray(mu) - self.z0))

    def to_dict(self) -> dict:
        return {"profile": self.profile, "z0": [self.z0.real, self.z0.imag], "a": self.a}


# squared L2 norm of the gradient of the unzoomed bump: 2 pi int 64 r^3 (1-r^2)^6 dr
GRAD_NORM_SQ = 8.0 * math.pi / 7.0


# ---------------------------------------------------------------------------
# cutoff logarithm
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CutoffLog:
    """phi(x) = h(n^{2-2eps} x) log(x) (1 - h(x / (2 lambda_+)))."""

    epsilon: float
    n: int
    lambda_plus: float

    def __post_init__(self):
        if not 0.0 < self.epsilon < 0.1:
            raise ValueError("epsilon must lie in (0, 0.1)")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.lambda_plus > 0:
            raise ValueError("lambda_plus must be positive")

    @classmethod
    def for_z(cls, z: complex, n: int, epsilon: float = 0.05) -> "CutoffLog":
        return cls(epsilon, n, equilibrium.edge_parameters(z).lambda_plus)

    @property
    def A(self) -> float:
        return float(self.n) ** (2.0 - 2.0 * self.epsilon)

    @property
    def B(self) -> float:
        return 2.0 * self.lambda_plus

    @property
    def lower(self) -> float:
        """phi vanishes on [0, lower]."""
        return 1.0 / self.A

    @property
    def upper(self) -> float:
        """phi vanishes on [upper, inf)."""
        return 2.0 * self.B

    def breakpoints(self) -> np.ndarray:
        return np.array([self.lower, 2.0 * self.lower, self.B, 2.0 * self.B])

    def _parts(self, x):
        x = np.asarray(x, dtype=float)
        safe = np.where(x > 0, x, 1.0)
        A, B = self.A, self.B
        u = smoothstep(A * safe)
        v = np.log(safe)
        w = 1.0 - smoothstep(safe / B)
        return x, safe, A, B, u, v, w

    def phi(self, x):
        x, safe, A, B, u, v, w = self._parts(x)
        return np.where(x > 0, u * v * w, 0.0)

    def prime(self, x):
        x, safe, A, B, u, v, w = self._parts(x)
        du = A * smoothstep_prime(A * safe)
        dv = 1.0 / safe
        dw = -smoothstep_prime(safe / B) / B
        return np.where(x > 0, du * v * w + u * dv * w + u * v * dw, 0.0)

    def second(self, x):
        x, safe, A, B, u, v, w = self._parts(x)
        du = A * smoothstep_prime(A * safe)
        dv = 1.0 / safe
        dw = -smoothstep_prime(safe / B) / B
        ddu = A * A * smoothstep_second(A * safe)
        ddv = -1.0 / safe ** 2
        ddw = -smoothstep_second(safe / B) / B ** 2
        val = (ddu * v * w + u * ddv * w + u * v * ddw
               + 2.0 * (du * dv * w + du * v * dw + u * dv * dw))
        return np.where(x > 0, val, 0.0)


def phi_eps(x, cutoff: CutoffLog):
    return cutoff.phi(x)


def phi_eps_prime(x, cutoff: CutoffLog):
    return cutoff.prime(x)


# ---------------------------------------------------------------------------
# spectra and the Girko identity
# ---------------------------------------------------------------------------


def singular_spectrum(X, z: complex) -> np.ndarray:
    """Ascending eigenvalues of (X - z)^*(X - z); tiny negatives are clamped to 0.

    Small eigenvalues carry absolute error ~ ulp * ||X - z||^2 since the Gram
    matrix squares the condition number.
    """
    lam = gram_eigenvalues_batch(X, np.array([z]))[0]
    if lam[0] < -1e-12 * max(1.0, lam[-1]):
        raise SpectrumFailure(f"Gram matrix has eigenvalue {lam[0]} < 0 at z={z}")
    return np.maximum(lam, 0.0)


def girko_lhs(f: TestFunction, mu, n: int) -> float:
    """n^{-1} sum_j f_{z0}(mu_j)."""
    mu = np.asarray(mu)
    return float(np.sum(f.zoomed(mu, n))) / n


def default_xi_grid(n_radial: int = 48, n_angular: int = 96) -> QuadratureGrid:
    return polar_disk_grid(n_radial, n_angular)


def _log_det_sums(X, zs, chunk: int = 256) -> np.ndarray:
    out = np.empty(len(zs))
    for s in range(0, len(zs), chunk):
        block = zs[s:s + chunk]
        try:
            lam = gram_eigenvalues_batch(X, block)
        except LinalgError as exc:
            raise SpectrumFailure(f"eigensolve failed in node block starting at {s}: {exc}") from exc
        if np.any(lam[:, 0] <= 0):
            k = int(np.flatnonzero(lam[:, 0] <= 0)[0])
            raise SpectrumFailure(f"singular Y at quadrature node z={block[k]}")
        out[s:s + chunk] = np.log(lam).sum(axis=1)
    return out


def girko_rhs(f: TestFunction, X, xi_grid: Optional[QuadratureGrid] = None) -> float:
    """(1/4pi) n^{-1+2a} int Delta f(xi) sum_j log lambda_j(z0 + n^{-a} xi) dA(xi).

    The default xi-grid is the 48 x 96 polar rule (Gauss-Legendre in r,
    trapezoid in theta) on the unit disk, where Delta f is supported.  The
    integrand has log singularities at the eigenvalues, so neither rule is
    spectrally accurate; this split of ~4600 nodes beats a square 64 x 64.
    """
    X = np.asarray(X)
    n = X.shape[0]
    if xi_grid is None:
        xi_grid = default_xi_grid()
    zs = f.z0 + xi_grid.nodes / f.scale(n)
    logs = _log_det_sums(X, zs.astype(complex))
    lap = f.laplacian(xi_grid.nodes)
    return float(np.sum(xi_grid.weights * lap * logs)) * n ** (2.0 * f.a - 1.0) / (4.0 * np.pi)


# ---------------------------------------------------------------------------
# Helffer-Sjostrand trace
# ---------------------------------------------------------------------------


def stieltjes_from_eigenvalues(eigenvalues, chunk: int = 4096) -> Callable:
    """Vectorized w -> (1/N) sum_j 1/(lambda_j - w)."""
    lam = np.asarray(eigenvalues, dtype=float)

    def m(w):
        w = np.asarray(w, dtype=complex)
        flat = w.ravel()
        out = np.empty(flat.shape, dtype=complex)
        for s in range(0, flat.size, chunk):
            blk = flat[s:s + chunk]
            out[s:s + chunk] = np.mean(1.0 / (lam[None, :] - blk[:, None]), axis=1)
        return out.reshape(w.shape)

    m.eigenvalues = lam
    return m


def _energy_edges(cutoff: CutoffLog, poles, eta: float, per_decade: int = 4) -> np.ndarray:
    lo, hi = cutoff.lower, cutoff.upper
    w1, w2 = 2.0 * lo, cutoff.B
    edges = [np.linspace(lo, w1, 9), np.linspace(w2, hi, 9)]
    if w2 > w1:
        k = max(2, int(math.ceil(per_decade * math.log10(w2 / w1))))
        edges.append(np.geomspace(w1, w2, k + 1))
    if poles is not None and len(poles):
        p = np.asarray(poles, dtype=float)
        p = p[(p > lo - 50 * eta) & (p < hi + 50 * eta)]
        if p.size:
            levels = max(1, int(math.ceil(math.log(max(hi, 1.0) / eta) / math.log(3.0))))
            offs = eta * 3.0 ** np.arange(levels)
            edges.append(p)
            edges.append((p[:, None] + offs[None, :]).ravel())
            edges.append((p[:, None] - offs[None, :]).ravel())
    e = np.unique(np.concatenate(edges))
    return e[(e >= lo) & (e <= hi)]


def _eta_rule(eta_min: float, eta_max: float, per_decade: int, order: int) -> QuadratureGrid:
    """Gauss-Legendre in log(eta) on [eta_min, eta_max]."""
    k = max(1, int(math.ceil(per_decade * math.log10(eta_max / eta_min))))
    g = composite_gauss_legendre(np.linspace(math.log(eta_min), math.log(eta_max), k + 1), order)
    eta = np.exp(g.nodes)
    return QuadratureGrid(eta, g.weights * eta)


def _hs_once(cutoff, m, halfwidth, poles, eta_min, order, per_decade):
    total = 0.0
    # region where chi = 1 and chi' = 0: only the phi'' term
    eta_flat = 0.5 * halfwidth
    g_eta = _eta_rule(eta_min, eta_flat, per_decade, order)
    first_inner = None
    for eta, weta in zip(g_eta.nodes, g_eta.weights):
        ge = composite_gauss_legendre(_energy_edges(cutoff, poles, eta), order)
        val = m(ge.nodes + 1j * eta)
        # Re(i eta phi'' m) = -eta phi'' Im m
        inner = float(np.sum(ge.weights * (-eta * cutoff.second(ge.nodes) * val.imag)))
        if first_inner is None:
            first_inner = inner
        total += weta * inner
    # the inner integral is linear in eta below eta_min; add that sliver
    total += first_inner * eta_min ** 2 / (2.0 * g_eta.nodes[0])
    # transition region where chi' != 0
    g_eta = composite_gauss_legendre(np.linspace(eta_flat, halfwidth, 5), order)
    for eta, weta in zip(g_eta.nodes, g_eta.weights):
        ge = composite_gauss_legendre(_energy_edges(cutoff, poles, eta), order)
        E = ge.nodes
        val = m(E + 1j * eta)
        c = float(chi(eta, halfwidth))
        cp = float(chi_prime(eta, halfwidth))
        integrand = (-eta * cutoff.second(E) * c * val.imag
                     - cutoff.phi(E) * cp * val.imag
                     - eta * cutoff.prime(E) * cp * val.real)
        total += weta * float(np.sum(ge.weights * integrand))
    return total / np.pi


def hs_trace(cutoff: CutoffLog, stieltjes: Callable, chi_halfwidth: float = 1.0, *,
             poles=None, eta_min: Optional[float] = None, order: int = 10,
             per_decade: int = 3, rtol: float = 1e-4) -> float:
    """tr phi(H) from the Stieltjes transform m of H via the Helffer-Sjostrand formula.

    Computes (N/pi) Re int_{eta>0} (i eta phi'' chi + i phi chi' - eta phi' chi') m dE deta
    with N = ``cutoff.n``.  The E-grid is composite Gauss-Legendre, graded at
    scale eta around ``poles`` (eigenvalue locations, optional; taken from
    ``stieltjes.eigenvalues`` when present).  The eta-grid is Gauss-Legendre
    in log(eta) from ``eta_min`` (default 1e-3 / n^{2-2eps}); the sliver
    below it is added using the linear small-eta behavior of the inner
    integral.  The result is recomputed with a refined eta-grid and the two
    must agree to ``rtol`` (relative, with an absolute floor of 1e-10 on
    the normalized trace so that traces near 0 do not demand the impossible).

    Raises
    ------
    QuadratureNonConvergence
        If the refinement changes the result by more than the tolerance.
    """
    if poles is None:
        poles = getattr(stieltjes, "eigenvalues", None)
    if eta_min is None:
        eta_min = 1e-3 * cutoff.lower
    coarse = _hs_once(cutoff, stieltjes, chi_halfwidth, poles, eta_min, order, per_decade)
    fine = _hs_once(cutoff, stieltjes, chi_halfwidth, poles, eta_min, order, 2 * per_decade)
    n = cutoff.n
    if abs(fine - coarse) > rtol * abs(fine) + 1e-10:
        raise QuadratureNonConvergence(
            f"hs_trace refinement changed the result from {n * coarse!r} to {n * fine!r}")
    return float(n * fine)


# ---------------------------------------------------------------------------
# Z statistic
# ---------------------------------------------------------------------------


def _domain_I_grid(cutoff: CutoffLog, n_E: int = 6, n_eta: int = 6, order: int = 8):
    """Nodes (E, eta) and weights for I = {n^{-1+eps} sqrt(E) <= eta, |w| <= eps}.

    E runs over [lower, eps] (phi' vanishes below ``lower``), eta over
    [n^{-1+eps} sqrt(E), sqrt(eps^2 - E^2)], both Gauss-Legendre on log scales.
    """
    eps = cutoff.epsilon
    n = cutoff.n
    lo = cutoff.lower
    eg = composite_gauss_legendre(np.linspace(lo, 2.0 * lo, 3), order)
    if eps > 2.0 * lo:
        k = max(n_E, int(math.ceil(2 * math.log10(eps / (2 * lo)))))
        lg = composite_gauss_legendre(np.linspace(math.log(2 * lo), math.log(eps), k + 1), order)
        E = np.concatenate([eg.nodes, np.exp(lg.nodes)])
        wE = np.concatenate([eg.weights, lg.weights * np.exp(lg.nodes)])
    else:
        E, wE = eg.nodes, eg.weights
    E_all, eta_all, w_all = [], [], []
    c = float(n) ** (-1.0 + eps)
    for e, we in zip(E, wE):
        a = c * math.sqrt(e)
        b = math.sqrt(max(eps * eps - e * e, 0.0))
        if b <= a:
            continue
        k = max(2, int(math.ceil(2 * math.log10(b / a))))
        lg = composite_gauss_legendre(np.linspace(math.log(a), math.log(b), k + 1), order)
        eta = np.exp(lg.nodes)
        E_all.append(np.full(eta.size, e))
        eta_all.append(eta)
        w_all.append(we * lg.weights * eta)
    return np.concatenate(E_all), np.concatenate(eta_all), np.concatenate(w_all)


def z_statistic(X, f: TestFunction, cutoff: CutoffLog,
                xi_grid: Optional[QuadratureGrid] = None, chi_halfwidth: float = 1.0) -> float:
    """Z = n int Delta f_{z0}(xi) int_I chi(eta) phi'(E) Re(m - m_c)(E + i eta) dE deta dA(xi).

    m is the Stieltjes transform of (X - xi)^*(X - xi).  After the change of
    variables xi = z0 + n^{-a} u this is n^{1+2a} int Delta f(u) (...) dA(u).
    """
    X = np.asarray(X)
    n = X.shape[0]
    if xi_grid is None:
        xi_grid = polar_disk_grid(8, 16)
    E, eta, wI = _domain_I_grid(cutoff)
    w = E + 1j * eta
    weight = wI * chi(eta, chi_halfwidth) * cutoff.prime(E)
    zs = f.z0 + xi_grid.nodes / f.scale(n)
    lap = f.laplacian(xi_grid.nodes)
    keep = np.abs(lap * xi_grid.weights) > 0
    spectra = gram_eigenvalues_batch(X, zs[keep].astype(complex))
    total = 0.0
    for lam, z, lw in zip(spectra, zs[keep], (lap * xi_grid.weights)[keep]):
        m = stieltjes_from_eigenvalues(lam)(w)
        mc = equilibrium.solve_mc_many(w, z)
        total += lw * float(np.sum(weight * (m - mc).real))
    return float(n ** (1.0 + 2.0 * f.a) * total)


# ---------------------------------------------------------------------------
# extreme eigenvalues
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExtremeDiagnostics:
    log_lambda_1: float
    lambda_N: float
    lambda_plus_gap: float
    count_above_2lambda_plus: int


def extreme_eigen_diagnostics(X, z: complex) -> ExtremeDiagnostics:
    """log lambda_1, lambda_N and lambda_N - lambda_+ for (X - z)^*(X - z)."""
    lam = singular_spectrum(X, z)
    lp = equilibrium.edge_parameters(z).lambda_plus
    l1 = lam[0]
    return ExtremeDiagnostics(
        log_lambda_1=float(np.log(l1)) if l1 > 0 else -math.inf,
        lambda_N=float(lam[-1]),
        lambda_plus_gap=float(lam[-1] - lp),
        count_above_2lambda_plus=int(np.sum(lam >= 2.0 * lp)),
    )


def eigenvector_delocalization(X, z: complex) -> float:
    """max over eigenvectors u of (X - z)^*(X - z) of ||u||_inf^2."""
    X = np.asarray(X)
    Y = X - z * np.eye(X.shape[0])
    res = hermitian_eigenvalues(Y.conj().T @ Y, want_vectors=True, check=False)
    return float(np.max(np.abs(res.vectors) ** 2))
