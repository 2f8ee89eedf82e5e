"""Dense linear algebra kernels.

Hermitian eigenvalues (Householder tridiagonalization followed by implicit QL
with Wilkinson shifts), complex nonsymmetric eigenvalues (Hessenberg reduction
followed by single-shift complex QR), partial-pivot LU for inverses and
log-determinants, and the resolvent / Green-function helpers built on them.

The kernels are compiled with numba.  Matrices are plain numpy arrays; inputs
are never modified.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numba
import numpy as np

__all__ = [
    "LinalgError",
    "NotHermitian",
    "NoConvergence",
    "SingularWithinTolerance",
    "ExactlySingular",
    "SpectrumResult",
    "MinorGreen",
    "hermitian_eigenvalues",
    "complex_eigenvalues",
    "resolvent_trace",
    "green_matrix",
    "minor_green",
    "minor",
    "lu_factor",
    "log_abs_det",
]

_EPS = np.finfo(np.float64).eps


class LinalgError(ArithmeticError):
    pass


class NotHermitian(LinalgError):
    pass


class NoConvergence(LinalgError):
    pass


class SingularWithinTolerance(LinalgError):
    pass


class ExactlySingular(LinalgError):
    pass


@dataclass
class SpectrumResult:
    values: np.ndarray
    iterations: int
    converged: bool
    vectors: Optional[np.ndarray] = field(default=None, repr=False)


# ---------------------------------------------------------------------------
# Hermitian path
# ---------------------------------------------------------------------------


@numba.njit(cache=True, nogil=True)
def _tridiagonalize(a, want_q):
    """Householder reduction of a Hermitian matrix to real tridiagonal form.

    Returns (d, e, q) with ``a = q @ T @ q^H`` where T has diagonal d and
    real, non-negative off-diagonal e.  ``q`` is empty when not requested.
    """
    n = a.shape[0]
    a = a.copy()
    if want_q:
        q = np.eye(n, dtype=a.dtype)
    else:
        q = np.zeros((0, 0), dtype=a.dtype)
    sub = np.zeros(max(n - 1, 0), dtype=a.dtype)
    for k in range(n - 2):
        x = a[k + 1:, k].copy()
        xnorm = np.sqrt(np.sum(np.abs(x) ** 2))
        if xnorm == 0.0:
            sub[k] = 0.0
            continue
        x0 = x[0]
        ax0 = abs(x0)
        if ax0 == 0.0:
            phase = x0 * 0.0 + 1.0
        else:
            phase = x0 / ax0
        alpha = -phase * xnorm
        v = x
        v[0] = v[0] - alpha
        vnorm = np.sqrt(np.sum(np.abs(v) ** 2))
        if vnorm == 0.0:
            sub[k] = x0
            continue
        v = v / vnorm
        sub[k] = alpha
        blk = a[k + 1:, k + 1:]
        m = n - k - 1
        p = np.zeros(m, dtype=a.dtype)
        for i in range(m):
            acc = p[i]
            for j in range(m):
                acc += blk[i, j] * v[j]
            p[i] = acc
        beta = np.sum(np.conj(v) * p)
        w = p - beta * v
        for i in range(m):
            for j in range(m):
                blk[i, j] -= 2.0 * (v[i] * np.conj(w[j]) + w[i] * np.conj(v[j]))
        a[k + 1:, k] = 0.0
        a[k, k + 1:] = 0.0
        a[k + 1, k] = alpha
        a[k, k + 1] = np.conj(alpha)
        if want_q:
            # q <- q (I - 2 v v^H) restricted to columns k+1..n-1
            qb = q[:, k + 1:]
            t = np.zeros(n, dtype=a.dtype)
            for i in range(n):
                acc = t[i]
                for j in range(m):
                    acc += qb[i, j] * v[j]
                t[i] = acc
            for i in range(n):
                for j in range(m):
                    qb[i, j] -= 2.0 * t[i] * np.conj(v[j])
    if n >= 2:
        sub[n - 2] = a[n - 1, n - 2]
    d = np.empty(n)
    for i in range(n):
        d[i] = a[i, i].real
    e = np.empty(max(n - 1, 0))
    # diagonal unitary similarity making the off-diagonal real and >= 0
    ph = a.dtype.type(1.0)
    for k in range(n - 1):
        s = sub[k]
        r = abs(s)
        e[k] = r
        if r > 0.0:
            ph = ph * s / r
        if want_q:
            for i in range(n):
                q[i, k + 1] *= ph
    return d, e, q


@numba.njit(cache=True, nogil=True)
def _tql(d, e, z, want_z, max_iter):
    """Implicit QL with Wilkinson shifts on a real symmetric tridiagonal.

    ``e`` holds the sub-diagonal in e[0..n-2].  Returns (d, z, iterations,
    converged).  ``z`` columns are rotated in place when ``want_z``.
    """
    n = d.shape[0]
    d = d.copy()
    ee = np.zeros(n)
    for i in range(n - 1):
        ee[i] = e[i]
    total = 0
    for l in range(n):
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(ee[m]) <= _EPS * dd:
                    break
                m += 1
            if m == l:
                break
            total += 1
            if total > max_iter:
                return d, z, total, False
            g = (d[l + 1] - d[l]) / (2.0 * ee[l])
            r = np.hypot(g, 1.0)
            g = d[m] - d[l] + ee[l] / (g + (r if g >= 0 else -r))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * ee[i]
                b = c * ee[i]
                r = np.hypot(f, g)
                ee[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    ee[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if want_z:
                    for k in range(z.shape[0]):
                        f2 = z[k, i + 1]
                        z[k, i + 1] = s * z[k, i] + c * f2
                        z[k, i] = c * z[k, i] - s * f2
                i -= 1
            if underflow and i >= l:
                continue
            d[l] -= p
            ee[l] = g
            ee[m] = 0.0
    return d, z, total, True


@numba.njit(cache=True, nogil=True)
def _hermitian_eig(a, want_vectors):
    n = a.shape[0]
    d, e, q = _tridiagonalize(a, want_vectors)
    if want_vectors:
        z = q.copy()
    else:
        z = np.zeros((0, 0), dtype=q.dtype)
    d, z, its, ok = _tql(d, e, z, want_vectors, 30 * max(n, 1))
    order = np.argsort(d)
    d = d[order]
    if want_vectors:
        z = z[:, order]
    return d, z, its, ok


def _as_square(A) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.iscomplexobj(A):
        A = A.astype(np.float64)
    else:
        A = A.astype(np.complex128)
    return np.ascontiguousarray(A)


def hermitian_eigenvalues(A, want_vectors: bool = False, *, check: bool = True) -> SpectrumResult:
    """Eigenvalues (ascending) of a Hermitian matrix, optionally with vectors.

    Raises
    ------
    NotHermitian
        If ``A`` deviates from its adjoint by more than 1e-12 relative.
    NoConvergence
        If QL needs more than 30 n sweeps.
    """
    A = _as_square(A)
    n = A.shape[0]
    if check and n:
        scale = max(np.abs(A).max(), 1e-300)
        if np.abs(A - A.conj().T).max() > 1e-12 * scale:
            raise NotHermitian("matrix is not Hermitian within 1e-12 relative tolerance")
    if n == 0:
        return SpectrumResult(np.zeros(0), 0, True, np.zeros((0, 0)) if want_vectors else None)
    # symmetrize so the kernel sees an exactly Hermitian input
    A = 0.5 * (A + A.conj().T)
    d, z, its, ok = _hermitian_eig(A, want_vectors)
    if not ok:
        raise NoConvergence(f"implicit QL did not converge within {30 * n} sweeps")
    return SpectrumResult(d, int(its), True, z if want_vectors else None)


@numba.njit(cache=True, nogil=True)
def _gram_eigvals_batch(x, zs):
    """Ascending eigenvalues of (X - z)^H (X - z) for every z in ``zs``."""
    n = x.shape[0]
    out = np.empty((zs.shape[0], n))
    flags = np.zeros(zs.shape[0], dtype=np.bool_)
    for t in range(zs.shape[0]):
        y = x.astype(np.complex128)
        for i in range(n):
            y[i, i] -= zs[t]
        g = np.conj(y.T) @ y
        for i in range(n):
            for j in range(i):
                avg = 0.5 * (g[i, j] + np.conj(g[j, i]))
                g[i, j] = avg
                g[j, i] = np.conj(avg)
            g[i, i] = g[i, i].real
        d, e, q = _tridiagonalize(g, False)
        d, _, its, ok = _tql(d, e, np.zeros((0, 0)), False, 30 * max(n, 1))
        flags[t] = ok
        out[t] = np.sort(d)
    return out, flags


@numba.njit(cache=True, nogil=True)
def _gram_eigvals_batch_real(x, zs):
    n = x.shape[0]
    out = np.empty((zs.shape[0], n))
    flags = np.zeros(zs.shape[0], dtype=np.bool_)
    for t in range(zs.shape[0]):
        y = x.copy()
        for i in range(n):
            y[i, i] -= zs[t]
        g = y.T @ y
        for i in range(n):
            for j in range(i):
                avg = 0.5 * (g[i, j] + g[j, i])
                g[i, j] = avg
                g[j, i] = avg
        d, e, q = _tridiagonalize(g, False)
        d, _, its, ok = _tql(d, e, np.zeros((0, 0)), False, 30 * max(n, 1))
        flags[t] = ok
        out[t] = np.sort(d)
    return out, flags


def gram_eigenvalues_batch(X, zs) -> np.ndarray:
    """Rows of ascending eigenvalues of (X - z)^*(X - z), one row per shift.

    Real shifts of a real matrix stay on the real arithmetic path.
    """
    X = _as_square(X)
    zs = np.atleast_1d(np.asarray(zs))
    if not np.iscomplexobj(X) and not np.iscomplexobj(zs):
        out, ok = _gram_eigvals_batch_real(X, zs.astype(np.float64))
    elif not np.iscomplexobj(X) and np.all(np.asarray(zs).imag == 0):
        out, ok = _gram_eigvals_batch_real(X, zs.real.astype(np.float64))
    else:
        out, ok = _gram_eigvals_batch(X.astype(np.complex128), zs.astype(np.complex128))
    if not ok.all():
        bad = np.flatnonzero(~ok)[0]
        raise NoConvergence(f"implicit QL failed for shift index {bad} (z={zs[bad]})")
    return out


# ---------------------------------------------------------------------------
# Nonsymmetric path
# ---------------------------------------------------------------------------


@numba.njit(cache=True, nogil=True)
def _hessenberg(a):
    n = a.shape[0]
    h = a.copy()
    for k in range(n - 2):
        x = h[k + 1:, k].copy()
        xnorm = np.sqrt(np.sum(np.abs(x) ** 2))
        if xnorm == 0.0:
            continue
        x0 = x[0]
        ax0 = abs(x0)
        phase = x0 / ax0 if ax0 > 0.0 else x0 * 0.0 + 1.0
        alpha = -phase * xnorm
        v = x
        v[0] -= alpha
        vnorm = np.sqrt(np.sum(np.abs(v) ** 2))
        if vnorm == 0.0:
            continue
        v = v / vnorm
        # left: H[k+1:, k:] -= 2 v (v^H H[k+1:, k:])
        blk = h[k + 1:, k:]
        t = np.zeros(blk.shape[1], dtype=h.dtype)
        for i in range(blk.shape[0]):
            cv = np.conj(v[i])
            for j in range(blk.shape[1]):
                t[j] += cv * blk[i, j]
        for i in range(blk.shape[0]):
            for j in range(blk.shape[1]):
                blk[i, j] -= 2.0 * v[i] * t[j]
        # right: H[:, k+1:] -= 2 (H[:, k+1:] v) v^H
        blk2 = h[:, k + 1:]
        s = np.zeros(n, dtype=h.dtype)
        for i in range(n):
            acc = s[i]
            for j in range(blk2.shape[1]):
                acc += blk2[i, j] * v[j]
            s[i] = acc
        for i in range(n):
            for j in range(blk2.shape[1]):
                blk2[i, j] -= 2.0 * s[i] * np.conj(v[j])
        for i in range(k + 2, n):
            h[i, k] = 0.0
    return h


@numba.njit(cache=True, nogil=True)
def _wilkinson_shift(a, b, c, d):
    # eigenvalue of [[a, b], [c, d]] closest to d
    tr_half = 0.5 * (a + d)
    det = a * d - b * c
    disc = np.sqrt(tr_half * tr_half - det)
    l1 = tr_half + disc
    l2 = tr_half - disc
    if abs(l1 - d) < abs(l2 - d):
        return l1
    return l2


@numba.njit(cache=True, nogil=True)
def _complex_qr_eigvals(a):
    """Eigenvalues of a complex matrix via Hessenberg + shifted QR.

    Returns (values, iterations, converged).
    """
    n = a.shape[0]
    h = _hessenberg(a)
    vals = np.zeros(n, dtype=np.complex128)
    hi = n - 1
    total = 0
    since = 0
    max_iter = 30 * max(n, 1)
    cs = np.zeros(n)
    sn = np.zeros(n, dtype=np.complex128)
    while hi >= 0:
        # find the active block [lo, hi]
        lo = hi
        while lo > 0:
            sub = abs(h[lo, lo - 1])
            if sub <= _EPS * (abs(h[lo - 1, lo - 1]) + abs(h[lo, lo])):
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            vals[hi] = h[hi, hi]
            hi -= 1
            since = 0
            continue
        total += 1
        since += 1
        if total > max_iter:
            return vals, total, False
        if since % 11 == 10:
            # exceptional shift
            mu = h[hi, hi] + 0.75 * abs(h[hi, hi - 1])
        else:
            mu = _wilkinson_shift(h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi])
        # QR step on the active block via Givens rotations
        for k in range(lo, hi + 1):
            h[k, k] -= mu
        for k in range(lo, hi):
            x = h[k, k]
            y = h[k + 1, k]
            r = np.sqrt(abs(x) ** 2 + abs(y) ** 2)
            if r == 0.0:
                c = 1.0
                s = 0.0j
            elif abs(x) == 0.0:
                c = 0.0
                s = np.conj(y) / abs(y)
            else:
                c = abs(x) / r
                s = (x / abs(x)) * np.conj(y) / r
            cs[k] = c
            sn[k] = s
            # apply G^H from the left to rows k, k+1 (columns k..n-1)
            for j in range(k, hi + 1):
                t1 = h[k, j]
                t2 = h[k + 1, j]
                h[k, j] = c * t1 + s * t2
                h[k + 1, j] = -np.conj(s) * t1 + c * t2
        for k in range(lo, hi):
            c = cs[k]
            s = sn[k]
            # apply G from the right to columns k, k+1 (rows 0..k+1)
            for i in range(lo, min(k + 2, hi) + 1):
                t1 = h[i, k]
                t2 = h[i, k + 1]
                h[i, k] = c * t1 + np.conj(s) * t2
                h[i, k + 1] = -s * t1 + c * t2
        for k in range(lo, hi + 1):
            h[k, k] += mu
    return vals, total, True


def complex_eigenvalues(A, *, backend: str = "native") -> SpectrumResult:
    """All eigenvalues (with multiplicity) of a square matrix.

    ``backend="lapack"`` delegates to ``numpy.linalg.eigvals`` for large
    batch experiments; the default runs the in-repo Hessenberg/QR kernel.
    """
    A = _as_square(A)
    n = A.shape[0]
    if n == 0:
        return SpectrumResult(np.zeros(0, dtype=complex), 0, True)
    if backend == "lapack":
        return SpectrumResult(np.linalg.eigvals(A).astype(complex), 0, True)
    if backend != "native":
        raise ValueError(f"unknown backend {backend!r}")
    vals, its, ok = _complex_qr_eigvals(A.astype(np.complex128))
    if not ok:
        raise NoConvergence(f"shifted QR did not converge within {30 * n} iterations")
    return SpectrumResult(vals, int(its), True)


# ---------------------------------------------------------------------------
# LU, inverses, determinants
# ---------------------------------------------------------------------------


@numba.njit(cache=True, nogil=True)
def _lu(a):
    n = a.shape[0]
    lu = a.copy()
    piv = np.arange(n)
    sign = 1
    for k in range(n):
        p = k
        best = abs(lu[k, k])
        for i in range(k + 1, n):
            v = abs(lu[i, k])
            if v > best:
                best = v
                p = i
        if best == 0.0:
            return lu, piv, sign, k
        if p != k:
            for j in range(n):
                tmp = lu[k, j]
                lu[k, j] = lu[p, j]
                lu[p, j] = tmp
            tmp2 = piv[k]
            piv[k] = piv[p]
            piv[p] = tmp2
            sign = -sign
        inv = 1.0 / lu[k, k]
        for i in range(k + 1, n):
            lu[i, k] *= inv
            f = lu[i, k]
            if f != 0.0:
                for j in range(k + 1, n):
                    lu[i, j] -= f * lu[k, j]
    return lu, piv, sign, -1


@numba.njit(cache=True, nogil=True)
def _lu_solve_identity(lu, piv):
    n = lu.shape[0]
    x = np.zeros((n, n), dtype=lu.dtype)
    for i in range(n):
        x[i, :] = 0.0
    for i in range(n):
        x[i, piv[i]] = 1.0
    # forward substitution (unit lower)
    for i in range(n):
        for k in range(i):
            f = lu[i, k]
            if f != 0.0:
                for j in range(n):
                    x[i, j] -= f * x[k, j]
    # back substitution
    for i in range(n - 1, -1, -1):
        for k in range(i + 1, n):
            f = lu[i, k]
            if f != 0.0:
                for j in range(n):
                    x[i, j] -= f * x[k, j]
        inv = 1.0 / lu[i, i]
        for j in range(n):
            x[i, j] *= inv
    return x


def lu_factor(A):
    """Partial-pivot LU.  Returns ``(lu, piv, sign)``; raises ExactlySingular."""
    A = _as_square(A)
    lu, piv, sign, zero_col = _lu(A)
    if zero_col >= 0:
        raise ExactlySingular(f"zero pivot in column {zero_col}")
    return lu, piv, sign


def _inverse(A) -> np.ndarray:
    A = _as_square(A)
    lu, piv, sign, zero_col = _lu(A)
    if zero_col >= 0:
        raise SingularWithinTolerance(f"zero pivot in column {zero_col}")
    return _lu_solve_identity(lu, piv)


def log_abs_det(A) -> float:
    """log|det A| accumulated pivot by pivot (no overflow)."""
    A = _as_square(A)
    if A.shape[0] == 0:
        return 0.0
    lu, _, _ = lu_factor(A)
    piv = np.abs(np.diag(lu))
    return float(np.sum(np.log(piv)))


# ---------------------------------------------------------------------------
# Resolvents
# ---------------------------------------------------------------------------


def resolvent_trace(eigenvalues, w) -> complex:
    """Normalized trace (1/N) sum_j 1/(lambda_j - w)."""
    lam = np.asarray(eigenvalues, dtype=float)
    w = complex(w)
    if w.imag <= 0:
        raise ValueError("resolvent_trace requires Im w > 0")
    return complex(np.mean(1.0 / (lam - w)))


def _gram(Y, side: str) -> np.ndarray:
    Y = np.asarray(Y)
    if side == "YstarY":
        return Y.conj().T @ Y
    if side == "YYstar":
        return Y @ Y.conj().T
    raise ValueError(f"side must be 'YstarY' or 'YYstar', got {side!r}")


def green_matrix(Y, w, side: str = "YstarY", *, check: bool = True) -> np.ndarray:
    """(Y^*Y - w)^{-1} or (Y Y^* - w)^{-1} by partial-pivot LU."""
    w = complex(w)
    if w.imag <= 0:
        raise ValueError("green_matrix requires Im w > 0")
    H = _gram(Y, side).astype(np.complex128)
    M = H - w * np.eye(H.shape[0])
    G = _inverse(M)
    if check and H.shape[0]:
        res = np.abs(M @ G - np.eye(H.shape[0])).max()
        if not np.isfinite(res) or res > 1e-10 * H.shape[0]:
            raise SingularWithinTolerance(f"inverse residual {res:.3e} exceeds 1e-10 N")
    return G


@dataclass
class MinorGreen:
    """Green function of a minor, indexed by the parent's labels.

    ``labels[k]`` is the original index of row/column ``k`` of ``matrix``.
    Traces are normalized by the parent size ``n``.
    """

    matrix: np.ndarray
    labels: np.ndarray
    n: int

    def __post_init__(self):
        self._pos = {int(l): k for k, l in enumerate(self.labels)}

    def __contains__(self, label) -> bool:
        return int(label) in self._pos

    def entry(self, i: int, j: int) -> complex:
        return complex(self.matrix[self._pos[int(i)], self._pos[int(j)]])

    def diag(self, i: int) -> complex:
        """Diagonal entry, defined as 0 for a removed label."""
        if int(i) not in self._pos:
            return 0.0j
        return self.entry(i, i)

    @property
    def m(self) -> complex:
        return complex(np.trace(self.matrix)) / self.n


def minor(Y, T: Iterable[int] = (), U: Iterable[int] = ()):
    """Y with columns in T and rows in U removed; returns (minor, row_labels, col_labels)."""
    Y = np.asarray(Y)
    T = set(int(t) for t in T)
    U = set(int(u) for u in U)
    rows = np.array([i for i in range(Y.shape[0]) if i not in U], dtype=int)
    cols = np.array([j for j in range(Y.shape[1]) if j not in T], dtype=int)
    return Y[np.ix_(rows, cols)], rows, cols


def minor_green(Y, T: Iterable[int], U: Iterable[int], w, side: str = "YstarY") -> MinorGreen:
    """Green function of Y^{(T,U)} (columns T and rows U removed)."""
    Ym, rows, cols = minor(Y, T, U)
    n = np.asarray(Y).shape[1]
    labels = cols if side == "YstarY" else rows
    if len(labels) == 0:
        return MinorGreen(np.zeros((0, 0), dtype=complex), labels, n)
    G = green_matrix(Ym, w, side)
    return MinorGreen(G, labels, n)
