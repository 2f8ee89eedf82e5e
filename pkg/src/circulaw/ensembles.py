"""Reproducible N x N random matrices with mean-zero, variance-1/N entries.

Entry (i, j) is a pure function of (seed, i, j): a Philox4x64-10 block is
evaluated at counter (i, j, 0, 0) under key (seed, 0), so re-sampling, minor
extraction and parallel fills all reproduce the same numbers.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from enum import Enum

import numba
import numpy as np

__all__ = [
    "Family",
    "EnsembleSpec",
    "philox4x64",
    "sample",
    "declared_moments",
    "empirical_moments",
    "replica_seed",
]

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_TWO_M53 = 2.0 ** -53


class Family(str, Enum):
    GINIBRE_COMPLEX = "GinibreComplex"
    GAUSSIAN_REAL = "GaussianReal"
    RADEMACHER = "Rademacher"
    SKEWED_BERNOULLI = "SkewedBernoulli"


_FAMILY_CODE = {
    Family.GINIBRE_COMPLEX: 0,
    Family.GAUSSIAN_REAL: 1,
    Family.RADEMACHER: 2,
    Family.SKEWED_BERNOULLI: 3,
}

# two-point law of the skewed family: 2/sqrt(n) w.p. 1/5, -1/(2 sqrt(n)) w.p. 4/5
SKEW_P = 0.2


@dataclass(frozen=True)
class EnsembleSpec:
    family: Family
    n: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if int(self.n) < 1:
            raise ValueError("n must be >= 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def is_complex(self) -> bool:
        return self.family is Family.GINIBRE_COMPLEX

    def to_dict(self) -> dict:
        d = asdict(self)
        d["family"] = self.family.value
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleSpec":
        return cls(Family(d["family"]), int(d["n"]), int(d["seed"]))

    @classmethod
    def from_json(cls, s: str) -> "EnsembleSpec":
        return cls.from_dict(json.loads(s))

    def with_seed(self, seed: int) -> "EnsembleSpec":
        return EnsembleSpec(self.family, self.n, seed)

    def with_n(self, n: int) -> "EnsembleSpec":
        return EnsembleSpec(self.family, n, self.seed)


@numba.njit(cache=True, inline="always")
def _mulhilo(a, b):
    a0 = a & _LO32
    a1 = a >> _S32
    b0 = b & _LO32
    b1 = b >> _S32
    p00 = a0 * b0
    p01 = a0 * b1
    p10 = a1 * b0
    p11 = a1 * b1
    mid = (p00 >> _S32) + (p01 & _LO32) + (p10 & _LO32)
    hi = p11 + (p01 >> _S32) + (p10 >> _S32) + (mid >> _S32)
    return hi, a * b


@numba.njit(cache=True, nogil=True)
def _philox(c0, c1, c2, c3, k0, k1):
    for _ in range(10):
        hi0, lo0 = _mulhilo(_M0, c0)
        hi1, lo1 = _mulhilo(_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
        k0 = k0 + _W0
        k1 = k1 + _W1
    return c0, c1, c2, c3


def philox4x64(counter, key) -> tuple:
    """One Philox4x64-10 block (same bijection as ``numpy.random.Philox``)."""
    c = [np.uint64(int(x) % 2 ** 64) for x in counter]
    k = [np.uint64(int(x) % 2 ** 64) for x in key]
    return tuple(int(x) for x in _philox(c[0], c[1], c[2], c[3], k[0], k[1]))


@numba.njit(cache=True, nogil=True)
def _fill(n, seed, code, out_re, out_im):
    scale = 1.0 / math.sqrt(n)
    k0 = np.uint64(seed)
    k1 = np.uint64(0)
    zero = np.uint64(0)
    for i in range(n):
        for j in range(n):
            w0, w1, w2, w3 = _philox(np.uint64(i), np.uint64(j), zero, zero, k0, k1)
            u1 = float(w0 >> _S11) * _TWO_M53
            u2 = float(w1 >> _S11) * _TWO_M53
            if code <= 1:
                r = math.sqrt(-2.0 * math.log1p(-u1))
                th = 2.0 * math.pi * u2
                if code == 0:
                    out_re[i, j] = r * math.cos(th) * scale / math.sqrt(2.0)
                    out_im[i, j] = r * math.sin(th) * scale / math.sqrt(2.0)
                else:
                    out_re[i, j] = r * math.cos(th) * scale
            elif code == 2:
                out_re[i, j] = scale if u1 < 0.5 else -scale
            else:
                out_re[i, j] = 2.0 * scale if u1 < SKEW_P else -0.5 * scale


def sample(spec: EnsembleSpec) -> np.ndarray:
    """Deterministic n x n sample for ``spec``."""
    n = spec.n
    re = np.zeros((n, n))
    im = np.zeros((n, n))
    _fill(n, np.uint64(spec.seed), _FAMILY_CODE[spec.family], re, im)
    if spec.is_complex:
        return re + 1j * im
    return re


def replica_seed(base_seed: int, replica: int) -> int:
    """Seed of replica ``replica`` derived from an experiment's base seed."""
    ss = np.random.SeedSequence([int(base_seed) % 2 ** 64, int(replica)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def declared_moments(family: Family, n: int) -> np.ndarray:
    """Declared entry moments m1..m4.

    For a complex entry x the k-th moment is E[x^ceil(k/2) conj(x)^floor(k/2)],
    which reduces to E[x^k] for real families.
    """
    family = Family(family)
    if family is Family.GINIBRE_COMPLEX:
        return np.array([0.0, 1.0 / n, 0.0, 2.0 / n ** 2])
    if family is Family.GAUSSIAN_REAL:
        return np.array([0.0, 1.0 / n, 0.0, 3.0 / n ** 2])
    if family is Family.RADEMACHER:
        return np.array([0.0, 1.0 / n, 0.0, 1.0 / n ** 2])
    p = SKEW_P
    hi, lo = 2.0, -0.5
    return np.array([
        (p * hi + (1 - p) * lo) / n ** 0.5,
        (p * hi ** 2 + (1 - p) * lo ** 2) / n,
        (p * hi ** 3 + (1 - p) * lo ** 3) / n ** 1.5,
        (p * hi ** 4 + (1 - p) * lo ** 4) / n ** 2,
    ])


def _powers(x: np.ndarray) -> list:
    xc = np.conj(x)
    return [x, x * xc, x * x * xc, (x * xc) ** 2]


def empirical_moments(spec: EnsembleSpec, replicas: int) -> dict:
    """Pooled entry moments over ``replicas`` independent samples.

    Returns a dict with arrays ``moments``, ``stderr`` and ``declared`` (each
    of length 4) and the pooled entry ``count``.
    """
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    sums = np.zeros(4, dtype=complex)
    sq = np.zeros(4)
    count = 0
    for r in range(replicas):
        x = sample(spec.with_seed(replica_seed(spec.seed, r))).ravel()
        for k, p in enumerate(_powers(x)):
            sums[k] += p.sum()
            sq[k] += np.sum(np.abs(p) ** 2)
        count += x.size
    mean = sums / count
    var = sq / count - np.abs(mean) ** 2
    se = np.sqrt(np.maximum(var, 0.0) / count)
    moments = mean.real if not spec.is_complex else mean
    return {
        "moments": moments,
        "stderr": se,
        "declared": declared_moments(spec.family, spec.n),
        "count": count,
    }
