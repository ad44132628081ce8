"""Min-based cardinality estimation from rounded exponential draws.

Each node draws a fixed-length vector of rate-1 exponentials, clamps
them into a parameter-dependent range, and rounds each one down onto the
geometric grid {(13/12)**k : k integer}.  Vectors are merged across the
network by entry-wise minimum, and the number of distinct contributors
is estimated as length / sum.

Entries are stored as integer grid exponents, never as floats: the
min-merge is bit-exact and the wire encoding is a fixed-width integer
per entry.  Floats appear only in the final length/sum division.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

GRID_NUM = 13
GRID_DEN = 12
LN_GRID = math.log(GRID_NUM / GRID_DEN)

# wire width of one grid exponent; +/-32767 covers any desk-scale range
EXPONENT_WIDTH_BYTES = 2
EXPONENT_MIN = -(1 << 15)
EXPONENT_MAX = (1 << 15) - 1


class EstimatorError(ValueError):
    pass


def ell_of(N: int, eta: float) -> int:
    """Vector length for an upper bound N on the network size and error budget eta."""
    if N < 1:
        raise EstimatorError(f"N must be >= 1, got {N}")
    if not 0.0 < eta <= 0.5:
        raise EstimatorError(f"eta must lie in (0, 1/2], got {eta}")
    return math.ceil(243.0 * (math.log(4 * N * N) - math.log(eta)))


@lru_cache(maxsize=None)
def grid_value(exponent: int) -> float:
    """The float value of grid point (13/12)**exponent."""
    return math.exp(exponent * LN_GRID)


def grid_floor_exponent(x: float) -> int:
    """Largest k with (13/12)**k <= x, settled exactly in rational arithmetic.

    Grid points map to themselves: float log rounding near a boundary is
    corrected by comparing against the exact rational power.
    """
    if not x > 0.0:
        raise EstimatorError(f"grid rounding needs a positive value, got {x}")
    k = math.floor(math.log(x) / LN_GRID)
    fx = Fraction(x)
    base = Fraction(GRID_NUM, GRID_DEN)
    while base ** (k + 1) <= fx:
        k += 1
    while base**k > fx:
        k -= 1
    return k


def value_range(ell: int, N: int, eta: float) -> tuple[float, float]:
    """The clamp interval [eta/(4*ell*N), ln(4*ell*N/eta)]."""
    lo = eta / (4.0 * ell * N)
    hi = math.log(4.0 * ell * N / eta)
    return lo, hi


def exponent_range(ell: int, N: int, eta: float) -> tuple[int, int]:
    """Smallest and largest grid exponents whose values lie inside the clamp interval."""
    lo, hi = value_range(ell, N, eta)
    k_lo = grid_floor_exponent(lo)
    if Fraction(GRID_NUM, GRID_DEN) ** k_lo < Fraction(lo):
        k_lo += 1
    k_hi = grid_floor_exponent(hi)
    if k_lo > k_hi:
        raise EstimatorError("degenerate range: no grid point between the clamp bounds")
    if k_lo < EXPONENT_MIN or k_hi > EXPONENT_MAX:
        raise EstimatorError("grid exponents exceed the wire width for these parameters")
    return k_lo, k_hi


class EstimatorVector:
    """Fixed-length vector of grid exponents; immutable, compared entry-wise."""

    __slots__ = ("exponents",)

    def __init__(self, exponents) -> None:
        arr = np.array(exponents, dtype=np.int32)
        if arr.ndim != 1:
            raise EstimatorError("estimator vector must be one-dimensional")
        arr.flags.writeable = False
        self.exponents = arr

    def __len__(self) -> int:
        return int(self.exponents.shape[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, EstimatorVector):
            return NotImplemented
        return bool(np.array_equal(self.exponents, other.exponents))

    __hash__ = None

    def __repr__(self) -> str:
        return f"EstimatorVector(len={len(self)})"

    def values(self) -> np.ndarray:
        return np.exp(self.exponents.astype(np.float64) * LN_GRID)


def exponential_draws(rng: np.random.Generator, size: int) -> np.ndarray:
    """Rate-1 exponentials via the inverse CDF of uniform draws (stream-stable)."""
    u = rng.random(size)
    return -np.log1p(-u)


def sample_vector(ell: int, N: int, eta: float, rng: np.random.Generator) -> EstimatorVector:
    """Draw ell independent rate-1 exponentials, clamp into range, round down to the grid."""
    if ell < 1:
        raise EstimatorError(f"ell must be >= 1, got {ell}")
    lo, hi = value_range(ell, N, eta)
    k_lo, k_hi = exponent_range(ell, N, eta)
    x = np.clip(exponential_draws(rng, ell), lo, hi)
    ratio = np.log(x) / LN_GRID
    k = np.floor(ratio).astype(np.int64)
    # float log can misround exactly-on-grid values; settle those exactly
    frac = ratio - k
    suspicious = np.nonzero((frac < 1e-9) | (frac > 1.0 - 1e-9))[0]
    for i in suspicious:
        k[i] = grid_floor_exponent(float(x[i]))
    np.clip(k, k_lo, k_hi, out=k)
    return EstimatorVector(k)


def estimate(v: EstimatorVector) -> float:
    """Length over the sum of grid values; approximates the number of distinct contributors."""
    return len(v) / float(np.exp(v.exponents.astype(np.float64) * LN_GRID).sum())


def pointwise_min(a: EstimatorVector, b: EstimatorVector) -> EstimatorVector:
    if len(a) != len(b):
        raise EstimatorError(f"length mismatch: {len(a)} vs {len(b)}")
    return EstimatorVector(np.minimum(a.exponents, b.exponents))


def pointwise_min_many(vectors) -> EstimatorVector:
    vectors = list(vectors)
    if not vectors:
        raise EstimatorError("need at least one vector")
    length = len(vectors[0])
    for v in vectors[1:]:
        if len(v) != length:
            raise EstimatorError(f"length mismatch: {length} vs {len(v)}")
    return EstimatorVector(np.minimum.reduce([v.exponents for v in vectors]))
