"""Counting functions and their normalized growth ratios.

The objects here are the raw material for everything downstream: integer
and prime counting, weighted prime counting S(x) = pi_P(x) * ln(x),
user-supplied step functions, and the `GrowthFunction` wrapper that ties a
non-decreasing S to its growth constant C (S(x) <= C*x on x >= 1) and to
the normalized ratio

    g(u) = S(e^u) / e^u,   u >= 0,

whose limit behaviour the operator experiments probe.

Primes come from a segmented, odd-only sieve of Eratosthenes with a small
binary disk cache so the 1e8 table is built once per machine.
"""

from __future__ import annotations

import logging
import math
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import ContractError, DomainError, ResourceError, TableExhaustedError

__all__ = [
    "StepFunction",
    "PrimeTable",
    "GrowthFunction",
    "count_integers",
    "count_primes",
    "build_prime_table",
    "chebyshev_weighted",
    "normalized_ratio",
    "default_cache_dir",
]

logger = logging.getLogger(__name__)

CACHE_ENV_VAR = "TAUBERLAB_CACHE_DIR"
_CACHE_MAGIC = b"PTBL"
_CACHE_VERSION = 1
_HARD_LIMIT = 2**32


def default_cache_dir() -> Path:
    """Cache directory: $TAUBERLAB_CACHE_DIR, else ~/.cache/tauberlab."""
    env = os.environ.get(CACHE_ENV_VAR)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "tauberlab"


# ---------------------------------------------------------------------------
# counting functions
# ---------------------------------------------------------------------------


def count_integers(x):
    """Number of positive integers <= x, i.e. floor(x) for x >= 0.

    Returns the mathematical floor as a float; ties at integer x include x.
    Accepts scalars or arrays.
    """
    arr = np.asarray(x, dtype=float)
    if arr.size and (not np.all(np.isfinite(arr)) or np.any(arr < 0)):
        raise DomainError("count_integers requires finite x >= 0")
    out = np.floor(arr)
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


# ---------------------------------------------------------------------------
# step functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StepFunction:
    """Non-decreasing pure jump function S(x) = sum of a_j over x_j <= x.

    `breakpoints` must be strictly increasing and >= 1, `jumps` strictly
    positive and of equal length.
    """

    breakpoints: np.ndarray
    jumps: np.ndarray
    cumulative: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        jp = np.asarray(self.jumps, dtype=float)
        if bp.ndim != 1 or jp.shape != bp.shape:
            raise ContractError("breakpoints and jumps must be 1-d arrays of equal length")
        if bp.size == 0:
            raise ContractError("a step function needs at least one breakpoint")
        if not np.all(np.isfinite(bp)) or not np.all(np.isfinite(jp)):
            raise ContractError("breakpoints and jumps must be finite")
        if bp[0] < 1.0 or np.any(np.diff(bp) <= 0):
            raise ContractError("breakpoints must be strictly increasing and >= 1")
        if np.any(jp <= 0):
            raise ContractError("jumps must be strictly positive")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "jumps", jp)
        object.__setattr__(self, "cumulative", np.cumsum(jp))

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.breakpoints, arr, side="right")
        vals = np.concatenate(([0.0], self.cumulative))[idx]
        return float(vals) if np.isscalar(x) or arr.ndim == 0 else vals

    def total(self) -> float:
        return float(self.cumulative[-1])

    def breakpoints_in(self, lo: float, hi: float) -> np.ndarray:
        """Breakpoints x_j with lo < x_j <= hi."""
        i = np.searchsorted(self.breakpoints, lo, side="right")
        j = np.searchsorted(self.breakpoints, hi, side="right")
        return self.breakpoints[i:j]

    def tight_growth_constant(self) -> float:
        """Smallest C with S(x) <= C*x on x >= 1 (attained at a breakpoint)."""
        return float(np.max(self.cumulative / self.breakpoints))


# ---------------------------------------------------------------------------
# prime sieve and table
# ---------------------------------------------------------------------------


def _sieve_odd_bits(limit: int) -> np.ndarray:
    """Boolean array b with b[i] meaning 2*i+1 is prime, for 2*i+1 <= limit.

    Segmented, odd-only sieve: base primes up to sqrt(limit) mark odd
    composites segment by segment (segments of 2^22 odd slots keep the
    working set cache-friendly at the 1e8 scale).
    """
    n_odd = (limit + 1) // 2
    bits = np.ones(n_odd, dtype=bool)
    bits[0] = False  # 1 is not prime
    root = int(math.isqrt(limit))
    if root >= 3:
        # dense base sieve over odds <= root
        n_base = (root + 1) // 2
        base = np.ones(n_base, dtype=bool)
        base[0] = False
        for i in range(1, (int(math.isqrt(root)) + 1) // 2 + 1):
            if base[i]:
                p = 2 * i + 1
                base[(p * p - 1) // 2 :: p] = False
        base_primes = 2 * np.flatnonzero(base) + 1
        seg = 1 << 22
        for lo in range(0, n_odd, seg):
            hi = min(lo + seg, n_odd)
            view = bits[lo:hi]
            for p in base_primes:
                # first odd multiple of p in the segment, at least p*p
                start = (p * p - 1) // 2
                if start < lo:
                    start = lo + (-(lo - start)) % p
                if start < hi:
                    view[start - lo :: p] = False
    return bits


class PrimeTable:
    """All primes up to `limit`, held as a sorted array plus odd bitset.

    Count queries use binary search on the materialized prime array, so
    repeated ratio-table evaluation costs O(log n) per point.
    """

    def __init__(self, limit: int, odd_bits: np.ndarray, path: Optional[Path] = None):
        self.limit = int(limit)
        self._bits = odd_bits
        self.path = path
        primes = 2 * np.flatnonzero(odd_bits).astype(np.int64) + 1
        if self.limit >= 2:
            primes = np.concatenate(([np.int64(2)], primes))
        self.primes = primes

    def __len__(self) -> int:
        return int(self.primes.size)

    def is_prime(self, n: int) -> bool:
        if n > self.limit:
            raise TableExhaustedError(
                f"membership query for {n} exceeds table limit {self.limit}",
                required=int(n),
            )
        if n < 2:
            return False
        if n == 2:
            return True
        if n % 2 == 0:
            return False
        return bool(self._bits[(n - 1) // 2])

    def count(self, x):
        """Vectorized count of primes <= x (x scalar or array, any real)."""
        arr = np.asarray(x, dtype=float)
        if arr.size and np.any(arr > self.limit):
            needed = int(math.ceil(float(np.max(arr))))
            raise TableExhaustedError(
                f"count query up to {needed} exceeds table limit {self.limit}; "
                f"rebuild with limit >= {needed}",
                required=needed,
            )
        out = np.searchsorted(self.primes, np.floor(arr), side="right")
        return int(out) if np.isscalar(x) or arr.ndim == 0 else out

    def primes_in(self, lo: float, hi: float) -> np.ndarray:
        """Primes p with lo < p <= hi (hi is clipped to the table limit)."""
        hi = min(hi, float(self.limit))
        i = np.searchsorted(self.primes, lo, side="right")
        j = np.searchsorted(self.primes, hi, side="right")
        return self.primes[i:j]

    # -- cache ---------------------------------------------------------

    def save(self, path: Path) -> None:
        packed = np.packbits(self._bits, bitorder="little")
        header = _CACHE_MAGIC + struct.pack("<IQ", _CACHE_VERSION, self.limit)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=str(path.parent), suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(header)
                fh.write(packed.tobytes())
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        self.path = path

    @staticmethod
    def load(path: Path) -> "PrimeTable":
        raw = Path(path).read_bytes()
        if len(raw) < 16 or raw[:4] != _CACHE_MAGIC:
            raise ContractError(f"not a prime table cache: {path}")
        version, limit = struct.unpack("<IQ", raw[4:16])
        if version != _CACHE_VERSION:
            raise ContractError(f"unsupported prime cache version {version}")
        n_odd = (limit + 1) // 2
        packed = np.frombuffer(raw, dtype=np.uint8, offset=16)
        if packed.size != (n_odd + 7) // 8:
            raise ContractError(f"truncated prime table cache: {path}")
        bits = np.unpackbits(packed, bitorder="little")[:n_odd].astype(bool)
        return PrimeTable(int(limit), bits, path=Path(path))


def build_prime_table(limit: int, cache_dir: Optional[os.PathLike] = None) -> PrimeTable:
    """Sieve (or reload from cache) all primes up to `limit`.

    The cache file is `primes_<limit>.ptbl` under `cache_dir` (defaulting to
    $TAUBERLAB_CACHE_DIR or ~/.cache/tauberlab). A corrupt cache is rebuilt
    with a logged warning, never trusted.
    """
    limit = int(limit)
    if limit < 2:
        raise DomainError("prime table limit must be >= 2")
    if limit > _HARD_LIMIT:
        raise ResourceError(f"prime table limit {limit} exceeds hard cap {_HARD_LIMIT}")
    cdir = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    cache_path = cdir / f"primes_{limit}.ptbl"
    if cache_path.exists():
        try:
            table = PrimeTable.load(cache_path)
            if table.limit == limit:
                return table
            logger.warning("prime cache %s has wrong limit; rebuilding", cache_path)
        except ContractError as exc:
            logger.warning("corrupt prime cache (%s); rebuilding", exc)
    bits = _sieve_odd_bits(limit)
    table = PrimeTable(limit, bits)
    try:
        table.save(cache_path)
    except OSError as exc:
        logger.warning("could not write prime cache %s: %s", cache_path, exc)
    return table


def count_primes(x, table: PrimeTable) -> int:
    """Number of primes <= x. Raises TableExhaustedError beyond table.limit."""
    xf = float(x)
    if not math.isfinite(xf) or xf < 0:
        raise DomainError("count_primes requires finite x >= 0")
    if xf < 2:
        return 0
    return table.count(xf)


def chebyshev_weighted(x, table: PrimeTable):
    """Weighted prime count S(x) = pi_P(x) * ln(x); 0 below the first prime.

    Scalar or array x.
    """
    arr = np.asarray(x, dtype=float)
    if arr.size and (not np.all(np.isfinite(arr)) or np.any(arr <= 0)):
        raise DomainError("chebyshev_weighted requires finite x > 0")
    counts = table.count(arr)
    out = np.where(arr >= 2, counts * np.log(np.maximum(arr, 1.0)), 0.0)
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


# ---------------------------------------------------------------------------
# growth functions
# ---------------------------------------------------------------------------


@dataclass
class GrowthFunction:
    """A non-decreasing S on [0, inf) with certified linear growth bound.

    Fields beyond the evaluator exist so the transform and operator layers
    can pick the best strategy per source:

    - ``laplace``: closed form of G(s) = integral of S(e^u) e^{-su} du when
      one is known (vectorized in s).
    - ``breakpoints_in(lo, hi)``: jump abscissae of S in (lo, hi], so
      quadratures can split panels exactly at discontinuities.
    - ``g_smooth(u)``: local between-jump average of g, valid for
      u >= smooth_from_u; lets integrators swap the sawtooth for its mean
      once individual jumps are too dense to resolve.
    - ``u_cap``: largest u at which g(u) is evaluable (ln of a prime table
      limit); integrators freeze g beyond it, direct evaluation raises.
    - ``ratio_limit_A``: the declared limit A of g(u) when one exists
      (None for sources without a ratio limit); experiments that test the
      forward direction require it.
    - ``step``: the backing StepFunction for pure jump sources, enabling
      exact transform summation. When set, S is piecewise constant.
    - ``between_jumps``: shape of S(e^u) between declared breakpoints —
      "constant" (pure counting) or "linear_u" (count times u, as for the
      log-weighted prime count); exact integrators pick the matching
      antiderivative.
    """

    label: str
    fn: Callable
    growth_constant: float
    laplace: Optional[Callable] = None
    breakpoints_in: Optional[Callable] = None
    g_smooth: Optional[Callable] = None
    smooth_from_u: float = math.inf
    u_cap: float = math.inf
    ratio_limit_A: Optional[float] = None
    step: Optional[StepFunction] = None
    between_jumps: str = "constant"

    def __call__(self, x):
        return self.fn(x)

    def g(self, u):
        """Normalized ratio g(u) = S(e^u)/e^u for u >= 0."""
        arr = np.asarray(u, dtype=float)
        if arr.size and (not np.all(np.isfinite(arr)) or np.any(arr < 0)):
            raise DomainError("normalized ratio needs finite u >= 0")
        if arr.size and np.any(arr > self.u_cap):
            raise TableExhaustedError(
                f"g(u) for source '{self.label}' is only evaluable up to "
                f"u = {self.u_cap:.6g}; got u = {float(np.max(arr)):.6g}",
                required=int(math.ceil(math.exp(float(np.max(arr))))),
            )
        eu = np.exp(arr)
        out = self.fn(eu) / eu
        return float(out) if np.isscalar(u) or arr.ndim == 0 else out

    def g_clipped(self, u):
        """g with the argument clipped to u_cap (frozen-tail convention)."""
        arr = np.asarray(u, dtype=float)
        # the 1e-9 margin keeps exp(u_cap) from rounding past the table edge
        cap = self.u_cap - 1e-9 if math.isfinite(self.u_cap) else self.u_cap
        clipped = np.minimum(arr, cap)
        out = self.g(clipped)
        return float(out) if np.isscalar(u) or arr.ndim == 0 else out

    def scaled(self, c: float) -> "GrowthFunction":
        """The growth function of c*S (c > 0)."""
        if not (c > 0) or not math.isfinite(c):
            raise DomainError("scale factor must be positive and finite")
        lap = None if self.laplace is None else (lambda s, _f=self.laplace: c * _f(s))
        gs = None if self.g_smooth is None else (lambda u, _g=self.g_smooth: c * _g(u))
        stp = None if self.step is None else StepFunction(self.step.breakpoints, c * self.step.jumps)
        return GrowthFunction(
            label=f"{c:g}*{self.label}",
            fn=lambda x, _f=self.fn: c * _f(x),
            growth_constant=c * self.growth_constant,
            laplace=lap,
            breakpoints_in=self.breakpoints_in,
            g_smooth=gs,
            smooth_from_u=self.smooth_from_u,
            u_cap=self.u_cap,
            ratio_limit_A=None if self.ratio_limit_A is None else c * self.ratio_limit_A,
            step=stp,
            between_jumps=self.between_jumps,
        )


def normalized_ratio(S: GrowthFunction, u) -> float:
    """g(u) = S(e^u)/e^u; raises beyond the evaluable range of S."""
    return S.g(u)
