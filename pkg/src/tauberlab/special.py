"""Zeta-family evaluators on the half-plane Re(s) > 1.

Everything the transform layer needs reduces to six functions: the Riemann
zeta function and its derivative, the prime zeta function ("sum of p^{-s}
over primes") and its derivative, and the two pole-subtracted remainders

    psi(s)   = zeta(s)/s - 1/(s-1)          (entire through s = 1)
    psi_P(s) = pzeta(s)/s + log(s-1)        (analytic near s = 1)

zeta is computed by Euler-Maclaurin summation with four Bernoulli
correction terms; the truncation point starts at the standard
N = max(10, ceil|t| + 10) and doubles until the rigorous remainder bound
drops below the requested tolerance (PrecisionError past the term budget).
The derivative uses the term-differentiated sum with a Cauchy-circle bound
on the remainder.

prime zeta uses the Moebius-log identity  sum_k mu(k)/k * log zeta(ks).
For k >= 2 the principal logarithm is provably the analytic branch
(|zeta(ks) - 1| < 3/4 there).  For k = 1 it is certified by peeling small
Euler factors: log zeta = -sum_{p<=P0} log(1 - p^{-s}) + Log(zeta * prod),
where P0 is grown until the provable bound on |Im log| of the remaining
product, namely log zeta(sigma) + sum_{p<=P0} log(1 - p^{-sigma}), falls
under pi.  Near sigma = 1 (closer than ~1.0002) no feasible P0 certifies
and the principal branch is used best-effort with a logged warning.

Near s = 1, psi switches to its Taylor form from the Stieltjes expansion
of zeta; the constants below were computed once by a float128
Euler-Maclaurin limit at N = 10^7 (sum of log^n k / k minus
log^{n+1} N/(n+1), with tail corrections), not copied from memory.

All evaluators accept a complex scalar or ndarray and respect the Schwarz
reflection F(conj s) = conj F(s).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ContractError, DomainError, PrecisionError

__all__ = [
    "EvalTolerance",
    "DEFAULT_TOL",
    "zeta",
    "zeta_deriv",
    "prime_zeta",
    "prime_zeta_deriv",
    "psi_entire",
    "psi_prime_part",
    "prime_zeta_pair",
]

logger = logging.getLogger(__name__)

# Stieltjes constants, frozen from the dev-time Euler-Maclaurin limit oracle
# (float128, N = 1e7; agrees with the classical values to ~1e-14).
GAMMA_0 = 0.5772156649015329
GAMMA_1 = -0.0728158454836767
GAMMA_2 = -0.009690363192872422
GAMMA_3 = 0.002053834420316883

# B_{2k}/(2k)! for k = 1..4, then the |B_10/10!| constant of the remainder.
_BERN = (1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0, -1.0 / 1209600.0)
_B10_OVER_FACT = 5.0 / 66.0 / 3628800.0

_PSI_SERIES_RADIUS = 1e-3


@dataclass(frozen=True)
class EvalTolerance:
    """Absolute-accuracy request plus a hard term budget."""

    abs_tol: float = 1e-10
    max_terms: int = 1_000_000

    def __post_init__(self):
        if not (0.0 < self.abs_tol <= 1e-4):
            raise ContractError("abs_tol must lie in (0, 1e-4]")
        if self.max_terms < 100:
            raise ContractError("max_terms must be >= 100")


DEFAULT_TOL = EvalTolerance()


def _prep(s):
    """Coerce to a 1-d complex array; enforce the sigma > 1 domain."""
    arr = np.asarray(s, dtype=complex)
    scalar = arr.ndim == 0
    flat = np.atleast_1d(arr).ravel()
    if flat.size:
        if not (np.all(np.isfinite(flat.real)) and np.all(np.isfinite(flat.imag))):
            raise DomainError("s must be finite")
        if np.any(flat.real <= 1.0):
            raise DomainError("evaluation requires Re(s) > 1")
    return flat, scalar, arr.shape


def _restore(vals, scalar, shape):
    if scalar:
        return complex(vals[0])
    return vals.reshape(shape)


# ---------------------------------------------------------------------------
# Euler-Maclaurin core
# ---------------------------------------------------------------------------


def _remainder_bound(sig_pow: float, sig_prod: float, t: float, N: int) -> float:
    """Rigorous bound on the Euler-Maclaurin remainder after the B_8 term.

    |R| <= |B_10/10!| * |s(s+1)...(s+8)| * N^(-sigma-9) * |s+9|/(sigma+9),
    maximized over a batch via sig_pow = min Re(s) (controls the N power)
    and sig_prod = max Re(s), t = max |Im(s)| (control the products).
    """
    prod = 1.0
    for j in range(9):
        prod *= math.hypot(sig_prod + j, t)
    last = math.hypot(sig_prod + 9.0, t) / (sig_pow + 9.0)
    return _B10_OVER_FACT * prod * last * N ** (-(sig_pow + 9.0))


def _choose_N(sig_min, sig_max, t_max, abs_tol, max_terms, deriv=False, tight=False):
    """Smallest truncation N = max(10, ceil|t|+10) * 2^j meeting the bound.

    tight=True starts the doubling search at N = 10 instead; used for the
    interior Moebius terms where sigma >= 2 makes tiny N sufficient even at
    large |t|, so the default |t|-proportional rule would waste terms.
    """

    def bound(n):
        if deriv:
            # Cauchy circle of radius 1/2 around each s
            return 2.0 * _remainder_bound(sig_min - 0.5, sig_max + 0.5, t_max + 0.5, n)
        return _remainder_bound(sig_min, sig_max, t_max, n)

    N = 10 if tight else max(10, int(math.ceil(t_max)) + 10)
    if N > max_terms:
        N = max_terms
    while bound(N) > abs_tol and N < max_terms:
        N = min(2 * N, max_terms)
    achieved = bound(N)
    if achieved > abs_tol:
        raise PrecisionError(
            f"term budget {max_terms} cannot push the Euler-Maclaurin remainder "
            f"below {abs_tol:.3g} (achieved {achieved:.3g})",
            achieved=achieved,
        )
    return N


def _em_eval(s: np.ndarray, N: int, want: str):
    """Euler-Maclaurin evaluation of zeta (and/or its derivative) at fixed N.

    want is one of "value", "deriv", "both". Returns (value, deriv) with the
    unrequested slot None. Chunks the (points x terms) power matrix to keep
    the working set near 4M cells.
    """
    npts = s.size
    need_v = want in ("value", "both")
    need_d = want in ("deriv", "both")
    val = np.zeros(npts, dtype=complex) if need_v else None
    der = np.zeros(npts, dtype=complex) if need_d else None
    cells = 4_000_000
    pblock = max(1, cells // max(N, 1))
    ln_all = np.log(np.arange(1, N, dtype=float)) if N > 1 else np.empty(0)
    lnN = math.log(N)
    with np.errstate(under="ignore"):
        for lo in range(0, npts, pblock):
            hi = min(lo + pblock, npts)
            sb = s[lo:hi]
            pw = np.exp(-np.multiply.outer(sb, ln_all))
            if need_v:
                val[lo:hi] = pw.sum(axis=1)
            if need_d:
                der[lo:hi] = -(pw * ln_all).sum(axis=1)
            del pw
        # integral tail, half-term and Bernoulli corrections
        one_m_s = 1.0 - s
        NmS = np.exp(-s * lnN)  # N^{-s}
        tailA = np.exp(one_m_s * lnN) / (s - 1.0)  # N^{1-s}/(s-1)
        if need_v:
            val += tailA + 0.5 * NmS
        if need_d:
            der += tailA * (-lnN) - np.exp(one_m_s * lnN) / (s - 1.0) ** 2
            der += -lnN * 0.5 * NmS
        P = s.copy()  # running product s(s+1)...(s+2k-2)
        H = 1.0 / s  # running sum of reciprocals of those factors
        for k, c in enumerate(_BERN, start=1):
            Npow = np.exp(-(s + (2 * k - 1)) * lnN)
            if need_v:
                val += c * P * Npow
            if need_d:
                der += c * Npow * (P * H - lnN * P)
            if k < len(_BERN):
                f1 = s + (2 * k - 1)
                f2 = s + (2 * k)
                P = P * f1 * f2
                H = H + 1.0 / f1 + 1.0 / f2
    return val, der


def _zeta_core(flat: np.ndarray, tol: EvalTolerance, want: str, tight: bool = False):
    if flat.size == 0:
        empty = np.empty(0, dtype=complex)
        return empty, empty
    sig = flat.real
    t_max = float(np.max(np.abs(flat.imag)))
    N = _choose_N(
        float(np.min(sig)),
        float(np.max(sig)),
        t_max,
        tol.abs_tol,
        tol.max_terms,
        deriv=(want != "value"),
        tight=tight,
    )
    return _em_eval(flat, N, want)


def zeta(s, tol: Optional[EvalTolerance] = None):
    """Riemann zeta on Re(s) > 1, accurate to tol.abs_tol (absolute)."""
    tol = tol or DEFAULT_TOL
    flat, scalar, shape = _prep(s)
    val, _ = _zeta_core(flat, tol, "value")
    return _restore(val, scalar, shape)


def zeta_deriv(s, tol: Optional[EvalTolerance] = None):
    """zeta'(s) on Re(s) > 1 via the term-differentiated summation."""
    tol = tol or DEFAULT_TOL
    flat, scalar, shape = _prep(s)
    _, der = _zeta_core(flat, tol, "deriv")
    return _restore(der, scalar, shape)


# ---------------------------------------------------------------------------
# prime zeta via Moebius-log
# ---------------------------------------------------------------------------


def _small_primes(limit: int) -> np.ndarray:
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(math.isqrt(limit)) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.flatnonzero(sieve)


def _mobius_upto(K: int) -> np.ndarray:
    """mu(0..K) by a smallest-prime-factor style sieve."""
    mu = np.ones(K + 1, dtype=np.int64)
    prime = np.ones(K + 1, dtype=bool)
    prime[:2] = False
    for p in range(2, K + 1):
        if prime[p]:
            prime[2 * p :: p] = False
            mu[p::p] *= -1
            sq = p * p
            if sq <= K:
                mu[sq::sq] = 0
    mu[0] = 0
    return mu


def _real_zeta(sigma: float) -> float:
    v, _ = _zeta_core(np.array([complex(sigma)]), EvalTolerance(1e-9, 1_000_000), "value")
    return float(v[0].real)


def _log_zeta_certified(flat: np.ndarray, table, tol: EvalTolerance) -> np.ndarray:
    """log zeta(s) on the analytic branch that is real on (1, oo).

    Peels Euler factors of primes <= P0, growing P0 until the remaining
    product provably has |Im log| < pi so its principal log is the branch.
    """
    sig_min = float(np.min(flat.real))
    log_zeta_sig = math.log(_real_zeta(sig_min))
    peel_caps = (1, 100, 10_000, 100_000)
    chosen = None
    for cap in peel_caps:
        primes = _small_primes(cap) if cap > 1 else np.empty(0, dtype=np.int64)
        bound = log_zeta_sig + float(np.sum(np.log1p(-np.power(primes.astype(float), -sig_min)))) if cap > 1 else log_zeta_sig
        if bound < math.pi - 0.2:
            chosen = (cap, primes)
            break
    if chosen is None:
        logger.warning(
            "sigma = %.6g is too close to 1 to certify the logarithm branch; "
            "using the principal branch best-effort",
            sig_min,
        )
        chosen = (peel_caps[-1], _small_primes(peel_caps[-1]))
    cap, primes = chosen
    if table is not None and getattr(table, "limit", 0) >= cap > 1:
        primes = table.primes_in(1, cap)

    inv_zeta_bound = _real_zeta(sig_min) / _real_zeta(2.0 * sig_min)
    inner = EvalTolerance(
        max(min(tol.abs_tol / (3.0 * inv_zeta_bound), 1e-5), 1e-15), tol.max_terms
    )
    zval, _ = _zeta_core(flat, inner, "value")
    if primes.size == 0:
        return np.log(zval)
    factor_sum = np.zeros(flat.size, dtype=complex)
    block = max(1, 4_000_000 // flat.size) if flat.size else primes.size
    lnp = np.log(primes.astype(float))
    with np.errstate(under="ignore"):
        for lo in range(0, primes.size, block):
            chunk = lnp[lo : lo + block]
            factor_sum += np.log1p(-np.exp(-np.multiply.outer(flat, chunk))).sum(axis=1)
        peeled = zval * np.exp(factor_sum)
    return np.log(peeled) - factor_sum


def _prime_zeta_core(flat: np.ndarray, table, tol: EvalTolerance, want: str):
    if flat.size == 0:
        empty = np.empty(0, dtype=complex)
        return empty, empty
    abs_tol = tol.abs_tol
    sig_min = float(np.min(flat.real))
    # truncation K: tail of sum_k (3/k) 2^{-k sigma} below abs_tol/2
    K = 1
    while True:
        tail = 3.0 * 2.0 ** (-(K + 1) * sig_min) / ((K + 1) * (1.0 - 2.0 ** (-sig_min)))
        if tail < abs_tol / 2.0 or K >= 512:
            break
        K += 1
    mu = _mobius_upto(K)
    need_v = want in ("value", "both")
    need_d = want in ("deriv", "both")
    val = np.zeros(flat.size, dtype=complex) if need_v else None
    der = np.zeros(flat.size, dtype=complex) if need_d else None

    # k = 1: branch-certified log and/or the logarithmic derivative
    if need_v:
        val += _log_zeta_certified(flat, table, tol)
    if need_d:
        zmag_low = _real_zeta(2.0 * sig_min) / _real_zeta(sig_min)
        zd_mag = -_zeta_deriv_real(sig_min)
        inner_abs = max(min(abs_tol * zmag_low / (3.0 * (1.0 + zd_mag / zmag_low)), 1e-5), 1e-15)
        zv, zd = _zeta_core(flat, EvalTolerance(inner_abs, tol.max_terms), "both")
        der += zd / zv

    per_term = abs_tol / (8.0 * max(K, 1))
    for k in range(2, K + 1):
        if mu[k] == 0:
            continue
        if 3.0 * 2.0 ** (-k * sig_min) < per_term:
            break
        inner = EvalTolerance(max(per_term, 1e-15), tol.max_terms)
        if need_d:
            zv, zd = _zeta_core(k * flat, inner, "both", tight=True)
            der += mu[k] * (zd / zv)
            if need_v:
                val += (mu[k] / k) * np.log(zv)
        else:
            zv, _ = _zeta_core(k * flat, inner, "value", tight=True)
            val += (mu[k] / k) * np.log(zv)
    return val, der


def _zeta_deriv_real(sigma: float) -> float:
    _, d = _zeta_core(np.array([complex(sigma)]), EvalTolerance(1e-9, 1_000_000), "deriv")
    return float(d[0].real)


def prime_zeta(s, table=None, tol: Optional[EvalTolerance] = None):
    """Prime zeta P(s) = sum over primes of p^{-s}, Re(s) > 1.

    Computed from log zeta via Moebius inversion; `table` only supplies the
    small primes used for branch certification and may be None.
    """
    tol = tol or DEFAULT_TOL
    flat, scalar, shape = _prep(s)
    val, _ = _prime_zeta_core(flat, table, tol, "value")
    return _restore(val, scalar, shape)


def prime_zeta_deriv(s, table=None, tol: Optional[EvalTolerance] = None):
    """P'(s) = sum_k mu(k) * zeta'(ks)/zeta(ks), Re(s) > 1."""
    tol = tol or DEFAULT_TOL
    flat, scalar, shape = _prep(s)
    _, der = _prime_zeta_core(flat, table, tol, "deriv")
    return _restore(der, scalar, shape)


def prime_zeta_pair(s, table=None, tol: Optional[EvalTolerance] = None):
    """(P(s), P'(s)) sharing the zeta evaluations between the two sums."""
    tol = tol or DEFAULT_TOL
    flat, scalar, shape = _prep(s)
    val, der = _prime_zeta_core(flat, table, tol, "both")
    return _restore(val, scalar, shape), _restore(der, scalar, shape)


# ---------------------------------------------------------------------------
# pole-subtracted remainders
# ---------------------------------------------------------------------------


def psi_entire(s, tol: Optional[EvalTolerance] = None):
    """psi(s) = zeta(s)/s - 1/(s-1), the entire remainder at the pole.

    Inside |s-1| < 1e-3 the subtraction is replaced by the Stieltjes series
    psi(s) = (gamma_0 - 1 - gamma_1 w + gamma_2 w^2/2 - gamma_3 w^3/6)/(1+w)
    with w = s-1, avoiding the ~|s-1|^{-1} cancellation."""
    tol = tol or DEFAULT_TOL
    flat, scalar, shape = _prep(s)
    out = np.empty(flat.size, dtype=complex)
    w = flat - 1.0
    near = np.abs(w) < _PSI_SERIES_RADIUS
    if np.any(near):
        wn = w[near]
        series = GAMMA_0 - 1.0 - GAMMA_1 * wn + (GAMMA_2 / 2.0) * wn**2 - (GAMMA_3 / 6.0) * wn**3
        out[near] = series / (1.0 + wn)
    if np.any(~near):
        sf = flat[~near]
        zv, _ = _zeta_core(sf, tol, "value")
        out[~near] = zv / sf - 1.0 / (sf - 1.0)
    return _restore(out, scalar, shape)


def psi_prime_part(s, table=None, tol: Optional[EvalTolerance] = None):
    """psi_P(s) = P(s)/s + log(s-1), principal log (Re(s-1) > 0)."""
    tol = tol or DEFAULT_TOL
    flat, scalar, shape = _prep(s)
    val, _ = _prime_zeta_core(flat, table, tol, "value")
    out = val / flat + np.log(flat - 1.0)
    return _restore(out, scalar, shape)
