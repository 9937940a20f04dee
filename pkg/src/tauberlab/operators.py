"""Truncated convolution operators on L^2 of a symmetric interval.

For a growth function S with transform G, the operator acts on f in L^2(I),
I = [-L/2, L/2], by

    (W f)(t) = (1/pi) * integral over I of f(tau) Re G(1+eps+i(t-tau)) dtau,

and this module builds its matrix truncation in the orthonormal exponential
basis e_n(t) = L^{-1/2} exp(2 pi i n t / L), n = -N..N, by two independent
routes.

Kernel route: tensor Gauss-Legendre quadrature of the double integral.
Uniform panels make the kernel argument t - tau depend only on the panel
offset and the node pair, so G is evaluated once per unique difference and
the matrix accumulates block-Toeplitz style.

Frequency route: by the Plancherel identity the matrix element is a single
frequency integral against the windowed sine factors

    M[m][n] = ((-1)^{m+n} / pi) * integral of mt(x) sin^2 x
              / ((x - pi m)(x - pi n)) dx,      x = u L / 2,

with mt(x) = g(2|x|/L) e^{-2 eps |x|/L} and g(u) = S(e^u) e^{-u}. Partial
fractions reduce everything to the shared one-dimensional integrals

    F(k) = int_0^inf mt sin^2 x [1/(x - pi k) - 1/(x + pi k)] dx   (odd in k)
    D(n) = int_0^inf mt [sinc^2 + sinc^2] dx                        (even)

so a full order-N assembly costs 2(N+1) one-dimensional integrals over one
shared grid. Removable singularities are evaluated stably through
sin^2 x/(x - pi k) = sin(d) sinc(d/pi) with d = x - pi k.

The grid aligns panels with the jumps of step-backed sources (up to a
resolution cap, beyond which a declared between-jump mean replaces the
sawtooth when available), refines panels inside the Fejer main lobes
|x - pi n| < 3 pi, and cuts off at X chosen from the damping (eps > 0) or
at pi n_max + 500 with an integration-by-parts tail correction (eps = 0,
allowed because bounded g keeps the windowed integrand integrable).
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .arith import GrowthFunction
from .errors import ContractError, DomainError, PrecisionError
from .special import EvalTolerance
from .transform import transform_quadrature

__all__ = [
    "IntervalSpec",
    "OperatorTruncation",
    "WeakLimitReport",
    "kernel",
    "assemble_kernel_route",
    "assemble_frequency_route",
    "diagonal_sequence",
    "split_identity",
    "spectrum",
    "weak_limit_diagnostic",
]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
_LOBE_HALF_WIDTH = 3.0 * math.pi  # refine |x - pi n| below this
_EPS0_X_PAD = 500.0  # undamped cutoff past the last lobe
_SMOOTH_RESOLVE = 1024.0  # resolve jumps exactly below this x when a mean model exists
_RAW_RESOLVE = 200_000.0  # ... and below this when none does
_MAX_ORDER = 256


@dataclass(frozen=True)
class IntervalSpec:
    """The symmetric interval I = [-L/2, L/2]."""

    length: float

    def __post_init__(self):
        if not (self.length > 0.0) or not math.isfinite(self.length):
            raise ContractError("interval length must be positive and finite")

    @property
    def half(self) -> float:
        return self.length / 2.0


@dataclass
class OperatorTruncation:
    """A real symmetric matrix truncation of W (or of Psi = W - A Id).

    entries[i][j] is the element for basis indices m = i - N, n = j - N;
    rows and columns both run m, n = -N..N.
    """

    interval: IntervalSpec
    epsilon: float
    order: int
    entries: np.ndarray
    source: str
    route: str
    A: float = 0.0

    def index_of(self, n: int) -> int:
        if abs(n) > self.order:
            raise DomainError(f"basis index {n} outside truncation order {self.order}")
        return n + self.order

    def diagonal(self) -> np.ndarray:
        return np.diag(self.entries)

    def symmetry_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.T)))

    def check_symmetric(self, tol: float = 1e-9) -> None:
        defect = self.symmetry_defect()
        if defect >= tol:
            raise ContractError(
                f"matrix is not symmetric: max |M - M^T| = {defect:.3e} >= {tol:.1e}"
            )

    def csv_text(self) -> str:
        lines = [
            f"# tauberlab-matrix v1, L={self.interval.length!r}, eps={self.epsilon!r}, "
            f"N={self.order}, source={self.source}, route={self.route}, A={self.A!r}",
            "# rows m = -N..N, cols n = -N..N",
        ]
        for row in self.entries:
            lines.append(",".join(f"{v:.17g}" for v in row))
        return "\n".join(lines) + "\n"

    def to_csv(self, path) -> None:
        """Write the matrix with its metadata header, atomically."""
        path = Path(path)
        data = self.csv_text()
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=str(path.parent), suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    @staticmethod
    def from_csv(path) -> "OperatorTruncation":
        text = Path(path).read_text().strip().splitlines()
        if not text or not text[0].startswith("# tauberlab-matrix v1"):
            raise ContractError(f"not a tauberlab matrix file: {path}")
        meta = {}
        for part in text[0].split(",")[1:]:
            key, _, val = part.strip().partition("=")
            meta[key.strip()] = val.strip()
        rows = [line for line in text[1:] if not line.startswith("#")]
        entries = np.array([[float(v) for v in line.split(",")] for line in rows])
        return OperatorTruncation(
            interval=IntervalSpec(float(meta["L"])),
            epsilon=float(meta["eps"]),
            order=int(meta["N"]),
            entries=entries,
            source=meta.get("source", "?"),
            route=meta.get("route", "?"),
            A=float(meta.get("A", 0.0)),
        )


# ---------------------------------------------------------------------------
# kernel route
# ---------------------------------------------------------------------------


def kernel(S: GrowthFunction, eps: float, x):
    """K_eps(x) = (1/pi) Re G(1 + eps + i x), the convolution kernel.

    Uses the source's closed-form transform when declared, else the
    quadrature fallback. Needs eps >= 1e-3: the kernel route never takes
    the eps -> 0 limit pointwise."""
    if eps < 1e-3:
        raise DomainError("kernel evaluation requires eps >= 1e-3")
    arr = np.asarray(x, dtype=float)
    s = 1.0 + eps + 1j * arr
    if S.laplace is not None:
        G = S.laplace(s)
    else:
        G = transform_quadrature(S, s, U=min(18.0, S.u_cap))
    out = np.real(G) / math.pi
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


def assemble_kernel_route(
    S: GrowthFunction,
    I: IntervalSpec,
    eps: float,
    N: int,
    tol: Optional[EvalTolerance] = None,
) -> OperatorTruncation:
    """Matrix truncation by tensor Gauss-Legendre quadrature of the kernel.

    Uniform panels of width min(eps, 0.1, L/(3N)) resolve both the kernel
    peak (scale eps) and the fastest basis oscillation (period L/N); the
    kernel is evaluated once per unique node difference and the matrix is
    accumulated over panel offsets (M_{-d} = M_d^H keeps half the work)."""
    if eps < 1e-3:
        raise DomainError("kernel route requires eps >= 1e-3")
    if not (0 <= N <= _MAX_ORDER):
        raise ContractError(f"order N must lie in [0, {_MAX_ORDER}]")
    L = I.length
    w_target = min(eps, 0.1, L / (3 * N) if N > 0 else math.inf)
    P = int(math.ceil(L / w_target))
    w = L / P
    xi = 0.5 * w * (_GL_NODES + 1.0)  # node offsets within a panel
    wts = 0.5 * w * _GL_WEIGHTS

    # kernel blocks per panel offset: arg = d*w + xi_a - xi_b
    pair = xi[:, None] - xi[None, :]
    d_vals = np.arange(P, dtype=float) * w
    args = (d_vals[:, None, None] + pair[None, :, :]).ravel()
    kv = kernel(S, eps, args)
    if not np.all(np.isfinite(kv)):
        bad = int(np.flatnonzero(~np.isfinite(np.asarray(kv)))[0])
        d_bad, a_bad, b_bad = np.unravel_index(bad, (P, 16, 16))
        raise PrecisionError(
            f"kernel quadrature produced a non-finite value at panel offset "
            f"{d_bad}, node pair ({a_bad},{b_bad})"
        )
    Kb = np.asarray(kv).reshape(P, 16, 16)

    # basis-times-weights per panel: B[p, a, j] = w_a e_{n_j}(t_{p,a}) / sqrt(L)
    idx = np.arange(-N, N + 1)
    t_nodes = (-L / 2.0 + np.arange(P)[:, None] * w + xi[None, :]).reshape(P, 16)
    phase = np.exp(2j * math.pi * np.multiply.outer(t_nodes, idx) / L) / math.sqrt(L)
    B = phase * wts[None, :, None]

    m_dim = 2 * N + 1
    M = np.zeros((m_dim, m_dim), dtype=complex)
    flat = B.reshape(P * 16, m_dim)
    for d in range(P):
        nq = P - d
        KG = np.einsum("ab,qbm->qam", Kb[d], B[:nq])
        contrib = flat[d * 16 :].reshape(nq * 16, m_dim).conj().T @ KG.reshape(
            nq * 16, m_dim
        )
        M += contrib if d == 0 else contrib + contrib.conj().T

    imag_max = float(np.max(np.abs(M.imag))) if m_dim else 0.0
    if imag_max >= 1e-9:
        i, j = np.unravel_index(int(np.argmax(np.abs(M.imag))), M.shape)
        raise ContractError(
            f"assembled entry ({i - N},{j - N}) has imaginary part {imag_max:.3e}"
        )
    ent = M.real.copy()
    ent = 0.5 * (ent + ent.T)
    return OperatorTruncation(
        interval=I,
        epsilon=eps,
        order=N,
        entries=ent,
        source=S.label,
        route="kernel_quadrature",
        A=0.0,
    )


# ---------------------------------------------------------------------------
# frequency route: shared grid
# ---------------------------------------------------------------------------


def _resolve_u(S: GrowthFunction) -> float:
    """u below which jumps are resolved exactly by panel alignment."""
    if S.breakpoints_in is None:
        return 0.0
    cap = _SMOOTH_RESOLVE if S.g_smooth is not None else _RAW_RESOLVE
    return min(math.log(cap), S.u_cap)


def _cutoff_damped(C: float, eps: float, L: float, N: int, target: float) -> float:
    """Fixed point of e^{-2 eps X / L} C / (pi (X - pi N)) = target."""
    rate = 2.0 * eps / L
    X = math.pi * N + 50.0
    for _ in range(40):
        X = math.pi * N + max(
            3.0 * _LOBE_HALF_WIDTH,
            math.log(max(C, 1e-300) / (target * math.pi * (X - math.pi * N))) / rate,
        )
    return X


def _grid_edges(S: GrowthFunction, L: float, N: int, X: float, panels: Optional[int]):
    """Panel edges on [0, X]: jump-aligned, lobe-refined, growing in the tail."""
    half = L / 2.0
    lobe_end = math.pi * (N + 3)
    base_w = X / panels if panels else min(0.1, math.pi / L) * half
    fine_w = base_w / 4.0

    def subdivide(a: float, b: float, out: list) -> None:
        width = fine_w if a < lobe_end else min(base_w, 2.0)
        k = max(1, int(math.ceil((b - a) / width)))
        out.extend(np.linspace(a, b, k + 1)[1:].tolist())

    edges = [0.0]
    cursor = 0.0
    u_res = _resolve_u(S)
    a_end = min(half * u_res, X)
    if S.breakpoints_in is not None and a_end > 0.0:
        bps = np.asarray(S.breakpoints_in(1.0 - 1e-12, math.exp(a_end / half)))
        knots = half * np.log(bps[bps > 1.0].astype(float))
        knots = knots[(knots > 1e-12) & (knots < a_end - 1e-12)]
        for knot in knots:
            subdivide(cursor, float(knot), edges)
            cursor = float(knot)
        subdivide(cursor, a_end, edges)
        cursor = a_end
    if cursor < lobe_end < X:
        subdivide(cursor, lobe_end, edges)
        cursor = lobe_end
    if cursor < X:
        # geometric growth out to the cutoff
        grow = []
        wcur = base_w
        pos = cursor
        while pos < X:
            pos = min(pos + wcur, X)
            grow.append(pos)
            wcur = min(wcur * 1.15, 2.0)
        edges.extend(grow)
    return np.asarray(edges)


def _source_values(S: GrowthFunction, L: float, eps: float, xs: np.ndarray) -> np.ndarray:
    """mt(x) = g_eff(2x/L) e^{-2 eps x/L} on the grid nodes.

    g_eff is the exact ratio up to the jump-resolution point, the declared
    between-jump mean beyond it (when available), and frozen at u_cap past
    the evaluable range."""
    half = L / 2.0
    u = xs / half
    u_res = _resolve_u(S)
    g = np.empty_like(u)
    if S.breakpoints_in is None:
        g = np.asarray(S.g_clipped(u), dtype=float)
    else:
        exact = u <= u_res
        if np.any(exact):
            g[exact] = S.g(u[exact])
        rest = ~exact
        if np.any(rest):
            ur = u[rest]
            if S.g_smooth is not None:
                g[rest] = np.asarray(
                    S.g_smooth(np.maximum(ur, S.smooth_from_u)), dtype=float
                )
            else:
                g[rest] = np.asarray(S.g_clipped(ur), dtype=float)
    if eps > 0.0:
        return g * np.exp(-eps * u)
    return g


def _gl_nodes_on(edges: np.ndarray):
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    xs = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    ws = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return xs, ws


def _half_line_integrals(xs: np.ndarray, wv: np.ndarray, k_max: int, want_F: bool):
    """F(k) (optional) and D(k) for k = 0..k_max over the weighted nodes."""
    ks = math.pi * np.arange(k_max + 1)
    F = np.zeros(k_max + 1) if want_F else None
    D = np.zeros(k_max + 1)
    block = max(1, 2_000_000 // (k_max + 1))
    for lo in range(0, xs.size, block):
        x = xs[lo : lo + block]
        wvb = wv[lo : lo + block]
        dm = x[None, :] - ks[:, None]
        dp = x[None, :] + ks[:, None]
        sm = np.sinc(dm / math.pi)
        sp = np.sinc(dp / math.pi)
        D += (sm * sm + sp * sp) @ wvb
        if want_F:
            F += (np.sin(dm) * sm - np.sin(dp) * sp) @ wvb
    return F, D


def _tail_T(X: float, a: float) -> float:
    """Closed form of int_X^inf sin^2 x/(x-a)^2 dx up to O((X-a)^{-3})."""
    d = X - a
    return 1.0 / (2.0 * d) + math.sin(2.0 * X) / (4.0 * d * d) - math.cos(2.0 * X) / (
        4.0 * d**3
    )


def assemble_frequency_route(
    S: GrowthFunction,
    I: IntervalSpec,
    eps: float,
    N: int,
    U: Optional[float] = None,
    panels: Optional[int] = None,
    tol: Optional[EvalTolerance] = None,
) -> OperatorTruncation:
    """Matrix truncation from the frequency-side integrals F(k), D(n).

    eps = 0 is allowed here (bounded g keeps every entry absolutely
    convergent through the Fejer window); the cutoff is then
    pi N + 500 with integration-by-parts tail corrections. For eps > 0 the
    cutoff comes from the exponential damping. Passing U overrides the
    cutoff (x = U L/2) and raises PrecisionError if its tail bound exceeds
    the tolerance."""
    if eps < 0.0:
        raise DomainError("eps must be >= 0 on the frequency route")
    if not (0 <= N <= _MAX_ORDER):
        raise ContractError(f"order N must lie in [0, {_MAX_ORDER}]")
    target = (tol.abs_tol if tol else 1e-9) * 0.1
    L = I.length
    C = S.growth_constant
    if U is not None:
        X = U * L / 2.0
        if eps > 0.0:
            est = C * math.exp(-eps * U) / (math.pi * max(X - math.pi * N, 1.0))
        else:
            est = C / (math.pi * max(X - math.pi * N, 1.0))
        if tol is not None and est > tol.abs_tol:
            X_need = (
                _cutoff_damped(C, eps, L, N, tol.abs_tol * 0.1)
                if eps > 0.0
                else math.pi * N + _EPS0_X_PAD
            )
            raise PrecisionError(
                f"frequency tail bound {est:.3g} beyond U = {U:g} exceeds "
                f"{tol.abs_tol:.3g}; increase U to about {2.0 * X_need / L:.1f}",
                achieved=est,
            )
    elif eps > 0.0:
        X = _cutoff_damped(C, eps, L, N, target)
    else:
        X = math.pi * N + _EPS0_X_PAD

    edges = _grid_edges(S, L, N, X, panels)
    xs, ws = _gl_nodes_on(edges)
    vals = _source_values(S, L, eps, xs)
    F, D = _half_line_integrals(xs, ws * vals, N, want_F=True)

    if eps == 0.0:
        f_inf = float(_source_values(S, L, eps, np.array([X]))[0])
        ks = np.arange(N + 1)
        with np.errstate(divide="ignore"):
            F += np.where(
                ks > 0, 0.5 * f_inf * np.log((X + math.pi * ks) / (X - math.pi * ks)), 0.0
            )
        D += f_inf * np.array([_tail_T(X, math.pi * k) + _tail_T(X, -math.pi * k) for k in ks])

    idx = np.arange(-N, N + 1)
    F_signed = np.sign(idx) * F[np.abs(idx)]
    signs = np.where(idx % 2 == 0, 1.0, -1.0)
    sign_mat = np.multiply.outer(signs, signs)
    diff_idx = idx[None, :] - idx[:, None]  # n - m
    with np.errstate(divide="ignore", invalid="ignore"):
        M = sign_mat * (F_signed[None, :] - F_signed[:, None]) / (
            math.pi**2 * diff_idx
        )
    np.fill_diagonal(M, D[np.abs(idx)] / math.pi)
    M = 0.5 * (M + M.T)
    return OperatorTruncation(
        interval=I,
        epsilon=eps,
        order=N,
        entries=M,
        source=S.label,
        route="frequency_formula",
        A=0.0,
    )


def diagonal_sequence(
    S: GrowthFunction,
    I: IntervalSpec,
    eps: float,
    A: float,
    n_max: int,
    tol: Optional[EvalTolerance] = None,
) -> np.ndarray:
    """<Psi e_n, e_n> for n = 0..n_max, Psi = W - A Id, by the 1-D integral.

    At eps = 0 the integrand is h(u) = g(|u|) - A directly; at eps > 0 the
    damped g is integrated and A subtracted exactly (the Fejer window has
    unit mass). Diagonals are even in n."""
    if eps < 0.0:
        raise DomainError("eps must be >= 0")
    if n_max < 0:
        raise ContractError("n_max must be >= 0")
    L = I.length
    if eps > 0.0:
        target = (tol.abs_tol if tol else 1e-9) * 0.1
        X = _cutoff_damped(S.growth_constant, eps, L, n_max, target)
    else:
        X = math.pi * n_max + _EPS0_X_PAD
    edges = _grid_edges(S, L, n_max, X, None)
    xs, ws = _gl_nodes_on(edges)
    vals = _source_values(S, L, eps, xs)
    if eps == 0.0:
        vals = vals - A
    _, D = _half_line_integrals(xs, ws * vals, n_max, want_F=False)
    if eps == 0.0:
        f_inf = float(_source_values(S, L, eps, np.array([X]))[0]) - A
        D += f_inf * np.array(
            [_tail_T(X, math.pi * k) + _tail_T(X, -math.pi * k) for k in range(n_max + 1)]
        )
        return D / math.pi
    return D / math.pi - A


# ---------------------------------------------------------------------------
# split, spectrum, weak-limit diagnostics
# ---------------------------------------------------------------------------


def split_identity(W: OperatorTruncation, A: float) -> OperatorTruncation:
    """Psi = W - A Id, recording A in the metadata."""
    if not math.isfinite(A):
        raise ContractError("A must be finite")
    ent = W.entries - A * np.eye(W.entries.shape[0])
    return OperatorTruncation(
        interval=W.interval,
        epsilon=W.epsilon,
        order=W.order,
        entries=ent,
        source=W.source,
        route=W.route,
        A=A,
    )


def spectrum(M) -> np.ndarray:
    """Eigenvalues of a symmetric truncation, sorted by |lambda| descending."""
    ent = M.entries if isinstance(M, OperatorTruncation) else np.asarray(M, dtype=float)
    if ent.ndim != 2 or ent.shape[0] != ent.shape[1]:
        raise ContractError("spectrum needs a square matrix")
    defect = float(np.max(np.abs(ent - ent.T))) if ent.size else 0.0
    if defect >= 1e-9:
        raise ContractError(
            f"matrix is not symmetric: max |M - M^T| = {defect:.3e} >= 1e-09"
        )
    eig = np.linalg.eigvalsh(0.5 * (ent + ent.T))
    order = np.argsort(-np.abs(eig), kind="stable")
    return eig[order]


@dataclass
class WeakLimitReport:
    """Successive-difference diagnostic for the eps -> 0 weak limit."""

    source: str
    length: float
    order: int
    schedule: Sequence[float]
    deltas: np.ndarray
    ratios: np.ndarray
    cauchy: bool
    final_diagonal: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "length": self.length,
            "order": self.order,
            "schedule": list(self.schedule),
            "deltas": self.deltas.tolist(),
            "ratios": self.ratios.tolist(),
            "cauchy": bool(self.cauchy),
            "final_diagonal": self.final_diagonal.tolist(),
        }


def weak_limit_diagnostic(
    S: GrowthFunction,
    I: IntervalSpec,
    N: int,
    eps_schedule: Sequence[float],
) -> WeakLimitReport:
    """Assemble W across the eps schedule and test Cauchy-like decay.

    Reports Delta_k = max |M(eps_{k+1}) - M(eps_k)| and verdicts true when
    each Delta shrinks by >= 1.5x per step (the schedule is expected to
    halve eps each step)."""
    sched = [float(e) for e in eps_schedule]
    if len(sched) < 2:
        raise ContractError("eps schedule needs at least two values")
    if any(e <= 0 for e in sched) or any(b >= a for a, b in zip(sched, sched[1:])):
        raise ContractError("eps schedule must be strictly decreasing and positive")
    mats = [assemble_frequency_route(S, I, e, N) for e in sched]
    deltas = np.array(
        [float(np.max(np.abs(b.entries - a.entries))) for a, b in zip(mats, mats[1:])]
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = deltas[:-1] / deltas[1:]
    floor = 1e-14
    cauchy = all(
        (deltas[i + 1] < floor) or (ratios[i] >= 1.5) for i in range(len(deltas) - 1)
    )
    return WeakLimitReport(
        source=S.label,
        length=I.length,
        order=N,
        schedule=sched,
        deltas=deltas,
        ratios=np.where(np.isfinite(ratios), ratios, np.inf),
        cauchy=bool(cauchy),
        final_diagonal=mats[-1].diagonal(),
    )
