"""Exact desk-scale lattice geometry and Monte Carlo second moments."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from ._rng import child_seeds, run_chunks, split_trials
from .construction import ConstructionALattice
from .exceptions import BudgetExceededError, InvalidConfigError

DEFAULT_BUDGET = 10**6
SPHERE_BOUND = 1.0 / (2 * math.pi * math.e)
_TIE_TOL = 1e-9


def log_unit_ball_volume(n: int) -> float:
    return 0.5 * n * math.log(math.pi) - float(gammaln(n / 2 + 1))


def unit_ball_volume(n: int) -> float:
    if n < 1:
        raise InvalidConfigError("dimension must be >= 1")
    return math.exp(log_unit_ball_volume(n))


# -- integer points in a ball ----------------------------------------------

@dataclass(frozen=True)
class BallSpec:
    center: tuple[float, ...]
    radius: float
    support_cap: int | None = None

    def __post_init__(self):
        if self.radius < 0:
            raise InvalidConfigError("radius must be non-negative")
        if self.support_cap is not None and not 0 <= self.support_cap <= len(self.center):
            raise InvalidConfigError("support cap must lie in [0, n]")

    @property
    def n(self) -> int:
        return len(self.center)


def count_integer_points(ball: BallSpec, budget: int = DEFAULT_BUDGET) -> int:
    """Exact ``|Z^n ∩ (center + radius·B)|``, optionally restricted by support size.

    Coordinates are fixed one at a time; partial points whose squared
    distance already exceeds ``radius**2`` are discarded.
    """
    c = np.asarray(ball.center, dtype=float)
    r = float(ball.radius)
    r2 = r * r * (1 + _TIE_TOL) + _TIE_TOL
    lo = np.ceil(c - r - 1e-12).astype(np.int64)
    hi = np.floor(c + r + 1e-12).astype(np.int64)
    if ball.support_cap is None:
        box = 1
        for a, b in zip(lo, hi):
            box *= max(0, int(b - a + 1))
        if box > budget:
            raise BudgetExceededError(f"box of {box} points exceeds budget {budget}")
    cap = ball.n if ball.support_cap is None else ball.support_cap
    dist = np.zeros(1)
    supp = np.zeros(1, dtype=np.int64)
    for j in range(ball.n):
        vals = np.arange(lo[j], hi[j] + 1)
        if vals.size == 0:
            return 0
        d = (vals - c[j]) ** 2
        nd = (dist[:, None] + d[None, :]).ravel()
        ns = (supp[:, None] + (vals != 0)[None, :]).ravel()
        keep = (nd <= r2) & (ns <= cap)
        dist, supp = nd[keep], ns[keep]
        if dist.size > budget:
            raise BudgetExceededError(f"{dist.size} partial points exceed budget {budget}")
    return int(dist.size)


def ball_count_bounds(n: int, r: float) -> tuple[float, float]:
    """Volume sandwich for integer points in an n-ball of radius ``r``."""
    vn = unit_ball_volume(n)
    return vn * max(0.0, r - math.sqrt(n) / 2) ** n, vn * (r + math.sqrt(n) / 2) ** n


def support_capped_bound(n: int, m: int, r: float) -> float:
    if m == 0:
        return 1.0
    return math.comb(n, m) * unit_ball_volume(m) * (r + math.sqrt(m) / 2) ** m


# -- closest point ----------------------------------------------------------

def _check_budget(L: ConstructionALattice, budget: int) -> None:
    if L.code_dim * math.log(L.p) > math.log(budget) + 1e-9:
        raise BudgetExceededError(f"{L.p}^{L.code_dim} codewords exceed budget {budget}")


def _lex_first(rows: np.ndarray) -> int:
    order = np.lexsort(rows.T[::-1])
    return int(order[0])


def closest_points(L: ConstructionALattice, X, budget: int = DEFAULT_BUDGET
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Closest lattice point and squared distance for each row of ``X``.

    Every codeword ``c`` is tried; the best point of ``c + pZ^n`` is found
    coordinate-wise. Ties go to the lexicographically smallest point.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != L.n:
        raise InvalidConfigError(f"expected vectors of length {L.n}")
    p = L.p
    if L.code_dim == L.n:
        pts = np.ceil(X - 0.5)
        return pts.astype(np.int64), ((X - pts) ** 2).sum(axis=1)
    if L.code_dim == 0:
        pts = p * np.ceil(X / p - 0.5)
        return pts.astype(np.int64), ((X - pts) ** 2).sum(axis=1)
    _check_budget(L, budget)
    C = L.codewords.astype(float)
    K, n = C.shape
    out_pts = np.empty(X.shape, dtype=np.int64)
    out_d2 = np.empty(X.shape[0])
    step = max(1, 2_000_000 // (K * n))
    for s in range(0, X.shape[0], step):
        xb = X[s:s + step]
        D = xb[:, None, :] - C[None, :, :]
        W = np.ceil(D / p - 0.5)
        R = D - p * W
        d2 = (R * R).sum(axis=2)
        best = d2.min(axis=1)
        tied = d2 <= best[:, None] + _TIE_TOL * (1 + best[:, None])
        idx = d2.argmin(axis=1)
        for b in np.flatnonzero(tied.sum(axis=1) > 1):
            cand = np.flatnonzero(tied[b])
            pts = C[cand] + p * W[b, cand]
            idx[b] = cand[_lex_first(pts)]
        rows = np.arange(xb.shape[0])
        out_pts[s:s + step] = (C[idx] + p * W[rows, idx]).astype(np.int64)
        out_d2[s:s + step] = d2[rows, idx]
    return out_pts, out_d2


def closest_point(L: ConstructionALattice, x, budget: int = DEFAULT_BUDGET
                  ) -> tuple[np.ndarray, float]:
    pts, d2 = closest_points(L, np.asarray(x, dtype=float)[None, :], budget)
    return pts[0], math.sqrt(d2[0])


def second_moment_distance(L: ConstructionALattice, x, budget: int = DEFAULT_BUDGET) -> float:
    return float(closest_points(L, np.asarray(x, dtype=float)[None, :], budget)[1][0])


# -- radii ------------------------------------------------------------------

def packing_radius(L: ConstructionALattice, budget: int = DEFAULT_BUDGET
                   ) -> tuple[float, np.ndarray]:
    """Half the minimum distance, plus a (lexicographically first) shortest vector."""
    p, n = L.p, L.n
    cand_norm = float(p)
    cand_vec = np.zeros(n, dtype=np.int64)
    cand_vec[0] = -p
    if L.code_dim > 0:
        _check_budget(L, budget)
        C = L.codewords[1:]  # row 0 is the zero codeword
        V = np.where(C * 2 >= p, C - p, C)
        norms2 = (V * V).sum(axis=1)
        best = int(norms2.min())
        if best < p * p:
            pool = V[norms2 == best]
            cand_vec = pool[_lex_first(pool)]
            cand_norm = math.sqrt(best)
        elif best == p * p:
            pool = np.vstack([V[norms2 == best], cand_vec[None, :]])
            cand_vec = pool[_lex_first(pool)]
    return cand_norm / 2, cand_vec


def effective_radius(L: ConstructionALattice) -> float:
    """Radius of the ball whose volume equals the Voronoi volume ``p^(n-k)``."""
    return math.exp((L.volume_exponent * math.log(L.p) - log_unit_ball_volume(L.n)) / L.n)


# -- normalized second moment ---------------------------------------------

@dataclass
class NsmEstimate:
    mean: float
    half_width: float
    samples: int
    quantizer: str

    @property
    def ci(self) -> tuple[float, float]:
        return self.mean - self.half_width, self.mean + self.half_width


def _nsm_chunk(task) -> tuple[int, float, float]:
    L, count, seq, quantizer, budget, scale = task
    rng = np.random.default_rng(seq)
    n, p = L.n, L.p
    total, mean, m2 = 0, 0.0, 0.0
    block = 20_000
    done = 0
    while done < count:
        b = min(block, count - done)
        U = rng.uniform(0.0, p, size=(b, n))
        if quantizer == "exact_cvp":
            _, d2 = closest_points(L, U, budget)
        else:
            from .decoding import bp_quantize
            pts = bp_quantize(L, U)
            d2 = ((U - pts) ** 2).sum(axis=1)
        d2 = d2 * scale * scale
        # Chan et al. pairwise merge of (count, mean, M2)
        bm = float(d2.mean())
        bm2 = float(((d2 - bm) ** 2).sum())
        delta = bm - mean
        tot = total + b
        mean += delta * b / tot
        m2 += bm2 + delta * delta * total * b / tot
        total = tot
        done += b
    return total, mean, m2


def nsm_estimate(L: ConstructionALattice, samples: int, seed=None, quantizer: str = "exact_cvp",
                 budget: int = DEFAULT_BUDGET, workers: int = 1, scale: float = 1.0
                 ) -> NsmEstimate:
    """Monte Carlo normalized second moment of ``scale * L``.

    Points are drawn uniformly from ``[0, p)^n``; because ``pZ^n`` is a
    sublattice this cube is a union of whole Voronoi cells, so the mean
    squared quantization error equals the Voronoi second moment.
    """
    if quantizer not in ("exact_cvp", "bp_approx"):
        raise InvalidConfigError(f"unknown quantizer {quantizer!r}")
    if samples < 2:
        raise InvalidConfigError("need at least 2 samples")
    if quantizer == "exact_cvp" and 0 < L.code_dim < L.n:
        _check_budget(L, budget)
    sizes = [s for s in split_trials(samples, workers) if s]
    seqs = child_seeds(seed, count=len(sizes))
    parts = run_chunks(_nsm_chunk, [(L, c, q, quantizer, budget, scale)
                                    for c, q in zip(sizes, seqs)], workers)
    total, mean, m2 = 0, 0.0, 0.0
    for c, m, s in parts:
        delta = m - mean
        tot = total + c
        mean += delta * c / tot
        m2 += s + delta * delta * total * c / tot
        total = tot
    norm = L.n * math.exp(2 * (L.volume_exponent * math.log(L.p) + L.n * math.log(scale)) / L.n)
    sd = math.sqrt(m2 / (total - 1))
    return NsmEstimate(mean=mean / norm, half_width=1.959963984540054 * sd / math.sqrt(total) / norm,
                       samples=total, quantizer=quantizer)
