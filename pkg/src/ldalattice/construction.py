"""Low-density Construction-A lattices built from a randomized skeleton."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import stats

from . import finite_field as ff
from ._rng import child_seeds, run_chunks, split_trials
from .exceptions import InvalidConfigError
from .expander import SkeletonGraph


def randomize_skeleton(skeleton: SkeletonGraph, p: int, seed=None) -> np.ndarray:
    """Replace every skeleton edge by an independent uniform element of F_p.

    Zero is a legal coefficient, so the support of the result can be
    strictly smaller than the skeleton's.
    """
    p = ff.check_modulus(p)
    rng = np.random.default_rng(seed)
    H = np.zeros((skeleton.m, skeleton.n), dtype=np.int64)
    E = skeleton.edges()
    if len(E):
        H[E[:, 0], E[:, 1]] = rng.integers(0, p, size=len(E))
    return H


def support_image(skeleton: SkeletonGraph, u) -> set[int]:
    """Variables touched by the checks in the support of the syndrome ``u``."""
    u = np.asarray(u)
    if u.shape != (skeleton.m,):
        raise InvalidConfigError(f"syndrome must have length {skeleton.m}")
    out: set[int] = set()
    for i in np.flatnonzero(u):
        out.update(skeleton.checks[int(i)])
    return out


def support_size(skeleton: SkeletonGraph, rows) -> int:
    """Number of variables adjacent to a set of check rows."""
    u = np.zeros(skeleton.m, dtype=np.int64)
    u[list(rows)] = 1
    return len(support_image(skeleton, u))


@dataclass(frozen=True, eq=False)
class ConstructionALattice:
    """``{x in Z^n : H x = 0 mod p}``."""

    p: int
    H: np.ndarray = field(repr=False)
    skeleton: SkeletonGraph | None = field(default=None, repr=False, compare=False)

    @property
    def n(self) -> int:
        return int(self.H.shape[1])

    @cached_property
    def rank(self) -> int:
        return ff.rank(self.H, self.p) if self.H.shape[0] else 0

    @property
    def code_dim(self) -> int:
        return self.n - self.rank

    @property
    def full_rank(self) -> bool:
        return self.rank == self.H.shape[0]

    @property
    def volume_exponent(self) -> int:
        return self.n - self.code_dim

    @property
    def volume(self) -> int:
        return self.p ** self.volume_exponent

    @cached_property
    def code(self) -> ff.LinearCode:
        return ff.nullspace_basis(self.H, self.p, self.n)

    @cached_property
    def codewords(self) -> np.ndarray:
        return self.code.codewords()

    def contains(self, x) -> bool:
        x = np.asarray(x)
        if np.any(x != np.round(x)):
            return False
        if self.H.shape[0] == 0:
            return True
        return not np.any((self.H @ np.mod(x.astype(np.int64), self.p)) % self.p)

    def contains_many(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X))
        integral = np.all(X == np.round(X), axis=1)
        if self.H.shape[0] == 0:
            return integral
        Xi = np.mod(np.round(X).astype(np.int64), self.p)
        return integral & ~np.any((Xi @ self.H.T) % self.p, axis=1)

    def generator_matrix(self) -> np.ndarray:
        """Square row basis: reduced code basis at pivots, ``p e_j`` elsewhere."""
        G = self.code.basis
        B = np.zeros((self.n, self.n), dtype=np.int64)
        pivots = [int(np.flatnonzero(row)[0]) for row in G]
        for row, c in zip(G, pivots):
            B[c] = row
        for j in set(range(self.n)) - set(pivots):
            B[j, j] = self.p
        return B

    def to_bundle(self, skeleton_ref: str | None = None) -> dict:
        H = self.H
        return {
            "n": self.n,
            "p": self.p,
            "skeleton_ref": skeleton_ref,
            "rows": int(H.shape[0]),
            "H": [[int(r), int(c), int(H[r, c])] for r, c in zip(*np.nonzero(H))],
            "rank": self.rank,
            "volume_exponent": self.volume_exponent,
        }

    @classmethod
    def from_bundle(cls, data: dict) -> "ConstructionALattice":
        H = np.zeros((int(data["rows"]), int(data["n"])), dtype=np.int64)
        for r, c, v in data["H"]:
            H[r, c] = v
        return build_lattice(H, int(data["p"]))


def build_lattice(H, p: int, skeleton: SkeletonGraph | None = None) -> ConstructionALattice:
    p = ff.check_modulus(p)
    H = ff.as_fp(H, p)
    if H.ndim != 2:
        raise InvalidConfigError("parity-check matrix must be 2-D")
    return ConstructionALattice(p=p, H=H, skeleton=skeleton)


def integer_lattice(n: int, p: int = 2) -> ConstructionALattice:
    """``Z^n`` as the Construction-A lattice of the full space."""
    return build_lattice(np.zeros((0, n), dtype=np.int64), p)


def scaled_integer_lattice(n: int, p: int) -> ConstructionALattice:
    """``p Z^n`` as the Construction-A lattice of the zero code."""
    return build_lattice(np.eye(n, dtype=np.int64), p)


def scaled_dual_lattice(L: ConstructionALattice) -> ConstructionALattice:
    """Construction A applied to the dual code (parity checks = code basis)."""
    return build_lattice(L.code.basis, L.p)


def save_bundle(path, L: ConstructionALattice, skeleton_ref: str | None = None) -> None:
    Path(path).write_text(json.dumps(L.to_bundle(skeleton_ref), indent=2, sort_keys=True) + "\n")


def load_bundle(path) -> ConstructionALattice:
    return ConstructionALattice.from_bundle(json.loads(Path(path).read_text()))


# -- exact dual basis -------------------------------------------------------

def _frac_inverse(B: np.ndarray) -> list[list[Fraction]]:
    n = B.shape[0]
    M = [[Fraction(int(v)) for v in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(B)]
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] != 0), None)
        if piv is None:
            raise ArithmeticError("singular basis")
        M[c], M[piv] = M[piv], M[c]
        inv = 1 / M[c][c]
        M[c] = [v * inv for v in M[c]]
        for r in range(n):
            if r != c and M[r][c] != 0:
                f = M[r][c]
                M[r] = [a - f * b for a, b in zip(M[r], M[c])]
    return [row[n:] for row in M]


def _frac_det(rows: list[list[Fraction]]) -> Fraction:
    M = [list(r) for r in rows]
    n = len(M)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            det = -det
        det *= M[c][c]
        for r in range(c + 1, n):
            f = M[r][c] / M[c][c]
            if f:
                M[r] = [a - f * b for a, b in zip(M[r], M[c])]
    return det


@dataclass(frozen=True)
class DualBasis:
    """Exact rational generator rows of the dual lattice."""

    primal: np.ndarray
    rows: list[list[Fraction]]

    @property
    def det(self) -> Fraction:
        return _frac_det(self.rows)

    @property
    def primal_det(self) -> int:
        return int(_frac_det([[Fraction(int(v)) for v in r] for r in self.primal]))

    def as_float(self) -> np.ndarray:
        return np.array([[float(v) for v in r] for r in self.rows])


def exact_dual_basis(L: ConstructionALattice) -> DualBasis:
    """Rows of ``(B^{-1})^T`` for the square primal basis ``B``."""
    B = L.generator_matrix()
    inv = _frac_inverse(B)
    n = len(inv)
    return DualBasis(primal=B, rows=[[inv[j][i] for j in range(n)] for i in range(n)])


def in_dual(L: ConstructionALattice, y) -> bool:
    """Whether ``y`` has integer inner product with every primal basis row."""
    B = L.generator_matrix()
    for row in B:
        s = sum(Fraction(int(a)) * Fraction(b) for a, b in zip(row, y))
        if s.denominator != 1:
            return False
    return True


# -- nesting ----------------------------------------------------------------

@dataclass(frozen=True)
class NestedPair:
    fine: ConstructionALattice
    coarse: ConstructionALattice

    @property
    def nesting_ratio(self) -> int:
        """``vol(coarse) / vol(fine)``, always an integer power of ``p``."""
        return self.fine.p ** (self.coarse.rank - self.fine.rank)

    def coset_count(self) -> int:
        """Distinct coarse cosets met by the fine points of ``[0, p)^n``."""
        fine = self.fine
        pts = fine.codewords
        extra = self.coarse.H[self.fine.H.shape[0]:]
        if extra.shape[0] == 0:
            return 1
        syn = (pts @ extra.T) % fine.p
        return len({tuple(r) for r in syn})


def nested_pair(H_c, k_f: int, p: int) -> NestedPair:
    """Fine lattice from the first ``k_f`` checks, coarse from all of them."""
    H_c = ff.as_fp(H_c, p)
    if not 0 < k_f < H_c.shape[0]:
        raise InvalidConfigError("need 0 < k_f < rows(H_c)")
    return NestedPair(fine=build_lattice(H_c[:k_f], p), coarse=build_lattice(H_c, p))


# -- Monte Carlo checks on the ensemble ------------------------------------

def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95% Wilson score interval for ``k`` successes in ``n`` trials."""
    if n == 0:
        return 0.0, 1.0
    ph = k / n
    den = 1 + z * z / n
    centre = (ph + z * z / (2 * n)) / den
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / den
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return lo, hi


@dataclass
class FrequencyEstimate:
    failures: int
    trials: int
    ci_low: float
    ci_high: float

    @property
    def frequency(self) -> float:
        return self.failures / self.trials


def _fullrank_chunk(task) -> int:
    skeleton, p, trials, seq = task
    rng = np.random.default_rng(seq)
    rows = skeleton.m
    fails = 0
    for _ in range(trials):
        if ff.rank(randomize_skeleton(skeleton, p, rng), p) < rows:
            fails += 1
    return fails


def fullrank_monte_carlo(skeleton: SkeletonGraph, p: int, trials: int, seed=None,
                         workers: int = 1) -> FrequencyEstimate:
    """Frequency of rank deficiency over independent coefficient draws."""
    if trials < 1:
        raise InvalidConfigError("trials must be >= 1")
    sizes = split_trials(trials, workers)
    seqs = child_seeds(seed, count=len(sizes))
    fails = sum(run_chunks(_fullrank_chunk,
                           [(skeleton, p, t, s) for t, s in zip(sizes, seqs)], workers))
    return FrequencyEstimate(fails, trials, *wilson_interval(fails, trials))


def _random_coefficient_batches(skeleton, p, trials, rng, chunk=20_000):
    E = skeleton.edges()
    done = 0
    while done < trials:
        b = min(chunk, trials - done)
        yield E, rng.integers(0, p, size=(b, len(E)))
        done += b


@dataclass
class SyndromeTestReport:
    support: list[int]
    trials: int
    off_support_nonzero: int
    marginal_pvalues: dict[int, float]
    pair: tuple[int, int] | None
    pair_pvalue: float | None
    significance: float

    @property
    def passed(self) -> bool:
        pvals = list(self.marginal_pvalues.values())
        if self.pair_pvalue is not None:
            pvals.append(self.pair_pvalue)
        return self.off_support_nonzero == 0 and all(v >= self.significance for v in pvals)


def syndrome_distribution_test(skeleton: SkeletonGraph, p: int, u, trials: int,
                               seed=None, significance: float = 1e-3) -> SyndromeTestReport:
    """Empirical law of ``H^T u`` over random coefficient draws.

    Coordinates outside S(u) must vanish in every trial; the test raises
    ``AssertionError`` otherwise, since that can only be a bug. Inside S(u)
    the marginals and one random coordinate pair are chi-square tested
    against the uniform law.
    """
    u = ff.as_fp(u, p)
    if not np.any(u):
        raise InvalidConfigError("u must be nonzero")
    S = sorted(support_image(skeleton, u))
    rng = np.random.default_rng(seed)
    pair = tuple(int(v) for v in sorted(rng.choice(S, 2, replace=False))) if len(S) >= 2 else None
    marg = np.zeros((skeleton.n, p), dtype=np.int64)
    joint = np.zeros((p, p), dtype=np.int64)
    off = 0
    outside = np.setdiff1d(np.arange(skeleton.n), S)
    for E, coef in _random_coefficient_batches(skeleton, p, trials, rng):
        # y_j = sum_i h_ij u_i, accumulated edge by edge
        Y = np.zeros((coef.shape[0], skeleton.n), dtype=np.int64)
        contrib = (coef * u[E[:, 0]]) % p
        for e, (_, v) in enumerate(E):
            Y[:, v] += contrib[:, e]
        Y %= p
        off += int(np.count_nonzero(Y[:, outside]))
        for j in S:
            marg[j] += np.bincount(Y[:, j], minlength=p)
        if pair:
            np.add.at(joint, (Y[:, pair[0]], Y[:, pair[1]]), 1)
    if off:
        raise AssertionError(f"{off} nonzero entries of H^T u outside S(u)")
    pvals = {j: float(stats.chisquare(marg[j]).pvalue) for j in S}
    pair_p = float(stats.chisquare(joint.ravel()).pvalue) if pair else None
    return SyndromeTestReport(S, trials, off, pvals, pair, pair_p, significance)


def coefficient_uniformity(skeleton: SkeletonGraph, p: int, seeds) -> np.ndarray:
    """Per-edge coefficient counts over independent seeds, shape (edges, p)."""
    E = skeleton.edges()
    counts = np.zeros((len(E), p), dtype=np.int64)
    for s in seeds:
        H = randomize_skeleton(skeleton, p, s)
        counts[np.arange(len(E)), H[E[:, 0], E[:, 1]]] += 1
    return counts


def drop_zero_edges(H, skeleton: SkeletonGraph | None = None) -> np.ndarray:
    """Support mask of ``H``, warning when it is strictly inside the skeleton."""
    mask = np.asarray(H) != 0
    if skeleton is not None and mask.sum() < skeleton.n_edges:
        warnings.warn(f"{skeleton.n_edges - int(mask.sum())} skeleton edges carry a zero "
                      "coefficient and are dropped", stacklevel=2)
    return mask
