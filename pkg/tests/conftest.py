"""Shared fixtures and brute-force oracles.

The oracles here deliberately avoid the package's own routines so that
tests compare two independent computations.
"""

import itertools

import numpy as np
import pytest

from ldalattice import build_lattice, randomize_skeleton, sample_standard_ensemble

ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


def naive_rank(M, p):
    """Row reduction with python ints, pivoting on the largest residue."""
    A = [[int(v) % p for v in row] for row in np.asarray(M).tolist()]
    rows = len(A)
    cols = len(A[0]) if rows else 0
    r = 0
    for c in range(cols):
        cand = [i for i in range(r, rows) if A[i][c]]
        if not cand:
            continue
        piv = max(cand, key=lambda i: A[i][c])
        A[r], A[piv] = A[piv], A[r]
        inv = pow(A[r][c], p - 2, p)
        A[r] = [(v * inv) % p for v in A[r]]
        for i in range(rows):
            if i != r and A[i][c]:
                f = A[i][c]
                A[i] = [(a - f * b) % p for a, b in zip(A[i], A[r])]
        r += 1
    return r


def all_vectors(p, n):
    return np.array(list(itertools.product(range(p), repeat=n)), dtype=np.int64).reshape(-1, n)


def kernel_by_search(H, p):
    """Every residue vector x with Hx = 0 mod p, by exhaustive search."""
    V = all_vectors(p, np.asarray(H).shape[1])
    if np.asarray(H).shape[0] == 0:
        return V
    return V[~np.any((V @ np.asarray(H).T) % p, axis=1)]


def oracle_cvp(H, p, x):
    """Closest point by trying shifts {-1,0,1} around the nearest multiple, jointly.

    Ties are broken towards the lexicographically smallest point.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    shifts = np.array(list(itertools.product((-1, 0, 1), repeat=n)))
    best, best_pt = np.inf, None
    for c in kernel_by_search(H, p):
        base = np.round((x - c) / p)
        pts = c + p * (base + shifts)
        d2 = ((pts - x) ** 2).sum(axis=1)
        i = int(np.argmin(d2))
        m = d2[i]
        ties = pts[np.abs(d2 - m) <= 1e-9]
        first = min(tuple(int(v) for v in t) for t in ties)
        if m < best - 1e-9 or (abs(m - best) <= 1e-9 and first < tuple(best_pt)):
            best, best_pt = m, np.array(first)
    return best_pt, best


def oracle_shortest(H, p):
    """Minimum norm over c + p z for every codeword c and z in {-1,0,1}^n."""
    n = np.asarray(H).shape[1]
    Z = np.array(list(itertools.product((-1, 0, 1), repeat=n)))
    best = np.inf
    for c in kernel_by_search(H, p):
        V = c + p * Z
        nz = np.any(V != 0, axis=1)
        best = min(best, float(np.sqrt((V[nz] ** 2).sum(axis=1).min())))
    return best


def random_lda(n, dv, dc, p, seed):
    g = sample_standard_ensemble(n, dv, dc, seed=seed)
    return build_lattice(randomize_skeleton(g, p, seed + 1000), p, g)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
