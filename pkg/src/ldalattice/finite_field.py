"""Prime-field arithmetic and exact linear algebra over F_p.

Residues are stored as least non-negative integers in ``[0, p)`` inside
``int64`` numpy arrays. The modulus is capped below ``2**31`` so that every
product of two residues fits in a signed 64-bit integer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import InvalidConfigError

MAX_MODULUS = 2**31


def is_prime(q: int) -> bool:
    """Deterministic trial division."""
    if q < 2:
        return False
    if q < 4:
        return True
    if q % 2 == 0:
        return False
    for d in range(3, math.isqrt(q) + 1, 2):
        if q % d == 0:
            return False
    return True


def smallest_prime_geq(x: float) -> int:
    """Smallest prime ``q`` with ``q >= x`` (2 for any ``x < 2``).

    Raises ``OverflowError`` ("modulus too large") once the candidate reaches
    the 2**31 cap used by the arithmetic in this module.
    """
    if not math.isfinite(x):
        raise OverflowError("modulus too large")
    if x <= 2:
        return 2
    q = math.ceil(x)
    while q < MAX_MODULUS:
        if is_prime(q):
            return q
        q += 1
    raise OverflowError("modulus too large")


@dataclass(frozen=True)
class PrimeContext:
    """Modulus selected as the smallest prime at or above ``n ** lam``."""

    p: int
    n: int
    lam: float

    @classmethod
    def from_growth(cls, n: int, lam: float) -> "PrimeContext":
        if n < 1 or lam <= 0:
            raise InvalidConfigError("need n >= 1 and lambda > 0")
        return cls(p=smallest_prime_geq(float(n) ** lam), n=n, lam=lam)


def check_modulus(p: int) -> int:
    p = int(p)
    if p < 2 or p >= MAX_MODULUS:
        raise InvalidConfigError(f"modulus {p} outside [2, 2**31)")
    if not is_prime(p):
        raise InvalidConfigError(f"modulus {p} is not prime")
    return p


def as_fp(M, p: int) -> np.ndarray:
    """Reduce an integer array-like to least non-negative residues mod ``p``."""
    A = np.asarray(M, dtype=np.int64)
    return np.mod(A, p)


def inv_mod(a: int, p: int) -> int:
    a %= p
    if a == 0:
        raise ZeroDivisionError("0 has no inverse mod p")
    return pow(int(a), -1, p)


def rref(M, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over F_p.

    Pivots are taken column by column from the left, using the topmost row
    with a nonzero entry. Returns the reduced matrix (zero rows at the
    bottom) and the list of pivot columns.
    """
    p = check_modulus(p)
    A = as_fp(M, p).copy()
    if A.ndim != 2:
        raise InvalidConfigError("expected a 2-D matrix")
    rows, cols = A.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(A[r:, c])
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            A[[r, piv]] = A[[piv, r]]
        A[r] = (A[r] * inv_mod(int(A[r, c]), p)) % p
        others = np.flatnonzero(A[:, c])
        others = others[others != r]
        if others.size:
            A[others] = (A[others] - np.outer(A[others, c], A[r])) % p
        pivots.append(c)
        r += 1
    return A, pivots


def rank(M, p: int) -> int:
    """Dimension of the row space of ``M`` over F_p."""
    A = np.asarray(M)
    if A.size == 0:
        return 0
    return len(rref(A, p)[1])


def nullspace_matrix(M, p: int, n: int | None = None) -> np.ndarray:
    """Basis (as rows) of ``{x : M x = 0 mod p}``."""
    A = np.asarray(M, dtype=np.int64)
    if A.ndim == 1 and A.size == 0:
        A = A.reshape(0, n if n is not None else 0)
    cols = A.shape[1] if n is None else n
    if A.shape[0] == 0:
        return np.eye(cols, dtype=np.int64)
    R, pivots = rref(A, p)
    free = [c for c in range(cols) if c not in set(pivots)]
    basis = np.zeros((len(free), cols), dtype=np.int64)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for r, pc in enumerate(pivots):
            basis[i, pc] = (-R[r, f]) % p
    return basis


@dataclass(frozen=True)
class LinearCode:
    """A linear code over F_p described by generator and parity rows."""

    p: int
    n: int
    basis: np.ndarray = field(repr=False)
    check: np.ndarray = field(repr=False)

    @property
    def dimension(self) -> int:
        return int(self.basis.shape[0])

    def contains(self, x) -> bool:
        x = as_fp(x, self.p)
        if self.check.shape[0] == 0:
            return True
        return not np.any((self.check @ x) % self.p)

    def codewords(self) -> np.ndarray:
        """All ``p**k`` codewords as rows (only sensible for tiny codes)."""
        return enumerate_span(self.basis, self.p, self.n)


def _reduced_rows(M, p: int, n: int) -> np.ndarray:
    A = np.asarray(M, dtype=np.int64).reshape(-1, n)
    if A.shape[0] == 0:
        return np.zeros((0, n), dtype=np.int64)
    R, piv = rref(A, p)
    return R[: len(piv)]


def nullspace_basis(M, p: int, n: int | None = None) -> LinearCode:
    """The code ``{x : M x = 0}`` with a reduced generator basis."""
    p = check_modulus(p)
    A = np.asarray(M, dtype=np.int64)
    if n is None:
        n = A.shape[1]
    A = A.reshape(-1, n)
    basis = _reduced_rows(nullspace_matrix(A, p, n), p, n)
    return LinearCode(p=p, n=n, basis=basis, check=_reduced_rows(A, p, n))


def code_from_generator(G, p: int, n: int | None = None) -> LinearCode:
    p = check_modulus(p)
    A = np.asarray(G, dtype=np.int64)
    if n is None:
        n = A.shape[1]
    basis = _reduced_rows(A, p, n)
    check = _reduced_rows(nullspace_matrix(basis, p, n), p, n)
    return LinearCode(p=p, n=n, basis=basis, check=check)


def dual_code(C: LinearCode) -> LinearCode:
    """``{y : <c, y> = 0 for all c in C}``; generator and check swap roles."""
    basis = _reduced_rows(nullspace_matrix(C.basis, C.p, C.n), C.p, C.n)
    return LinearCode(p=C.p, n=C.n, basis=basis, check=_reduced_rows(C.basis, C.p, C.n))


def same_row_space(A, B, p: int, n: int) -> bool:
    return np.array_equal(_reduced_rows(A, p, n), _reduced_rows(B, p, n))


def enumerate_span(basis, p: int, n: int) -> np.ndarray:
    """Every F_p-combination of the basis rows, in lexicographic coefficient order."""
    B = np.asarray(basis, dtype=np.int64).reshape(-1, n)
    k = B.shape[0]
    if k == 0:
        return np.zeros((1, n), dtype=np.int64)
    coeffs = np.indices((p,) * k).reshape(k, -1).T
    return (coeffs @ B) % p


# -- text format -----------------------------------------------------------

def format_matrix(M, p: int) -> str:
    """Header ``rows cols p`` then one ``row col value`` line per nonzero."""
    A = as_fp(M, p)
    lines = [f"{A.shape[0]} {A.shape[1]} {p}"]
    for r, c in zip(*np.nonzero(A)):
        lines.append(f"{r} {c} {A[r, c]}")
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> tuple[np.ndarray, int]:
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not rows or len(rows[0]) != 3:
        raise InvalidConfigError("matrix header must be 'rows cols p'")
    nr, nc, p = (int(v) for v in rows[0])
    A = np.zeros((nr, nc), dtype=np.int64)
    for ln in rows[1:]:
        r, c, v = (int(t) for t in ln)
        if not (0 <= r < nr and 0 <= c < nc):
            raise InvalidConfigError(f"entry ({r}, {c}) outside {nr}x{nc}")
        A[r, c] = v % p
    return A, p


def write_matrix(path, M, p: int) -> None:
    Path(path).write_text(format_matrix(M, p))


def read_matrix(path) -> tuple[np.ndarray, int]:
    return parse_matrix(Path(path).read_text())
