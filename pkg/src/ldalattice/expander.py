"""Regular bipartite Tanner graphs: sampling, neighborhoods, expansion checks."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import InvalidConfigError, ResampleBudgetError

VARIABLE = "variable"
CHECK = "check"


@dataclass(frozen=True)
class SkeletonGraph:
    """A (dv, dc)-regular bipartite graph stored as per-check variable lists."""

    n: int
    dv: int
    dc: int
    checks: tuple[tuple[int, ...], ...]

    @property
    def m(self) -> int:
        return len(self.checks)

    @property
    def rate(self) -> float:
        return 1.0 - self.dv / self.dc

    @property
    def n_edges(self) -> int:
        return sum(len(c) for c in self.checks)

    def variables(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for i, row in enumerate(self.checks):
            for v in row:
                adj[v].append(i)
        return tuple(tuple(a) for a in adj)

    def matrix(self) -> np.ndarray:
        """The 0/1 skeleton matrix, checks as rows."""
        H = np.zeros((self.m, self.n), dtype=np.int64)
        for i, row in enumerate(self.checks):
            H[i, list(row)] = 1
        return H

    def edges(self) -> np.ndarray:
        """``(check, variable)`` pairs in row-major order."""
        return np.array([(i, v) for i, row in enumerate(self.checks) for v in row],
                        dtype=np.int64).reshape(-1, 2)

    def is_regular(self) -> bool:
        deg = np.zeros(self.n, dtype=int)
        for row in self.checks:
            if len(row) != self.dc or len(set(row)) != len(row):
                return False
            deg[list(row)] += 1
        return bool(np.all(deg == self.dv))

    @classmethod
    def from_matrix(cls, H, dv: int | None = None, dc: int | None = None) -> "SkeletonGraph":
        H = np.asarray(H) != 0
        m, n = H.shape
        col = H.sum(axis=0)
        row = H.sum(axis=1)
        dv = int(col.max()) if dv is None and n else (dv or 0)
        dc = int(row.max()) if dc is None and m else (dc or 0)
        checks = tuple(tuple(int(v) for v in np.flatnonzero(H[i])) for i in range(m))
        return cls(n=n, dv=dv, dc=dc, checks=checks)


# The 4 x 6 (2, 3)-regular skeleton used as the running example.
EXAMPLE_SKELETON = SkeletonGraph.from_matrix(
    [[1, 1, 0, 0, 1, 0],
     [0, 1, 0, 1, 0, 1],
     [0, 0, 1, 1, 1, 0],
     [1, 0, 1, 0, 0, 1]])


def sample_standard_ensemble(n: int, dv: int, dc: int, seed=None,
                             max_resamples: int = 10_000) -> SkeletonGraph:
    """Uniform socket matching conditioned on simplicity (by rejection)."""
    if dv < 1 or dc <= dv or (n * dv) % dc:
        raise InvalidConfigError("degree constraint infeasible")
    m = n * dv // dc
    rng = np.random.default_rng(seed)
    var_of_socket = np.repeat(np.arange(n), dv)
    for _ in range(max_resamples):
        perm = var_of_socket[rng.permutation(n * dv)].reshape(m, dc)
        srt = np.sort(perm, axis=1)
        if np.all(srt[:, 1:] != srt[:, :-1]):
            return SkeletonGraph(n=n, dv=dv, dc=dc,
                                 checks=tuple(tuple(int(v) for v in r) for r in srt))
    raise ResampleBudgetError("resample budget exhausted")


def neighborhood(graph: SkeletonGraph, S, side: str = VARIABLE) -> set[int]:
    """N(S) for a set of variable nodes (-> checks) or check nodes (-> variables)."""
    S = set(int(s) for s in S)
    if side == CHECK:
        out: set[int] = set()
        for c in S:
            if not 0 <= c < graph.m:
                raise IndexError(f"check {c} out of range")
            out.update(graph.checks[c])
        return out
    if side != VARIABLE:
        raise InvalidConfigError(f"unknown side {side!r}")
    for v in S:
        if not 0 <= v < graph.n:
            raise IndexError(f"variable {v} out of range")
    return {i for i, row in enumerate(graph.checks) if S.intersection(row)}


def binary_entropy(a: float) -> float:
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"binary entropy argument {a} outside [0, 1]")
    if a in (0.0, 1.0):
        return 0.0
    return -a * math.log2(a) - (1 - a) * math.log2(1 - a)


# -- expansion parameters ---------------------------------------------------

@dataclass(frozen=True)
class ExpansionParams:
    alpha: float
    A: float
    beta: float
    B: float
    epsilon: float
    vartheta: float

    @classmethod
    def with_defaults(cls, R: float, alpha: float, A: float, beta: float, B: float,
                      epsilon: float | None = None, vartheta: float | None = None
                      ) -> "ExpansionParams":
        """Fill ``epsilon``/``vartheta`` with the default values tied to R, A and B."""
        if epsilon is None:
            epsilon = (1 - R) / (A + 1 - R)
        if vartheta is None:
            vartheta = 1 / (B * (1 - R) + 1)
        return cls(alpha, A, beta, B, epsilon, vartheta)

    def violations(self, R: float) -> list[str]:
        out = []
        if not 1 <= self.alpha < self.A:
            out.append("need 1 <= alpha < A")
        if not 1 / (1 - R) < self.beta < min(2 / (1 - R), self.B):
            out.append("need 1/(1-R) < beta < min(2/(1-R), B)")
        if not 0 < self.epsilon < (1 - R) / self.A:
            out.append("need 0 < epsilon < (1-R)/A")
        if not 0 < self.vartheta < 1 / (self.B * (1 - R)):
            out.append("need 0 < vartheta < 1/(B(1-R))")
        return out

    def validate(self, R: float) -> None:
        bad = self.violations(R)
        if bad:
            raise InvalidConfigError("; ".join(bad))


def property_bounds(graph: SkeletonGraph, params: ExpansionParams) -> dict[str, tuple[str, float, int]]:
    """For each property: (side, demanded expansion factor, largest subset size)."""
    n, R = graph.n, graph.rate
    return {
        "L1": (VARIABLE, params.A, math.ceil(params.epsilon * n)),
        "L2": (VARIABLE, params.alpha, math.ceil(n * (1 - R) / (2 * params.alpha))),
        "R1": (CHECK, params.B, math.floor(params.vartheta * n * (1 - R) + 1e-12)),
        "R2": (CHECK, params.beta, math.floor(n * (1 - R) / 2 + 1e-12)),
    }


@dataclass
class PropertyVerdict:
    status: str  # "certified" | "falsified" | "undecided"
    max_size: int
    checked_size: int
    subsets_checked: int
    witness: tuple[int, ...] | None = None
    witness_neighbors: int | None = None


@dataclass
class ExpansionReport:
    mode: str
    verdicts: dict[str, PropertyVerdict] = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return all(v.status == "certified" for v in self.verdicts.values())

    def to_dict(self) -> dict:
        return {"mode": self.mode,
                "verdicts": {k: {**vars(v), "witness": list(v.witness) if v.witness else None}
                             for k, v in self.verdicts.items()}}


def _masks(graph: SkeletonGraph, side: str) -> list[int]:
    """Neighbourhood bitmask per node on ``side``."""
    if side == CHECK:
        return [sum(1 << v for v in row) for row in graph.checks]
    return [sum(1 << c for c in cs) for cs in graph.variables()]


def verify_expansion(graph: SkeletonGraph, params: ExpansionParams,
                     subset_size_cap: int = 12, mode: str = "exhaustive",
                     samples: int = 10_000, seed=None) -> ExpansionReport:
    """Check L1, L2, R1, R2 on subsets up to each property's size bound.

    Exhaustive mode enumerates every subset of each size up to
    ``min(bound, subset_size_cap)`` in lexicographic order; a property whose
    bound exceeds the cap and that shows no violation is reported as
    undecided. Sampled mode draws random subsets and can only falsify.
    """
    params.validate(graph.rate)
    if mode not in ("exhaustive", "sampled"):
        raise InvalidConfigError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)
    report = ExpansionReport(mode=mode)
    for name, (side, factor, bound) in property_bounds(graph, params).items():
        masks = _masks(graph, side)
        n_side = len(masks)
        top = min(bound, n_side)
        checked = min(top, subset_size_cap)
        count = 0
        verdict = None
        if mode == "exhaustive":
            for size in range(1, checked + 1):
                need = factor * size
                for S in itertools.combinations(range(n_side), size):
                    count += 1
                    acc = 0
                    for s in S:
                        acc |= masks[s]
                    nb = acc.bit_count()
                    if nb < need:
                        verdict = PropertyVerdict("falsified", bound, checked, count, S, nb)
                        break
                if verdict:
                    break
            if verdict is None:
                status = "certified" if checked >= top else "undecided"
                verdict = PropertyVerdict(status, bound, checked, count)
        else:
            for _ in range(samples if top >= 1 else 0):
                size = int(rng.integers(1, top + 1))
                S = tuple(sorted(int(s) for s in rng.choice(n_side, size, replace=False)))
                count += 1
                acc = 0
                for s in S:
                    acc |= masks[s]
                if acc.bit_count() < factor * size:
                    verdict = PropertyVerdict("falsified", bound, top, count, S, acc.bit_count())
                    break
            if verdict is None:
                verdict = PropertyVerdict("certified" if top < 1 else "undecided", bound, top, count)
        report.verdicts[name] = verdict
    return report


# -- degree threshold -------------------------------------------------------

def _h(a: float) -> float:
    if not 0.0 < a < 1.0:
        raise ValueError(f"argument outside (0,1): {a}")
    return binary_entropy(a)


def _div(num: float, den: float) -> float:
    if den == 0:
        raise ZeroDivisionError("division by zero in degree threshold")
    return num / den


def delta_v_terms(R: float, params: ExpansionParams) -> list[float]:
    """The ten expressions whose maximum bounds the variable degree from below."""
    a, A, b, B, e, t = (params.alpha, params.A, params.beta, params.B,
                        params.epsilon, params.vartheta)
    q = 1 - R
    return [
        _div(_h(q / (2 * a)) + q, _h(q / (2 * a)) - 0.5 * _h(q / a)),
        R + 2 * a,
        A + 1,
        _div(_h(e) + q * _h(A * e / q), _h(e) - (A * e / q) * _h(q / A)),
        _div(q + _h(b * q / 2), 1 - (b * q / 2) * _h(1 / (b * q))),
        _div((2 + b * R) * q, 2 - b * q),
        q * (B + 1),
        _div(q * _h(t) + _h(B * t * q), _h(t) - B * t * q * _h(1 / (B * q))),
        _div((A + 1) * q - A * e * (2 - R), q - A * e),
        _div(B + 1 - t * B * (2 - R), 1 / q - t * B),
    ]


def delta_v_threshold(R: float, params: ExpansionParams) -> float:
    return max(delta_v_terms(R, params))


# -- text format ------------------------------------------------------------

def format_graph(graph: SkeletonGraph) -> str:
    lines = [f"{graph.n} {graph.m} {graph.dv} {graph.dc}"]
    for i, row in enumerate(graph.checks):
        lines.append(f"{i}: " + " ".join(str(v) for v in sorted(row)))
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> SkeletonGraph:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    try:
        n, m, dv, dc = (int(v) for v in lines[0].split())
    except (IndexError, ValueError) as exc:
        raise InvalidConfigError("graph header must be 'n m dv dc'") from exc
    checks: list[tuple[int, ...]] = [()] * m
    for ln in lines[1:]:
        head, _, rest = ln.partition(":")
        i = int(head)
        if not 0 <= i < m:
            raise InvalidConfigError(f"check index {i} out of range")
        checks[i] = tuple(sorted(int(v) for v in rest.split()))
    return SkeletonGraph(n=n, dv=dv, dc=dc, checks=tuple(checks))


def write_graph(path, graph: SkeletonGraph) -> None:
    Path(path).write_text(format_graph(graph))


def read_graph(path) -> SkeletonGraph:
    return parse_graph(Path(path).read_text())
