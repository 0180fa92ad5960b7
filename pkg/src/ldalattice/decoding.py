"""Closest-point and belief-propagation decoding of Construction-A lattices."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import finite_field as ff
from .construction import ConstructionALattice
from .geometry import DEFAULT_BUDGET, closest_points


def ml_decode(L: ConstructionALattice, y, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """Closest lattice point(s) to ``y`` (one per row when ``y`` is 2-D)."""
    y = np.asarray(y, dtype=float)
    pts, _ = closest_points(L, np.atleast_2d(y), budget)
    return pts[0] if y.ndim == 1 else pts


def coordinate_priors(y, sigma: float, p: int, window: int = 4) -> np.ndarray:
    """Gaussian likelihood of each residue class, folded over ``window`` periods.

    Returns an array of shape ``y.shape + (p,)`` whose last axis sums to one.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    y = np.asarray(y, dtype=float)
    a = np.arange(p)
    if sigma == 0:
        out = np.zeros(y.shape + (p,))
        idx = np.mod(np.ceil(y - 0.5).astype(np.int64), p)
        np.put_along_axis(out, idx[..., None], 1.0, axis=-1)
        return out
    w = np.arange(-window, window + 1)
    # shifts relative to the nearest period keep the window centred on y
    base = np.floor(y / p)[..., None, None]
    diff = y[..., None, None] - a[:, None] - p * (base + w[None, :])
    logm = logsumexp(-diff * diff / (2 * sigma * sigma), axis=-1)
    logm -= logsumexp(logm, axis=-1, keepdims=True)
    return np.exp(logm)


@dataclass
class BpResult:
    residues: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    beliefs: np.ndarray


class _TannerLayout:
    """Index tables for flooding BP over the nonzero entries of ``H``."""

    def __init__(self, H: np.ndarray, p: int):
        self.p = p
        self.m, self.n = H.shape
        rows, cols = np.nonzero(H)
        self.rows, self.cols = rows, cols
        coef = H[rows, cols]
        self.coef = coef
        self.E = len(rows)
        x = np.arange(p)
        inv = np.array([ff.inv_mod(int(h), p) for h in coef], dtype=np.int64)
        # q'(y) = q(h^-1 y) maps a mass over x_j to one over h_j x_j
        self.into = (inv[:, None] * x[None, :]) % p
        # outgoing mass over x_k reads the sum distribution at -h_k x_k
        self.out = (-coef[:, None] * x[None, :]) % p
        self.check_slots = self._slots(rows, self.m)
        self.var_slots = self._slots(cols, self.n)

    @staticmethod
    def _slots(owner: np.ndarray, count: int) -> np.ndarray:
        deg = np.bincount(owner, minlength=count)
        width = int(deg.max()) if len(owner) else 0
        table = np.full((count, width), -1, dtype=np.int64)
        fill = np.zeros(count, dtype=np.int64)
        for e, o in enumerate(owner):
            table[o, fill[o]] = e
            fill[o] += 1
        return table


def _exclusive_products(vals: np.ndarray, axis: int) -> np.ndarray:
    """Product of all entries along ``axis`` except the one at each position."""
    v = np.moveaxis(vals, axis, -2)
    k = v.shape[-2]
    out = np.empty_like(v)
    if k == 1:
        out[...] = 1.0
        return np.moveaxis(out, -2, axis)
    pre = np.cumprod(v, axis=-2)
    suf = np.cumprod(v[..., ::-1, :], axis=-2)[..., ::-1, :]
    out[..., 0, :] = suf[..., 1, :]
    out[..., -1, :] = pre[..., -2, :]
    if k > 2:
        np.multiply(pre[..., :-2, :], suf[..., 2:, :], out=out[..., 1:-1, :])
    return np.moveaxis(out, -2, axis)


def _syndrome_ok(hard: np.ndarray, lay: _TannerLayout) -> np.ndarray:
    """Rows whose hard decision satisfies every check, using only the edges."""
    terms = hard[:, lay.cols] * lay.coef
    per_check = _gather_slots(terms[:, :, None], lay.check_slots, 0)[..., 0].sum(axis=2)
    return ~np.any(per_check % lay.p, axis=1)


def _normalize(M: np.ndarray) -> np.ndarray:
    s = M.sum(axis=-1, keepdims=True)
    bad = s <= 0
    if np.any(bad):
        M = np.where(bad, 1.0, M)
        s = np.where(bad, M.shape[-1], s)
    return M / s


def _gather_slots(msgs: np.ndarray, slots: np.ndarray, fill) -> np.ndarray:
    """(B, E, p) edge messages -> (B, nodes, width, p) with padding set to ``fill``."""
    safe = np.where(slots < 0, 0, slots)
    out = msgs[:, safe, :]
    out[:, slots < 0, :] = fill
    return out


def bp_decode(H, priors, p: int, max_iters: int = 50, damping: float = 0.0,
              stop_early: bool = True) -> BpResult:
    """Flooding sum-product decoding of a code over F_p.

    ``priors`` has shape (n, p) or (batch, n, p). Check-node updates
    convolve coefficient-permuted incoming masses over Z_p with a length-p
    FFT. Edges with zero coefficient are not part of the graph.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    H = ff.as_fp(H, p)
    P = np.asarray(priors, dtype=float)
    single = P.ndim == 2
    if single:
        P = P[None]
    B, n, _ = P.shape
    lay = _TannerLayout(H, p)
    decided = np.argmax(P, axis=2)
    converged = np.zeros(B, dtype=bool)
    iters = np.zeros(B, dtype=np.int64)
    beliefs = _normalize(P.copy())
    if lay.E == 0:
        return _finish(single, decided, np.ones(B, dtype=bool), iters, beliefs)
    eidx = np.arange(lay.E)[:, None]
    valid = lay.check_slots >= 0
    vvalid = lay.var_slots >= 0
    # rows still being decoded; converged rows leave the batch when stopping early
    act = np.arange(B)
    Pa = P
    v2c = P[:, lay.cols, :].copy()
    c2v = np.full((B, lay.E, p), 1.0 / p)
    for it in range(1, max_iters + 1):
        # check -> variable
        perm = v2c[:, eidx, lay.into]
        F = np.fft.fft(perm, axis=2)
        Fc = _gather_slots(F, lay.check_slots, 1.0)
        excl = _exclusive_products(Fc, axis=2)
        conv = np.fft.ifft(excl, axis=3).real
        new = np.empty_like(c2v)
        new[:, lay.check_slots[valid], :] = conv[:, valid, :]
        new = new[:, eidx, lay.out]
        new = _normalize(np.clip(new, 0.0, None))
        c2v = new if damping == 0 else _normalize((1 - damping) * new + damping * c2v)
        # variable -> check
        Mv = _gather_slots(c2v, lay.var_slots, 1.0)
        ex = _exclusive_products(Mv, axis=2) * Pa[:, :, None, :]
        v2c[:, lay.var_slots[vvalid], :] = _normalize(ex[:, vvalid, :])
        bel = _normalize(Mv.prod(axis=2) * Pa)
        hard = np.argmax(bel, axis=2)
        ok = _syndrome_ok(hard, lay)
        beliefs[act] = bel
        decided[act] = hard
        iters[act] = it
        converged[act] = ok
        if stop_early and ok.any():
            keep = ~ok
            act, Pa, v2c, c2v = act[keep], Pa[keep], v2c[keep], c2v[keep]
            if act.size == 0:
                break
    return _finish(single, decided, converged, iters, beliefs)


def _finish(single, decided, converged, iters, beliefs) -> BpResult:
    if single:
        return BpResult(decided[0], converged[0], iters[0], beliefs[0])
    return BpResult(decided, converged, iters, beliefs)


def _lift(res: np.ndarray, y: np.ndarray, p: int) -> np.ndarray:
    return (res + p * np.ceil((y - res) / p - 0.5)).astype(np.int64)


def lattice_decode_bp(L: ConstructionALattice, y, sigma: float, max_iters: int = 50,
                      damping: float = 0.0, window: int = 4
                      ) -> tuple[np.ndarray, np.ndarray]:
    """BP on the residues of ``y`` followed by a per-coordinate lift.

    Returns ``(points, converged)``. Where BP does not converge the last
    hard decision is lifted anyway and flagged by ``converged == False``;
    such a point need not lie in the lattice.
    """
    y = np.asarray(y, dtype=float)
    Y = np.atleast_2d(y)
    if L.skeleton is not None:
        lost = L.skeleton.n_edges - int(np.count_nonzero(L.H))
        if lost > 0:
            warnings.warn(f"{lost} zero-coefficient skeleton edges dropped from the Tanner graph",
                          stacklevel=2)
    pri = coordinate_priors(Y, sigma, L.p, window)
    res = bp_decode(L.H, pri, L.p, max_iters, damping)
    pts = _lift(res.residues, Y, L.p)
    conv = np.asarray(res.converged)
    if y.ndim == 1:
        return pts[0], conv[0]
    return pts, conv


def bp_quantize(L: ConstructionALattice, X, max_iters: int = 30) -> np.ndarray:
    """Approximate quantizer: BP at unit volume-to-noise ratio.

    Non-converged rows fall back to the nearest point of ``pZ^n`` so the
    output is always a lattice point.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    sigma = math.exp(L.volume_exponent * math.log(L.p) / L.n) / math.sqrt(2 * math.pi * math.e)
    pts, conv = lattice_decode_bp(L, X, sigma, max_iters)
    pts[~conv] = (L.p * np.ceil(X[~conv] / L.p - 0.5)).astype(np.int64)
    return pts
