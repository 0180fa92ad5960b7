"""Closed-form parameter conditions and finite-n evaluation of the asymptotic bounds.

Every formula is transcribed term by term; sums run over their literal index
ranges in log space (natural logarithms). Where the ambient modulus enters,
``p = n ** lam`` is used unless a value is supplied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import logsumexp

from .exceptions import InvalidConfigError
from .geometry import count_integer_points, BallSpec, log_unit_ball_volume

NEG_INF = float("-inf")


class BoundDomainError(InvalidConfigError):
    """A bound was evaluated outside the domain where it is defined."""


@dataclass(frozen=True)
class ParameterSet:
    R: float
    lam: float
    alpha: float
    A: float
    beta: float
    B: float
    epsilon: float | None = None
    vartheta: float | None = None
    omega: float = 0.5

    def __post_init__(self):
        if not 0 < self.R < 1:
            raise InvalidConfigError("need 0 < R < 1")
        if self.lam <= 0:
            raise InvalidConfigError("need lambda > 0")
        if self.epsilon is None:
            object.__setattr__(self, "epsilon", (1 - self.R) / (self.A + 1 - self.R))
        if self.vartheta is None:
            object.__setattr__(self, "vartheta", 1 / (self.B * (1 - self.R) + 1))

    def with_lambda(self, lam: float) -> "ParameterSet":
        return replace(self, lam=lam)

    def graph_violations(self) -> list[str]:
        from .expander import ExpansionParams
        return ExpansionParams(self.alpha, self.A, self.beta, self.B,
                               self.epsilon, self.vartheta).violations(self.R)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("R", "lam", "alpha", "A", "beta", "B", "epsilon", "vartheta", "omega")}


def _frac(num: float, den: float, label: str) -> float:
    if den <= 0:
        raise BoundDomainError(f"non-positive denominator in {label}")
    return num / den


# -- lambda thresholds ------------------------------------------------------

def lambda_terms_main(ps: ParameterSet, a_term: str = "as_printed") -> list[float]:
    """Seven lower bounds on lambda for simultaneous goodness.

    ``a_term="as_printed"`` uses ``2/(A - 2(1-R))`` as stated with the main
    result; ``"mse"`` uses ``2/(A - 2(1+R))`` as stated for quantization.
    """
    R, A, B, a = ps.R, ps.A, ps.B, ps.alpha
    if a_term == "as_printed":
        a_den = A - 2 * (1 - R)
    elif a_term == "mse":
        a_den = A - 2 * (1 + R)
    else:
        raise InvalidConfigError(f"unknown a_term variant {a_term!r}")
    _frac(1, A * B - 1, "AB-1")
    return [
        1 / R,
        1 / (1 - R),
        _frac(2, a_den, "A term"),
        _frac(2, B * (1 - R) - 2 * (1 + R), "B(1-R)-2(1+R)"),
        2 / _pos(1 - 1 / (A * B - 1) - 1 / A, "1-1/(AB-1)-1/A"),
        _frac(1, 2 * (a - 1 + R), "2(alpha-1+R)"),
        _frac(2 * B + 1.5, B * (1 - R) - 1, "B(1-R)-1"),
    ]


def _pos(x: float, label: str) -> float:
    if x <= 0:
        raise BoundDomainError(f"non-positive denominator in {label}")
    return x


def lambda_threshold_main(ps: ParameterSet, a_term: str = "as_printed") -> float:
    return max(lambda_terms_main(ps, a_term))


def lambda_terms_mse(ps: ParameterSet) -> list[float]:
    R, A, B = ps.R, ps.A, ps.B
    _frac(1, A * B - 1, "AB-1")
    return [
        1 / R,
        1 / (1 - R),
        _frac(2, A - 2 * (1 + R), "A-2(1+R)"),
        _frac(2, B * (1 - R) - 2 * (1 + R), "B(1-R)-2(1+R)"),
        2 / _pos(1 - 1 / (A * B - 1) - 1 / A, "1-1/(AB-1)-1/A"),
    ]


def lambda_threshold_mse(ps: ParameterSet) -> float:
    return max(lambda_terms_mse(ps))


def lambda_terms_awgn(ps: ParameterSet) -> list[float]:
    R = ps.R
    return [
        _frac(1, 2 * (ps.alpha - 1 + R), "2(alpha-1+R)"),
        _frac(3, 2 * (ps.A - 1 + R), "2(A-1+R)"),
        _frac(1, ps.B * (1 - R) - 1, "B(1-R)-1"),
    ]


def lambda_threshold_awgn(ps: ParameterSet) -> float:
    return max(lambda_terms_awgn(ps))


def lambda_threshold_dual(ps: ParameterSet) -> float:
    R, B = ps.R, ps.B
    return max(1 / (2 * (1 - R)), _frac(2 * B + 1.5, B * (1 - R) - 1, "B(1-R)-1"))


def a_term_discrepancy(ps: ParameterSet) -> dict:
    """Both readings of the A-dependent lambda term and their effect on the threshold."""
    out = {}
    for variant in ("as_printed", "mse"):
        try:
            out[variant] = {"term": lambda_terms_main(ps, variant)[2],
                            "threshold": lambda_threshold_main(ps, variant)}
        except BoundDomainError as exc:
            out[variant] = {"term": None, "threshold": None, "error": str(exc)}
    t1, t2 = out["as_printed"]["threshold"], out["mse"]["threshold"]
    out["threshold_differs"] = t1 is None or t2 is None or t1 != t2
    return out


def mse_conditions_hold(ps: ParameterSet) -> bool:
    R = ps.R
    if ps.A <= 2 * (1 + R) or ps.B <= 2 * (1 + R) / (1 - R):
        return False
    try:
        return ps.lam > lambda_threshold_mse(ps)
    except BoundDomainError:
        return False


def dual_conditions_hold(ps: ParameterSet) -> bool:
    if ps.graph_violations():
        return False
    try:
        return ps.lam > lambda_threshold_dual(ps)
    except BoundDomainError:
        return False


def delta_mse(ps: ParameterSet) -> float:
    R, lam = ps.R, ps.lam
    return 0.5 * min(lam * (ps.A - 2 * (1 + R)) - 2,
                     lam * (ps.B * (1 - R) - 2 * (1 + R)) - 1)


def fullrank_bound(n: float, lam: float, delta: float) -> float:
    return float(n) ** (-(2 * lam + delta))


# -- dual packing constants -------------------------------------------------

def c1_constant(ps: ParameterSet) -> float:
    q = 1 - ps.R
    return math.log(8 / (1 - q / (2 * ps.alpha))) / _pos(
        ps.lam * (1 - q / ps.alpha), "lambda(1-(1-R)/alpha)")


def log_zeta(ps: ParameterSet, n: float) -> float:
    q = 1 - ps.R
    C1 = c1_constant(ps)
    L = math.log(n)
    x = C1 / (q * L)
    if x >= 1:
        raise BoundDomainError("n too small: C1/((1-R) ln n) >= 1")
    return (-4 / n) * L + (4 * x) * math.log(x / math.e) + 2 * math.log1p(-x)


def dual_constants(ps: ParameterSet, n: float, p: float | None = None) -> tuple[float, float, float]:
    """``(C1, zeta_n, r_n)`` with ``r_n = p^R zeta_n / V_n^(1/n)``."""
    C1 = c1_constant(ps)
    z = math.exp(log_zeta(ps, n))
    logp = ps.lam * math.log(n) if p is None else math.log(p)
    r_n = math.exp(ps.R * logp - log_unit_ball_volume(int(round(n))) / n) * z
    return C1, z, r_n


# -- variance terms ---------------------------------------------------------

@dataclass
class VarianceTerms:
    """Log values of the three variance terms, raw and divided by E(rho)."""

    n: int
    log_E: float
    E_mode: str
    log_terms: tuple[float, float, float]
    log_relative: tuple[float, float, float]
    log_envelope: float
    skipped_indices: int = 0

    @property
    def envelope_excess(self) -> tuple[float, float, float]:
        """log(term / (E n^(-2 lam R - delta))); positive means above the envelope."""
        return tuple(t - self.log_envelope for t in self.log_relative)


def _lse(vals) -> float:
    vals = np.asarray(vals, dtype=float)
    if vals.size == 0:
        return NEG_INF
    return float(logsumexp(vals))


def _cum_lse(vals: np.ndarray) -> np.ndarray:
    return np.logaddexp.accumulate(vals) if vals.size else vals


def log_ball_count(ps: ParameterSet, n: int, rho: float, count_budget: int) -> tuple[float, str]:
    """log |Z^n ∩ (x + rho B)|: exact at the origin when affordable, else the volume upper bound."""
    if n * math.log(2 * rho + 1) <= math.log(count_budget):
        c = count_integer_points(BallSpec((0.0,) * n, rho), budget=count_budget)
        return math.log(c), "exact"
    return log_unit_ball_volume(n) + n * math.log(rho + math.sqrt(n) / 2), "volume_upper"


def variance_terms(ps: ParameterSet, n: int, rho: float | None = None,
                   count_budget: int = 10**6, log_E: float | None = None,
                   p: float | None = None) -> VarianceTerms:
    R, lam, A, B = ps.R, ps.lam, ps.A, ps.B
    q = 1 - R
    L = math.log(n)
    logp = lam * L if p is None else math.log(p)
    if log_E is None:
        if rho is None:
            log_r = (n * q * logp - log_unit_ball_volume(n)) / n
            rho = math.exp(log_r) * (1 + n ** (-ps.omega))
        log_count, mode = log_ball_count(ps, n, rho, count_budget)
        log_E = 2 * log_count - 2 * n * q * logp
    else:
        mode = "supplied"
    M = int(math.floor(n * q + 1e-9))

    # term 1
    S1 = int(math.floor(n * q / (A + 1 - R) + 1e-9))
    s = np.arange(1, S1 + 1)
    t1 = _lse(s * (2 - lam * (A - 2)) * L)

    # shared (1 + Bk/(n-Bk))^((n-Bk+1)/2) factor, defined only while Bk < n
    J = int(math.floor(n * q / (B * q + 1) + 1e-9))
    k = np.arange(0, M + 1)
    ok = B * k < n
    skipped = int((~ok).sum())
    kk = k[ok].astype(float)
    growth = np.full(M + 1, NEG_INF)
    growth[ok] = 0.5 * (n - B * kk + 1) * (np.log(n) - np.log(n - B * kk))

    # term 2 / E
    logf = growth + k * (1 - lam * (B * q - 2)) * L
    F = _cum_lse(logf)
    parts = [_lse(logf[1:])]
    for j in range(1, min(J, M) + 1):
        parts.append(logf[j] + F[M - j])
    r2 = _lse(parts)

    # term 3 / E
    c = 1 + lam * (1 / (A * B - 1) + 1 / A - 1)
    logg = growth + k * lam * (2 - B * q) * L
    G = _cum_lse(k * c * L)
    parts = [G[M - 1] if M >= 1 else NEG_INF]
    for j in range(1, min(J, M) + 1):
        parts.append(logg[j] + j * c * L + G[M - j])
    r3 = lam * L - 0.5 * log_E + _lse(parts)

    r1 = t1 - log_E
    envelope = -(2 * lam * R + delta_mse(ps)) * L
    return VarianceTerms(n=n, log_E=log_E, E_mode=mode,
                         log_terms=(t1, r2 + log_E, r3 + log_E),
                         log_relative=(r1, r2, r3), log_envelope=envelope,
                         skipped_indices=skipped)


# -- dual packing regimes ---------------------------------------------------

@dataclass
class PhiBounds:
    n: int
    log_phi: tuple[float, float, float, float]
    diagnostics: list[str] = field(default_factory=list)

    @property
    def phi(self) -> tuple[float, ...]:
        return tuple(math.exp(v) for v in self.log_phi)


def phi1_exponent(ps: ParameterSet) -> float:
    return 1.5 + ps.lam + 2 * ps.B - ps.lam * ps.B * (1 - ps.R)


def dual_packing_phis(ps: ParameterSet, n: int, phi3_variant: str = "derived") -> PhiBounds:
    """Upper bounds for the four syndrome-weight regimes at finite ``n``.

    Unspecified multiplicative constants are set to one. ``phi3_variant``
    picks how the ``t/alpha`` exponent enters the third regime: ``"derived"``
    carries the ``(1-R)`` factor the derivation produces, ``"as_printed"``
    drops it.
    """
    R, lam, B, beta, th, a = ps.R, ps.lam, ps.B, ps.beta, ps.vartheta, ps.alpha
    q = 1 - R
    L = math.log(n)
    logp = lam * L
    diag: list[str] = []

    e1 = phi1_exponent(ps)
    if e1 >= -1e-12:
        diag.append(f"exponent non-negative: phi1 exponent {e1:.6g} >= 0")
    T1 = int(math.floor(th * n * q + 1e-9))
    t = np.arange(1, T1 + 1)
    lphi1 = _lse(t * (B * math.log(2) + math.log(q)) + t * e1 * L)

    lphi2 = n * q * math.log(2) - (beta * q - 1) * th * n * q * logp \
        + n * math.log(4 / (beta * th * q))

    C1 = c1_constant(ps)
    t_lo = math.ceil(n * q / 2 - 1e-9)
    upper = (q - C1 / L) * n - 1
    t_hi = math.ceil(upper - 1e-9) - 1
    t3 = np.arange(t_lo, t_hi + 1, dtype=float)
    if phi3_variant == "derived":
        slope = q / a
    elif phi3_variant == "as_printed":
        slope = 1 / a
    else:
        raise InvalidConfigError(f"unknown phi3 variant {phi3_variant!r}")
    if t3.size == 0:
        diag.append("phi3 regime empty at this n")
    lphi3 = _lse(n * math.log(8 / (1 - q / (2 * a)))
                 + logp * (t3 - n * q * (1 - q / a) - t3 * slope))

    x = C1 / (q * L)
    if x >= 1:
        raise BoundDomainError("n too small: C1/((1-R) ln n) >= 1")
    lphi4 = (L + (2 * n * x) * math.log(math.e / x) - n * math.log1p(-x)
             + 0.5 * n * log_zeta(ps, n))
    return PhiBounds(n=n, log_phi=(lphi1, lphi2, lphi3, lphi4), diagnostics=diag)


# -- grids ------------------------------------------------------------------

@dataclass
class BoundCurve:
    label: str
    n_grid: list[int]
    values: list[float]

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise InvalidConfigError("n grid must be strictly increasing")


def parse_n_grid(spec: str) -> list[int]:
    """``a:b:log10`` (decades from a to b) or ``a:b:k`` (k evenly spaced points)."""
    lo, hi, how = spec.split(":")
    a, b = float(lo), float(hi)
    if how == "log10":
        la, lb = round(math.log10(a)), round(math.log10(b))
        return [int(round(10.0 ** e)) for e in range(la, lb + 1)]
    return sorted({int(round(v)) for v in np.linspace(a, b, int(how))})


def bound_curves(ps: ParameterSet, n_grid: list[int]) -> list[BoundCurve]:
    """Every n-dependent bound on the grid, as natural-log values."""
    rows: dict[str, list[float]] = {k: [] for k in (
        "log_fullrank_bound", "log_var_term1_rel", "log_var_term2_rel", "log_var_term3_rel",
        "log_var_envelope", "log_phi1", "log_phi2", "log_phi3", "log_phi4", "zeta_n", "r_n")}
    d = delta_mse(ps)
    for n in n_grid:
        rows["log_fullrank_bound"].append(-(2 * ps.lam + d) * math.log(n))
        vt = variance_terms(ps, n)
        for i in range(3):
            rows[f"log_var_term{i + 1}_rel"].append(vt.log_relative[i])
        rows["log_var_envelope"].append(vt.log_envelope)
        ph = dual_packing_phis(ps, n)
        for i in range(4):
            rows[f"log_phi{i + 1}"].append(ph.log_phi[i])
        _, z, r = dual_constants(ps, n)
        rows["zeta_n"].append(z)
        rows["r_n"].append(r)
    return [BoundCurve(k, list(n_grid), v) for k, v in rows.items()]
