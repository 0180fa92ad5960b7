"""Monte Carlo experiments and report emission."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from statistics import median

import numpy as np

from ._rng import child_seeds, run_chunks, split_trials
from .construction import ConstructionALattice, build_lattice, randomize_skeleton, wilson_interval
from .decoding import lattice_decode_bp, ml_decode
from .exceptions import BudgetExceededError, InvalidConfigError
from .expander import SkeletonGraph
from .geometry import DEFAULT_BUDGET, effective_radius, nsm_estimate, packing_radius

SCHEMA_VERSION = 1
CURVE_COLUMNS = ("sigma", "vnr", "trials", "word_errors", "wer", "ci_low", "ci_high")
ERGODIC_COLUMNS = ("n", "trials", "exceed", "frequency", "ci_low", "ci_high")


def vnr(L: ConstructionALattice, sigma: float) -> float:
    """``vol^(2/n) / (2 pi e sigma^2)`` from the exact volume exponent."""
    if sigma == 0:
        return math.inf
    return math.exp(2 * L.volume_exponent * math.log(L.p) / L.n) / (2 * math.pi * math.e * sigma**2)


def sigma_for_vnr(L: ConstructionALattice, target: float) -> float:
    return math.exp(L.volume_exponent * math.log(L.p) / L.n) / math.sqrt(2 * math.pi * math.e * target)


def parse_sigma_grid(spec: str) -> list[float]:
    """``a:b:steps`` evenly spaced, or a comma-separated list."""
    if ":" in spec:
        a, b, k = spec.split(":")
        return [float(v) for v in np.linspace(float(a), float(b), int(k))]
    return [float(v) for v in spec.split(",") if v.strip()]


# -- AWGN word-error curves ------------------------------------------------

@dataclass
class ErrorRateCurve:
    rows: list[dict] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        return [r[name] for r in self.rows]


def _awgn_chunk(task) -> tuple[int, int]:
    L, sigma, count, seq, decoder, random_codeword, radius, max_iters, budget = task
    rng = np.random.default_rng(seq)
    errors = exceed = 0
    block = 5_000
    done = 0
    while done < count:
        b = min(block, count - done)
        z = rng.normal(0.0, sigma, size=(b, L.n)) if sigma > 0 else np.zeros((b, L.n))
        if radius is not None:
            exceed += int(np.count_nonzero(np.sqrt((z * z).sum(axis=1)) >= radius))
        if random_codeword:
            x = L.codewords[rng.integers(0, len(L.codewords), size=b)]
        else:
            x = np.zeros((b, L.n), dtype=np.int64)
        y = x + z
        if decoder == "ml":
            est = ml_decode(L, y, budget)
        else:
            est, _ = lattice_decode_bp(L, y, sigma, max_iters)
        errors += int(np.count_nonzero(np.any(est != x, axis=1)))
        done += b
    return errors, exceed


def awgn_error_experiment(L: ConstructionALattice, sigma_grid, trials: int, decoder: str = "ml",
                          seed=None, workers: int = 1, random_codeword: bool = False,
                          radius: float | None = None, max_iters: int = 50,
                          budget: int = DEFAULT_BUDGET) -> ErrorRateCurve:
    """Word-error rate of transmitting over unconstrained AWGN, one row per sigma.

    The zero point is sent by default. With ``radius`` set, each row also
    counts noise draws of norm at least ``radius`` (column ``norm_exceed``).
    """
    if decoder not in ("ml", "bp"):
        raise InvalidConfigError(f"unknown decoder {decoder!r}")
    if trials < 1:
        raise InvalidConfigError("trials must be >= 1")
    curve = ErrorRateCurve(config={"decoder": decoder, "trials": trials, "seed": seed,
                                   "workers": workers, "random_codeword": random_codeword})
    sizes = split_trials(trials, workers)
    for i, sigma in enumerate(sigma_grid):
        if sigma < 0:
            raise InvalidConfigError("sigma must be >= 0")
        seqs = child_seeds(seed, i, count=len(sizes))
        tasks = [(L, float(sigma), c, s, decoder, random_codeword, radius, max_iters, budget)
                 for c, s in zip(sizes, seqs) if c]
        res = run_chunks(_awgn_chunk, tasks, workers)
        errors = sum(r[0] for r in res)
        lo, hi = wilson_interval(errors, trials)
        row = {"sigma": float(sigma), "vnr": vnr(L, float(sigma)), "trials": trials,
               "word_errors": errors, "wer": errors / trials, "ci_low": lo, "ci_high": hi}
        if radius is not None:
            row["norm_exceed"] = sum(r[1] for r in res)
        curve.rows.append(row)
    return curve


# -- semi norm-ergodic noise ------------------------------------------------

NOISE_KINDS = ("gaussian_iid", "uniform_iid", "student_t_iid")


def _unit_variance_noise(kind: str, rng, shape, df: float) -> np.ndarray:
    if kind == "gaussian_iid":
        return rng.standard_normal(shape)
    if kind == "uniform_iid":
        return rng.uniform(-math.sqrt(3), math.sqrt(3), size=shape)
    if kind == "student_t_iid":
        return rng.standard_t(df, size=shape) / math.sqrt(df / (df - 2))
    raise InvalidConfigError(f"unknown noise kind {kind!r}")


def _ergodic_chunk(task) -> int:
    kind, n, delta, count, seq, df = task
    rng = np.random.default_rng(seq)
    block = max(1, 2_000_000 // n)
    hits = done = 0
    thresh = (1 + delta) * n
    while done < count:
        b = min(block, count - done)
        z = _unit_variance_noise(kind, rng, (b, n), df)
        hits += int(np.count_nonzero((z * z).sum(axis=1) > thresh))
        done += b
    return hits


def semi_norm_ergodic_check(noise_kind: str, n_grid, delta: float, trials: int, seed=None,
                            df: float = 5.0, workers: int = 1) -> list[dict]:
    """Empirical ``Pr[|z| > sqrt((1+delta) n sigma^2)]`` for unit-variance i.i.d. noise."""
    if noise_kind not in NOISE_KINDS:
        raise InvalidConfigError(f"noise kind must be one of {NOISE_KINDS}")
    if noise_kind == "student_t_iid" and df <= 2:
        raise InvalidConfigError("student-t noise needs df > 2 for finite variance")
    rows = []
    sizes = split_trials(trials, workers)
    for i, n in enumerate(n_grid):
        seqs = child_seeds(seed, i, count=len(sizes))
        hits = sum(run_chunks(_ergodic_chunk, [(noise_kind, int(n), delta, c, s, df)
                                               for c, s in zip(sizes, seqs) if c], workers))
        lo, hi = wilson_interval(hits, trials)
        rows.append({"n": int(n), "trials": trials, "exceed": hits,
                     "frequency": hits / trials, "ci_low": lo, "ci_high": hi})
    return rows


# -- per-lattice metrics and the aggregate report --------------------------

def lattice_metrics(L: ConstructionALattice, nsm_samples: int = 10_000, seed=None,
                    budget: int = DEFAULT_BUDGET, workers: int = 1) -> dict:
    """Radii, shortest vector and NSM; fields that exceed the budget become None."""
    out: dict = {"n": L.n, "p": L.p, "rank": L.rank, "full_rank": L.full_rank,
                 "volume_exponent": L.volume_exponent, "r_eff": effective_radius(L),
                 "budget_used": min(L.p ** L.code_dim, budget) if 0 < L.code_dim < L.n else 0,
                 "flags": []}
    try:
        r_pack, sv = packing_radius(L, budget)
        out["r_pack"] = r_pack
        out["shortest_vector"] = [int(v) for v in sv]
        out["packing_ratio"] = r_pack / out["r_eff"]
    except BudgetExceededError:
        out.update(r_pack=None, shortest_vector=None, packing_ratio=None)
        out["flags"].append("r_pack: budget exceeded")
    if nsm_samples:
        try:
            est = nsm_estimate(L, nsm_samples, seed, budget=budget, workers=workers)
            out["nsm_mean"] = est.mean
            out["nsm_ci"] = [est.ci[0], est.ci[1]]
        except BudgetExceededError:
            out.update(nsm_mean=None, nsm_ci=None)
            out["flags"].append("nsm: budget exceeded")
    else:
        out.update(nsm_mean=None, nsm_ci=None)
    return out


def goodness_report(skeleton: SkeletonGraph, p: int, seeds, nsm_samples: int = 5_000,
                    wer_trials: int = 1_000, vnr_points=(1.0, 1.5), budget: int = DEFAULT_BUDGET,
                    workers: int = 1, lattices: list[ConstructionALattice] | None = None) -> dict:
    """Per-seed metrics of randomized lattices over one skeleton, with medians.

    ``lattices`` replaces the randomized instances (one per seed) when given,
    which is how degenerate instances are injected.
    """
    records = []
    seeds = list(seeds)
    for idx, s in enumerate(seeds):
        if lattices is not None:
            L = lattices[idx]
        else:
            L = build_lattice(randomize_skeleton(skeleton, p, s), p, skeleton)
        rec = lattice_metrics(L, nsm_samples, s, budget, workers)
        rec["seed"] = s
        rec["volume"] = L.volume
        try:
            sig = [sigma_for_vnr(L, v) for v in vnr_points]
            curve = awgn_error_experiment(L, sig, wer_trials, "ml", s, workers, budget=budget)
            rec["wer_curve"] = curve.rows
        except BudgetExceededError:
            rec["wer_curve"] = None
            rec["flags"].append("wer: budget exceeded")
        records.append(rec)

    def _med(key):
        vals = [r[key] for r in records if r.get(key) is not None]
        return median(vals) if vals else None

    return {
        "schema_version": SCHEMA_VERSION,
        "p": p,
        "n": skeleton.n if skeleton is not None else records[0]["n"],
        "seeds": seeds,
        "instances": records,
        "median": {k: _med(k) for k in ("r_eff", "r_pack", "packing_ratio", "nsm_mean")},
        "full_rank_fraction": sum(r["full_rank"] for r in records) / len(records),
    }


# -- emission ---------------------------------------------------------------

def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o)}")


def dumps_json(payload, config: dict | None = None) -> str:
    doc = {"config": config or {}, "result": payload}
    return json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, dict)):
        return json.dumps(v, sort_keys=True, default=_json_default)
    return str(v)


def dumps_csv(rows: list[dict], columns=None, config: dict | None = None) -> str:
    """Config echoed as ``# key: json`` comment lines, then a header row."""
    if columns is None:
        columns = list(rows[0]) if rows else []
    buf = io.StringIO()
    for k in sorted(config or {}):
        buf.write(f"# {k}: {json.dumps(config[k], sort_keys=True, default=_json_default)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c, "")) for c in columns])
    return buf.getvalue()


def _parse_cell(s: str):
    if s == "":
        return None
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    if s in ("inf", "-inf", "nan"):
        return float(s)
    try:
        return json.loads(s)
    except json.JSONDecodeError:
        return s


def loads_csv(text: str) -> tuple[list[dict], dict]:
    config: dict = {}
    body = []
    for ln in text.splitlines():
        if ln.startswith("# "):
            k, _, v = ln[2:].partition(": ")
            config[k] = json.loads(v)
        else:
            body.append(ln)
    reader = csv.reader(body)
    header = next(reader, [])
    rows = [{c: _parse_cell(v) for c, v in zip(header, row)} for row in reader]
    return rows, config


def _flatten(doc, prefix="") -> list[dict]:
    out = []
    if isinstance(doc, dict):
        for k in sorted(doc):
            out.extend(_flatten(doc[k], f"{prefix}{k}."))
    else:
        out.append({"key": prefix[:-1], "value": doc})
    return out


def emit(payload, fmt: str, path, config: dict | None = None, columns=None) -> None:
    """Write a table (list of dicts) or document (dict) as CSV or JSON."""
    if fmt == "json":
        text = dumps_json(payload, config)
    elif fmt == "csv":
        if isinstance(payload, dict):
            text = dumps_csv(_flatten(payload), ("key", "value"), config)
        else:
            text = dumps_csv(payload, columns, config)
    else:
        raise InvalidConfigError(f"unknown format {fmt!r}")
    if path is None or str(path) == "-":
        import sys
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def read_output(path) -> tuple[object, dict]:
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        return doc["result"], doc["config"]
    return loads_csv(text)


def load_schema(name: str = "goodness_report") -> dict:
    """Shipped JSON schema: ``goodness_report`` or ``output``."""
    from importlib import resources
    return json.loads(resources.files("ldalattice").joinpath(f"schemas/{name}.schema.json").read_text())
