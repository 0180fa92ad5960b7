"""Scikit-learn style front end for building and using one LDA lattice."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .construction import build_lattice, randomize_skeleton
from .decoding import lattice_decode_bp
from .exceptions import InvalidConfigError
from .expander import SkeletonGraph, sample_standard_ensemble
from .finite_field import check_modulus
from .geometry import DEFAULT_BUDGET, closest_points


class LDALattice(TransformerMixin, BaseEstimator):
    """Random low-density Construction-A lattice over F_p.

    ``fit`` samples a (dv, dc)-regular skeleton (unless one is supplied),
    randomizes its edge labels and builds the lattice. ``transform`` maps
    rows to their closest lattice points; ``predict`` does the same with
    the chosen decoder, which is where BP becomes useful.

    Parameters
    ----------
    n_variables : int or None
        Block length. Taken from ``X.shape[1]`` when None.
    dv, dc : int
        Variable and check degrees of the sampled skeleton.
    p : int
        Prime modulus.
    decoder : {"ml", "bp"}
    noise_sigma : float
        Channel noise level fed to the BP priors.
    """

    def __init__(self, n_variables=None, dv=3, dc=6, p=5, decoder="ml", noise_sigma=0.5,
                 max_iters=50, budget=DEFAULT_BUDGET, skeleton=None, random_state=None):
        self.n_variables = n_variables
        self.dv = dv
        self.dc = dc
        self.p = p
        self.decoder = decoder
        self.noise_sigma = noise_sigma
        self.max_iters = max_iters
        self.budget = budget
        self.skeleton = skeleton
        self.random_state = random_state

    def fit(self, X=None, y=None):
        if self.decoder not in ("ml", "bp"):
            raise InvalidConfigError(f"decoder must be 'ml' or 'bp', got {self.decoder!r}")
        check_modulus(self.p)
        n = self.n_variables
        if X is not None:
            X = check_array(X, dtype=np.float64)
            if n is not None and X.shape[1] != n:
                raise InvalidConfigError(f"X has {X.shape[1]} columns, expected {n}")
            n = X.shape[1]
        if self.skeleton is not None:
            sk = self.skeleton
            if not isinstance(sk, SkeletonGraph):
                sk = SkeletonGraph.from_matrix(np.asarray(sk))
            if n is not None and sk.n != n:
                raise InvalidConfigError("skeleton length does not match the data")
        elif n is None:
            raise InvalidConfigError("n_variables is required when fitting without data")
        graph_seq, label_seq = np.random.SeedSequence(self.random_state).spawn(2)
        if self.skeleton is None:
            sk = sample_standard_ensemble(n, self.dv, self.dc, seed=graph_seq)
        self.skeleton_ = sk
        self.H_ = randomize_skeleton(sk, self.p, label_seq)
        self.lattice_ = build_lattice(self.H_, self.p, sk)
        self.n_features_in_ = sk.n
        return self

    def _validate(self, X):
        check_is_fitted(self, "lattice_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X

    def transform(self, X):
        """Closest lattice point of each row (exact search)."""
        X = self._validate(X)
        pts, _ = closest_points(self.lattice_, X, self.budget)
        return pts

    def predict(self, X):
        """Decode each row with the configured decoder."""
        X = self._validate(X)
        if self.decoder == "ml":
            return closest_points(self.lattice_, X, self.budget)[0]
        pts, _ = lattice_decode_bp(self.lattice_, X, self.noise_sigma, self.max_iters)
        return pts

    def score(self, X, y):
        """Fraction of rows whose decoded point equals the reference row in ``y``."""
        pred = self.predict(X)
        y = check_array(y, dtype=np.float64)
        return float(np.mean(np.all(pred == y, axis=1)))
