"""Concave penalty functions on the belief omega = P[state is 1].

Each penalty measures how costly it is to stay uncertain about a source.  All
evaluators clamp the belief into [1e-12, 1 - 1e-12] before computing, so the
log in the entropy penalty and the reciprocal penalty stay finite at the
endpoints.  Values may be negative (the reciprocal kind is unbounded below);
concavity on (0,1) is the only structural promise.
"""

from __future__ import annotations

import numpy as np

BELIEF_CLAMP = 1e-12

KINDS = ("entropy", "mean_std", "quadratic", "reciprocal")


class Penalty:
    """A named concave penalty with vectorized evaluation.

    kind:
      entropy     binary entropy in bits
      mean_std    mean + beta * std of a cost that is alpha1 w.p. w, alpha0 w.p. 1-w
      quadratic   1 - (2w - 1)^2
      reciprocal  c - 1/w  (negative near w = 0)
    """

    def __init__(self, kind: str, **kwargs):
        kind = kind.replace("-", "_")
        if kind not in KINDS:
            raise ValueError(f"unknown penalty kind {kind!r}, expected one of {KINDS}")
        self.kind = kind
        self.params = {}
        if kind == "mean_std":
            self.params = {
                "alpha0": float(kwargs.pop("alpha0", -1.0)),
                "alpha1": float(kwargs.pop("alpha1", 2.0)),
                "beta": float(kwargs.pop("beta", 0.5)),
            }
            if self.params["beta"] < 0.0:
                raise ValueError("beta must be >= 0 to keep the penalty concave")
        elif kind == "reciprocal":
            self.params = {"c": float(kwargs.pop("c", 20.0))}
        if kwargs:
            raise ValueError(f"unexpected parameters for kind {kind!r}: {sorted(kwargs)}")

    def __call__(self, omega):
        """Evaluate at a scalar or array of beliefs; scalars come back scalar."""
        w = np.clip(np.asarray(omega, dtype=np.float64), BELIEF_CLAMP, 1.0 - BELIEF_CLAMP)
        if self.kind == "entropy":
            out = -(w * np.log2(w) + (1.0 - w) * np.log2(1.0 - w))
        elif self.kind == "mean_std":
            a0 = self.params["alpha0"]
            a1 = self.params["alpha1"]
            beta = self.params["beta"]
            mean = a1 * w + a0 * (1.0 - w)
            var = np.maximum(a1 ** 2 * w + a0 ** 2 * (1.0 - w) - mean ** 2, 0.0)
            out = mean + beta * np.sqrt(var)
        elif self.kind == "quadratic":
            out = 1.0 - (2.0 * w - 1.0) ** 2
        else:  # reciprocal
            out = self.params["c"] - 1.0 / w
        if np.isscalar(omega) or np.ndim(omega) == 0:
            return float(out)
        return out

    def mirrored(self) -> "Penalty":
        """Penalty evaluating this one at 1 - omega (swaps the state labels)."""
        return _Mirrored(self)

    def __repr__(self):
        if self.params:
            inner = ", ".join(f"{k}={v}" for k, v in sorted(self.params.items()))
            return f"Penalty({self.kind!r}, {inner})"
        return f"Penalty({self.kind!r})"


class _Mirrored(Penalty):
    """Wrapper used when a problem is reduced to its label-swapped twin."""

    def __init__(self, base: Penalty):
        self.kind = base.kind
        self.params = base.params
        self._base = base

    def __call__(self, omega):
        w = np.asarray(omega, dtype=np.float64)
        out = self._base(1.0 - w)
        if np.isscalar(omega) or np.ndim(omega) == 0:
            return float(out)
        return out

    def mirrored(self) -> Penalty:
        return self._base

    def __repr__(self):
        return f"{self._base!r}.mirrored()"


def make_penalty(kind: str, **kwargs) -> Penalty:
    """Build a penalty by kind name; see Penalty for the recognized kinds."""
    return Penalty(kind, **kwargs)
