"""Reciprocity reference: the bipolar montage read off the backprojected target."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .leadfield import SplitLeadField
from .metrics import CurrentPattern


@dataclass(frozen=True, eq=False)
class Backprojection:
    """``values = L1^T x1`` and ``order``, the indices by descending ``|values|``."""

    values: np.ndarray
    order: np.ndarray
    x1_norm: float

    @property
    def ordered(self) -> np.ndarray:
        return self.values[self.order]


def backproject(slf: SplitLeadField) -> Backprojection:
    nrm = float(np.linalg.norm(slf.x1))
    if nrm == 0.0:
        raise ValueError("target x1 is zero")
    v = slf.l1.T @ slf.x1
    # stable sort keeps the lower electrode index first among equal magnitudes
    order = np.argsort(-np.abs(v), kind="stable")
    return Backprojection(values=v, order=order, x1_norm=nrm)


def grp_pair(bp: Backprojection) -> tuple[int, int]:
    """(anode, cathode) maximizing the intensity of a +/- bipolar pattern.

    Over zero-sum patterns with per-channel cap mu/2 and dose mu, ``b^T y`` peaks
    at ``mu/2 * (max b - min b)``, so the pair is (argmax b, argmin b). One of the
    two is always the top entry of the ordered set.
    """
    v = bp.values
    if not np.any(v):
        raise ValueError("backprojection is identically zero; no preferred montage")
    hi = int(np.argmax(v))
    lo = int(np.argmin(v))
    if hi == lo:  # constant backprojection: every pair ties, take the first two
        hi, lo = 0, 1
    return hi, lo


def grp_bipolar(slf: SplitLeadField, mu: float) -> CurrentPattern:
    if slf.n_electrodes < 2:
        raise ValueError("need at least two electrodes")
    if not mu > 0:
        raise ValueError("mu must be positive")
    hi, lo = grp_pair(backproject(slf))
    y = np.zeros(slf.n_electrodes)
    y[hi] = mu / 2
    y[lo] = -mu / 2
    return CurrentPattern(y)


def grp_k_intensity(bp: Backprojection, mu: float, k: int) -> float:
    """``mu * sigma_K * |s_K|^2`` for the top-``k`` electrodes of the ordered set.

    With ``v`` the top-k backprojections this is ``mu * sum(v^2) / (|v|_1 |x1|)``,
    i.e. a |v|-weighted mean of |v|, hence non-increasing in ``k``.
    """
    L = bp.values.size
    if not 2 <= k <= L:
        raise ValueError(f"k must lie in [2, {L}], got {k}")
    v = bp.ordered[:k]
    l1 = np.abs(v).sum()
    if l1 == 0.0:
        return 0.0
    sigma = l1 / bp.x1_norm
    s = v / l1
    return float(mu * sigma * (s @ s))


def premise_holds(bp: Backprojection, k: int | None = None) -> bool:
    """True when no single channel carries more than half of the top-k |backprojection|.

    Instances where this fails have a single dominant channel; they are flagged
    rather than treated specially.
    """
    a = np.abs(bp.ordered[: (k or bp.values.size)])
    return bool(a[0] <= a[1:].sum())


def appendix_increment(lam) -> float:
    """Closed-form ``lam_K/(1-lam_K) * (lam_K^2 - lam_K + 2 sum_{j<K} lam_j^2)``.

    ``lam`` is a descending nonnegative vector summing to one; the last entry
    plays the role of the newly added electrode.
    """
    lam = np.asarray(lam, dtype=float)
    lk = lam[-1]
    head = lam[:-1]
    return float(lk / (1.0 - lk) * (lk * lk - lk + 2.0 * (head @ head)))
