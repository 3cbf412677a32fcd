"""Intensity, focality, thresholded support size and peak current of a pattern."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .leadfield import SplitLeadField

DEFAULT_REL_THRESHOLD = 1e-3


@dataclass(frozen=True, eq=False)
class CurrentPattern:
    """Per-electrode injected currents in amperes.

    Construction does not enforce the dose constraints, because solver output
    carries roundoff; call :meth:`violations` to check them.
    """

    currents: np.ndarray

    def __post_init__(self):
        y = np.array(self.currents, dtype=float).ravel()
        if not np.all(np.isfinite(y)):
            raise ValueError("current pattern contains NaN or Inf")
        y.setflags(write=False)
        object.__setattr__(self, "currents", y)

    def __len__(self):
        return self.currents.size

    def violations(self, mu: float, gamma: float, rtol: float = 1e-9) -> list[str]:
        y = self.currents
        out = []
        if abs(y.sum()) > rtol * mu:
            out.append(f"zero-sum violated: sum = {y.sum():.3e}")
        if np.abs(y).sum() > mu * (1 + rtol):
            out.append(f"dose violated: |y|_1 = {np.abs(y).sum():.6e} > {mu}")
        if np.abs(y).max(initial=0.0) > gamma * (1 + rtol):
            out.append(f"channel cap violated: max|y| = {np.abs(y).max():.6e} > {gamma}")
        return out


@dataclass(frozen=True)
class PatternMetrics:
    gamma_intensity: float
    theta_focality: float
    nnz: int
    max_current: float
    valid: bool = True

    @classmethod
    def invalid(cls) -> "PatternMetrics":
        nan = float("nan")
        return cls(nan, nan, 0, nan, valid=False)


def _vec(y) -> np.ndarray:
    if isinstance(y, CurrentPattern):
        return y.currents
    return np.asarray(y, dtype=float).ravel()


def intensity(slf: SplitLeadField, y) -> float:
    """Projection of the focused field onto the target, ``x1^T L1 y / |x1|``."""
    y = _vec(y)
    if y.size != slf.n_electrodes:
        raise ValueError(f"pattern has {y.size} entries, expected {slf.n_electrodes}")
    nrm = float(np.linalg.norm(slf.x1))
    if nrm == 0.0:
        raise ValueError("target x1 is zero; intensity undefined")
    return float(slf.x1 @ (slf.l1 @ y)) / nrm


def focality(slf: SplitLeadField, y) -> float:
    """Intensity over the RMS nuisance field.

    Returns ``inf`` when the nuisance field vanishes exactly, and 0 for the zero
    pattern.
    """
    M = slf.n_nuisance
    if M == 0:
        raise ValueError("focality needs at least one nuisance row")
    y = _vec(y)
    g = intensity(slf, y)
    if not np.any(y):
        return 0.0
    rms = float(np.linalg.norm(slf.l2 @ y)) / math.sqrt(M)
    if rms == 0.0:
        return math.inf
    return g / rms


def nnz_thresholded(y, rel_threshold: float = DEFAULT_REL_THRESHOLD):
    """Zero entries below ``rel_threshold * max|y|`` and restore the zero sum.

    The mean over the surviving entries is subtracted from them. This can push
    another survivor under the threshold, so the two steps repeat until the
    support is stable, which makes the operation idempotent. Returns
    ``(CurrentPattern, nnz)``.
    """
    if not 0.0 <= rel_threshold < 1.0:
        raise ValueError("rel_threshold must lie in [0, 1)")
    y = _vec(y).copy()
    for _ in range(y.size + 2):
        peak = np.abs(y).max(initial=0.0)
        if peak == 0.0:
            return CurrentPattern(np.zeros_like(y)), 0
        keep = (np.abs(y) >= rel_threshold * peak) & (y != 0.0)
        balanced = abs(y[keep].sum()) <= 1e-12 * peak * max(keep.sum(), 1)
        if np.array_equal(keep, y != 0.0) and balanced:
            break
        y = np.where(keep, y - y[keep].mean(), 0.0)
    return CurrentPattern(y), int(np.count_nonzero(y))


def pattern_metrics(slf: SplitLeadField, y, rel_threshold: float = DEFAULT_REL_THRESHOLD) -> PatternMetrics:
    """All metrics of a raw solver pattern (thresholding only feeds the NNZ count)."""
    y = _vec(y)
    _, nnz = nnz_thresholded(y, rel_threshold)
    return PatternMetrics(
        gamma_intensity=intensity(slf, y),
        theta_focality=focality(slf, y),
        nnz=nnz,
        max_current=float(np.abs(y).max(initial=0.0)),
    )
