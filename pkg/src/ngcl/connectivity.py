"""Directed functional connectivity from windowed multichannel signals.

Per analysis window a multivariate autoregressive (MVAR) model is fit by
least squares, converted to a frequency-domain transfer matrix, and
integrated over clinical frequency bands into a directed transfer function
(DTF) graph. Weak edges are pruned at the top-quartile threshold and the
per-band graphs are averaged.

Convention: ``weights[i, j]`` is the influence strength of channel ``j``
onto channel ``i`` (row = target).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateInputError,
    EmptyBandError,
    IllConditionedError,
    SingularityError,
    TooShortError,
)
from .signalio import Segment

DEFAULT_ORDER = 10

#: Clinical band edges in Hz. Bands are clipped to [1, fs/2] at evaluation
#: time and dropped when nothing of them survives below Nyquist.
DEFAULT_BANDS = (
    ("delta", 1.0, 4.0),
    ("theta", 4.0, 8.0),
    ("alpha", 8.0, 13.0),
    ("beta", 13.0, 30.0),
    ("gamma", 30.0, 80.0),
    ("ripple", 80.0, 250.0),
    ("fast_ripple", 250.0, 500.0),
)


@dataclass
class FrequencyBand:
    name: str
    lo: float
    hi: float

    def __post_init__(self):
        if not 0 < self.lo < self.hi:
            raise ValueError(f"band {self.name}: need 0 < lo < hi, got ({self.lo}, {self.hi})")


def default_bands() -> list:
    return [FrequencyBand(name, lo, hi) for name, lo, hi in DEFAULT_BANDS]


@dataclass
class MvarModel:
    """Fitted MVAR model: lag matrices Lambda(1..p) and residual covariance.

    ``lam[k-1]`` holds Lambda(k) under the convention Lambda(0) = I,
    Lambda(k) = -B(k) where ``S(t) = sum_k B(k) S(t-k) + E(t)``.
    """

    order: int
    lam: list
    residual_cov: np.ndarray
    fs: float

    @property
    def n_channels(self) -> int:
        return self.residual_cov.shape[0]

    def coefficient(self, k: int) -> np.ndarray:
        """Generating-form coefficient matrix B(k) = -Lambda(k), 1-based k."""
        return -self.lam[k - 1]


@dataclass
class ConnectivityMatrix:
    """Nonnegative directed edge-weight matrix with a zero diagonal."""

    weights: np.ndarray
    directed: bool = True

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        n, m = self.weights.shape
        if n != m:
            raise ValueError(f"connectivity matrix must be square, got {self.weights.shape}")

    @property
    def n_nodes(self) -> int:
        return self.weights.shape[0]


def fit_mvar(seg: Segment, p: int = DEFAULT_ORDER) -> MvarModel:
    """Fit an order-`p` MVAR model to one segment by least squares.

    Channel means are removed before fitting. The regression solved is
    ``S(t) = sum_{k=1..p} B(k) S(t-k) + E(t)``; the returned model stores
    Lambda(k) = -B(k) and the sample covariance of the residuals.

    Raises
    ------
    TooShortError
        Fewer regression rows than unknowns (``w - p < n*p``).
    SingularityError
        Rank-deficient regressor matrix, e.g. a zero-variance channel.
    """
    if p < 1:
        raise ValueError(f"model order must be >= 1, got {p}")
    s = seg.samples - seg.samples.mean(axis=0, keepdims=True)
    w, n = s.shape
    rows = w - p
    if rows < n * p:
        raise TooShortError(
            f"segment of {w} samples supports at most order {(w - 1) // (n + 1)} "
            f"for {n} channels (need w - p >= n*p)"
        )
    target = s[p:]
    regressors = np.hstack([s[p - k : w - k] for k in range(1, p + 1)])
    coef, _, rank, _ = np.linalg.lstsq(regressors, target, rcond=None)
    if rank < n * p:
        raise SingularityError(
            f"regressor matrix rank {rank} < {n * p}; reduce the model order "
            "or check for constant channels"
        )
    residuals = target - regressors @ coef
    residual_cov = residuals.T @ residuals / rows
    lam = [-coef[(k - 1) * n : k * n].T.copy() for k in range(1, p + 1)]
    return MvarModel(order=p, lam=lam, residual_cov=residual_cov, fs=seg.fs)


def transfer_matrix(model: MvarModel, f: float) -> np.ndarray:
    """Frequency-domain transfer matrix H(f) = A(f)^-1.

    ``A(f) = sum_{k=0..p} Lambda(k) exp(-i 2 pi f k / fs)`` with
    Lambda(0) = I.
    """
    if not 0 <= f <= model.fs / 2:
        raise ValueError(f"frequency {f} outside [0, {model.fs / 2}]")
    n = model.n_channels
    a = np.eye(n, dtype=np.complex128)
    for k in range(1, model.order + 1):
        a += model.lam[k - 1] * np.exp(-2j * np.pi * f * k / model.fs)
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > 1e12:
        raise IllConditionedError(f"A({f} Hz) condition number {cond:.3e} exceeds 1e12")
    return np.linalg.inv(a)


def band_dtf(model: MvarModel, band: FrequencyBand, normalized: bool = True) -> ConnectivityMatrix:
    """Band-integrated directed transfer function graph.

    Evaluates H on the integer-Hz grid ``ceil(lo) .. floor(hi)``. Per
    frequency the raw strength is ``|H_ij|^2``; with `normalized` each row
    is divided by its sum (standard DTF). Grid values are summed into the
    output and the diagonal is zeroed last.
    """
    if band.hi > model.fs / 2:
        raise ValueError(f"band {band.name} ({band.hi} Hz) exceeds Nyquist {model.fs / 2}")
    grid = np.arange(math.ceil(band.lo), math.floor(band.hi) + 1, dtype=float)
    if grid.size == 0:
        raise EmptyBandError(f"band {band.name} [{band.lo}, {band.hi}] has no 1 Hz grid points")
    n = model.n_channels
    phi = np.zeros((n, n))
    for f in grid:
        theta = np.abs(transfer_matrix(model, f)) ** 2
        if normalized:
            theta = theta / theta.sum(axis=1, keepdims=True)
        phi += theta
    np.fill_diagonal(phi, 0.0)
    return ConnectivityMatrix(weights=phi)


def threshold_top_quartile(c: ConnectivityMatrix) -> ConnectivityMatrix:
    """Zero every edge below the 75th percentile of the nonzero off-diagonal weights.

    The percentile uses linear interpolation over the sorted nonzero values;
    edges exactly at the threshold survive.
    """
    w = c.weights.copy()
    off = ~np.eye(w.shape[0], dtype=bool)
    nonzero = w[off & (w != 0)]
    if nonzero.size == 0:
        raise DegenerateInputError("cannot threshold an all-zero connectivity matrix")
    q = np.percentile(nonzero, 75.0)
    w[w < q] = 0.0
    np.fill_diagonal(w, 0.0)
    return ConnectivityMatrix(weights=w, directed=c.directed)


def multiband_graph(seg: Segment, bands=None, p: int = DEFAULT_ORDER, normalized: bool = True) -> ConnectivityMatrix:
    """Average of the per-band thresholded DTF graphs for one segment.

    One MVAR is fit per segment. Bands are clipped to ``[1, fs/2]`` and
    skipped when nothing of them remains below Nyquist.
    """
    if bands is None:
        bands = default_bands()
    model = fit_mvar(seg, p=p)
    nyquist = seg.fs / 2
    per_band = []
    for band in bands:
        lo = max(band.lo, 1.0)
        hi = min(band.hi, nyquist)
        if lo >= hi or math.ceil(lo) > math.floor(hi):
            continue
        clipped = FrequencyBand(band.name, lo, hi)
        per_band.append(threshold_top_quartile(band_dtf(model, clipped, normalized)).weights)
    if not per_band:
        raise EmptyBandError(f"no band is evaluable below Nyquist {nyquist} Hz")
    return ConnectivityMatrix(weights=np.mean(per_band, axis=0))
