"""Per-channel epileptogenicity biomarkers and the node-feature matrix.

Five features per channel, in this fixed order: spike rate, HFO rate,
sample entropy, Petrosian fractal dimension, Katz fractal dimension.
Event rates are in events/second; the fractal measures are dimensionless.
Within a segment each feature column is min-max normalized across channels.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .errors import TooShortError
from .signalio import Segment

FEATURE_NAMES = ("spike_rate", "hfo_rate", "sample_entropy", "pfd", "kfd")

SPIKE_Z_THRESHOLD = 5.0
SPIKE_WIDTH_S = (0.020, 0.070)
SPIKE_REFRACTORY_S = 0.100
HFO_MIN_FS = 200.0
HFO_MIN_DURATION_S = 0.006
HFO_MIN_PEAKS = 4
HFO_SD_FACTOR = 3.0


@dataclass
class NodeFeatureMatrix:
    """(n_channels x 5) feature matrix with the fixed feature-name order."""

    values: np.ndarray
    feature_names: tuple = FEATURE_NAMES

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.feature_names):
            raise ValueError(
                f"feature matrix must be (n, {len(self.feature_names)}), got {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature matrix contains non-finite entries")

    @property
    def n_channels(self) -> int:
        return self.values.shape[0]


def _bandpass(x: np.ndarray, lo: float, hi: float, fs: float, order: int = 4) -> np.ndarray:
    """Zero-phase (forward-backward) Butterworth band-pass."""
    nyq = fs / 2
    lo = max(lo, 1e-3)
    hi = min(hi, 0.999 * nyq)
    sos = sps.butter(order, [lo / nyq, hi / nyq], btype="bandpass", output="sos")
    return sps.sosfiltfilt(sos, x)


def _half_height_width(a: np.ndarray, peak: int, fs: float) -> float:
    """Width in seconds of the region around `peak` where `a` stays above half its height."""
    half = a[peak] / 2.0
    left = peak
    while left > 0 and a[left - 1] > half:
        left -= 1
    right = peak
    n = a.size
    while right < n - 1 and a[right + 1] > half:
        right += 1
    return (right - left + 1) / fs


def spike_rate(x: np.ndarray, fs: float) -> float:
    """Epileptiform-spike occurrence rate from a threshold detector.

    Detection: band-pass 1-70 Hz, z-score, take local extrema of |z| above
    5 whose half-height width falls in 20-70 ms, with a 100 ms refractory
    period between counted events.

    Returns
    -------
    float
        Events per second (0.0 for flat signals).
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size < fs:
        raise TooShortError(f"spike_rate needs >= 1 s of signal ({int(fs)} samples)")
    if np.std(x) == 0:
        return 0.0
    y = _bandpass(x, 1.0, 70.0, fs)
    sd = np.std(y)
    if sd == 0:
        return 0.0
    z = (y - np.mean(y)) / sd
    a = np.abs(z)
    peaks, _ = sps.find_peaks(a, height=SPIKE_Z_THRESHOLD)
    count = 0
    last_counted = -np.inf
    for p in peaks:
        width = _half_height_width(a, p, fs)
        if not SPIKE_WIDTH_S[0] <= width <= SPIKE_WIDTH_S[1]:
            continue
        if (p - last_counted) / fs < SPIKE_REFRACTORY_S:
            continue
        count += 1
        last_counted = p
    return count / (x.size / fs)


def hfo_rate(x: np.ndarray, fs: float) -> float:
    """High-frequency-oscillation rate from a Hilbert-envelope detector.

    Detection: band-pass 80-min(250, 0.45*fs) Hz, analytic-signal envelope,
    events are envelope excursions above mean + 3 SD lasting >= 6 ms and
    containing >= 4 rectified oscillation peaks.

    Returns 0.0 with a warning when fs < 200 Hz (ripple band unobservable).
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    if fs < HFO_MIN_FS:
        warnings.warn(f"fs={fs} < {HFO_MIN_FS} Hz: ripple band unobservable, HFO rate is 0")
        return 0.0
    if x.size < 2 or np.std(x) == 0:
        return 0.0
    y = _bandpass(x, 80.0, min(250.0, 0.45 * fs), fs)
    env = np.abs(sps.hilbert(y))
    thr = env.mean() + HFO_SD_FACTOR * env.std()
    above = env > thr
    rect = np.abs(y)
    min_len = int(np.ceil(HFO_MIN_DURATION_S * fs))
    count = 0
    i = 0
    n = above.size
    while i < n:
        if not above[i]:
            i += 1
            continue
        j = i
        while j < n and above[j]:
            j += 1
        if j - i >= min_len:
            run_peaks, _ = sps.find_peaks(rect[i:j])
            if run_peaks.size >= HFO_MIN_PEAKS:
                count += 1
        i = j
    return count / (x.size / fs)


def sample_entropy(x: np.ndarray, m: int = 2, r: float = 0.2) -> float:
    """Sample entropy with Chebyshev distance and SD-relative tolerance.

    Template vectors of length `m` and `m+1` are both drawn from the first
    ``n - m`` positions so every m-length match has an extension; self-matches
    are excluded. Returns ``-ln((A + eps) / (B + eps))`` with eps=1e-10 where
    B and A count the m- and (m+1)-length matching pairs.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    n = x.size
    if n < m + 2:
        raise TooShortError(f"sample_entropy needs length >= {m + 2}, got {n}")
    tol = r * np.std(x)
    n_templates = n - m
    idx = np.arange(n_templates)
    emb_m = np.stack([x[idx + k] for k in range(m)], axis=1)
    emb_m1 = np.stack([x[idx + k] for k in range(m + 1)], axis=1)

    def count_pairs(emb):
        d = np.max(np.abs(emb[:, None, :] - emb[None, :, :]), axis=2)
        hits = d <= tol
        return (np.count_nonzero(hits) - emb.shape[0]) // 2

    b = count_pairs(emb_m)
    a = count_pairs(emb_m1)
    eps = 1e-10
    return float(-np.log((a + eps) / (b + eps)))


def petrosian_fd(x: np.ndarray) -> float:
    """Petrosian fractal dimension from the sign-change count of the first difference.

    Zeros in the difference do not count as sign changes.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    n = x.size
    if n < 3:
        raise TooShortError(f"petrosian_fd needs length >= 3, got {n}")
    d = np.diff(x)
    s = np.sign(d)
    nz = s[s != 0]
    n_delta = int(np.count_nonzero(nz[1:] * nz[:-1] < 0))
    log_n = np.log10(n)
    return float(log_n / (log_n + np.log10(n / (n + 0.4 * n_delta))))


def katz_fd(x: np.ndarray) -> float:
    """Katz fractal dimension of the waveform as a planar curve.

    Samples are points ``(i, x_i)`` with unit abscissa spacing; L is the
    total path length, d the maximum distance from the first point.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    n = x.size
    if n < 2:
        raise TooShortError(f"katz_fd needs length >= 2, got {n}")
    steps = n - 1
    dx = np.diff(x)
    length = float(np.sum(np.sqrt(1.0 + dx * dx)))
    i = np.arange(n, dtype=np.float64)
    d = float(np.max(np.sqrt(i * i + (x - x[0]) ** 2)))
    denom = np.log10(steps) + np.log10(d / length)
    if denom == 0.0:
        return 1.0  # straight-segment limit (d == L)
    return float(np.log10(steps) / denom)


def node_feature_matrix(seg: Segment) -> NodeFeatureMatrix:
    """Five biomarkers per channel, min-max normalized per column.

    A constant column maps to 0.5 everywhere, keeping degenerate segments
    representable without NaNs.
    """
    raw = np.empty((seg.n_channels, len(FEATURE_NAMES)))
    for ch in range(seg.n_channels):
        x = seg.samples[:, ch]
        raw[ch] = (
            spike_rate(x, seg.fs),
            hfo_rate(x, seg.fs),
            sample_entropy(x),
            petrosian_fd(x),
            katz_fd(x),
        )
    lo = raw.min(axis=0)
    hi = raw.max(axis=0)
    span = hi - lo
    out = np.full_like(raw, 0.5)
    for col in range(raw.shape[1]):
        if span[col] > 0:
            out[:, col] = (raw[:, col] - lo[col]) / span[col]
    return NodeFeatureMatrix(values=out)
