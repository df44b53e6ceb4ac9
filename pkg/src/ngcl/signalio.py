"""Loading, clipping, windowing, and synthesis of multichannel recordings.

A recording on disk is a pair of files: ``<name>.csv`` holding one row per
sample (one column per channel, decimal text) and a ``<name>.meta`` sidecar
with ``key=value`` lines (``fs``, ``channels``, optional ``onset_sample``).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DataError,
    MetadataError,
    MissingAnnotationError,
    ParseError,
    StabilityError,
    TooShortError,
)


@dataclass
class Recording:
    """Multichannel signal, in microvolts, with optional seizure-onset mark.

    Attributes
    ----------
    samples : np.ndarray, shape (n_samples, n_channels)
    fs : float
        Sampling rate in Hz.
    channel_names : list of str
    onset_sample : int or None
        Sample index of seizure onset, if annotated.
    """

    samples: np.ndarray
    fs: float
    channel_names: list
    onset_sample: Optional[int] = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 2:
            raise DataError("recording samples must be 2-D (samples x channels)")
        if self.n_channels < 2:
            raise DataError(f"recording needs >= 2 channels, got {self.n_channels}")
        if len(self.channel_names) != self.n_channels:
            raise MetadataError(
                f"{len(self.channel_names)} channel names for {self.n_channels} columns"
            )
        if self.fs <= 0:
            raise MetadataError(f"sampling rate must be positive, got {self.fs}")
        if self.onset_sample is not None:
            if not 0 <= self.onset_sample < self.n_samples:
                raise MetadataError(
                    f"onset_sample {self.onset_sample} outside [0, {self.n_samples})"
                )

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def n_channels(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.fs


@dataclass
class Segment:
    """One fixed-length analysis window with a binary state label (1=ictal)."""

    samples: np.ndarray
    fs: float
    label: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 2 or self.samples.shape[0] < 1:
            raise DataError("segment samples must be a non-empty 2-D array")
        if self.label not in (0, 1):
            raise DataError(f"segment label must be 0 or 1, got {self.label}")

    @property
    def n_channels(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.samples.shape[0] / self.fs


def _meta_path(path: Path) -> Path:
    return path.with_suffix(".meta")


def load_recording(path) -> Recording:
    """Load a ``.csv`` + ``.meta`` recording pair from disk.

    Parameters
    ----------
    path : str or Path
        Path to the ``.csv`` payload; the sidecar is found by swapping the
        suffix for ``.meta``.

    Raises
    ------
    ParseError
        Ragged or non-numeric CSV rows (message names the line).
    MetadataError
        Missing sidecar keys or inconsistent values.
    """
    path = Path(path)
    meta_file = _meta_path(path)
    if not path.exists():
        raise DataError(f"recording payload not found: {path}")
    if not meta_file.exists():
        raise MetadataError(f"sidecar metadata not found: {meta_file}")

    meta = {}
    for lineno, raw in enumerate(meta_file.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise MetadataError(f"{meta_file}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        meta[key.strip()] = value.strip()

    if "fs" not in meta or "channels" not in meta:
        raise MetadataError(f"{meta_file}: requires 'fs' and 'channels' keys")
    try:
        fs = float(meta["fs"])
    except ValueError as exc:
        raise MetadataError(f"{meta_file}: fs is not numeric: {meta['fs']!r}") from exc
    if fs <= 0:
        raise MetadataError(f"{meta_file}: fs must be positive, got {fs}")
    channel_names = [c.strip() for c in meta["channels"].split(",") if c.strip()]

    onset = None
    if "onset_sample" in meta:
        try:
            onset = int(meta["onset_sample"])
        except ValueError as exc:
            raise MetadataError(
                f"{meta_file}: onset_sample is not an integer: {meta['onset_sample']!r}"
            ) from exc

    n_cols = len(channel_names)
    rows = []
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if len(row) != n_cols:
                raise ParseError(
                    f"{path}:{lineno}: expected {n_cols} values, got {len(row)}"
                )
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: non-numeric value in row") from exc
    if not rows:
        raise ParseError(f"{path}: no sample rows")

    return Recording(
        samples=np.asarray(rows, dtype=np.float64),
        fs=fs,
        channel_names=channel_names,
        onset_sample=onset,
    )


def save_recording(rec: Recording, path) -> None:
    """Write the ``.csv`` + ``.meta`` pair for `rec` (inverse of load_recording)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        for row in rec.samples:
            writer.writerow([repr(float(v)) for v in row])
    lines = [f"fs={rec.fs!r}", "channels=" + ",".join(rec.channel_names)]
    if rec.onset_sample is not None:
        lines.append(f"onset_sample={rec.onset_sample}")
    _meta_path(path).write_text("\n".join(lines) + "\n")


def clip_peri_ictal(rec: Recording, pre_s: float = 10.0, post_s: float = 10.0):
    """Split a recording around its seizure onset.

    Returns
    -------
    (Recording, Recording)
        Interictal clip covering ``[onset - pre_s*fs, onset)`` and ictal clip
        covering ``[onset, onset + post_s*fs)``, truncated at the recording
        boundaries.
    """
    if rec.onset_sample is None:
        raise MissingAnnotationError("recording has no seizure-onset annotation")
    onset = rec.onset_sample
    pre_start = max(0, onset - int(round(pre_s * rec.fs)))
    post_end = min(rec.n_samples, onset + int(round(post_s * rec.fs)))
    if onset - pre_start < 1 or post_end - onset < 1:
        raise DataError("onset too close to a recording boundary to clip")
    inter = Recording(rec.samples[pre_start:onset].copy(), rec.fs, list(rec.channel_names))
    ictal = Recording(rec.samples[onset:post_end].copy(), rec.fs, list(rec.channel_names))
    return inter, ictal


def segment_windows(
    rec: Recording, window_s: float = 2.0, overlap: float = 0.5, label: int = 0
) -> list:
    """Slice a recording into fixed-length overlapping windows.

    Window starts advance by ``round(window_s * fs * (1 - overlap))`` samples;
    every segment has exactly ``round(window_s * fs)`` rows and a trailing
    partial window is discarded.
    """
    if not 0 <= overlap < 1:
        raise ValueError(f"overlap must be in [0, 1), got {overlap}")
    w = int(round(window_s * rec.fs))
    step = int(round(window_s * rec.fs * (1.0 - overlap)))
    if w < 1 or step < 1:
        raise ValueError("window too small for the sampling rate")
    if rec.n_samples < w:
        raise TooShortError(
            f"recording has {rec.n_samples} samples, one {window_s}s window needs {w}"
        )
    segments = []
    for start in range(0, rec.n_samples - w + 1, step):
        segments.append(Segment(rec.samples[start : start + w].copy(), rec.fs, label))
    return segments


def _coupling_matrices(coupling, n_channels: int):
    """Stack per-lag coefficient matrices B(1..p) from a coupling list."""
    if not coupling:
        return np.zeros((0, n_channels, n_channels))
    max_lag = max(lag for _, _, lag, _ in coupling)
    mats = np.zeros((max_lag, n_channels, n_channels))
    for src, dst, lag, coeff in coupling:
        if not (0 <= src < n_channels and 0 <= dst < n_channels):
            raise ValueError(f"coupling channel out of range: ({src}, {dst})")
        if lag < 1:
            raise ValueError(f"coupling lag must be >= 1, got {lag}")
        mats[lag - 1, dst, src] += coeff
    return mats


def companion_spectral_radius(coeff_matrices: np.ndarray) -> float:
    """Spectral radius of the VAR companion matrix for B(1..p) stacked as (p, n, n)."""
    p, n, _ = coeff_matrices.shape
    if p == 0:
        return 0.0
    comp = np.zeros((n * p, n * p))
    comp[:n, :] = np.concatenate(list(coeff_matrices), axis=1)
    if p > 1:
        comp[n:, : n * (p - 1)] = np.eye(n * (p - 1))
    return float(np.max(np.abs(np.linalg.eigvals(comp))))


def synth_var_recording(
    coupling: Sequence,
    n_channels: int,
    fs: float,
    duration_s: float,
    noise_sd: float = 1.0,
    seed: int = 0,
    onset_sample: Optional[int] = None,
) -> Recording:
    """Simulate a stable VAR process with planted directed couplings.

    Parameters
    ----------
    coupling : sequence of (src, dst, lag, coeff)
        Each entry adds ``coeff * x_src(t - lag)`` to channel ``dst``.
        Channel indices are 0-based.
    n_channels, fs, duration_s : process geometry.
    noise_sd : float
        Standard deviation of the white innovation noise.
    seed : int
        Draws are deterministic per seed.
    onset_sample : int, optional
        Annotation to attach to the generated recording.

    Raises
    ------
    StabilityError
        If the companion matrix of the coefficient set has spectral
        radius >= 1.
    """
    if n_channels < 2:
        raise DataError("need at least 2 channels")
    B = _coupling_matrices(coupling, n_channels)
    radius = companion_spectral_radius(B)
    if radius >= 1.0:
        raise StabilityError(
            f"VAR coefficients are unstable (companion spectral radius {radius:.3f})"
        )
    p = B.shape[0]
    n_samples = int(round(duration_s * fs))
    burn_in = max(100, 10 * p)
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, noise_sd, size=(burn_in + n_samples, n_channels)) if noise_sd > 0 else np.zeros((burn_in + n_samples, n_channels))

    x = np.zeros((burn_in + n_samples, n_channels))
    for t in range(burn_in + n_samples):
        acc = noise[t].copy()
        for k in range(1, min(p, t) + 1):
            acc += B[k - 1] @ x[t - k]
        x[t] = acc

    names = [f"ch{i}" for i in range(n_channels)]
    return Recording(x[burn_in:], fs, names, onset_sample=onset_sample)
