import numpy as np
import pytest

from ngcl.errors import (
    DataError,
    MetadataError,
    MissingAnnotationError,
    ParseError,
    StabilityError,
    TooShortError,
)
from ngcl.signalio import (
    Recording,
    clip_peri_ictal,
    companion_spectral_radius,
    load_recording,
    save_recording,
    segment_windows,
    synth_var_recording,
)


def write_pair(tmp_path, rows, meta_lines, name="rec"):
    csv_path = tmp_path / f"{name}.csv"
    csv_path.write_text("\n".join(",".join(str(v) for v in r) for r in rows) + "\n")
    (tmp_path / f"{name}.meta").write_text("\n".join(meta_lines) + "\n")
    return csv_path


class TestLoadRecording:
    def test_basic_load(self, tmp_path):
        rows = [[float(i), float(i) * 2, -1.0] for i in range(1000)]
        path = write_pair(tmp_path, rows, ["fs=500", "channels=a,b,c", "onset_sample=600"])
        rec = load_recording(path)
        assert rec.n_samples == 1000
        assert rec.n_channels == 3
        assert rec.fs == 500.0
        assert rec.channel_names == ["a", "b", "c"]
        assert rec.onset_sample == 600
        assert rec.samples.dtype == np.float64
        assert rec.samples[3, 1] == 6.0

    def test_ragged_row_names_line(self, tmp_path):
        rows = [[1.0, 2.0, 3.0], [4.0, 5.0], [6.0, 7.0, 8.0]]
        path = write_pair(tmp_path, rows, ["fs=500", "channels=a,b,c"])
        with pytest.raises(ParseError, match=":2:"):
            load_recording(path)

    def test_missing_onset_is_fine(self, tmp_path):
        rows = [[1.0, 2.0]] * 10
        path = write_pair(tmp_path, rows, ["fs=100", "channels=a,b"])
        rec = load_recording(path)
        assert rec.onset_sample is None

    def test_nonpositive_fs(self, tmp_path):
        path = write_pair(tmp_path, [[1.0, 2.0]], ["fs=0", "channels=a,b"])
        with pytest.raises(MetadataError):
            load_recording(path)

    def test_roundtrip(self, tmp_path):
        rec = Recording(np.random.default_rng(0).normal(size=(50, 3)), 256.0,
                        ["x", "y", "z"], onset_sample=25)
        save_recording(rec, tmp_path / "out.csv")
        back = load_recording(tmp_path / "out.csv")
        np.testing.assert_array_equal(back.samples, rec.samples)
        assert back.fs == rec.fs
        assert back.channel_names == rec.channel_names
        assert back.onset_sample == rec.onset_sample


class TestClipPeriIctal:
    def test_index_arithmetic(self):
        samples = np.arange(22000, dtype=float).reshape(11000, 2)
        rec = Recording(samples, 500.0, ["a", "b"], onset_sample=6000)
        inter, ictal = clip_peri_ictal(rec, 10.0, 10.0)
        np.testing.assert_array_equal(inter.samples, samples[1000:6000])
        np.testing.assert_array_equal(ictal.samples, samples[6000:11000])

    def test_boundary_truncation(self):
        samples = np.zeros((11000, 2))
        rec = Recording(samples, 500.0, ["a", "b"], onset_sample=2000)
        inter, _ = clip_peri_ictal(rec, 10.0, 10.0)
        assert inter.n_samples == 2000

    def test_missing_onset(self):
        rec = Recording(np.zeros((100, 2)), 500.0, ["a", "b"])
        with pytest.raises(MissingAnnotationError):
            clip_peri_ictal(rec)

    def test_clips_disjoint_and_bounded(self):
        rng = np.random.default_rng(7)
        for onset in (3000, 5500, 9000):
            rec = Recording(rng.normal(size=(10000, 2)), 500.0, ["a", "b"],
                            onset_sample=onset)
            inter, ictal = clip_peri_ictal(rec, 10.0, 10.0)
            assert inter.n_samples + ictal.n_samples <= 20 * 500
            # clips come from disjoint index ranges on either side of onset
            assert inter.n_samples <= onset
            assert ictal.n_samples <= rec.n_samples - onset


class TestSegmentWindows:
    def test_nine_windows_of_1000(self):
        rec = Recording(np.zeros((5000, 2)), 500.0, ["a", "b"])
        segs = segment_windows(rec, 2.0, 0.5, label=1)
        assert len(segs) == 9
        assert all(s.samples.shape == (1000, 2) for s in segs)
        assert all(s.label == 1 for s in segs)

    def test_exactly_one_window(self):
        rec = Recording(np.zeros((1000, 2)), 500.0, ["a", "b"])
        assert len(segment_windows(rec, 2.0, 0.5, 0)) == 1

    def test_too_short(self):
        rec = Recording(np.zeros((950, 2)), 500.0, ["a", "b"])
        with pytest.raises(TooShortError):
            segment_windows(rec, 2.0, 0.5, 0)

    @pytest.mark.parametrize("n,fs", [(5000, 500.0), (4096, 1024.0), (3001, 250.0), (1537, 256.0)])
    def test_window_count_matches_enumeration_oracle(self, n, fs):
        rec = Recording(np.zeros((n, 2)), fs, ["a", "b"])
        segs = segment_windows(rec, 2.0, 0.5, 0)
        w = int(round(2.0 * fs))
        s = int(round(w / 2))
        # naive oracle: slide and collect
        naive = 0
        start = 0
        while start + w <= n:
            naive += 1
            start += s
        assert len(segs) == naive == (n - w) // s + 1

    def test_window_content(self):
        samples = np.arange(4000, dtype=float).reshape(2000, 2)
        rec = Recording(samples, 500.0, ["a", "b"])
        segs = segment_windows(rec, 2.0, 0.5, 0)
        np.testing.assert_array_equal(segs[1].samples, samples[500:1500])


class TestSynthVar:
    def test_no_coupling_white_noise(self):
        rec = synth_var_recording([], 3, 500.0, 10.0, noise_sd=1.0, seed=4)
        cov = np.cov(rec.samples.T)
        assert np.all(np.abs(np.diag(cov) - 1.0) < 0.15)
        off = cov[~np.eye(3, dtype=bool)]
        assert np.all(np.abs(off) < 0.15)

    def test_deterministic(self):
        a = synth_var_recording([(0, 1, 1, 0.5)], 3, 500.0, 2.0, 1.0, seed=11)
        b = synth_var_recording([(0, 1, 1, 0.5)], 3, 500.0, 2.0, 1.0, seed=11)
        np.testing.assert_array_equal(a.samples, b.samples)

    def test_unstable_coefficient_rejected(self):
        # oracle: companion matrix of a single self-lag 1.5 has spectral radius 1.5
        mats = np.zeros((1, 2, 2))
        mats[0, 0, 0] = 1.5
        assert companion_spectral_radius(mats) == pytest.approx(1.5)
        with pytest.raises(StabilityError):
            synth_var_recording([(0, 0, 1, 1.5)], 2, 500.0, 1.0, 1.0, seed=0)

    def test_zero_noise_zero_coupling_is_zero(self):
        rec = synth_var_recording([], 2, 500.0, 1.0, noise_sd=0.0, seed=0)
        assert np.all(rec.samples == 0.0)

    def test_coupling_propagates(self):
        rec = synth_var_recording([(0, 1, 1, 0.9)], 2, 500.0, 4.0, 1.0, seed=3)
        x = rec.samples
        # channel 1 at t correlates strongly with channel 0 at t-1
        r = np.corrcoef(x[:-1, 0], x[1:, 1])[0, 1]
        assert r > 0.5

    def test_bad_indices(self):
        with pytest.raises(ValueError):
            synth_var_recording([(0, 5, 1, 0.5)], 3, 500.0, 1.0, 1.0, seed=0)
        with pytest.raises(ValueError):
            synth_var_recording([(0, 1, 0, 0.5)], 3, 500.0, 1.0, 1.0, seed=0)


class TestRecordingInvariants:
    def test_single_channel_rejected(self):
        with pytest.raises(DataError):
            Recording(np.zeros((10, 1)), 500.0, ["a"])

    def test_onset_out_of_range(self):
        with pytest.raises(MetadataError):
            Recording(np.zeros((10, 2)), 500.0, ["a", "b"], onset_sample=10)
