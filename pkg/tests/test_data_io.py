"""EEGD format, synthetic generation, splits, PERCLOS labeling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csanet.config import SplitSpec
from csanet.data import (
    EEGTrial,
    TrialSet,
    label_perclos,
    read_eegd,
    split,
    synth_generate,
    write_eegd,
    zscore_apply,
    zscore_fit,
)
from csanet.errors import ConfigurationError, DataError, FormatError
from csanet.psd import welch_psd


def random_set(rng, n_trials, C=3, T=8, L=2, subjects=(1,), sessions=(1,)):
    trials = [
        EEGTrial(
            samples=rng.standard_normal((C, T)).astype(np.float32),
            label=int(rng.integers(0, L)),
            subject_id=int(rng.choice(subjects)),
            session_id=int(rng.choice(sessions)),
        )
        for _ in range(n_trials)
    ]
    return TrialSet(trials=trials, n_classes=L)


def sets_equal(a, b):
    if len(a.trials) != len(b.trials) or a.n_classes != b.n_classes:
        return False
    for t1, t2 in zip(a.trials, b.trials):
        if (t1.label, t1.subject_id, t1.session_id) != (t2.label, t2.subject_id, t2.session_id):
            return False
        if t1.samples.astype("<f4").tobytes() != t2.samples.astype("<f4").tobytes():
            return False
    return True


class TestEegdFormat:
    def test_roundtrip_two_trials(self, tmp_path, rng):
        original = random_set(rng, 2)
        path = tmp_path / "two.eegd"
        write_eegd(original, path)
        assert sets_equal(read_eegd(path), original)

    def test_bad_magic_offset_zero(self, tmp_path):
        path = tmp_path / "bad.eegd"
        path.write_bytes(b"XXXX" + b"\x00" * 40)
        with pytest.raises(FormatError) as err:
            read_eegd(path)
        assert err.value.offset == 0

    def test_version_mismatch(self, tmp_path, rng):
        path = tmp_path / "v.eegd"
        write_eegd(random_set(rng, 1), path)
        blob = bytearray(path.read_bytes())
        blob[4] = 7
        path.write_bytes(bytes(blob))
        with pytest.raises(FormatError) as err:
            read_eegd(path)
        assert err.value.offset == 4

    def test_truncation_reports_offset(self, tmp_path, rng):
        path = tmp_path / "t.eegd"
        write_eegd(random_set(rng, 3), path)
        blob = path.read_bytes()
        path.write_bytes(blob[:-5])
        with pytest.raises(FormatError):
            read_eegd(path)

    @given(
        n_trials=st.integers(0, 5),
        c=st.integers(1, 4),
        t=st.integers(1, 6),
        seed=st.integers(0, 2**31),
    )
    @settings(max_examples=60, deadline=None)
    def test_fuzz_roundtrip(self, n_trials, c, t, seed):
        import tempfile

        rng = np.random.Generator(np.random.PCG64(seed))
        original = random_set(rng, n_trials, C=c, T=t, L=3, subjects=(1, 2), sessions=(1, 2, 3))
        with tempfile.TemporaryDirectory() as tmp:
            path = f"{tmp}/fuzz.eegd"
            write_eegd(original, path)
            assert sets_equal(read_eegd(path), original)


class TestSynthGenerate:
    def test_empty_when_zero_per_class(self):
        out = synth_generate(0, 4, 32, 2, snr=1.0, seed=0)
        assert len(out.trials) == 0

    def test_same_seed_bitwise_identical(self):
        a = synth_generate(3, 6, 64, 3, snr=2.0, seed=42)
        b = synth_generate(3, 6, 64, 3, snr=2.0, seed=42)
        assert sets_equal(a, b)

    def test_high_snr_spectral_peaks_match_class_frequencies(self):
        from csanet.data import SYNTH_CLASS_FREQS, SYNTH_SAMPLE_RATE

        out = synth_generate(1, 8, 1024, 4, snr=1e6, seed=1)
        for trial in out.trials:
            lo = trial.label * 8 // 4
            est = welch_psd(trial.samples[lo], fs=SYNTH_SAMPLE_RATE, segment_len=512)
            bin_width = est.freqs[1] - est.freqs[0]
            assert abs(est.peak_hz() - SYNTH_CLASS_FREQS[trial.label]) <= bin_width

    def test_labels_and_counts(self):
        out = synth_generate(5, 8, 32, 4, snr=1.0, seed=0)
        labels = [t.label for t in out.trials]
        assert labels == sorted(labels)
        assert all(labels.count(k) == 5 for k in range(4))

    def test_invalid_dims_rejected(self):
        with pytest.raises(ConfigurationError):
            synth_generate(1, 2, 32, 4, snr=1.0, seed=0)  # fewer channels than classes
        with pytest.raises(ConfigurationError):
            synth_generate(1, 8, 32, 4, snr=0.0, seed=0)


class TestSplits:
    def test_loso_isolates_exactly_one_subject(self, rng):
        data = random_set(rng, 90, subjects=tuple(range(1, 10)))
        train, test = split(data, SplitSpec(strategy="loso", held_out_subject=3))
        assert all(t.subject_id == 3 for t in test.trials)
        assert all(t.subject_id != 3 for t in train.trials)
        assert len(train.trials) + len(test.trials) == 90

    def test_loso_unknown_subject_is_data_error(self, rng):
        data = random_set(rng, 10, subjects=(1, 2))
        with pytest.raises(DataError):
            split(data, SplitSpec(strategy="loso", held_out_subject=9))

    def test_session_holdout_definition(self, rng):
        data = random_set(rng, 60, sessions=(1, 2, 3))
        spec = SplitSpec(strategy="session_holdout", train_sessions=(1, 2), test_sessions=(3,))
        train, test = split(data, spec)
        assert all(t.session_id != 3 for t in train.trials)
        assert all(t.session_id == 3 for t in test.trials)

    def test_session_holdout_unknown_session_is_data_error(self, rng):
        data = random_set(rng, 10, sessions=(1, 2))
        spec = SplitSpec(strategy="session_holdout", train_sessions=(1,), test_sessions=(5,))
        with pytest.raises(DataError):
            split(data, spec)

    @given(n=st.integers(5, 40), seed=st.integers(0, 1000))
    @settings(max_examples=40, deadline=None)
    def test_kfold_partitions_with_balanced_sizes(self, n, seed):
        rng = np.random.Generator(np.random.PCG64(0))
        data = random_set(rng, n)
        seen = []
        sizes = []
        for fold in range(5):
            spec = SplitSpec(strategy="kfold", n_folds=5, fold_index=fold, seed=seed)
            train, test = split(data, spec)
            assert len(train.trials) + len(test.trials) == n
            sizes.append(len(test.trials))
            seen.extend(id(t) for t in test.trials)
        assert len(seen) == n  # folds partition the set
        assert len(set(seen)) == n
        assert max(sizes) - min(sizes) <= 1

    def test_kfold_deterministic_per_seed(self, rng):
        data = random_set(rng, 20)
        spec = SplitSpec(strategy="kfold", n_folds=4, fold_index=1, seed=7)
        t1 = split(data, spec)[1]
        t2 = split(data, spec)[1]
        assert [id(t) for t in t1.trials] == [id(t) for t in t2.trials]

    def test_none_strategy_trains_on_everything(self, rng):
        data = random_set(rng, 12)
        train, test = split(data, SplitSpec(strategy="none"))
        assert len(train.trials) == 12 and len(test.trials) == 0


class TestPerclos:
    def test_fatigued_example(self):
        label, ratio = label_perclos(1.0, 2.0, 8.0)
        assert ratio == pytest.approx(0.375)
        assert label == "fatigued"

    def test_alert_when_eyes_open(self):
        label, ratio = label_perclos(0.0, 0.0, 8.0)
        assert ratio == 0.0 and label == "alert"

    def test_boundary_is_strictly_greater(self):
        label, ratio = label_perclos(1.4, 1.4, 8.0)  # exactly 0.35
        assert ratio == pytest.approx(0.35)
        assert label == "alert"

    def test_preconditions(self):
        with pytest.raises(DataError):
            label_perclos(-1.0, 0.0, 8.0)
        with pytest.raises(DataError):
            label_perclos(5.0, 5.0, 8.0)
        with pytest.raises(DataError):
            label_perclos(0.0, 0.0, 0.0)


class TestNormalization:
    def test_train_statistics_reused_on_test(self, rng):
        train = random_set(rng, 20, C=2, T=50)
        stats = zscore_fit(train)
        normalized = zscore_apply(train, stats)
        stacked = np.stack([t.samples for t in normalized.trials])
        np.testing.assert_allclose(stacked.mean(axis=(0, 2)), 0.0, atol=1e-5)
        np.testing.assert_allclose(stacked.std(axis=(0, 2)), 1.0, atol=1e-4)

    def test_empty_train_rejected(self):
        with pytest.raises(DataError):
            zscore_fit(TrialSet(trials=[], n_classes=2))
