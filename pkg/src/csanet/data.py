"""Trial containers, the EEGD file format, synthetic data, and splits.

EEGD layout (all integers little-endian u32, samples little-endian f32,
row-major C x T per trial):

    magic "EEGD" | version=1 | n_trials | C | T | L
    per trial: label | subject_id | session_id | C*T samples

Round-trips are bit-exact. Real-dataset ingestion is out of scope; export
from your own preprocessing by writing this layout (see `write_eegd`).
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DataError, FormatError

EEGD_MAGIC = b"EEGD"
EEGD_VERSION = 1

# Class recipes for the synthetic generator: one oscillation frequency per
# class (Hz at the notional sampling rate below), placed on a contiguous
# block of channels per class.
SYNTH_CLASS_FREQS = (6.0, 10.0, 20.0, 35.0)
SYNTH_SAMPLE_RATE = 250.0


@dataclass
class EEGTrial:
    """One labeled recording: a C x T sample matrix plus provenance tags."""

    samples: np.ndarray
    label: int
    subject_id: int = 0
    session_id: int = 0

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        if self.samples.ndim != 2:
            raise DataError("trial samples must be a C x T matrix")
        if not np.all(np.isfinite(self.samples)):
            raise DataError("trial samples must be finite")


@dataclass
class TrialSet:
    """Ordered trials with homogeneous dimensions."""

    trials: list
    n_classes: int
    class_names: list = None

    def __post_init__(self):
        if self.trials:
            c, t = self.trials[0].samples.shape
            for i, tr in enumerate(self.trials):
                if tr.samples.shape != (c, t):
                    raise DataError(f"trial {i} has shape {tr.samples.shape}, expected {(c, t)}")
                if not 0 <= tr.label < self.n_classes:
                    raise DataError(f"trial {i} label {tr.label} out of range [0, {self.n_classes})")

    def __len__(self):
        return len(self.trials)

    @property
    def channels(self):
        return self.trials[0].samples.shape[0] if self.trials else 0

    @property
    def time_steps(self):
        return self.trials[0].samples.shape[1] if self.trials else 0

    def subjects(self):
        return sorted({t.subject_id for t in self.trials})

    def sessions(self):
        return sorted({t.session_id for t in self.trials})

    def subset(self, indices):
        return TrialSet(
            trials=[self.trials[i] for i in indices],
            n_classes=self.n_classes,
            class_names=self.class_names,
        )


def trials_to_arrays(batch, dtype=np.float32):
    """Stack a TrialSet (or trial list) into (B, 1, C, T) inputs and labels."""
    trials = batch.trials if isinstance(batch, TrialSet) else list(batch)
    x = np.stack([t.samples for t in trials]).astype(dtype)[:, None, :, :]
    y = np.array([t.label for t in trials], dtype=np.int64)
    return x, y


# -- EEGD serialization ----------------------------------------------------


def write_eegd(trial_set: TrialSet, path):
    if trial_set.n_classes < 1:
        raise DataError("cannot serialize a set with n_classes < 1")
    c = trial_set.channels
    t = trial_set.time_steps
    with open(path, "wb") as fh:
        fh.write(EEGD_MAGIC)
        fh.write(struct.pack("<IIIII", EEGD_VERSION, len(trial_set.trials), c, t, trial_set.n_classes))
        for trial in trial_set.trials:
            fh.write(struct.pack("<III", trial.label, trial.subject_id, trial.session_id))
            fh.write(np.ascontiguousarray(trial.samples, dtype="<f4").tobytes())


def read_eegd(path) -> TrialSet:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != EEGD_MAGIC:
        raise FormatError(f"bad magic {blob[:4]!r}, expected {EEGD_MAGIC!r}", offset=0)
    if len(blob) < 24:
        raise FormatError("truncated header", offset=len(blob))
    version, n_trials, c, t, n_classes = struct.unpack_from("<IIIII", blob, 4)
    if version != EEGD_VERSION:
        raise FormatError(f"unsupported version {version}", offset=4)
    offset = 24
    trial_bytes = 12 + 4 * c * t
    trials = []
    for i in range(n_trials):
        if len(blob) < offset + trial_bytes:
            raise FormatError(f"truncated payload in trial {i}", offset=len(blob))
        label, subject_id, session_id = struct.unpack_from("<III", blob, offset)
        samples = np.frombuffer(blob, dtype="<f4", count=c * t, offset=offset + 12).reshape(c, t)
        trials.append(
            EEGTrial(samples=samples.copy(), label=label, subject_id=subject_id, session_id=session_id)
        )
        offset += trial_bytes
    if len(blob) != offset:
        raise FormatError("trailing bytes after final trial", offset=offset)
    return TrialSet(trials=trials, n_classes=n_classes)


# -- synthetic data ---------------------------------------------------------


def synth_generate(n_per_class, channels, time_steps, n_classes, snr, seed, subjects=1, sessions=1) -> TrialSet:
    """Deterministic synthetic trials with class-specific oscillations.

    Class k places a sinusoid at SYNTH_CLASS_FREQS[k] (random phase per
    trial, shared across channels) on its own contiguous channel block,
    over unit-variance Gaussian noise everywhere. The sinusoid amplitude
    on active channels is sqrt(2*snr), i.e. per-channel signal power is
    snr times the noise power.
    """
    if n_classes < 1 or n_classes > len(SYNTH_CLASS_FREQS):
        raise ConfigurationError(f"n_classes must be in [1, {len(SYNTH_CLASS_FREQS)}]")
    if channels < n_classes:
        raise ConfigurationError(f"need at least one channel per class ({channels} < {n_classes})")
    if time_steps < 1 or n_per_class < 0 or subjects < 1 or sessions < 1:
        raise ConfigurationError("invalid synthetic dimensions")
    if snr <= 0:
        raise ConfigurationError("snr must be positive")

    rng = np.random.Generator(np.random.PCG64(seed))
    amp = np.sqrt(2.0 * snr)
    ticks = np.arange(time_steps) / SYNTH_SAMPLE_RATE
    trials = []
    index = 0
    for label in range(n_classes):
        lo = label * channels // n_classes
        hi = (label + 1) * channels // n_classes
        freq = SYNTH_CLASS_FREQS[label]
        for _ in range(n_per_class):
            phase = rng.uniform(0.0, 2.0 * np.pi)
            noise = rng.standard_normal((channels, time_steps))
            samples = noise.astype(np.float32)
            wave = (amp * np.sin(2.0 * np.pi * freq * ticks + phase)).astype(np.float32)
            samples[lo:hi] += wave
            trials.append(
                EEGTrial(
                    samples=samples,
                    label=label,
                    subject_id=1 + index % subjects,
                    session_id=1 + (index // subjects) % sessions,
                )
            )
            index += 1
    return TrialSet(trials=trials, n_classes=n_classes)


# -- splits ------------------------------------------------------------------


def split(trial_set: TrialSet, spec):
    """Partition a set into (train, test) per the split spec."""
    spec.validate()
    n = len(trial_set.trials)
    if spec.strategy == "none":
        return trial_set.subset(range(n)), trial_set.subset([])
    if spec.strategy == "loso":
        subjects = set(trial_set.subjects())
        if spec.held_out_subject not in subjects:
            raise DataError(f"unknown subject {spec.held_out_subject}; have {sorted(subjects)}")
        test_idx = [i for i, t in enumerate(trial_set.trials) if t.subject_id == spec.held_out_subject]
        train_idx = [i for i, t in enumerate(trial_set.trials) if t.subject_id != spec.held_out_subject]
        return trial_set.subset(train_idx), trial_set.subset(test_idx)
    if spec.strategy == "session_holdout":
        sessions = set(trial_set.sessions())
        wanted = set(spec.train_sessions) | set(spec.test_sessions)
        missing = wanted - sessions
        if missing:
            raise DataError(f"unknown sessions {sorted(missing)}; have {sorted(sessions)}")
        train_idx = [i for i, t in enumerate(trial_set.trials) if t.session_id in spec.train_sessions]
        test_idx = [i for i, t in enumerate(trial_set.trials) if t.session_id in spec.test_sessions]
        return trial_set.subset(train_idx), trial_set.subset(test_idx)
    # kfold: seeded shuffle, then contiguous folds with sizes differing by <= 1.
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    perm = rng.permutation(n)
    base, extra = divmod(n, spec.n_folds)
    start = 0
    folds = []
    for f in range(spec.n_folds):
        stop = start + base + (1 if f < extra else 0)
        folds.append(perm[start:stop])
        start = stop
    test_idx = sorted(int(i) for i in folds[spec.fold_index])
    test_set = set(test_idx)
    train_idx = [i for i in range(n) if i not in test_set]
    return trial_set.subset(train_idx), trial_set.subset(test_idx)


# -- fatigue labeling ---------------------------------------------------------

PERCLOS_THRESHOLD = 0.35


def label_perclos(blink_s, close_s, interval_s, threshold=PERCLOS_THRESHOLD):
    """Eye-closure ratio over an interval and its fatigue label.

    Returns ("fatigued"|"alert", ratio); fatigued iff ratio is strictly
    greater than the threshold.
    """
    if interval_s <= 0:
        raise DataError("interval must be positive")
    if blink_s < 0 or close_s < 0:
        raise DataError("durations must be nonnegative")
    if blink_s + close_s > interval_s:
        raise DataError("blink + close exceeds the interval")
    ratio = (blink_s + close_s) / interval_s
    return ("fatigued" if ratio > threshold else "alert"), ratio


# -- normalization -------------------------------------------------------------


@dataclass
class ChannelStats:
    mean: np.ndarray
    std: np.ndarray


def zscore_fit(train: TrialSet) -> ChannelStats:
    """Per-channel mean/std over the train split only."""
    if not train.trials:
        raise DataError("cannot fit normalization on an empty set")
    stacked = np.stack([t.samples for t in train.trials])  # (N, C, T)
    mean = stacked.mean(axis=(0, 2))
    std = stacked.std(axis=(0, 2))
    std = np.where(std < 1e-8, 1.0, std)
    return ChannelStats(mean=mean.astype(np.float32), std=std.astype(np.float32))


def zscore_apply(trial_set: TrialSet, stats: ChannelStats) -> TrialSet:
    normalized = [
        EEGTrial(
            samples=(t.samples - stats.mean[:, None]) / stats.std[:, None],
            label=t.label,
            subject_id=t.subject_id,
            session_id=t.session_id,
        )
        for t in trial_set.trials
    ]
    return TrialSet(trials=normalized, n_classes=trial_set.n_classes, class_names=trial_set.class_names)
