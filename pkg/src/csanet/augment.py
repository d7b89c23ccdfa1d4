"""Segmentation-and-reconstruction (S&R) batch augmentation.

Each trial in a batch spawns one synthetic trial of the same class: the
time axis is cut into S segments, and every segment slot is filled with
the same slot taken from a uniformly drawn same-class trial in the batch
(the anchor itself is an eligible donor). Temporal order is preserved and
segments never cross classes. The output is the original batch followed
by the synthetic trials, so the batch size exactly doubles.

Draw order is part of the contract: anchors are visited in batch order,
and one donor index is drawn per segment slot, slots left to right.
"""

import numpy as np

from .config import SrConfig
from .data import EEGTrial, TrialSet
from .errors import ConfigurationError


def segment_bounds(T, S):
    """Balanced partition of T samples into S segments.

    The first T mod S segments get one extra sample. Returns a list of
    (start, stop) pairs covering [0, T).
    """
    if S < 1:
        raise ConfigurationError(f"segment count must be positive, got {S}")
    if T < S:
        raise ConfigurationError(f"trial length {T} shorter than segment count {S}")
    base, extra = divmod(T, S)
    bounds = []
    start = 0
    for s in range(S):
        stop = start + base + (1 if s < extra else 0)
        bounds.append((start, stop))
        start = stop
    return bounds


def sr_augment(batch: TrialSet, cfg: SrConfig, rng: np.random.Generator) -> TrialSet:
    """Augment a batch per class; identity when cfg.enabled is False."""
    if not cfg.enabled:
        return batch
    bounds = segment_bounds(batch.time_steps, cfg.segments)
    by_class = {}
    for idx, trial in enumerate(batch.trials):
        by_class.setdefault(trial.label, []).append(idx)

    synthetic = []
    for anchor in batch.trials:
        donors = by_class[anchor.label]
        samples = np.empty_like(anchor.samples)
        for start, stop in bounds:
            donor = batch.trials[donors[int(rng.integers(0, len(donors)))]]
            samples[:, start:stop] = donor.samples[:, start:stop]
        synthetic.append(
            EEGTrial(
                samples=samples,
                label=anchor.label,
                subject_id=anchor.subject_id,
                session_id=anchor.session_id,
            )
        )
    return TrialSet(
        trials=list(batch.trials) + synthetic,
        n_classes=batch.n_classes,
        class_names=batch.class_names,
    )
