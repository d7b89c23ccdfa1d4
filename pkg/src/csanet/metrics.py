"""Evaluation metrics: confusion matrix, accuracy, STD, Cohen's kappa.

Values are stored as fractions; displays multiply by 100. The
cross-subject STD uses the population divisor (1/M).
"""

import json
from dataclasses import dataclass

import numpy as np

from .autodiff import no_grad
from .data import TrialSet, trials_to_arrays
from .errors import ConfigurationError, DataError, NumericalError


@dataclass
class ConfusionMatrix:
    """L x L counts; rows are true classes, columns predictions."""

    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 2 or self.counts.shape[0] != self.counts.shape[1]:
            raise DataError("confusion matrix must be square")
        if (self.counts < 0).any():
            raise DataError("confusion matrix counts must be nonnegative")

    @property
    def total(self):
        return int(self.counts.sum())

    @property
    def n_classes(self):
        return self.counts.shape[0]


def confusion_from_labels(y_true, y_pred, n_classes) -> ConfusionMatrix:
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    for t, p in zip(np.asarray(y_true), np.asarray(y_pred)):
        counts[int(t), int(p)] += 1
    return ConfusionMatrix(counts)


def accuracy(cm: ConfusionMatrix) -> float:
    """Trace over total: correctly predicted fraction."""
    if cm.total == 0:
        raise DataError("empty confusion matrix")
    return float(np.trace(cm.counts)) / cm.total


def std_across(accs) -> float:
    """Population standard deviation (1/M divisor) of per-subject accuracies."""
    accs = np.asarray(list(accs), dtype=np.float64)
    if accs.size == 0:
        raise DataError("std_across needs at least one accuracy")
    return float(np.sqrt(np.mean((accs - accs.mean()) ** 2)))


def kappa(cm: ConfusionMatrix) -> float:
    """Chance-corrected agreement (p_o - p_e) / (1 - p_e)."""
    total = cm.total
    if total == 0:
        raise DataError("empty confusion matrix")
    p_o = accuracy(cm)
    rows = cm.counts.sum(axis=1).astype(np.float64)
    cols = cm.counts.sum(axis=0).astype(np.float64)
    p_e = float((rows * cols).sum()) / (total * total)
    if p_e >= 1.0 - 1e-12:
        if p_o >= 1.0 - 1e-12:
            return 1.0
        raise NumericalError("kappa undefined: chance agreement is 1 with imperfect accuracy")
    return (p_o - p_e) / (1.0 - p_e)


def per_class_recall(cm: ConfusionMatrix):
    """Diagonal over row sums; classes with no true instances report 0."""
    rows = cm.counts.sum(axis=1)
    out = []
    for k in range(cm.n_classes):
        out.append(float(cm.counts[k, k] / rows[k]) if rows[k] else 0.0)
    return out


@dataclass
class EvalReport:
    confusion: ConfusionMatrix
    acc: float
    kappa: float
    per_class_recall: list
    subject_accs: dict = None  # subject_id -> accuracy, when >= 2 subjects
    std: float = None

    def __eq__(self, other):
        if not isinstance(other, EvalReport):
            return NotImplemented
        return (
            np.array_equal(self.confusion.counts, other.confusion.counts)
            and self.acc == other.acc
            and self.kappa == other.kappa
            and self.per_class_recall == other.per_class_recall
            and self.subject_accs == other.subject_accs
            and self.std == other.std
        )


def evaluate(model, test: TrialSet, cfg, batch_size=64) -> EvalReport:
    """Deterministic eval-mode pass over a set; no dropout, no augmentation."""
    if test.channels != cfg.channels or test.time_steps != cfg.time_steps:
        raise ConfigurationError(
            f"set dims ({test.channels}, {test.time_steps}) do not match the model "
            f"({cfg.channels}, {cfg.time_steps})"
        )
    if test.n_classes != cfg.n_classes:
        raise ConfigurationError("class count mismatch between set and model")
    preds = np.empty(len(test), dtype=np.int64)
    trues = np.empty(len(test), dtype=np.int64)
    from .autodiff import default_dtype

    with no_grad():
        for start in range(0, len(test), batch_size):
            chunk = test.subset(range(start, min(start + batch_size, len(test))))
            x, y = trials_to_arrays(chunk, dtype=default_dtype())
            preds[start : start + len(chunk)] = model.predict(x)
            trues[start : start + len(chunk)] = y
    return report_from_predictions(trues, preds, cfg.n_classes, subjects=[t.subject_id for t in test.trials])


def report_from_predictions(y_true, y_pred, n_classes, subjects=None) -> EvalReport:
    cm = confusion_from_labels(y_true, y_pred, n_classes)
    report = EvalReport(
        confusion=cm,
        acc=accuracy(cm),
        kappa=kappa(cm),
        per_class_recall=per_class_recall(cm),
    )
    if subjects is not None:
        ids = sorted(set(subjects))
        if len(ids) >= 2:
            subjects = np.asarray(subjects)
            y_true = np.asarray(y_true)
            y_pred = np.asarray(y_pred)
            accs = {}
            for sid in ids:
                mask = subjects == sid
                accs[int(sid)] = float((y_true[mask] == y_pred[mask]).mean())
            report.subject_accs = accs
            report.std = std_across(list(accs.values()))
    return report


# -- serialization -----------------------------------------------------------


def report_to_csv(report: EvalReport) -> str:
    """One header row, metric,value rows, then the L x L confusion block."""
    lines = ["metric,value", f"acc,{report.acc!r}", f"kappa,{report.kappa!r}"]
    for k, r in enumerate(report.per_class_recall):
        lines.append(f"per_class_recall_{k},{r!r}")
    if report.subject_accs is not None:
        for sid in sorted(report.subject_accs):
            lines.append(f"subject_acc_{sid},{report.subject_accs[sid]!r}")
        lines.append(f"std,{report.std!r}")
    lines.append(f"confusion,{report.confusion.n_classes}")
    for row in report.confusion.counts:
        lines.append(",".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def report_from_csv(text: str) -> EvalReport:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "metric,value":
        raise DataError("missing metric,value header")
    fields = {}
    confusion_rows = []
    i = 1
    n_classes = None
    while i < len(lines):
        key, _, value = lines[i].partition(",")
        if key == "confusion":
            n_classes = int(value)
            for row in lines[i + 1 : i + 1 + n_classes]:
                confusion_rows.append([int(v) for v in row.split(",")])
            i += 1 + n_classes
            continue
        fields[key] = float(value)
        i += 1
    if n_classes is None:
        raise DataError("missing confusion block")
    recalls = [fields[f"per_class_recall_{k}"] for k in range(n_classes)]
    subject_accs = {
        int(k.split("_")[-1]): v for k, v in fields.items() if k.startswith("subject_acc_")
    } or None
    return EvalReport(
        confusion=ConfusionMatrix(np.array(confusion_rows)),
        acc=fields["acc"],
        kappa=fields["kappa"],
        per_class_recall=recalls,
        subject_accs=subject_accs,
        std=fields.get("std"),
    )


def report_to_json(report: EvalReport) -> str:
    payload = {
        "acc": report.acc,
        "kappa": report.kappa,
        "per_class_recall": report.per_class_recall,
        "subject_accs": {str(k): v for k, v in report.subject_accs.items()}
        if report.subject_accs is not None
        else None,
        "std": report.std,
        "confusion": report.confusion.counts.tolist(),
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def report_from_json(text: str) -> EvalReport:
    payload = json.loads(text)
    subject_accs = payload.get("subject_accs")
    if subject_accs is not None:
        subject_accs = {int(k): v for k, v in subject_accs.items()}
    return EvalReport(
        confusion=ConfusionMatrix(np.array(payload["confusion"])),
        acc=payload["acc"],
        kappa=payload["kappa"],
        per_class_recall=payload["per_class_recall"],
        subject_accs=subject_accs,
        std=payload.get("std"),
    )
