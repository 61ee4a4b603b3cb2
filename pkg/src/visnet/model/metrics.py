from __future__ import annotations


def _ratio(num, den, name, flags):
    if den == 0:
        flags.append(f"{name}: zero denominator")
        return 0.0
    return num / den


def compute_metrics(tp: int, fp: int, fn: int, tn: int) -> dict:
    """Precision, recall, F1 and accuracy for one positive class.

    A zero denominator yields 0 and a note in ``flags``.
    """
    if min(tp, fp, fn, tn) < 0:
        raise ValueError("confusion counts must be nonnegative")
    flags: list = []
    precision = _ratio(tp, tp + fp, "precision", flags)
    recall = _ratio(tp, tp + fn, "recall", flags)
    f1 = _ratio(2 * precision * recall, precision + recall, "f1", flags)
    accuracy = _ratio(tp + tn, tp + fp + fn + tn, "accuracy", flags)
    return {
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "accuracy": accuracy,
        "flags": flags,
    }
