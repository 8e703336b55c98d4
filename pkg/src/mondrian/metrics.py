"""Text-overlap metrics used by the evaluation harness.

ROUGE here uses lowercase whitespace tokenization without stemming, so
absolute scores can differ from stemmed implementations.
"""

from __future__ import annotations

import string
from collections import Counter

from .errors import LengthMismatchError


def _words(text):
    return text.lower().split()


def _f_measure(precision, recall):
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _ngrams(words, n):
    return Counter(tuple(words[i : i + n]) for i in range(len(words) - n + 1))


def rouge_n(pred, ref, n):
    """Clipped n-gram overlap; returns (precision, recall, f_measure)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    pred_grams = _ngrams(_words(pred), n)
    ref_grams = _ngrams(_words(ref), n)
    overlap = sum((pred_grams & ref_grams).values())
    pred_total = sum(pred_grams.values())
    ref_total = sum(ref_grams.values())
    precision = overlap / pred_total if pred_total else 0.0
    recall = overlap / ref_total if ref_total else 0.0
    return precision, recall, _f_measure(precision, recall)


def _lcs_length(a, b):
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for item_a in a:
        current = [0]
        for j, item_b in enumerate(b, start=1):
            if item_a == item_b:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[len(b)]


def rouge_l(pred, ref):
    """LCS-based overlap; returns (precision, recall, f_measure)."""
    pred_words = _words(pred)
    ref_words = _words(ref)
    lcs = _lcs_length(pred_words, ref_words)
    precision = lcs / len(pred_words) if pred_words else 0.0
    recall = lcs / len(ref_words) if ref_words else 0.0
    return precision, recall, _f_measure(precision, recall)


_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def _answer_words(text):
    return text.lower().translate(_PUNCT_TABLE).split()


def token_f1(pred, ref):
    """Bag-of-words F1 after lowercasing and punctuation stripping."""
    pred_words = _answer_words(pred)
    ref_words = _answer_words(ref)
    if not pred_words and not ref_words:
        return 1.0
    common = sum((Counter(pred_words) & Counter(ref_words)).values())
    if common == 0:
        return 0.0
    precision = common / len(pred_words)
    recall = common / len(ref_words)
    return _f_measure(precision, recall)


def extract_label(text, labels):
    """First label (in the given order) contained in the text, or None.

    Containment is case-insensitive, which is why more specific labels
    ("not entailment") must come before their substrings.
    """
    haystack = text.lower()
    for label in labels:
        if label.lower() in haystack:
            return label
    return None


def agreement_accuracy(outputs_a, outputs_b, labels):
    """Percentage of positions whose extracted labels agree.

    Two None extractions count as agreement; the lists must be equally
    long.  Empty lists agree vacuously.
    """
    outputs_a = list(outputs_a)
    outputs_b = list(outputs_b)
    if len(outputs_a) != len(outputs_b):
        raise LengthMismatchError(
            f"{len(outputs_a)} outputs vs {len(outputs_b)} outputs"
        )
    if not outputs_a:
        return 100.0
    matches = sum(
        1
        for a, b in zip(outputs_a, outputs_b)
        if extract_label(a, labels) == extract_label(b, labels)
    )
    return matches * 100.0 / len(outputs_a)
