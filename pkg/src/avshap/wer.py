"""Word error rate: word-level edit distance over the reference length."""

from __future__ import annotations

from typing import Sequence


def wer(reference: str | Sequence[str], hypothesis: str | Sequence[str]) -> float:
    """Substitutions + insertions + deletions, divided by reference length.

    Accepts whitespace-separated strings or pre-split word sequences.
    The reference must be nonempty; 0.0 iff the sequences are equal.
    """
    ref = _words(reference)
    hyp = _words(hypothesis)
    if not ref:
        raise ValueError("WER needs a nonempty reference")

    previous = list(range(len(hyp) + 1))
    for i, ref_word in enumerate(ref, start=1):
        current = [i] + [0] * len(hyp)
        for j, hyp_word in enumerate(hyp, start=1):
            substitution = previous[j - 1] + (0 if ref_word == hyp_word else 1)
            current[j] = min(previous[j] + 1, current[j - 1] + 1, substitution)
        previous = current
    return previous[-1] / len(ref)


def _words(text: str | Sequence[str]) -> list[str]:
    if isinstance(text, str):
        return text.split()
    return [str(w) for w in text]
