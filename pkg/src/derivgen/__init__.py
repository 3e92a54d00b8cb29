"""derivgen: derivational paradigm completion.

Given a base word and a derivational slot tag, generate the derived
surface form. Provides a data pipeline over (base, tag, derived) triples,
an averaged-perceptron edit transducer baseline, an attentional GRU
encoder-decoder built on a small reverse-mode autodiff core, and the
matching evaluation metrics.
"""

from .corpus import (
    DatasetSplit,
    Triple,
    Vocab,
    build_vocab,
    filter_triples,
    levenshtein,
    split_dataset,
)
from .metrics import EvalReport, accuracy, affix_f1, avg_edit_distance, evaluate, extract_affix

__version__ = "0.1.0"

__all__ = [
    "Triple",
    "Vocab",
    "DatasetSplit",
    "levenshtein",
    "filter_triples",
    "split_dataset",
    "build_vocab",
    "accuracy",
    "avg_edit_distance",
    "extract_affix",
    "affix_f1",
    "evaluate",
    "EvalReport",
]
