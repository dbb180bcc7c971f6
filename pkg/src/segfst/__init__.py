"""Finite-state constrained sentence segmentation of long ASR transcripts."""

__version__ = "0.1.0"

from .decoding import DecodeConfig, DecodeResult, Mode, decode_window
from .errors import SegfstError
from .longform import WindowSpec, make_windows, segment_passage
from .scoring import NgramModel, NgramScorer, train_ngram
from .segmentation import Segmentation, parse_segmentation

__all__ = [
    "DecodeConfig",
    "DecodeResult",
    "Mode",
    "NgramModel",
    "NgramScorer",
    "SegfstError",
    "Segmentation",
    "WindowSpec",
    "decode_window",
    "make_windows",
    "parse_segmentation",
    "segment_passage",
    "train_ngram",
]
