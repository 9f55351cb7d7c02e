"""FrameNet 1.7 exemplar extraction into the fecluster interchange format."""

from .depparse import HeuristicParser, get_parser
from .encoders import HashEncoder, get_encoder
from .extract import ExtractionStats, extract, write_stats
from .framenet import FrameIndex, FrameNetError, read_frames, read_verbal_lus
from .split import SplitError, assign_folds, split_and_emit

__version__ = "0.1.0"

__all__ = [
    "ExtractionStats",
    "FrameIndex",
    "FrameNetError",
    "HashEncoder",
    "HeuristicParser",
    "SplitError",
    "assign_folds",
    "extract",
    "get_encoder",
    "get_parser",
    "read_frames",
    "read_verbal_lus",
    "split_and_emit",
    "write_stats",
]
