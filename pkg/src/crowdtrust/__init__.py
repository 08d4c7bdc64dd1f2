"""Trust-weighted fusion of crowdsourced categorical observations."""

from .core import (
    AnswerKey,
    FusionResult,
    LabelAlphabet,
    ObservationMatrix,
    Split,
    TrustWeights,
    accuracy,
    decide_binary,
    encode_binary,
    fuse,
    split_queries,
    weighted_vote,
)

__version__ = "0.1.0"
