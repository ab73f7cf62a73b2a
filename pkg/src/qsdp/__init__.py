"""Desk-scale numerical engine for block encodings, matrix multiplicative weights SDP solving,
protocol compilation and Uhlmann transformations."""
from . import blockenc, chebpoly, matcore, mmwu, protosdp, statesynth, uhlmann

__all__ = ["blockenc", "chebpoly", "matcore", "mmwu", "protosdp", "statesynth", "uhlmann"]
