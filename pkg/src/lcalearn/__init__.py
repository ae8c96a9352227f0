"""Sparse coding with the Locally Competitive Algorithm.

Learns feature dictionaries in an unsupervised manner from static images
or event-camera frame sequences, with a continuous interpolation from
graded (rate-coded) to spiking dynamics via accumulator neurons.
"""

from lcalearn.dictionary import (
    Dictionary,
    InputDims,
    analyze,
    hebbian_update,
    init_random,
    load_checkpoint,
    save_checkpoint,
    synthesize,
)
from lcalearn.errors import FormatError, NumericError
from lcalearn.lca import LcaParams, MembraneState, energy, lca_step, run_inference, soft_threshold
from lcalearn.accumulator import (
    AccumulatorState,
    SpikeFrame,
    accumulate_step,
    run_spiking_inference,
    slca_step,
)
from lcalearn.filters import BoxcarFilter, ExponentialFilter, IdentityFilter, make_filter

__version__ = "0.1.0"

__all__ = [
    "AccumulatorState",
    "BoxcarFilter",
    "Dictionary",
    "ExponentialFilter",
    "FormatError",
    "IdentityFilter",
    "InputDims",
    "LcaParams",
    "MembraneState",
    "NumericError",
    "SpikeFrame",
    "accumulate_step",
    "analyze",
    "energy",
    "hebbian_update",
    "init_random",
    "lca_step",
    "load_checkpoint",
    "make_filter",
    "run_inference",
    "run_spiking_inference",
    "save_checkpoint",
    "slca_step",
    "soft_threshold",
    "synthesize",
]
