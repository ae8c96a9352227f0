"""Accumulator neurons: spike discretization with carry-over of rounding error.

Each neuron emits ``floor((carry + desired) / s)`` spikes of height ``s``
per timestep and keeps the remainder as carry, so cumulative emitted
output never drifts more than ``s`` from cumulative desired output. The
spiking LCA substitutes these spike values for the graded code inside the
membrane dynamics.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from lcalearn.dictionary import Dictionary
from lcalearn.errors import NumericError
from lcalearn.filters import CodeFilter, IdentityFilter
from lcalearn.lca import LcaParams, MembraneState, lca_step, soft_threshold

RASTER_HEADER = ["step", "neuron", "count"]


@dataclass
class AccumulatorState:
    """Per-neuron carry (accumulated rounding error) plus the global spike height."""

    carry: np.ndarray
    spike_height: float

    def __post_init__(self):
        if self.spike_height <= 0:
            raise ValueError(f"spike height must be > 0, got {self.spike_height}")

    @classmethod
    def zeros(cls, n: int, spike_height: float) -> "AccumulatorState":
        return cls(np.zeros(n), spike_height)


@dataclass
class SpikeFrame:
    """Spike counts for one timestep; the emitted value is counts * spike_height."""

    counts: np.ndarray
    spike_height: float

    @property
    def value(self) -> np.ndarray:
        return self.counts * self.spike_height


@dataclass
class SpikingResult:
    code: np.ndarray                 # filtered code at period end
    final_value: np.ndarray          # raw spike value at the last step
    state: MembraneState
    accumulator: AccumulatorState
    max_counts: int                  # max spikes by any neuron in any single step
    total_counts: int                # total spikes over the period
    half_mean: np.ndarray = None     # mean filtered code over the last half
    raster: Optional[np.ndarray] = None  # (steps, N) int counts when recorded
    codes: Optional[np.ndarray] = None   # (steps, N) filtered codes when recorded


class InputRateEncoder:
    """Accumulator encoding of the input itself: per-pixel spike rates.

    Magnitudes go through the same discretize-with-carry mechanism as
    neuron outputs; signs are reapplied so signed event frames keep their
    polarity. With a small spike height this approaches the constant-drive
    default.
    """

    def __init__(self, values: np.ndarray, spike_height: float):
        values = np.asarray(values, dtype=np.float64)
        self.signs = np.sign(values)
        self.magnitudes = np.abs(values)
        self.state = AccumulatorState.zeros(values.shape[0], spike_height)

    def step(self) -> np.ndarray:
        frame, self.state = accumulate_step(self.state, self.magnitudes)
        return self.signs * frame.value


def accumulate_step(
    state: AccumulatorState, desired: np.ndarray
) -> tuple[SpikeFrame, AccumulatorState]:
    """Discretize one timestep of desired output into spikes, carrying the remainder.

    The floor is corrected against float rounding so that the carry stays in
    [0, s) exactly, which is what keeps every prefix of emitted output within
    one spike height of the desired output.
    """
    desired = np.asarray(desired, dtype=np.float64)
    if not np.isfinite(desired).all():
        raise NumericError("non-finite desired output in accumulator")
    if (desired < 0).any():
        raise ValueError("accumulator requires nonnegative desired outputs")
    s = state.spike_height
    v = state.carry + desired
    counts = np.floor(v / s)
    counts += (counts + 1.0) * s <= v  # quotient rounded down across an integer
    counts -= counts * s > v           # quotient rounded up across an integer
    counts = counts.astype(np.int64)
    carry = v - counts * s
    return SpikeFrame(counts, s), AccumulatorState(carry, s)


def slca_step(
    mstate: MembraneState,
    astate: AccumulatorState,
    dictionary: Dictionary,
    input_vector: np.ndarray,
    params: LcaParams,
) -> tuple[MembraneState, AccumulatorState, SpikeFrame]:
    """One spiking-LCA step: threshold, discretize, then drive the dynamics.

    The spike value, not the graded code, enters the reconstruction and
    inhibition terms.
    """
    desired = soft_threshold(mstate.u, params.lam)
    spikes, astate = accumulate_step(astate, desired)
    mstate = lca_step(mstate, dictionary, input_vector, params, spikes.value)
    return mstate, astate, spikes


def run_spiking_inference(
    dictionary: Dictionary,
    input_vector: np.ndarray,
    params: LcaParams,
    spike_height: float,
    code_filter: Optional[CodeFilter] = None,
    *,
    initial_state: Optional[MembraneState] = None,
    initial_accumulator: Optional[AccumulatorState] = None,
    record_raster: bool = False,
    record_codes: bool = False,
    input_encoder: Optional[InputRateEncoder] = None,
) -> SpikingResult:
    """Run one display period of spiking LCA and return the filtered code.

    The filter smooths the per-step spike values; with no filter the
    returned code is the raw spike value at the final step.
    """
    input_vector = np.asarray(input_vector, dtype=np.float64)
    if input_vector.shape != (dictionary.input_size,):
        raise ValueError(
            f"input has shape {input_vector.shape}, expected ({dictionary.input_size},)"
        )
    n = dictionary.element_count
    mstate = initial_state if initial_state is not None else MembraneState.zeros(n)
    astate = (
        initial_accumulator
        if initial_accumulator is not None
        else AccumulatorState.zeros(n, spike_height)
    )
    if astate.spike_height != spike_height:
        raise ValueError("initial accumulator has a different spike height")
    code_filter = code_filter if code_filter is not None else IdentityFilter()

    raster = np.zeros((params.steps, n), dtype=np.int64) if record_raster else None
    codes = np.zeros((params.steps, n)) if record_codes else None
    half_start = params.steps // 2
    half_sum = np.zeros(n)
    half_count = 0
    filtered = np.zeros(n)
    value = np.zeros(n)
    max_counts = 0
    total_counts = 0
    for i in range(params.steps):
        drive = input_vector if input_encoder is None else input_encoder.step()
        mstate, astate, spikes = slca_step(mstate, astate, dictionary, drive, params)
        value = spikes.value
        filtered = code_filter.step(value)
        step_max = int(spikes.counts.max())
        if step_max > max_counts:
            max_counts = step_max
        total_counts += int(spikes.counts.sum())
        if i >= half_start:
            half_sum += filtered
            half_count += 1
        if record_raster:
            raster[i] = spikes.counts
        if record_codes:
            codes[i] = filtered
    half_mean = half_sum / half_count if half_count else filtered.copy()
    return SpikingResult(
        code=filtered,
        final_value=value,
        state=mstate,
        accumulator=astate,
        max_counts=max_counts,
        total_counts=total_counts,
        half_mean=half_mean,
        raster=raster,
        codes=codes,
    )


def write_raster_csv(path, raster: np.ndarray) -> None:
    """Dump nonzero spike counts as ``step,neuron,count`` rows."""
    steps, neurons = np.nonzero(raster)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RASTER_HEADER)
        for step, neuron in zip(steps, neurons):
            writer.writerow([int(step), int(neuron), int(raster[step, neuron])])
