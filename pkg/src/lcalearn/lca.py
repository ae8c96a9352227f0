"""Non-spiking LCA inference: leaky-integrator dynamics with soft-threshold outputs.

The membrane potentials follow a forward-Euler integration of

    du/dt ~ -u + analyze(input - synthesize(output)) + output

where ``output`` is the soft-thresholded code for graded inference, or an
accumulator spike value for the spiking variant (see ``accumulator``).
At a fixed point with output = soft_threshold(u), u minimizes the energy
``0.5 * ||input - synthesize(code)||^2 + lam * ||code||_1`` locally.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from lcalearn.dictionary import Dictionary, analyze, synthesize
from lcalearn.errors import NumericError

TRACE_HEADER = ["step", "energy", "active", "du_inf"]


@dataclass(frozen=True)
class LcaParams:
    """Inference hyperparameters: threshold, timestep, time constant, step count."""

    lam: float
    dt: float = 1.0
    tau: float = 100.0
    steps: int = 2000

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"threshold must be >= 0, got {self.lam}")
        if not 0 < self.dt <= self.tau:
            raise ValueError(f"need 0 < dt <= tau, got dt={self.dt}, tau={self.tau}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")


@dataclass
class MembraneState:
    """Per-neuron membrane potentials plus the integration step counter."""

    u: np.ndarray
    step_index: int = 0

    @classmethod
    def zeros(cls, n: int) -> "MembraneState":
        return cls(np.zeros(n), 0)


@dataclass
class InferenceResult:
    code: np.ndarray
    state: MembraneState
    half_mean: np.ndarray = None  # mean code over the last half of the period
    codes: Optional[np.ndarray] = None  # (steps, N) per-step codes when traced
    trace: list = field(default_factory=list)  # rows matching TRACE_HEADER


def soft_threshold(u: np.ndarray, lam: float) -> np.ndarray:
    """Rectified soft threshold: u - lam where u > lam, else 0."""
    if lam < 0:
        raise ValueError(f"threshold must be >= 0, got {lam}")
    return np.maximum(np.asarray(u, dtype=np.float64) - lam, 0.0)


def lca_step(
    state: MembraneState,
    dictionary: Dictionary,
    input_vector: np.ndarray,
    params: LcaParams,
    output_code: np.ndarray,
) -> MembraneState:
    """One forward-Euler step of the membrane dynamics.

    ``output_code`` is whatever the neurons currently emit (graded code or
    spike value); it enters both the reconstruction term and the
    self-excitation term.
    """
    residual = input_vector - synthesize(dictionary, output_code)
    du = -state.u + analyze(dictionary, residual) + output_code
    u_next = state.u + (params.dt / params.tau) * du
    if not np.isfinite(u_next).all():
        raise NumericError(f"non-finite membrane potential at step {state.step_index}")
    return MembraneState(u_next, state.step_index + 1)


def energy(
    dictionary: Dictionary,
    input_vector: np.ndarray,
    code: np.ndarray,
    lam: float,
) -> float:
    """Sparse-coding cost: 0.5 * ||input - reconstruction||^2 + lam * ||code||_1."""
    residual = np.asarray(input_vector, dtype=np.float64) - synthesize(dictionary, code)
    return 0.5 * float(residual @ residual) + lam * float(np.abs(code).sum())


def run_inference(
    dictionary: Dictionary,
    input_vector: np.ndarray,
    params: LcaParams,
    *,
    initial_state: Optional[MembraneState] = None,
    record_codes: bool = False,
    record_trace: bool = False,
    early_stop: Optional[float] = None,
    input_encoder=None,
) -> InferenceResult:
    """Integrate the dynamics for ``params.steps`` steps from rest (or a warm start).

    ``early_stop`` halts once the membrane update falls below the given
    infinity-norm tolerance; intended for convergence tests, not the
    fixed-length display periods used in training. ``input_encoder``
    optionally replaces the constant input current with a per-step encoded
    version (see ``accumulator.InputRateEncoder``).
    """
    input_vector = np.asarray(input_vector, dtype=np.float64)
    if input_vector.shape != (dictionary.input_size,):
        raise ValueError(
            f"input has shape {input_vector.shape}, expected ({dictionary.input_size},)"
        )
    n = dictionary.element_count
    state = initial_state if initial_state is not None else MembraneState.zeros(n)
    if state.u.shape != (n,):
        raise ValueError(f"state has {state.u.shape[0]} neurons, dictionary has {n}")

    codes = np.zeros((params.steps, n)) if record_codes else None
    trace: list = []
    half_start = params.steps // 2
    half_sum = np.zeros(n)
    half_count = 0
    code = soft_threshold(state.u, params.lam)
    for i in range(params.steps):
        drive = input_vector if input_encoder is None else input_encoder.step()
        new_state = lca_step(state, dictionary, drive, params, code)
        du_inf = float(np.abs(new_state.u - state.u).max())
        state = new_state
        code = soft_threshold(state.u, params.lam)
        if i >= half_start:
            half_sum += code
            half_count += 1
        if record_codes:
            codes[i] = code
        if record_trace:
            trace.append(
                [
                    state.step_index,
                    energy(dictionary, input_vector, code, params.lam),
                    int(np.count_nonzero(code)),
                    du_inf,
                ]
            )
        if early_stop is not None and du_inf < early_stop:
            if record_codes:
                codes = codes[: i + 1]
            break
    half_mean = half_sum / half_count if half_count else code.copy()
    return InferenceResult(code=code, state=state, half_mean=half_mean, codes=codes, trace=trace)


def write_trace_csv(path, trace: list) -> None:
    """Dump per-step inference records as ``step,energy,active,du_inf``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for row in trace:
            writer.writerow([row[0], repr(float(row[1])), row[2], repr(float(row[3]))])
