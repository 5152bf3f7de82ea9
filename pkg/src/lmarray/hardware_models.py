"""Discrete-load implementation layer and power bookkeeping.

Covers pin-diode style load grids (uniform in reactance), first-order
error-feedback noise shaping, SAW filter insertion loss, the circulator dump
path, and the DC budget of class A versus class F power amplifiers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .feed_solver import Parasitic, solve_currents

EVM_FLOOR_DB = -300.0

CLASS_A_EFFICIENCY = 0.25
CLASS_F_EFFICIENCY = 0.80


@dataclass(frozen=True)
class LoadGrid:
    """``2**bits`` predefined load values evenly spaced over ``[x_min, x_max]`` ohms."""

    bits: int = 16
    x_min: float = -500.0
    x_max: float = 500.0

    def __post_init__(self):
        if not 1 <= self.bits <= 24:
            raise ValueError("bits must lie in 1..24")
        if not self.x_min < self.x_max:
            raise ValueError("need x_min < x_max")

    @property
    def levels(self) -> int:
        return 1 << self.bits

    @property
    def step(self) -> float:
        return (self.x_max - self.x_min) / (self.levels - 1)

    def value(self, k):
        return self.x_min + np.asarray(k) * (self.x_max - self.x_min) / (self.levels - 1)

    def index(self, x):
        """Nearest level index, ties resolved to the lower level; out-of-range values clamp."""
        u = (np.asarray(x, dtype=float) - self.x_min) / self.step
        return np.clip(np.ceil(u - 0.5), 0, self.levels - 1).astype(np.int64)

    def snap(self, x):
        return self.value(self.index(x))


@dataclass(frozen=True)
class QuantizationReport:
    """Quantized loads with per-symbol absolute error and EVM against the input."""

    quantized: np.ndarray
    error: np.ndarray
    evm_db: float
    clamped: int


def _split(values):
    v = np.asarray(values)
    return v.real.astype(float), (v.imag.astype(float) if np.iscomplexobj(v) else None)


def _merge(re, im):
    return re if im is None else re + 1j * im


def _count_out_of_range(grid, *parts):
    return int(sum(((p < grid.x_min) | (p > grid.x_max)).sum() for p in parts if p is not None))


def _report(loads, quantized, clamped):
    loads = np.asarray(loads)
    err = np.abs(quantized - loads)
    ref = np.sum(np.abs(loads) ** 2)
    return QuantizationReport(quantized, err, evm(loads, quantized) if ref > 0 else float("nan"), clamped)


def quantize_loads(loads, grid: LoadGrid = LoadGrid()) -> QuantizationReport:
    """Snap each load to the nearest grid value.

    Complex loads quantize real and imaginary parts independently on the same
    grid. Out-of-range values clamp to the grid ends and are counted.
    """
    re, im = _split(loads)
    clamped = _count_out_of_range(grid, re, im)
    q = _merge(grid.snap(re), None if im is None else grid.snap(im))
    return _report(loads, q, clamped)


def _error_feedback(x: np.ndarray, grid: LoadGrid) -> tuple[np.ndarray, int]:
    out = np.empty_like(x)
    carry = 0.0
    clamped = 0
    lo, hi = grid.x_min, grid.x_max
    for t, xt in enumerate(x):
        y = xt - carry
        if y < lo or y > hi:
            clamped += 1
            y = min(max(y, lo), hi)
        q = grid.value(grid.index(y))
        out[t] = q
        carry = q - y
    return out, clamped


def noise_shape(loads, grid: LoadGrid = LoadGrid()) -> QuantizationReport:
    """Quantize a load sequence with first-order error feedback.

    The quantization error of symbol t is subtracted from the input of symbol
    t+1, so the output error is the first difference of a bounded sequence:
    its spectrum is pushed away from DC and its running mean telescopes to
    zero.
    """
    re, im = _split(loads)
    if re.ndim != 1 or re.size < 2:
        raise ValueError("noise shaping needs a 1-D sequence of length >= 2")
    qr, cr = _error_feedback(re, grid)
    if im is None:
        return _report(loads, qr, cr)
    qi, ci = _error_feedback(im, grid)
    return _report(loads, qr + 1j * qi, cr + ci)


def low_band_power(err, quartile: float = 0.25) -> float:
    """Error power in the lowest ``quartile`` of the one-sided DFT band.

    For a length-N sequence that is bins ``0..floor(quartile * N / 2)``, i.e.
    frequencies up to ``quartile * fs / 2``. Real and imaginary parts are
    transformed separately and summed.
    """
    e = np.asarray(err)
    k = int(np.floor(quartile * e.size / 2))
    total = 0.0
    for part in (e.real, e.imag) if np.iscomplexobj(e) else (e,):
        spec = np.fft.rfft(part)
        total += float(np.sum(np.abs(spec[: k + 1]) ** 2))
    return total / e.size


def evm(reference, actual) -> float:
    """Error vector magnitude in dB, ``10 log10(sum|ref - act|^2 / sum|ref|^2)``.

    Floors at -300 dB for identical inputs.
    """
    ref = np.asarray(reference, dtype=complex)
    act = np.asarray(actual, dtype=complex)
    if ref.shape != act.shape:
        raise ValueError(f"shape mismatch {ref.shape} vs {act.shape}")
    p_ref = float(np.sum(np.abs(ref) ** 2))
    if p_ref == 0:
        raise ValueError("reference power is zero")
    p_err = float(np.sum(np.abs(ref - act) ** 2))
    if p_err == 0:
        return EVM_FLOOR_DB
    return max(EVM_FLOOR_DB, 10.0 * np.log10(p_err / p_ref))


def saw_filter_loss(power, loss_db: float = 1.5):
    if not 0 <= loss_db <= 3:
        raise ValueError("loss_db must lie in [0, 3]")
    return power * 10.0 ** (-loss_db / 10.0)


def circulator_dump(p_inc, p_rad):
    """Power routed into the circulator's dump resistor: incident minus radiated."""
    p_inc = np.asarray(p_inc, dtype=float)
    p_rad = np.asarray(p_rad, dtype=float)
    if np.any(p_rad < 0) or np.any(p_rad > p_inc):
        raise ValueError("radiated power must satisfy 0 <= p_rad <= p_inc; clip before dumping")
    out = p_inc - p_rad
    return float(out) if out.ndim == 0 else out


class PAClass(enum.Enum):
    CLASS_A = "A"
    CLASS_F = "F"


@dataclass(frozen=True)
class PowerBudget:
    dc_input: float
    dissipated_heat: float


def pa_power_budget(pa_class: PAClass, avg_radiated: float, crest_db: float = 0.0) -> PowerBudget:
    """DC draw and heat for one amplifier delivering ``avg_radiated`` watts.

    A class A stage draws constant DC sized for the peak at 25 % efficiency;
    a switching class F stage runs at 80 % of the average output.
    """
    if not avg_radiated > 0 or crest_db < 0:
        raise ValueError("need avg_radiated > 0 and crest_db >= 0")
    if PAClass(pa_class) is PAClass.CLASS_A:
        dc = avg_radiated * 10.0 ** (crest_db / 10.0) / CLASS_A_EFFICIENCY
    else:
        dc = avg_radiated / CLASS_F_EFFICIENCY
    return PowerBudget(dc, dc - avg_radiated)


def quantized_current_evm(cm, synthesis, grid: LoadGrid = LoadGrid()) -> float:
    """EVM of currents after snapping a parasitic synthesis' loads to ``grid``.

    ``synthesis`` is a sequence of parasitic LoadSynthesis results (one per
    symbol); the reference is the unquantized re-solve of each.
    """
    ref, act = [], []
    for s in synthesis:
        q = quantize_loads(s.loads, grid).quantized
        f = s.feed
        ref.append(solve_currents(cm, f).i)
        act.append(solve_currents(cm, Parasitic(f.source_voltage, f.source_impedance, q, f.active_index)).i)
    return evm(np.array(ref), np.array(act))
