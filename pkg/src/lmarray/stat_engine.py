"""Statistics of a common-amplifier array driven by Gaussian current targets.

With i.i.d. complex Gaussian targets of total average power ``P`` the
instantaneous sum power is ``P * X / (2n)`` with ``X ~ chi2(2n)``. Sizing the
incident power at the ``1 - eps`` quantile of that law makes ``eps`` the
exact clipping rate; its ratio to the mean is the crest factor.

Monte-Carlo routines draw either full current vectors or, where only the
sum power matters, its exact Gamma(n, P/n) law directly. Clipping
distortion additionally needs the direction of a clipped vector, which is
uniform on the complex sphere and independent of the sum power, so only
clipped draws are materialized as vectors.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .feed_solver import PortCurrents
from .signal_source import (
    CHUNK_ENTRIES,
    STREAM_CURRENTS,
    STREAM_DIRECTION,
    STREAM_SUM_POWER,
    Gaussian,
    chunk_bounds,
    gaussian_chunk,
    map_chunks,
    substream,
)

VSWR_CAP = 1e6
GAMMA_CHUNK = 1 << 20
# Above this many complex entries, sum-power sampling switches to the Gamma law.
VECTOR_BUDGET = 10**8


class ClipPolicy(enum.Enum):
    MMSE = "mmse"
    EQUAL = "equal"


class MismatchModel(enum.Enum):
    POWER_CONSERVING = "power_conserving"
    AMPLITUDE_DIFFERENCE = "amplitude_difference"


@dataclass(frozen=True)
class AnalysisParams:
    epsilon: float = 1e-3
    eta: float = 0.8
    samples: int = 10**6
    seed: int = 0
    mismatch_model: MismatchModel = MismatchModel.POWER_CONSERVING

    def __post_init__(self):
        if not 0 < self.epsilon < 0.5:
            raise ValueError("epsilon must lie in (0, 0.5)")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "mismatch_model", MismatchModel(self.mismatch_model))


@dataclass
class CurveReport:
    """Named table of equal-length columns; the first two are abscissa and ordinate."""

    name: str
    columns: dict
    units: dict
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.columns = {k: np.asarray(v) for k, v in self.columns.items()}
        lengths = {len(v) for v in self.columns.values()}
        if len(self.columns) < 2 or len(lengths) != 1:
            raise ValueError("a curve needs >= 2 columns of equal length")
        missing = set(self.columns) - set(self.units)
        if missing:
            raise ValueError(f"missing units for {sorted(missing)}")

    @property
    def x(self):
        return next(iter(self.columns.values()))

    @property
    def y(self):
        return list(self.columns.values())[1]


def number_tag(x: float) -> str:
    """Compact filename tag: 0.001 -> '1e-3', 0.8 -> '8e-1', 2.5e-4 -> '2.5e-4'."""
    mant, exp = f"{float(x):.12e}".split("e")
    mant = mant.rstrip("0").rstrip(".")
    return f"{mant}e{int(exp)}"


# -- PAPR / crest factor ---------------------------------------------------


def incident_power(n: int, epsilon: float, avg_power: float = 1.0) -> float:
    """Incident power exceeded by the demanded sum power with probability ``epsilon``."""
    if n < 1 or not 0 < epsilon < 1 or not avg_power > 0:
        raise ValueError("need n >= 1, 0 < epsilon < 1, avg_power > 0")
    return float(avg_power * stats.chi2.isf(epsilon, 2 * n) / (2 * n))


def crest_factor_analytic(n: int, epsilon: float) -> float:
    """Crest factor in dB (equal to the clipped PAPR in dB) at clip probability ``epsilon``."""
    return 10.0 * math.log10(incident_power(n, epsilon, 1.0))


def sum_power_samples(n: int, samples: int, seed: int, workers: int = 1, method: str = "auto") -> np.ndarray:
    """Normalized instantaneous sum powers of ``samples`` Gaussian target vectors.

    ``method="vector"`` draws the full current vectors; ``"gamma"`` samples the
    exact Gamma(n, 1/n) law of their sum power; ``"auto"`` picks vectors when
    ``n * samples <= VECTOR_BUDGET``.
    """
    if method == "auto":
        method = "vector" if n * samples <= VECTOR_BUDGET else "gamma"
    if method == "vector":
        spec = Gaussian(n, 1.0)
        rows = max(1, CHUNK_ENTRIES // n)

        def work(k, b):
            x = gaussian_chunk(spec, seed, k, b[1] - b[0], STREAM_CURRENTS)
            return (x.real**2 + x.imag**2).sum(axis=1)

    elif method == "gamma":
        rows = GAMMA_CHUNK

        def work(k, b):
            return substream(seed, STREAM_SUM_POWER, k).gamma(n, 1.0 / n, size=b[1] - b[0])

    else:
        raise ValueError(f"unknown method {method!r}")
    return np.concatenate(map_chunks(work, chunk_bounds(samples, rows), workers))


def crest_factor_mc(
    n: int, epsilon: float, samples: int, seed: int, workers: int = 1, method: str = "auto"
) -> float:
    """Empirical ``1 - epsilon`` quantile of the normalized sum power, in dB."""
    if samples < 100 / epsilon:
        warnings.warn(
            f"{samples} samples leave fewer than 100 expected tail draws at epsilon={epsilon}",
            RuntimeWarning,
            stacklevel=2,
        )
    p = sum_power_samples(n, samples, seed, workers, method)
    return 10.0 * math.log10(float(np.quantile(p, 1.0 - epsilon)))


def crest_curve(n_values, epsilon, mode="analytic", samples=10**6, seed=0, workers=1) -> CurveReport:
    n_values = [int(n) for n in n_values]
    if mode == "analytic":
        y = [crest_factor_analytic(n, epsilon) for n in n_values]
    elif mode == "mc":
        y = [crest_factor_mc(n, epsilon, samples, seed, workers) for n in n_values]
    else:
        raise ValueError(f"unknown crest mode {mode!r}")
    meta = {"epsilon": epsilon, "mode": mode}
    if mode == "mc":
        meta.update(samples=samples, seed=seed)
    return CurveReport(
        name=f"crest_eps{number_tag(epsilon)}",
        columns={"n": np.array(n_values), "crest_db": np.array(y)},
        units={"n": "elements", "crest_db": "dB"},
        metadata=meta,
    )


# -- clipping ------------------------------------------------------------


@dataclass(frozen=True)
class ClipResult:
    """Clipped currents plus the applied MMSE scale factor or Equal magnitude cap.

    When no clipping occurs the factor is 1.0 (MMSE) or ``inf`` (Equal).
    """

    clipped: PortCurrents
    scale_or_cap: float
    sample_distortion: float


def _equal_caps(x: np.ndarray, p_inc: float) -> np.ndarray:
    """Common magnitude cap per row so that ``sum min(|x|, cap)^2 == p_inc``.

    Water-filling over sorted squared magnitudes; every row must exceed p_inc.
    """
    m, n = x.shape
    s = np.sort(x.real**2 + x.imag**2, axis=1)
    below = np.cumsum(s, axis=1) - s
    t = (p_inc - below) / (n - np.arange(n))
    first = np.argmax(t <= s, axis=1)
    return np.sqrt(t[np.arange(m), first])


def clip_batch(x: np.ndarray, p_inc: float, policy: ClipPolicy):
    """Clip every row of ``x`` to sum power ``p_inc``.

    Returns ``(clipped, factors, distortions)``. Rows already within budget
    pass through unchanged with zero distortion.
    """
    if not p_inc > 0:
        raise ValueError("p_inc must be > 0")
    policy = ClipPolicy(policy)
    x = np.atleast_2d(np.asarray(x, dtype=complex))
    power = (x.real**2 + x.imag**2).sum(axis=1)
    over = power > p_inc
    out = x.copy()
    factors = np.full(x.shape[0], 1.0 if policy is ClipPolicy.MMSE else np.inf)
    if over.any():
        xo = x[over]
        if policy is ClipPolicy.MMSE:
            scale = np.sqrt(p_inc / power[over])
            out[over] = xo * scale[:, None]
            factors[over] = scale
        else:
            cap = _equal_caps(xo, p_inc)
            mag = np.abs(xo)
            ratio = np.divide(cap[:, None], mag, out=np.ones_like(mag), where=mag > cap[:, None])
            out[over] = xo * ratio
            factors[over] = cap
    d = x - out
    return out, factors, (d.real**2 + d.imag**2).sum(axis=1)


def clip_currents(desired, p_inc: float, policy: ClipPolicy = ClipPolicy.MMSE) -> ClipResult:
    """Clip one current vector to the available incident power.

    MMSE scales the vector onto the power sphere, the Euclidean projection
    and hence the minimizer of ``sum |i - i_hat|^2``. EQUAL caps every element
    magnitude at a common level with phases kept.
    """
    i = desired.i if isinstance(desired, PortCurrents) else np.asarray(desired, dtype=complex)
    out, f, d = clip_batch(i[None, :], p_inc, policy)
    return ClipResult(PortCurrents(out[0]), float(f[0]), float(d[0]))


@dataclass(frozen=True)
class DistortionStats:
    n: int
    p_inc: float
    samples: int
    mean_power: float
    mmse: float
    equal: float
    clip_fraction: float
    # Clipped draws where MMSE distortion exceeded Equal by more than 1e-12 of the draw power.
    optimality_violations: int
    max_optimality_gap: float

    def distortion(self, policy: ClipPolicy) -> float:
        return self.mmse if ClipPolicy(policy) is ClipPolicy.MMSE else self.equal


def clipped_draws(n: int, p_inc: float, chunk: int, rows: int, seed: int, avg_power: float = 1.0):
    """Sum powers of one chunk and the current vectors of its clipped draws."""
    p = substream(seed, STREAM_SUM_POWER, chunk).gamma(n, avg_power / n, size=rows)
    over = p > p_inc
    m = int(over.sum())
    g = substream(seed, STREAM_DIRECTION, chunk).standard_normal((m, 2 * n))
    u = g[:, :n] + 1j * g[:, n:]
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return p, u * np.sqrt(p[over])[:, None]


def distortion_stats(
    n: int, eta: float, samples: int, seed: int, workers: int = 1, avg_power: float = 1.0, p_inc: float | None = None
) -> DistortionStats:
    """Normalized clipping distortion ``E|i - i_hat|^2 / E|i|^2`` for both policies.

    Incident power defaults to ``avg_power / eta``. Both policies see the
    same draws.
    """
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    if p_inc is None:
        p_inc = avg_power / eta
    rows = max(1, min(GAMMA_CHUNK, CHUNK_ENTRIES // n))

    def work(k, b):
        p, x = clipped_draws(n, p_inc, k, b[1] - b[0], seed, avg_power)
        _, _, dm = clip_batch(x, p_inc, ClipPolicy.MMSE)
        _, _, de = clip_batch(x, p_inc, ClipPolicy.EQUAL)
        # Gap measured against the draw's own power so rounding stays at ~1e-16.
        gap = (dm - de) / p[p > p_inc]
        return p.sum(), dm.sum(), de.sum(), len(x), int((gap > 1e-12).sum()), float(gap.max(initial=-np.inf))

    parts = map_chunks(work, chunk_bounds(samples, rows), workers)
    total_p = math.fsum(r[0] for r in parts)
    return DistortionStats(
        n=n,
        p_inc=p_inc,
        samples=samples,
        mean_power=total_p / samples,
        mmse=math.fsum(r[1] for r in parts) / total_p,
        equal=math.fsum(r[2] for r in parts) / total_p,
        clip_fraction=sum(r[3] for r in parts) / samples,
        optimality_violations=sum(r[4] for r in parts),
        max_optimality_gap=max(r[5] for r in parts),
    )


def _db(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(x, dtype=float))


def distortion_curves(n_values, eta, samples=10**6, seed=0, workers=1, avg_power=1.0) -> dict:
    """Distortion vs. N for both clipping policies from shared draws."""
    pts = [distortion_stats(int(n), eta, samples, seed, workers, avg_power) for n in n_values]
    n_arr = np.array([p.n for p in pts])
    out = {}
    for policy in ClipPolicy:
        d = np.array([p.distortion(policy) for p in pts])
        out[policy] = CurveReport(
            name=f"distortion_eta{number_tag(eta)}_{policy.value}",
            columns={"n": n_arr, "distortion": d, "distortion_db": _db(d)},
            units={"n": "elements", "distortion": "1", "distortion_db": "dB"},
            metadata={
                "eta": eta,
                "policy": policy.value,
                "p_inc": pts[0].p_inc,
                "samples": samples,
                "seed": seed,
                "clip_fraction": [p.clip_fraction for p in pts],
                "optimality_violations": sum(p.optimality_violations for p in pts),
            },
        )
    return out


def distortion_curve(n_values, eta, policy=ClipPolicy.MMSE, samples=10**6, seed=0, workers=1) -> CurveReport:
    return distortion_curves(n_values, eta, samples, seed, workers)[ClipPolicy(policy)]


# -- mismatch / VSWR -----------------------------------------------------


def reflection_magnitude(p, p_inc: float, model: MismatchModel = MismatchModel.POWER_CONSERVING):
    """|Gamma| seen by the source when the array draws ``p`` out of ``p_inc``.

    POWER_CONSERVING: the unused incident power is reflected,
    ``|G|^2 = max(0, 1 - p/p_inc)``. AMPLITUDE_DIFFERENCE: the reflected wave
    is the amplitude shortfall, ``|G| = 1 - sqrt(min(p, p_inc)/p_inc)``.
    """
    p = np.asarray(p, dtype=float)
    model = MismatchModel(model)
    if model is MismatchModel.POWER_CONSERVING:
        return np.sqrt(np.maximum(0.0, 1.0 - p / p_inc))
    return np.abs(1.0 - np.sqrt(np.minimum(p, p_inc) / p_inc))


def vswr_from_gamma(gamma, cap: float = VSWR_CAP):
    g = np.asarray(gamma, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = (1.0 + g) / (1.0 - g)
    return np.where((g >= 1.0) | ~np.isfinite(v) | (v > cap), cap, v)


def vswr_samples(n, epsilon, mismatch_model, samples, seed, workers=1) -> np.ndarray:
    p_inc = incident_power(n, epsilon, 1.0)
    p = sum_power_samples(n, samples, seed, workers, method="gamma")
    return vswr_from_gamma(reflection_magnitude(p, p_inc, mismatch_model))


def vswr_distribution(
    n: int,
    epsilon: float,
    mismatch_model: MismatchModel = MismatchModel.POWER_CONSERVING,
    samples: int = 10**6,
    seed: int = 0,
    workers: int = 1,
    bins: int = 200,
    vswr_max: float = 10.0,
) -> CurveReport:
    """Empirical VSWR density on ``[1, vswr_max]`` for an n-element array.

    The density is normalized against all draws; the mass above ``vswr_max``
    is reported as ``overflow_fraction``.
    """
    mismatch_model = MismatchModel(mismatch_model)
    v = vswr_samples(n, epsilon, mismatch_model, samples, seed, workers)
    counts, edges = np.histogram(v, bins=bins, range=(1.0, vswr_max))
    pdf = counts / (samples * np.diff(edges))
    return CurveReport(
        name=f"vswr_n{n}_eps{number_tag(epsilon)}_{mismatch_model.value}",
        columns={"vswr_bin_center": 0.5 * (edges[:-1] + edges[1:]), "pdf": pdf},
        units={"vswr_bin_center": "1", "pdf": "1/unit VSWR"},
        metadata={
            "n": n,
            "epsilon": epsilon,
            "mismatch_model": mismatch_model.value,
            "samples": samples,
            "seed": seed,
            "p_inc": incident_power(n, epsilon, 1.0),
            "median": float(np.median(v)),
            "p95": float(np.quantile(v, 0.95)),
            "overflow_fraction": float(np.mean(v > vswr_max)),
        },
    )


def vswr_stats_curve(reports) -> CurveReport:
    """Median and 95th-percentile VSWR vs. N from per-N histograms."""
    reports = list(reports)
    first = reports[0].metadata
    return CurveReport(
        name=f"vswr_stats_eps{number_tag(first['epsilon'])}_{first['mismatch_model']}",
        columns={
            "n": np.array([r.metadata["n"] for r in reports]),
            "median_vswr": np.array([r.metadata["median"] for r in reports]),
            "p95_vswr": np.array([r.metadata["p95"] for r in reports]),
        },
        units={"n": "elements", "median_vswr": "1", "p95_vswr": "1"},
        metadata={k: first[k] for k in ("epsilon", "mismatch_model", "samples", "seed")},
    )
