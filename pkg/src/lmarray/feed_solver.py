"""Port currents from feed configurations, and the inverse load synthesis.

Every architecture reduces to one linear system

    (Z + diag(loading)) @ i = v

where ``loading`` and ``v`` are assembled from the feed configuration:

* :class:`Conventional` -- one RF chain per element, source impedance ``Z_n``
  and voltage ``v_n``.
* :class:`Parasitic` -- a single active port driven through ``Z_s``; every
  other port is terminated in a load ``x_n`` and carries no source.
* :class:`LoadModulated` -- every port sees the Thevenin equivalent
  (voltage, output impedance) of its lossless two-port loading network.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .array_model import CouplingMatrix
from .exceptions import NumericalError, SynthesisError

COND_LIMIT = 1e12
SOLVE_RTOL = 1e-10
OPEN_CIRCUIT = 1e12
FEASIBILITY_TOL = 1e-6
NEAR_ZERO_CURRENT = 1e-12


def _cvec(values) -> np.ndarray:
    return np.atleast_1d(np.asarray(values, dtype=complex))


@dataclass(frozen=True)
class Conventional:
    source_impedances: np.ndarray
    voltages: np.ndarray

    def assemble(self, n):
        zs, v = _cvec(self.source_impedances), _cvec(self.voltages)
        if zs.size != n or v.size != n:
            raise ValueError(f"conventional feed arity {zs.size}/{v.size} does not match n={n}")
        return zs, v


@dataclass(frozen=True)
class Parasitic:
    source_voltage: complex
    source_impedance: complex
    loads: np.ndarray
    active_index: int = 0

    def assemble(self, n):
        loads = _cvec(self.loads)
        if loads.size != n - 1:
            raise ValueError(f"parasitic feed needs {n - 1} loads for n={n}, got {loads.size}")
        if not 0 <= self.active_index < n:
            raise ValueError(f"active_index {self.active_index} out of range for n={n}")
        loading = np.insert(loads, self.active_index, complex(self.source_impedance))
        v = np.zeros(n, dtype=complex)
        v[self.active_index] = self.source_voltage
        return loading, v


@dataclass(frozen=True)
class LoadModulated:
    thevenin_voltages: np.ndarray
    output_impedances: np.ndarray

    def assemble(self, n):
        zo, v = _cvec(self.output_impedances), _cvec(self.thevenin_voltages)
        if zo.size != n or v.size != n:
            raise ValueError(f"load-modulated feed arity {zo.size}/{v.size} does not match n={n}")
        return zo, v


FeedConfig = Conventional | Parasitic | LoadModulated


@dataclass(frozen=True)
class PortCurrents:
    """Complex port currents (amperes, RMS phasors)."""

    i: np.ndarray

    def __post_init__(self):
        i = _cvec(self.i).copy()
        if not np.all(np.isfinite(i)):
            raise ValueError("port currents must be finite")
        i.setflags(write=False)
        object.__setattr__(self, "i", i)

    @property
    def n(self):
        return self.i.size

    def power(self) -> float:
        """Sum power ``sum |i_k|^2`` (unit-resistance normalization)."""
        return float(np.vdot(self.i, self.i).real)

    def radiated_power(self, cm: CouplingMatrix) -> float:
        """Power delivered into the array, ``Re(i^H Z i)``."""
        return float(np.vdot(self.i, cm.z @ self.i).real)


class Feasibility(enum.Enum):
    PURELY_REACTIVE = "purely_reactive"
    PASSIVE_LOSSY = "passive_lossy"
    REQUIRES_ACTIVE = "requires_active"


class OutputImpedanceRule(enum.Enum):
    """How load-modulated synthesis fixes the two-port output impedances."""

    CONJUGATE = "conjugate"  # Z_out,n = conj(Z_nn)
    REFERENCE = "reference"  # Z_out,n = Z0


@dataclass(frozen=True)
class LoadSynthesis:
    """Result of inverting the current relation for a target current vector.

    ``loads`` are the parasitic-port loads (parasitic case) or the output
    impedances (load-modulated case); ``voltages`` is the full feeding vector.
    ``feasibility`` classifies each entry of ``loads`` by its real part.
    ``active_feed`` is the active-port voltage; None for load modulation,
    where every port has its own Thevenin voltage.
    """

    feed: FeedConfig
    loads: np.ndarray
    voltages: np.ndarray
    active_feed: complex | None
    residual: float
    feasibility: tuple = field(default=())
    ports: tuple = field(default=())


def effective_matrix(cm: CouplingMatrix, feed: FeedConfig):
    loading, v = feed.assemble(cm.n)
    return cm.z + np.diag(loading), v


def solve_currents(cm: CouplingMatrix, feed: FeedConfig) -> PortCurrents:
    """Solve ``(Z + diag(loading)) i = v`` for the port currents.

    Uses an LU solve with partial pivoting plus one step of iterative
    refinement. Raises NumericalError when the effective matrix has a
    2-norm condition number above ``COND_LIMIT`` or the relative residual
    exceeds ``SOLVE_RTOL``.
    """
    a, v = effective_matrix(cm, feed)
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise NumericalError(
            f"effective coupling matrix is numerically singular (condition number {cond:.3g} > {COND_LIMIT:.0e})"
        )
    i = np.linalg.solve(a, v)
    vnorm = np.linalg.norm(v)
    if vnorm == 0:
        return PortCurrents(np.zeros(cm.n, dtype=complex))
    r = v - a @ i
    i = i + np.linalg.solve(a, r)
    residual = np.linalg.norm(a @ i - v) / vnorm
    if residual > SOLVE_RTOL:
        raise NumericalError(f"solve residual {residual:.3g} exceeds {SOLVE_RTOL:.0e} (condition number {cond:.3g})")
    return PortCurrents(i)


def classify_feasibility(loads, tol_r: float = FEASIBILITY_TOL) -> tuple:
    """Classify loads by resistance: reactive, passive lossy, or active (negative).

    Accepts raw load values or a :class:`LoadSynthesis`; the latter must have
    re-solved to within 1e-6 of its target.
    """
    if isinstance(loads, LoadSynthesis):
        if not loads.residual < 1e-6:
            raise ValueError(f"synthesis residual {loads.residual:.3g} too large to classify")
        loads = loads.loads
    out = []
    for x in _cvec(loads):
        if abs(x.real) <= tol_r:
            out.append(Feasibility.PURELY_REACTIVE)
        elif x.real > 0:
            out.append(Feasibility.PASSIVE_LOSSY)
        else:
            out.append(Feasibility.REQUIRES_ACTIVE)
    return tuple(out)


def _relative_error(a, b) -> float:
    scale = np.linalg.norm(b)
    if scale == 0:
        return float(np.linalg.norm(a))
    return float(np.linalg.norm(a - b) / scale)


def synthesize_parasitic_loads(
    cm: CouplingMatrix,
    desired,
    active_index: int = 0,
    source_impedance: complex | None = None,
    tol_r: float = FEASIBILITY_TOL,
) -> LoadSynthesis:
    """Loads and active-port voltage that make a parasitic array carry ``desired``.

    For each parasitic port ``n`` the load is ``-(Z @ i)_n / i_n``; the active
    port needs ``v = (Z @ i)_a + Z_s * i_a``. ``source_impedance`` defaults to
    the reference impedance. A parasitic port whose target current is
    (near) zero cannot be synthesized: that element has to be open-circuited.
    """
    i = desired.i if isinstance(desired, PortCurrents) else _cvec(desired)
    n = cm.n
    if i.size != n:
        raise ValueError(f"desired currents have {i.size} entries, array has {n}")
    if not 0 <= active_index < n:
        raise ValueError(f"active_index {active_index} out of range")
    zs = complex(cm.z_ref if source_impedance is None else source_impedance)
    thresh = NEAR_ZERO_CURRENT * np.abs(i).max() if i.size else 0.0
    ports = [k for k in range(n) if k != active_index]
    for k in ports:
        if abs(i[k]) <= thresh or i[k] == 0:
            raise SynthesisError(f"desired current at port {k} is zero; open-circuit that element instead", port=k)

    zi = cm.z @ i
    loads = np.array([-zi[k] / i[k] for k in ports], dtype=complex)
    v_active = zi[active_index] + zs * i[active_index]
    feed = Parasitic(source_voltage=v_active, source_impedance=zs, loads=loads, active_index=active_index)
    residual = _relative_error(solve_currents(cm, feed).i, i)
    v = np.zeros(n, dtype=complex)
    v[active_index] = v_active
    return LoadSynthesis(
        feed=feed,
        loads=loads,
        voltages=v,
        active_feed=complex(v_active),
        residual=residual,
        feasibility=classify_feasibility(loads, tol_r),
        ports=tuple(ports),
    )


def output_impedances(cm: CouplingMatrix, rule: OutputImpedanceRule) -> np.ndarray:
    rule = OutputImpedanceRule(rule)
    if rule is OutputImpedanceRule.CONJUGATE:
        return cm.z.diagonal().conj().copy()
    return np.full(cm.n, cm.z_ref, dtype=complex)


def synthesize_load_modulation(
    cm: CouplingMatrix,
    desired,
    convention: OutputImpedanceRule = OutputImpedanceRule.CONJUGATE,
    tol_r: float = FEASIBILITY_TOL,
) -> LoadSynthesis:
    """Thevenin voltages for a load-modulated array under a fixed output-impedance rule.

    With the output impedances pinned by ``convention``, the voltages follow
    directly: ``v = (Z + diag(Z_out)) @ desired``.
    """
    i = desired.i if isinstance(desired, PortCurrents) else _cvec(desired)
    if i.size != cm.n:
        raise ValueError(f"desired currents have {i.size} entries, array has {cm.n}")
    if not np.all(np.isfinite(i)):
        raise ValueError("desired currents must be finite")
    zo = output_impedances(cm, convention)
    v = (cm.z + np.diag(zo)) @ i
    feed = LoadModulated(thevenin_voltages=v, output_impedances=zo)
    if np.any(v != 0):
        residual = _relative_error(solve_currents(cm, feed).i, i)
    else:
        if np.linalg.cond(cm.z + np.diag(zo)) > COND_LIMIT:
            raise NumericalError("effective coupling matrix is numerically singular under this convention")
        residual = 0.0
    return LoadSynthesis(
        feed=feed,
        loads=zo,
        voltages=v,
        active_feed=None,
        residual=residual,
        feasibility=classify_feasibility(zo, tol_r),
        ports=tuple(range(cm.n)),
    )
