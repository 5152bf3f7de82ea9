"""Coupling matrices: construction, validation, generation and file I/O.

A :class:`CouplingMatrix` holds the N x N complex impedance matrix of an
antenna array. Self-impedances sit on the diagonal, mutual impedances off it.
Units are ohms throughout.

The ``ExpDecay`` generator is a synthetic stand-in for mutual coupling that
falls off with element spacing. It is *not* an electromagnetic model; use
:func:`load_coupling` to bring in matrices from a field solver or measurement.

Matrix file format::

    # optional comment lines
    N
    re,im re,im ... (N entries)
    ...              (N rows)
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .exceptions import CouplingValidationError, MatrixParseError

RECIPROCITY_RTOL = 1e-9
PASSIVITY_TOL = -1e-9
DEFAULT_Z_REF = 50.0


@dataclass(frozen=True)
class CouplingMatrix:
    """Complex array impedance matrix with a real reference impedance."""

    z: np.ndarray
    z_ref: float = DEFAULT_Z_REF

    def __post_init__(self):
        z = np.array(self.z, dtype=complex)
        if z.ndim != 2 or z.shape[0] != z.shape[1] or z.shape[0] < 1:
            raise ValueError(f"coupling matrix must be square with n >= 1, got shape {z.shape}")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "z_ref", float(self.z_ref))

    @property
    def n(self) -> int:
        return self.z.shape[0]

    def hermitian_part(self) -> np.ndarray:
        return 0.5 * (self.z + self.z.conj().T)

    def __eq__(self, other):
        if not isinstance(other, CouplingMatrix):
            return NotImplemented
        return self.z_ref == other.z_ref and np.array_equal(self.z, other.z)

    __hash__ = None


@dataclass(frozen=True)
class Violation:
    invariant: str
    index: tuple
    magnitude: float

    def __str__(self):
        return f"{self.invariant} at {self.index} (magnitude {self.magnitude:.3g})"


def validate_coupling(cm: CouplingMatrix) -> list[Violation]:
    """Check reciprocity, passivity and positive self-resistance.

    Returns a (possibly empty) list of violations; never raises. Each entry
    names the worst offender for that invariant.
    """
    z = cm.z
    report = []
    if not np.all(np.isfinite(z)):
        bad = np.argwhere(~np.isfinite(z))[0]
        report.append(Violation("finite", tuple(int(k) for k in bad), float("inf")))
        return report

    diff = np.abs(z - z.T)
    scale = np.maximum(np.abs(z), np.abs(z.T))
    floor = 1e-15 * max(float(np.abs(z).max()), 1.0)
    excess = np.where(diff > RECIPROCITY_RTOL * scale + floor, diff / np.maximum(scale, floor), 0.0)
    if excess.any():
        i, j = np.unravel_index(np.argmax(np.triu(excess)), excess.shape)
        report.append(Violation("reciprocity", (int(i), int(j)), float(excess[i, j])))

    eig = np.linalg.eigvalsh(cm.hermitian_part())
    k = int(np.argmin(eig))
    if eig[k] < PASSIVITY_TOL:
        report.append(Violation("passivity", (k,), float(eig[k])))

    r = z.diagonal().real
    k = int(np.argmin(r))
    if r[k] <= 0:
        report.append(Violation("positive_self_resistance", (k,), float(r[k])))
    return report


@dataclass(frozen=True)
class Ideal:
    """Uncoupled elements with identical self-impedance."""

    z0: complex = DEFAULT_Z_REF

    def __post_init__(self):
        if complex(self.z0).real <= 0:
            raise ValueError("Ideal coupling needs Re(z0) > 0")


@dataclass(frozen=True)
class ExpDecay:
    """Synthetic coupling: ``mag0 * exp(-kappa*d) * exp(-j*2*pi*d)`` for spacing ``d`` in wavelengths."""

    z0: complex = 50 + 10j
    mag0: float = 20.0
    kappa: float = 2.0
    spacing: float = 0.5

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("ExpDecay needs kappa >= 0")
        if self.spacing <= 0:
            raise ValueError("ExpDecay needs spacing > 0")


@dataclass(frozen=True)
class FromFile:
    path: Union[str, os.PathLike] = field(default="")


CouplingModelKind = Union[Ideal, ExpDecay, FromFile]


def gen_coupling(kind: CouplingModelKind, n: int, z_ref: float = DEFAULT_Z_REF) -> CouplingMatrix:
    """Build a coupling matrix for ``n`` elements from a model description.

    Raises CouplingValidationError if the result is not a valid passive,
    reciprocal matrix (possible for aggressive ExpDecay parameters).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if isinstance(kind, Ideal):
        z = np.eye(n, dtype=complex) * complex(kind.z0)
    elif isinstance(kind, ExpDecay):
        d = np.arange(1, n) * kind.spacing
        band = kind.mag0 * np.exp(-kind.kappa * d) * np.exp(-2j * np.pi * d)
        z = np.zeros((n, n), dtype=complex)
        rows, cols = np.triu_indices(n, k=1)
        z[rows, cols] = band[cols - rows - 1]
        z = z + z.T
        z[np.diag_indices(n)] = complex(kind.z0)
    elif isinstance(kind, FromFile):
        cm = load_coupling(kind.path, z_ref=z_ref)
        if cm.n != n:
            raise ValueError(f"{kind.path} holds a {cm.n}-element matrix, expected {n}")
        return cm
    else:
        raise TypeError(f"unknown coupling model {kind!r}")

    cm = CouplingMatrix(z, z_ref)
    report = validate_coupling(cm)
    if report:
        raise CouplingValidationError(report)
    return cm


def _parse_entry(token: str, line: int, column: int) -> complex:
    parts = token.split(",")
    if len(parts) != 2:
        raise MatrixParseError(f"expected 're,im', got {token!r}", line, column)
    try:
        return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        raise MatrixParseError(f"not a number: {token!r}", line, column) from None


def parse_coupling(text: str, z_ref: float = DEFAULT_Z_REF) -> CouplingMatrix:
    """Parse matrix-file text. Columns in errors are 1-based entry positions."""
    rows = []
    n = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if n is None:
            try:
                n = int(stripped)
            except ValueError:
                raise MatrixParseError(f"expected element count, got {stripped!r}", lineno) from None
            if n < 1:
                raise MatrixParseError("element count must be >= 1", lineno)
            continue
        tokens = stripped.split()
        if len(rows) >= n:
            raise MatrixParseError(f"more than {n} rows", lineno)
        if len(tokens) != n:
            raise MatrixParseError(f"expected {n} entries, found {len(tokens)}", lineno, min(len(tokens), n) + 1)
        rows.append([_parse_entry(tok, lineno, col) for col, tok in enumerate(tokens, start=1)])
    if n is None:
        raise MatrixParseError("empty matrix file", 1)
    if len(rows) != n:
        raise MatrixParseError(f"expected {n} rows, found {len(rows)}", lineno if rows else 1)
    return CouplingMatrix(np.array(rows, dtype=complex), z_ref)


def load_coupling(path, z_ref: float = DEFAULT_Z_REF) -> CouplingMatrix:
    with open(path, encoding="utf-8") as fh:
        cm = parse_coupling(fh.read(), z_ref)
    report = validate_coupling(cm)
    if report:
        raise CouplingValidationError(report)
    return cm


def format_coupling(cm: CouplingMatrix) -> str:
    lines = [str(cm.n)]
    for row in cm.z:
        lines.append(" ".join(f"{float(v.real)!r},{float(v.imag)!r}" for v in row))
    return "\n".join(lines) + "\n"


def export_coupling(cm: CouplingMatrix, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_coupling(cm))
