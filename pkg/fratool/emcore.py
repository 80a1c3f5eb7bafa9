"""Complex, angular and Jones-calculus arithmetic shared by every module.

Conventions used throughout the toolkit:

* time dependence ``exp(+j*phase)``; phases are reported in degrees;
* lengths in millimetres, frequencies in GHz;
* Jones operators are expressed in the global xy basis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError

SPEED_OF_LIGHT_MM_GHZ = 299.792458

ComplexAmplitude = complex
FrequencyLike = Union['Frequency', float, int]


@dataclass(frozen=True)
class Frequency:
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value) or self.value <= 0:
            raise DomainError(f'frequency must be positive, got {self.value!r} GHz')

    def __float__(self) -> float:
        return float(self.value)


def ghz(f: FrequencyLike) -> float:
    value = float(f.value) if isinstance(f, Frequency) else float(f)
    if not math.isfinite(value) or value <= 0:
        raise DomainError(f'frequency must be positive, got {value!r} GHz')
    return value


def wavelength(f: FrequencyLike) -> float:
    """Free-space wavelength in mm (c/f)."""
    return SPEED_OF_LIGHT_MM_GHZ / ghz(f)


def wavenumber(f: FrequencyLike) -> float:
    """Free-space wavenumber in rad/mm."""
    return 2.0 * math.pi / wavelength(f)


def polar(magnitude, phase_deg):
    return magnitude * np.exp(1j * np.radians(phase_deg))


def phase_deg(z):
    return np.degrees(np.angle(z))


def db(power_ratio):
    ratio = np.asarray(power_ratio, dtype=float)
    if np.any(~(ratio > 0)):
        raise DomainError(f'power ratio must be positive, got {power_ratio!r}')
    result = 10.0 * np.log10(ratio)
    return float(result) if result.ndim == 0 else result


def db_amplitude(amp_ratio):
    ratio = np.asarray(amp_ratio, dtype=float)
    if np.any(~(ratio > 0)):
        raise DomainError(f'amplitude ratio must be positive, got {amp_ratio!r}')
    result = 20.0 * np.log10(ratio)
    return float(result) if result.ndim == 0 else result


def from_db_amplitude(value_db):
    return 10.0 ** (np.asarray(value_db, dtype=float) / 20.0)


def wrap_deg(phase):
    """Reduce a phase (or array of phases) to [0, 360)."""
    wrapped = np.mod(np.asarray(phase, dtype=float), 360.0)
    wrapped = np.where(wrapped >= 360.0, wrapped - 360.0, wrapped)
    return float(wrapped) if wrapped.ndim == 0 else wrapped


def phase_distance(a, b):
    """Signed wrapped difference a - b in [-180, 180)."""
    diff = np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float) + 180.0, 360.0) - 180.0
    return float(diff) if diff.ndim == 0 else diff


@dataclass(frozen=True)
class JonesVector:
    ex: ComplexAmplitude
    ey: ComplexAmplitude

    @classmethod
    def from_array(cls, values) -> 'JonesVector':
        values = np.asarray(values, dtype=complex)
        return cls(complex(values[0]), complex(values[1]))

    def as_array(self) -> np.ndarray:
        return np.array([self.ex, self.ey], dtype=complex)

    @property
    def power(self) -> float:
        return abs(self.ex) ** 2 + abs(self.ey) ** 2

    @property
    def norm(self) -> float:
        return math.sqrt(self.power)

    def normalized(self) -> 'JonesVector':
        norm = self.norm
        if norm == 0:
            raise DomainError('cannot normalise a zero Jones vector')
        return JonesVector(self.ex / norm, self.ey / norm)


X_HAT = JonesVector(1 + 0j, 0j)
Y_HAT = JonesVector(0j, 1 + 0j)


@dataclass(frozen=True)
class JonesMatrix:
    xx: ComplexAmplitude
    xy: ComplexAmplitude
    yx: ComplexAmplitude
    yy: ComplexAmplitude

    @classmethod
    def from_array(cls, m) -> 'JonesMatrix':
        m = np.asarray(m, dtype=complex)
        if m.shape != (2, 2):
            raise DomainError(f'Jones matrix must be 2x2, got shape {m.shape}')
        return cls(complex(m[0, 0]), complex(m[0, 1]), complex(m[1, 0]), complex(m[1, 1]))

    @classmethod
    def diag(cls, a: complex, b: complex) -> 'JonesMatrix':
        return cls(complex(a), 0j, 0j, complex(b))

    @classmethod
    def identity(cls) -> 'JonesMatrix':
        return cls.diag(1, 1)

    def as_array(self) -> np.ndarray:
        return np.array([[self.xx, self.xy], [self.yx, self.yy]], dtype=complex)

    def __matmul__(self, other):
        if isinstance(other, JonesMatrix):
            return JonesMatrix.from_array(self.as_array() @ other.as_array())
        if isinstance(other, JonesVector):
            return JonesVector.from_array(self.as_array() @ other.as_array())
        return NotImplemented

    @property
    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))

    @property
    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.as_array(), compute_uv=False)

    def allclose(self, other: 'JonesMatrix', atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.as_array(), other.as_array(), rtol=0.0, atol=atol))


def rotation_matrix(alpha_deg: float) -> np.ndarray:
    """Basis rotation R(alpha) = [[cos, sin], [-sin, cos]]."""
    alpha = math.radians(alpha_deg)
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([[c, s], [-s, c]])


def rotate_basis(m: JonesMatrix, alpha: float) -> JonesMatrix:
    """Return R(-alpha) . m . R(alpha).

    A diagonal operator written in axes rotated by ``alpha`` from x is
    expressed in the global xy basis; ``rotate_basis(diag(a, b), 45)`` has
    off-diagonal entries (a - b) / 2.
    """
    return JonesMatrix.from_array(rotation_matrix(-alpha) @ m.as_array() @ rotation_matrix(alpha))
