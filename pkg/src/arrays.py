"""
Antenna Array Module
Steering vectors, photonic and RF array gains, and beam-squint geometry
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from math import isqrt
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from src.errors import ArgumentError, DimensionError, GeometryError

logger = logging.getLogger(__name__)

# Below this |sin(pi*d*x/lambda)| the Dirichlet ratio is replaced by direct summation
_KERNEL_SINGULARITY = 1e-6

BEAM_PATTERN_COLUMNS = ["angle_rad", "gain_photonic", "gain_rf", "gain_bound"]


class ArrayKind(Enum):
    ULA = "ULA"
    USPA = "USPA"


@dataclass(frozen=True)
class ArrayGeometry:
    """Antenna array layout at the remote antenna unit"""
    kind: ArrayKind
    M: int
    d: float  # element spacing in meters

    def __post_init__(self):
        if self.M < 1:
            raise GeometryError(f"Antenna count must be at least 1, got {self.M}")
        if self.d <= 0:
            raise GeometryError(f"Element spacing must be positive, got {self.d}")
        if self.kind == ArrayKind.USPA and isqrt(self.M) ** 2 != self.M:
            raise GeometryError(f"USPA needs a perfect-square antenna count, got {self.M}")

    @property
    def side(self) -> int:
        """Elements per side of a square planar array"""
        return isqrt(self.M)


@dataclass(frozen=True)
class CarrierPlan:
    """Optical carriers driving the photonic beamformer"""
    wavelengths: List[float]
    xi: List[float] = field(default=None)
    frac_bw: List[float] = field(default=None)

    def __post_init__(self):
        n_r = len(self.wavelengths)
        if n_r < 1:
            raise ArgumentError("Carrier plan needs at least one wavelength")
        # Frozen dataclass: defaults are filled through object.__setattr__
        if self.xi is None:
            object.__setattr__(self, "xi", [1.0] * n_r)
        if self.frac_bw is None:
            object.__setattr__(self, "frac_bw", [0.0] * n_r)
        object.__setattr__(self, "wavelengths", [float(w) for w in self.wavelengths])
        object.__setattr__(self, "xi", [float(x) for x in self.xi])
        object.__setattr__(self, "frac_bw", [float(b) for b in self.frac_bw])

        if len(self.xi) != n_r or len(self.frac_bw) != n_r:
            raise DimensionError(
                f"Carrier plan lists differ in length: {n_r} wavelengths, "
                f"{len(self.xi)} xi, {len(self.frac_bw)} frac_bw"
            )
        for n, (lam, xi, b) in enumerate(zip(self.wavelengths, self.xi, self.frac_bw)):
            if lam <= 0:
                raise ArgumentError(f"Wavelength {n} must be positive, got {lam}")
            if not 0.0 <= b < 2.0:
                raise ArgumentError(f"Fractional bandwidth {n} must lie in [0, 2), got {b}")
            if not (1.0 - b / 2.0) - 1e-12 <= xi <= (1.0 + b / 2.0) + 1e-12:
                raise ArgumentError(
                    f"xi[{n}] = {xi} outside [1 - b/2, 1 + b/2] for b = {b}"
                )

    @property
    def n_r(self) -> int:
        return len(self.wavelengths)

    @property
    def reference_wavelength(self) -> float:
        return self.wavelengths[0]

    @classmethod
    def single(cls, wavelength: float, count: int = 1) -> "CarrierPlan":
        """Plan whose carriers all share one wavelength"""
        return cls(wavelengths=[wavelength] * count)

    @classmethod
    def from_frequencies(cls, frequencies: Sequence[float], bandwidths: Sequence[float],
                         band_edge: float = 1.0) -> "CarrierPlan":
        """Build a plan from carrier frequencies and bandwidths (Hz)

        band_edge in [-1, 1] selects the subcarrier: -1 lower edge, 0 center, 1 upper edge.
        """
        from scipy.constants import c

        if len(frequencies) != len(bandwidths):
            raise DimensionError("Frequencies and bandwidths differ in length")
        frac_bw = [bw / f for f, bw in zip(frequencies, bandwidths)]
        xi = [1.0 + band_edge * b / 2.0 for b in frac_bw]
        return cls(wavelengths=[c / f for f in frequencies], xi=xi, frac_bw=frac_bw)


@dataclass(frozen=True)
class BeamFocus:
    """Beam focus angle and actual user angle for one carrier"""
    focus_angle: float
    user_angle: float

    def __post_init__(self):
        for name, angle in (("focus_angle", self.focus_angle), ("user_angle", self.user_angle)):
            if not -np.pi <= angle <= np.pi:
                raise ArgumentError(f"{name} must lie in [-pi, pi], got {angle}")


def ula_steering(phi: float, wavelength: float, geom: ArrayGeometry) -> np.ndarray:
    """Unit-norm ULA response, phase referenced to element 0"""
    if geom.kind != ArrayKind.ULA:
        raise GeometryError(f"ula_steering needs a ULA, got {geom.kind.value}")
    m = np.arange(geom.M)
    return np.exp(1j * m * (2 * np.pi / wavelength) * geom.d * np.sin(phi)) / np.sqrt(geom.M)


def uspa_steering(azimuth: float, elevation: float, wavelength: float,
                  geom: ArrayGeometry) -> np.ndarray:
    """Unit-norm square planar array response, elements ordered row-major over (p, q)"""
    if geom.kind != ArrayKind.USPA:
        raise GeometryError(f"uspa_steering needs a USPA, got {geom.kind.value}")
    p, q = np.meshgrid(np.arange(geom.side), np.arange(geom.side), indexing="ij")
    phase = p * np.sin(azimuth) * np.sin(elevation) + q * np.cos(elevation)
    vec = np.exp(1j * (2 * np.pi / wavelength) * geom.d * phase) / np.sqrt(geom.M)
    return vec.reshape(-1)


def steering_vector(geom: ArrayGeometry, wavelength: float, azimuth: float,
                    elevation: float = 0.0) -> np.ndarray:
    """Dispatch to the steering vector of the geometry kind"""
    if geom.kind == ArrayKind.ULA:
        return ula_steering(azimuth, wavelength, geom)
    return uspa_steering(azimuth, elevation, wavelength, geom)


def squint_offset(focus: BeamFocus, xi_n: float) -> float:
    """Beam-squint offset x = xi_n sin(user angle) - sin(focus angle)"""
    return xi_n * np.sin(focus.user_angle) - np.sin(focus.focus_angle)


def _phasor_sum(M: int, phase_step: np.ndarray) -> np.ndarray:
    """Sum over m of exp(j m phase_step), evaluated directly"""
    m = np.arange(M)
    return np.exp(1j * np.multiply.outer(np.asarray(phase_step, dtype=float), m)).sum(axis=-1)


def photonic_array_gain(offsets: Sequence[float], geom: ArrayGeometry,
                        plan: CarrierPlan) -> float:
    """Array gain of the multi-carrier photonic beamformer"""
    offsets = np.asarray(offsets, dtype=float)
    if offsets.shape != (plan.n_r,):
        raise DimensionError(f"Expected {plan.n_r} offsets, got shape {offsets.shape}")
    wavelengths = np.asarray(plan.wavelengths)
    steps = 2 * np.pi / wavelengths * geom.d * offsets
    total = _phasor_sum(geom.M, steps).sum()
    return float(abs(total) / np.sqrt(geom.M * plan.n_r))


def rf_array_gain(offset: float, geom: ArrayGeometry, wavelength: float) -> float:
    """Array gain of a single-carrier RF beamformer"""
    u = np.pi * geom.d * offset / wavelength
    denominator = np.sin(u)
    if abs(denominator) < _KERNEL_SINGULARITY:
        return float(abs(_phasor_sum(geom.M, 2 * u)) / np.sqrt(geom.M))
    return float(abs(np.sin(geom.M * u) / denominator) / np.sqrt(geom.M))


def photonic_gain_lower_bound(offset: float, geom: ArrayGeometry, plan: CarrierPlan) -> float:
    """Small-offset bound on the photonic gain

    Assumes the photonic phase shifters have identical gain on every carrier, so the
    reference (first) wavelength stands for all of them. Returned as the magnitude of
    the complex bound expression.
    """
    lam = plan.reference_wavelength
    value = np.sqrt(plan.n_r / geom.M) * (1 + 1j * (geom.M - 1) * 2 * np.pi / lam * geom.d * offset)
    return float(abs(value))


def beam_pattern_sweep(angle_grid: Sequence[float], focus: float, geom: ArrayGeometry,
                       plan: CarrierPlan, rf_lambda: float,
                       include_bound: bool = False) -> pd.DataFrame:
    """Photonic and RF gains over an angle grid, every carrier steered to focus"""
    angles = np.asarray(angle_grid, dtype=float)
    if angles.size == 0:
        raise ArgumentError("Angle grid is empty")

    rows = []
    for phi in angles:
        x = squint_offset(BeamFocus(focus_angle=focus, user_angle=float(phi)), 1.0)
        row = {
            "angle_rad": float(phi),
            "gain_photonic": photonic_array_gain(np.full(plan.n_r, x), geom, plan),
            "gain_rf": rf_array_gain(x, geom, rf_lambda),
        }
        if include_bound:
            row["gain_bound"] = photonic_gain_lower_bound(x, geom, plan)
        rows.append(row)

    columns = BEAM_PATTERN_COLUMNS if include_bound else BEAM_PATTERN_COLUMNS[:3]
    logger.debug(f"Beam pattern swept over {angles.size} angles, focus {focus:.4f} rad")
    return pd.DataFrame(rows, columns=columns)


def squint_pattern(angle_grid: Sequence[float], focus: float, geom: ArrayGeometry,
                   plan: CarrierPlan) -> pd.DataFrame:
    """Photonic gain with each carrier's subcarrier ratio xi_n applied"""
    angles = np.asarray(angle_grid, dtype=float)
    if angles.size == 0:
        raise ArgumentError("Angle grid is empty")

    gains = []
    for phi in angles:
        offsets = [
            squint_offset(BeamFocus(focus_angle=focus, user_angle=float(phi)), xi)
            for xi in plan.xi
        ]
        gains.append(photonic_array_gain(offsets, geom, plan))
    return pd.DataFrame({"angle_rad": angles, "gain_photonic": gains})


def half_power_beamwidth(angles: Sequence[float], gains: Sequence[float],
                         peak_index: Optional[int] = None) -> float:
    """Width of the main lobe where the power gain stays above half its peak"""
    angles = np.asarray(angles, dtype=float)
    gains = np.asarray(gains, dtype=float)
    if angles.size != gains.size or angles.size == 0:
        raise DimensionError("Angles and gains must be non-empty and equally long")

    peak = int(np.argmax(gains)) if peak_index is None else peak_index
    level = gains[peak] / np.sqrt(2.0)

    def crossing(step: int) -> float:
        i = peak
        while 0 <= i + step < gains.size and gains[i + step] >= level:
            i += step
        j = i + step
        if not 0 <= j < gains.size:
            return float(angles[i])
        # Linear interpolation between the last point above and the first point below
        frac = (gains[i] - level) / (gains[i] - gains[j])
        return float(angles[i] + frac * (angles[j] - angles[i]))

    return abs(crossing(1) - crossing(-1))
