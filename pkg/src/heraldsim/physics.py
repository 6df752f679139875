"""Units, constants and spectral-coherence relations shared by every module.

Canonical units throughout the package:

- lengths in meters, analytic times in seconds, frequencies in Hz
  (config files and the CLI accept suffixed values such as ``0.5um``,
  ``330ps`` or ``18.74THz`` and convert at the boundary);
- event timestamps in *integer femtoseconds*, which makes event files
  bit-exact and time ordering unambiguous.

The visibility envelope adopted here is the normalized Fourier transform
of a gaussian spectral density, with the rms width taken equal to the
nominal bandwidth.  Monochromatic light (zero bandwidth) has no finite
coherence spec; callers get ``visibility == 1`` instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

SPEED_OF_LIGHT = 299_792_458
"""Vacuum speed of light in m/s, the one physical constant in the package.

Kept as an exact integer so the pure design equations stay exact when
evaluated with exact numeric types (``fractions.Fraction``); it is below
2**53, so float arithmetic is unaffected.
"""

SECONDS_TO_FS = 1e15
FS_TO_SECONDS = 1e-15


class SpectralShape(Enum):
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class SpectrumSpec:
    """Ensemble spectrum of the light reaching the interferometer.

    ``rms_bandwidth_hz == 0`` represents ideal monochromatic light; it is a
    valid spectrum for visibility purposes but has no finite coherence spec.
    """

    center_frequency_hz: float
    rms_bandwidth_hz: float
    shape: SpectralShape = SpectralShape.GAUSSIAN

    def __post_init__(self):
        if not self.center_frequency_hz > 0:
            raise ValueError("center_frequency_hz must be > 0")
        if self.rms_bandwidth_hz < 0:
            raise ValueError("rms_bandwidth_hz must be >= 0")


@dataclass(frozen=True)
class CoherenceSpec:
    """Coherence time and the matching optical path length.

    The two fields are redundant by construction: the length is always
    exactly the speed of light times the time.
    """

    coherence_time_s: float
    coherence_length_m: float

    def __post_init__(self):
        if not (self.coherence_time_s > 0 and self.coherence_length_m > 0):
            raise ValueError("coherence time and length must be > 0")
        if self.coherence_length_m != SPEED_OF_LIGHT * self.coherence_time_s:
            raise ValueError("coherence_length_m must equal c * coherence_time_s")

    @classmethod
    def from_time(cls, coherence_time_s: float) -> "CoherenceSpec":
        return cls(coherence_time_s, SPEED_OF_LIGHT * coherence_time_s)

    @classmethod
    def from_length(cls, coherence_length_m: float) -> "CoherenceSpec":
        # Divide/multiply back so the invariant holds bit-exactly even when
        # length/c is not representable.
        t = coherence_length_m / SPEED_OF_LIGHT
        return cls(t, SPEED_OF_LIGHT * t)


def coherence_from_bandwidth(bandwidth_hz: float) -> CoherenceSpec:
    """Coherence time 1/bandwidth and length c/bandwidth for a given bandwidth.

    Raises ValueError for bandwidth <= 0: monochromatic light has no finite
    coherence spec (use :func:`visibility`, which returns 1 for it).
    """
    if not bandwidth_hz > 0:
        raise ValueError("bandwidth must be > 0 (monochromatic light has no "
                         "finite coherence spec)")
    return CoherenceSpec.from_time(1.0 / bandwidth_hz)


def visibility(delay_s: float, spectrum: SpectrumSpec) -> float:
    """Fringe visibility after an optical delay, in [0, 1].

    Gaussian spectral density of rms width s gives V(t) = exp(-2 pi^2 s^2 t^2)
    (Wiener-Khinchin).  Symmetric in the delay, non-increasing in |delay|,
    exactly 1 for zero bandwidth or zero delay.
    """
    s = spectrum.rms_bandwidth_hz
    if s == 0.0 or delay_s == 0.0:
        return 1.0
    x = s * delay_s
    return math.exp(-2.0 * math.pi * math.pi * x * x)


def bandwidth_for_visibility(target: float, delay_s: float) -> float:
    """Rms bandwidth (Hz) at which `visibility(delay_s, .)` equals `target`.

    Inverse of :func:`visibility` in its bandwidth argument; handy when
    designing a run around a wanted fringe contrast.
    """
    if not 0.0 < target < 1.0:
        raise ValueError("target visibility must be strictly between 0 and 1")
    if delay_s == 0.0:
        raise ValueError("any bandwidth gives visibility 1 at zero delay")
    return math.sqrt(-math.log(target)) / (math.sqrt(2.0) * math.pi * abs(delay_s))


def wavelength_to_frequency(wavelength_m: float) -> float:
    """Vacuum wavelength to frequency, freq = c / wavelength."""
    if not wavelength_m > 0:
        raise ValueError("wavelength must be > 0")
    return SPEED_OF_LIGHT / wavelength_m


def frequency_to_wavelength(frequency_hz: float) -> float:
    """Frequency to vacuum wavelength, wavelength = c / freq."""
    if not frequency_hz > 0:
        raise ValueError("frequency must be > 0")
    return SPEED_OF_LIGHT / frequency_hz
