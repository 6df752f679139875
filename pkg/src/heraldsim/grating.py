"""Diffraction-grating monochromator: design equations and pair diffraction.

Two layers live here.  The *design equations* relate grating width and
angles to resolving power, passband and the coherence length of the
filtered light; they are plain arithmetic on the geometry and are exact
when called with exact numeric types (int, ``fractions.Fraction``).

The *event layer* applies the grating to one photon pair: a hard-edged
spectral gate (the grating selects, it never reshapes a surviving
photon's frequency) plus a diffraction delay drawn from the transverse
position on the illuminated width.  Two competing timing models are
exposed and neither is privileged:

- ``LOCALIZED``: the pair keeps its relative position on the wavefront,
  so both photons get one shared delay and stay synchronized;
- ``DISPERSED``: each photon's position is independent, so the delays
  are independent draws and the pair's time difference follows the
  triangular law on +-(edge path difference)/c.

Delays are uniform over [0, x/c] with x the edge path difference,
i.e. uniform illumination of the full width.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .physics import SECONDS_TO_FS, SPEED_OF_LIGHT, CoherenceSpec
from .source import PhotonPair


class PhotonLocalityModel(Enum):
    LOCALIZED = "localized"
    DISPERSED = "dispersed"


@dataclass(frozen=True)
class GratingGeometry:
    """Width, beam angles and the wavelength the monochromator passes.

    ``sin_theta`` and ``sin_theta0`` are the sines of the diffracted and
    incident beam angles from the grating normal.  Zero-dispersion
    (specular) geometry is rejected: the edge path difference across the
    illuminated width must be positive.
    """

    width_m: float
    sin_theta: float
    sin_theta0: float
    selected_wavelength_m: float

    def __post_init__(self):
        if not self.width_m > 0:
            raise ValueError("width_m must be > 0")
        if abs(self.sin_theta) > 1 or abs(self.sin_theta0) > 1:
            raise ValueError("sines of beam angles must lie in [-1, 1]")
        if not self.dispersion > 0:
            raise ValueError("sin_theta - sin_theta0 must be > 0 "
                             "(zero-order geometry has no dispersion)")
        if not self.selected_wavelength_m > 0:
            raise ValueError("selected_wavelength_m must be > 0")

    @property
    def dispersion(self):
        return self.sin_theta - self.sin_theta0

    @property
    def edge_path_difference_m(self):
        """Path difference between rays at the two beam edges."""
        return self.width_m * self.dispersion


def resolving_power(geometry: GratingGeometry, wavelength_m):
    """Spectral resolving power at a wavelength: edge path difference / wavelength."""
    if not wavelength_m > 0:
        raise ValueError("wavelength must be > 0")
    return geometry.edge_path_difference_m / wavelength_m


def filtered_coherence_length(geometry: GratingGeometry) -> CoherenceSpec:
    """Coherence of the filtered beam: length equal to the edge path difference.

    Equal up to the last floating-point digit (exact for exact numeric
    types): the stored pair is derived once from the shared edge path
    difference so the c * time identity holds bit-exactly.
    """
    return CoherenceSpec.from_length(geometry.edge_path_difference_m)


def passband(geometry: GratingGeometry, wavelength_m):
    """Wavelength width passed around ``wavelength_m``: wavelength^2 / edge path difference."""
    if not wavelength_m > 0:
        raise ValueError("wavelength must be > 0")
    return wavelength_m * wavelength_m / geometry.edge_path_difference_m


def state_separation_ratio(geometry: GratingGeometry, pump_wavelength_m):
    """How cleanly the grating splits unit pairs from single photons.

    A pair diffracting as one unit sits at the pump wavelength while
    single photons sit near twice it, a wavelength difference of one
    pump wavelength.  That difference divided by the passband at the
    pump is edge path difference / pump wavelength; values >> 1 mean a
    clean separation.
    """
    return resolving_power(geometry, pump_wavelength_m)


def delay_spread_s(geometry: GratingGeometry) -> float:
    """Transit-time spread across the beam: edge path difference / c."""
    return geometry.edge_path_difference_m / SPEED_OF_LIGHT


def spectral_gate(frequency_hz, geometry: GratingGeometry):
    """Hard-edged passband test (scalar or array): True where the photon passes.

    A photon passes when its vacuum wavelength lies within half a
    passband of the selected wavelength, boundary inclusive.
    """
    wavelength = SPEED_OF_LIGHT / np.asarray(frequency_hz, dtype=float)
    half = 0.5 * passband(geometry, geometry.selected_wavelength_m)
    return np.abs(wavelength - geometry.selected_wavelength_m) <= half


def diffract_pair(
    pair: PhotonPair,
    geometry: GratingGeometry,
    model: PhotonLocalityModel,
    rng: np.random.Generator,
    *,
    as_unit: bool = False,
) -> PhotonPair | None:
    """Pass one pair through the grating; None means it was rejected.

    The spectral gate is deterministic: both photons must fall inside the
    passband, or (``as_unit=True``) the pair's combined two-photon
    wavelength must.  Surviving pairs acquire diffraction delays: one
    shared uniform draw times the transit spread under ``LOCALIZED``
    (drawn for the signal first), two independent draws under
    ``DISPERSED``.  A unit pair diffracts as a single wave and always
    gets the shared delay regardless of ``model``.

    ``rng`` must be a stream dedicated to this pair (see
    :mod:`heraldsim.streams`) so acceptance of one pair can never shift
    another pair's draws.
    """
    if as_unit:
        combined_hz = pair.signal.frequency_hz + pair.idler.frequency_hz
        if not bool(spectral_gate(combined_hz, geometry)):
            return None
    else:
        ok_s = bool(spectral_gate(pair.signal.frequency_hz, geometry))
        ok_i = bool(spectral_gate(pair.idler.frequency_hz, geometry))
        if not (ok_s and ok_i):
            return None

    spread_fs = delay_spread_s(geometry) * SECONDS_TO_FS
    if as_unit or model is PhotonLocalityModel.LOCALIZED:
        shared = rng.random()
        delay_s_fs = shared * spread_fs
        delay_i_fs = delay_s_fs
    else:
        delay_s_fs = rng.random() * spread_fs
        delay_i_fs = rng.random() * spread_fs

    return replace(
        pair,
        signal=replace(pair.signal,
                       extra_delay_fs=pair.signal.extra_delay_fs + delay_s_fs),
        idler=replace(pair.idler,
                      extra_delay_fs=pair.idler.extra_delay_fs + delay_i_fs),
    )
