"""Unequal-path Michelson with herald: photons to detection events.

Geometry: the herald photon flies a fixed path to detector D3 whose
traversal time equals the interferometer's short arm, so a short-arm
photon clicks in step with its herald while a long-arm photon arrives
late by (arm imbalance + twice the corner-reflector displacement)/c.
The output beam splitter feeds two equidistant detectors D1/D2 whose
click probabilities follow the interference fringe (1 +- V cos phi)/2.

Two event models answer "what does a single photon do" differently:

- ``PILOT_WAVE``: the photon rides one arm (fair coin) while its wave
  occupies both; arrival time reveals the arm exactly (up to detector
  jitter), yet the exit port still follows the two-arm fringe - the
  wave in the photon-empty arm steers the port.
- ``COLLAPSE``: the port follows the same fringe, but the notion of a
  traversed arm is declared meaningless before detection; arrival times
  get an extra wavepacket-envelope jitter of rms one coherence time, so
  timing cannot resolve delays shorter than the coherence time.  This
  joint port/time law is a stand-in model parameter, not a derivation;
  alternative laws can be added behind :class:`EventModel`.

Phase accounting is analytic through the configured nominal wavelength
(choosing the pump wavelength instead of the photon wavelength
reproduces half-spacing fringes as a parameterization).  Fringe
visibility uses the ensemble spectrum, not per-photon detunings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .coincidence import DetectionEvent, Detector
from .physics import (
    SECONDS_TO_FS,
    SPEED_OF_LIGHT,
    SpectrumSpec,
    coherence_from_bandwidth,
    visibility,
)
from .source import Photon


class EventModel(Enum):
    PILOT_WAVE = "pilot_wave"
    COLLAPSE = "collapse"


class Arm(Enum):
    SHORT = "short"
    LONG = "long"


@dataclass(frozen=True)
class DetectorSpec:
    efficiency: float = 1.0
    jitter_rms_fs: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in [0, 1]")
        if self.jitter_rms_fs < 0:
            raise ValueError("jitter_rms_fs must be >= 0")


@dataclass(frozen=True)
class DetectorBank:
    d1: DetectorSpec = DetectorSpec()
    d2: DetectorSpec = DetectorSpec()
    d3: DetectorSpec = DetectorSpec()


@dataclass(frozen=True)
class InterferometerGeometry:
    """Arm and herald path lengths plus the wavelength used for phase accounting.

    The herald path must equal the short path in traversal time (that
    equality is what makes herald coincidence a which-path tag), and the
    long arm must exceed the short one.  D1 and D2 are equidistant from
    the output beam splitter by construction; those final legs are folded
    into the arm lengths.
    """

    herald_path_m: float
    short_path_m: float
    long_path_m: float
    nominal_wavelength_m: float

    def __post_init__(self):
        for name in ("herald_path_m", "short_path_m", "long_path_m",
                     "nominal_wavelength_m"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not self.long_path_m > self.short_path_m:
            raise ValueError("long_path_m must exceed short_path_m")
        if self.herald_path_m != self.short_path_m:
            raise ValueError("herald_path_m must equal short_path_m "
                             "(herald and short-arm traversal times match)")

    @property
    def arm_imbalance_m(self) -> float:
        return self.long_path_m - self.short_path_m


@dataclass(frozen=True)
class PhaseSetting:
    """Signed longitudinal offset of the long-arm corner reflector.

    Displacing the reflector by d adds 2d of round-trip path, so a
    quarter-wavelength displacement shifts the output phase by pi.
    Values beyond one wavelength are legal scan inputs; the run
    configuration flags them.
    """

    r2_displacement_m: float = 0.0


def round_trip_excess_m(geometry: InterferometerGeometry,
                        setting: PhaseSetting) -> float:
    """Long-arm path excess over the short arm, including the reflector offset."""
    return geometry.arm_imbalance_m + 2.0 * setting.r2_displacement_m


def phase(geometry: InterferometerGeometry, setting: PhaseSetting) -> float:
    """Output phase in [0, 2 pi) for the configured reflector displacement.

    Computed as 2 pi times the fractional part of (path excess)/wavelength,
    which keeps quarter-wave steps at a pi shift to machine precision even
    for path excesses of many thousands of wavelengths.
    """
    turns = math.fmod(round_trip_excess_m(geometry, setting)
                      / geometry.nominal_wavelength_m, 1.0)
    if turns < 0.0:
        turns += 1.0
    return 2.0 * math.pi * turns


def port_probabilities(phase_rad: float, fringe_visibility: float):
    """Click probabilities (p_D1, p_D2) = ((1 + V cos phi)/2, complement).

    The pair always sums to exactly 1; a maximum at D1 is a null at D2.
    """
    if not 0.0 <= fringe_visibility <= 1.0:
        raise ValueError("visibility must lie in [0, 1]")
    p1 = 0.5 * (1.0 + fringe_visibility * math.cos(phase_rad))
    return p1, 1.0 - p1


def flight_time_fs(path_m):
    """Traversal time of a path in femtoseconds (scalar or array)."""
    return path_m / SPEED_OF_LIGHT * SECONDS_TO_FS


def to_timestamp_fs(time_fs):
    """Round a real femtosecond time to the integer event grid."""
    return int(round(float(time_fs)))


@dataclass(frozen=True)
class SignalDetection:
    """Outcome of one signal photon: event (None if lost) plus ground truth.

    The traversed-arm label is simulation truth the experimenter never
    sees directly; it exists so timing-discrimination claims can be
    scored against it.  Under ``COLLAPSE`` it is the independently drawn
    timing arm of that model.
    """

    event: DetectionEvent | None
    arm: Arm
    port: Detector


def envelope_rms_fs(spectrum: SpectrumSpec) -> float:
    """Wavepacket-envelope timing blur used by the collapse model (one T_c)."""
    if spectrum.rms_bandwidth_hz == 0.0:
        raise ValueError(
            "collapse event model needs a finite bandwidth: monochromatic "
            "light has an unbounded coherence time, so its envelope timing "
            "blur is undefined"
        )
    return coherence_from_bandwidth(spectrum.rms_bandwidth_hz).coherence_time_s \
        * SECONDS_TO_FS


def propagate_signal(
    photon: Photon,
    emission_time_fs: float,
    geometry: InterferometerGeometry,
    setting: PhaseSetting,
    model: EventModel,
    detectors: DetectorBank,
    spectrum: SpectrumSpec,
    rng: np.random.Generator,
    event_id: int = 0,
) -> SignalDetection:
    """Carry one interferometer-bound photon to a detector click (or loss).

    Draw order is part of the contract.  ``PILOT_WAVE``: arm coin, port
    draw, detector jitter normal, efficiency draw.  ``COLLAPSE``: port
    draw, timing-arm coin, envelope normal, detector jitter normal,
    efficiency draw.  ``rng`` must be a stream dedicated to this pair.
    """
    tau_s = round_trip_excess_m(geometry, setting) / SPEED_OF_LIGHT
    v = visibility(tau_s, spectrum)
    p1, _ = port_probabilities(phase(geometry, setting), v)

    if model is EventModel.PILOT_WAVE:
        arm = Arm.SHORT if rng.random() < 0.5 else Arm.LONG
        port = Detector.D1 if rng.random() < p1 else Detector.D2
        envelope_fs = 0.0
    else:
        port = Detector.D1 if rng.random() < p1 else Detector.D2
        arm = Arm.SHORT if rng.random() < 0.5 else Arm.LONG
        envelope_fs = rng.standard_normal() * envelope_rms_fs(spectrum)

    if arm is Arm.SHORT:
        path_m = geometry.short_path_m
    else:
        path_m = geometry.long_path_m + 2.0 * setting.r2_displacement_m

    det = detectors.d1 if port is Detector.D1 else detectors.d2
    t = (emission_time_fs + photon.extra_delay_fs + flight_time_fs(path_m)
         + envelope_fs + rng.standard_normal() * det.jitter_rms_fs)
    detected = rng.random() < det.efficiency

    event = DetectionEvent(event_id, port, to_timestamp_fs(t)) if detected else None
    return SignalDetection(event, arm, port)


def propagate_herald(
    photon: Photon,
    emission_time_fs: float,
    geometry: InterferometerGeometry,
    detector: DetectorSpec,
    rng: np.random.Generator,
    event_id: int = 0,
) -> DetectionEvent | None:
    """Carry one herald photon to a D3 click (or loss).

    Draw order: detector jitter normal, then efficiency draw.
    """
    t = (emission_time_fs + photon.extra_delay_fs
         + flight_time_fs(geometry.herald_path_m)
         + rng.standard_normal() * detector.jitter_rms_fs)
    detected = rng.random() < detector.efficiency
    if not detected:
        return None
    return DetectionEvent(event_id, Detector.D3, to_timestamp_fs(t))
