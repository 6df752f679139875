"""Collinear degenerate down-conversion source and herald/signal routing.

Pairs are emitted as a Poisson process; the two photons of a pair share
one emission time and carry anti-correlated frequency detunings about
half the pump frequency, so their frequencies sum to the pump frequency
*bit-exactly* (energy conservation is enforced by construction, not
statistically).

Two source strategies mirror the two experimental pathways:

- ``ONE_PHOTON_PAIRS``: the broadband pairs straight out of the
  crystal; detunings are drawn at the phase-matching bandwidth.
- ``TWO_PHOTON_DERIVED``: pairs obtained by splitting a
  grating-selected unit pair at a beam splitter; detunings are drawn at
  the (much narrower) laser bandwidth, and the grating stage treats the
  pair as a single diffraction unit.

Routing sends each photon of a pair to the herald side or the
interferometer side with probability 1/2; only opposite-side pairs are
kept, discarding half on average.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .physics import SECONDS_TO_FS, wavelength_to_frequency
from .streams import DrawSet


class SourceStrategy(Enum):
    ONE_PHOTON_PAIRS = "one_photon_pairs"
    TWO_PHOTON_DERIVED = "two_photon_derived"


@dataclass(frozen=True)
class Photon:
    frequency_hz: float
    extra_delay_fs: float = 0.0

    def __post_init__(self):
        if not self.frequency_hz > 0:
            raise ValueError("frequency_hz must be > 0")
        if self.extra_delay_fs < 0:
            raise ValueError("extra_delay_fs must be >= 0")


@dataclass(frozen=True)
class PhotonPair:
    """One emission event: shared creation time, anti-correlated detunings."""

    pair_id: int
    emission_time_fs: float
    signal: Photon
    idler: Photon


@dataclass(frozen=True)
class SourceConfig:
    pump_wavelength_m: float
    pair_rate_hz: float
    detuning_rms_hz: float
    strategy: SourceStrategy
    laser_bandwidth_hz: float

    def __post_init__(self):
        for name in ("pump_wavelength_m", "pair_rate_hz",
                     "detuning_rms_hz", "laser_bandwidth_hz"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    @property
    def pump_frequency_hz(self) -> float:
        return wavelength_to_frequency(self.pump_wavelength_m)

    @property
    def emission_bandwidth_hz(self) -> float:
        """Detuning rms actually applied, per the configured strategy."""
        if self.strategy is SourceStrategy.TWO_PHOTON_DERIVED:
            return self.laser_bandwidth_hz
        return self.detuning_rms_hz


def pair_frequencies(pump_frequency_hz, detunings):
    """Signal/idler frequencies for given detunings (scalar or array).

    The idler mirrors the signal about half the pump so the two
    frequencies sum to the pump frequency exactly in floating point.
    """
    half = 0.5 * pump_frequency_hz
    signal = half + detunings
    idler = half - (signal - half)
    return signal, idler


def generate_pairs(config: SourceConfig, seed: int, n: int) -> list[PhotonPair]:
    """n pairs with Poisson arrivals, sorted by emission time.

    Fully determined by (config, seed, n); the first k pairs of a longer
    run equal a run of length k.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    times_fs, f_signal, f_idler = generate_pair_arrays(config, seed, n)
    return [
        PhotonPair(i, times_fs[i], Photon(f_signal[i]), Photon(f_idler[i]))
        for i in range(n)
    ]


def generate_pair_arrays(config: SourceConfig, seed: int, n: int):
    """Array form of :func:`generate_pairs` used by the experiment drivers.

    Returns (emission_times_fs, signal_frequency_hz, idler_frequency_hz),
    each of length n with element i belonging to pair i.
    """
    draws = DrawSet(seed)
    gaps_s = draws.exponentials("emission-gaps", n, 1.0 / config.pair_rate_hz)
    times_fs = np.cumsum(gaps_s) * SECONDS_TO_FS
    detunings = draws.normals("detuning", n) * config.emission_bandwidth_hz
    f_signal, f_idler = pair_frequencies(config.pump_frequency_hz, detunings)
    return times_fs, f_signal, f_idler


@dataclass(frozen=True)
class RoutedPair:
    """A kept pair: one photon heads to the herald timer, one to the interferometer."""

    pair_id: int
    emission_time_fs: float
    herald: Photon
    signal: Photon


def route_outcome(u_signal, u_idler):
    """Routing decision from two uniform draws (scalar or array).

    A draw below 1/2 sends that photon to the herald side.  Returns
    (kept, herald_is_signal): kept pairs took opposite sides;
    herald_is_signal tells which photon became the herald.
    """
    signal_heralds = np.asarray(u_signal) < 0.5
    idler_heralds = np.asarray(u_idler) < 0.5
    kept = signal_heralds != idler_heralds
    return kept, signal_heralds


def route_sides(pair: PhotonPair, rng: np.random.Generator) -> RoutedPair | None:
    """Send the pair's photons to the two sides; None means both chose one side.

    Draws one uniform for the signal photon, then one for the idler.
    ``rng`` must be a stream dedicated to this pair.
    """
    kept, herald_is_signal = route_outcome(rng.random(), rng.random())
    if not bool(kept):
        return None
    if bool(herald_is_signal):
        herald, signal = pair.signal, pair.idler
    else:
        herald, signal = pair.idler, pair.signal
    return RoutedPair(pair.pair_id, pair.emission_time_fs, herald, signal)
