"""Full-experiment drivers and estimators.

Two orchestrated runs answer the two halves of the proposal:

- the *synchronization study* sends the same seeded pair stream through
  the grating under both timing models and reports how much pair
  coincidence survives, against the closed-form dispersed-model oracle;
- the *phase sweep* routes pairs into the heralded interferometer at a
  list of reflector displacements and tabulates heralded (prompt) and
  delayed coincidences per output port, from which fringe visibility
  and switching contrast are estimated.

Drivers draw every random quantity from purpose-tagged streams keyed by
(seed, purpose) with element i belonging to pair i (see
:mod:`heraldsim.streams`), so runs are bit-reproducible, truncation
stable, and identical under any chunked execution; reusing one pair
stream across the phases of a sweep is deliberate (common random
numbers: the heralded totals are then identical in every row).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .coincidence import (
    CoincidenceWindow,
    DetectionEvent,
    Detector,
    DtHistogram,
    dispersed_coincidence_fraction,
    dt_histogram,
    match,
)
from .config import RunConfig
from .grating import delay_spread_s, spectral_gate
from .interferometer import (
    EventModel,
    PhaseSetting,
    envelope_rms_fs,
    flight_time_fs,
    phase,
    port_probabilities,
    round_trip_excess_m,
)
from .physics import SECONDS_TO_FS, SPEED_OF_LIGHT, SpectrumSpec, visibility
from .source import SourceConfig, SourceStrategy, generate_pair_arrays, route_outcome
from .streams import DrawSet

_DETECTOR_RANK = {Detector.D1: 0, Detector.D2: 1, Detector.D3: 2}


def ensemble_spectrum(source: SourceConfig) -> SpectrumSpec:
    """Spectrum of the one-photon light downstream of the source.

    Centered on half the pump frequency with the strategy's emission
    bandwidth as rms width; this is what sets fringe visibility.
    """
    return SpectrumSpec(0.5 * source.pump_frequency_hz,
                        source.emission_bandwidth_hz)


def _assemble_events(parts):
    """Merge (detector, float times, keep mask) parts into id-stamped streams.

    Times are rounded to the integer femtosecond grid; events are ordered
    by (time, detector, pair index) and get sequential ids, so the output
    is a pure function of the inputs.  Returns (merged, by_detector).
    """
    times_all, rank_all, pid_all, det_all = [], [], [], []
    for detector, times_fs, mask in parts:
        t = np.rint(np.asarray(times_fs)[mask]).astype(np.int64)
        times_all.append(t)
        rank_all.append(np.full(t.shape, _DETECTOR_RANK[detector], dtype=np.int64))
        pid_all.append(np.nonzero(np.asarray(mask))[0].astype(np.int64))
        det_all.extend([detector] * len(t))
    t = np.concatenate(times_all) if times_all else np.empty(0, np.int64)
    rank = np.concatenate(rank_all) if rank_all else np.empty(0, np.int64)
    pid = np.concatenate(pid_all) if pid_all else np.empty(0, np.int64)
    detectors = np.array([d.value for d in det_all])

    order = np.lexsort((pid, rank, t))
    merged = []
    by_detector: dict[Detector, list[DetectionEvent]] = {d: [] for d in Detector}
    for event_id, k in enumerate(order):
        ev = DetectionEvent(event_id, Detector(detectors[k]), int(t[k]))
        merged.append(ev)
        by_detector[ev.detector].append(ev)
    return merged, by_detector


# ---------------------------------------------------------------------------
# Experiment A: does pair synchronization survive the grating?
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SyncScenario:
    """One filtering scenario of the synchronization study."""

    label: str
    n_signal_events: int
    n_idler_events: int
    coincidences: int
    fraction: float | None
    histogram: DtHistogram
    events: tuple[DetectionEvent, ...]

    def stats_dict(self) -> dict:
        return {
            "label": self.label,
            "n_signal_events": self.n_signal_events,
            "n_idler_events": self.n_idler_events,
            "coincidences": self.coincidences,
            "fraction": self.fraction,
            "histogram": self.histogram.to_dict(),
        }


@dataclass(frozen=True)
class SynchronizationReport:
    n_pairs: int
    n_pass_gate: int
    delay_spread_fs: float
    window: CoincidenceWindow
    dispersed_oracle_fraction: float
    scenarios: tuple[SyncScenario, ...]

    def scenario(self, label: str) -> SyncScenario:
        for s in self.scenarios:
            if s.label == label:
                return s
        raise KeyError(label)


SYNC_SCENARIOS = ("unfiltered", "localized", "dispersed")


def _sync_histogram_params(config: RunConfig, spread_fs: float):
    bin_fs = config.hist_bin_fs or max(1, int(round(spread_fs / 25)))
    range_fs = config.hist_range_fs or max(bin_fs, int(round(1.5 * spread_fs)))
    return bin_fs, range_fs


def run_experiment_A(config: RunConfig, seed: int) -> SynchronizationReport:
    """Pair synchronization before and after the grating, both timing models.

    The same seeded pair stream feeds every scenario: "unfiltered" skips
    the grating entirely, "localized" and "dispersed" apply the spectral
    gate plus the respective diffraction delays (for the unit-pair source
    strategy the two coincide by construction: a unit pair diffracts as
    one wave).  The signal photon lands on D1, the idler on D2, and the
    synchronization fraction is coincidences / min(event counts), which
    equals the per-pair survival fraction at unit detector efficiency.
    """
    n = config.pairs
    source = config.source
    g = config.grating
    times_fs, f_signal, f_idler = generate_pair_arrays(source, seed, n)
    draws = DrawSet(seed)

    as_unit = source.strategy is SourceStrategy.TWO_PHOTON_DERIVED
    if as_unit:
        gate = np.asarray(spectral_gate(f_signal + f_idler, g))
    else:
        gate = np.asarray(spectral_gate(f_signal, g)
                          & spectral_gate(f_idler, g))

    spread_fs = delay_spread_s(g) * SECONDS_TO_FS
    grating_u = draws.uniforms("grating", n, 2)
    jitter_signal = draws.normals("sync-jitter-signal", n) \
        * config.detectors.d1.jitter_rms_fs
    jitter_idler = draws.normals("sync-jitter-idler", n) \
        * config.detectors.d2.jitter_rms_fs
    detect_signal = draws.uniforms("sync-detect-signal", n) \
        < config.detectors.d1.efficiency
    detect_idler = draws.uniforms("sync-detect-idler", n) \
        < config.detectors.d2.efficiency

    window = CoincidenceWindow(config.window.half_width_fs, 0)
    bin_fs, range_fs = _sync_histogram_params(config, spread_fs)

    zeros = np.zeros(n)
    scenarios = []
    for label in SYNC_SCENARIOS:
        if label == "unfiltered":
            keep = np.ones(n, dtype=bool)
            delay_signal = delay_idler = zeros
        else:
            keep = gate
            if label == "localized" or as_unit:
                delay_signal = delay_idler = grating_u[:, 0] * spread_fs
            else:
                delay_signal = grating_u[:, 0] * spread_fs
                delay_idler = grating_u[:, 1] * spread_fs

        t_signal = times_fs + delay_signal + jitter_signal
        t_idler = times_fs + delay_idler + jitter_idler
        merged, by_det = _assemble_events([
            (Detector.D1, t_signal, keep & detect_signal),
            (Detector.D2, t_idler, keep & detect_idler),
        ])
        d1, d2 = by_det[Detector.D1], by_det[Detector.D2]
        result = match(d1, d2, window)
        denominator = min(len(d1), len(d2))
        fraction = result.count / denominator if denominator else None
        hist = dt_histogram(d1, d2, bin_fs, range_fs)
        scenarios.append(SyncScenario(
            label, len(d1), len(d2), result.count, fraction, hist,
            tuple(merged),
        ))

    oracle = dispersed_coincidence_fraction(spread_fs, window.half_width_fs)
    return SynchronizationReport(
        n_pairs=n,
        n_pass_gate=int(np.count_nonzero(gate)),
        delay_spread_fs=spread_fs,
        window=window,
        dispersed_oracle_fraction=oracle,
        scenarios=tuple(scenarios),
    )


# ---------------------------------------------------------------------------
# Experiment B: heralded fringes in the unequal-path interferometer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    phase_rad: float
    heralded_d1: int
    heralded_d2: int
    delayed_d1: int
    delayed_d2: int
    total_signal: int


COUNT_CHANNELS = ("heralded_d1", "heralded_d2", "delayed_d1", "delayed_d2")


@dataclass(frozen=True)
class SweepResult:
    """Per-phase heralded/delayed count table, rows in increasing phase."""

    rows: tuple[SweepRow, ...]

    def __post_init__(self):
        phases = [r.phase_rad for r in self.rows]
        if any(b <= a for a, b in zip(phases, phases[1:])):
            raise ValueError("sweep rows must have strictly increasing phases")
        for r in self.rows:
            if r.heralded_d1 + r.heralded_d2 > r.total_signal:
                raise ValueError("heralded counts exceed total signal events")
            if r.delayed_d1 + r.delayed_d2 > r.total_signal:
                raise ValueError("delayed counts exceed total signal events")

    @property
    def phases_rad(self) -> tuple[float, ...]:
        return tuple(r.phase_rad for r in self.rows)

    def counts(self, channel: str) -> tuple[int, ...]:
        if channel not in COUNT_CHANNELS:
            raise ValueError(f"channel must be one of {COUNT_CHANNELS}")
        return tuple(getattr(r, channel) for r in self.rows)


@dataclass(frozen=True)
class PhaseOutcome:
    """Everything one phase point produced, ground truth included."""

    setting: PhaseSetting
    phase_rad: float
    fringe_visibility: float
    delayed_offset_fs: int
    row: SweepRow
    events: tuple[DetectionEvent, ...]
    events_by_detector: dict
    signal_dt_fs: np.ndarray
    signal_is_short: np.ndarray


class _ExperimentB:
    """Phase-independent state of one seeded experiment-B run."""

    def __init__(self, config: RunConfig, seed: int):
        self.config = config
        n = config.pairs
        geometry = config.interferometer
        detectors = config.detectors
        self.spectrum = ensemble_spectrum(config.source)
        if config.event_model is EventModel.COLLAPSE:
            self.envelope_fs = (DrawSet(seed).normals("signal-envelope", n)
                                * envelope_rms_fs(self.spectrum))
        else:
            self.envelope_fs = np.zeros(n)

        times_fs, _, _ = generate_pair_arrays(config.source, seed, n)
        self.emission_fs = times_fs
        draws = DrawSet(seed)
        routing_u = draws.uniforms("routing", n, 2)
        self.kept, _ = route_outcome(routing_u[:, 0], routing_u[:, 1])

        self.u_arm = draws.uniforms("signal-arm", n)
        self.u_port = draws.uniforms("signal-port", n)
        self.n_signal_jitter = draws.normals("signal-jitter", n)
        self.u_signal_detect = draws.uniforms("signal-detect", n)

        herald_jitter = draws.normals("herald-jitter", n) \
            * detectors.d3.jitter_rms_fs
        self.t_herald = (times_fs + flight_time_fs(geometry.herald_path_m)
                         + herald_jitter)
        self.herald_detected = self.kept & (
            draws.uniforms("herald-detect", n) < detectors.d3.efficiency)
        self.t_herald_int = np.rint(self.t_herald).astype(np.int64)

    def phase_outcome(self, setting: PhaseSetting) -> PhaseOutcome:
        config = self.config
        geometry = config.interferometer
        detectors = config.detectors

        excess_m = round_trip_excess_m(geometry, setting)
        phi = phase(geometry, setting)
        v = visibility(excess_m / SPEED_OF_LIGHT, self.spectrum)
        p1, _ = port_probabilities(phi, v)

        short = self.u_arm < 0.5
        to_d1 = self.u_port < p1
        path_m = np.where(short, geometry.short_path_m,
                          geometry.long_path_m + 2.0 * setting.r2_displacement_m)
        jitter_rms = np.where(to_d1, detectors.d1.jitter_rms_fs,
                              detectors.d2.jitter_rms_fs)
        efficiency = np.where(to_d1, detectors.d1.efficiency,
                              detectors.d2.efficiency)

        t_signal = (self.emission_fs + flight_time_fs(path_m)
                    + self.envelope_fs + self.n_signal_jitter * jitter_rms)
        signal_detected = self.kept & (self.u_signal_detect < efficiency)

        merged, by_det = _assemble_events([
            (Detector.D1, t_signal, signal_detected & to_d1),
            (Detector.D2, t_signal, signal_detected & ~to_d1),
            (Detector.D3, self.t_herald, self.herald_detected),
        ])
        d1, d2, d3 = (by_det[Detector.D1], by_det[Detector.D2],
                      by_det[Detector.D3])

        w = config.window.half_width_fs
        delayed_offset_fs = int(round(excess_m / SPEED_OF_LIGHT * SECONDS_TO_FS))
        prompt = CoincidenceWindow(w, 0)
        delayed = CoincidenceWindow(w, delayed_offset_fs)
        row = SweepRow(
            phase_rad=phi,
            heralded_d1=match(d3, d1, prompt).count,
            heralded_d2=match(d3, d2, prompt).count,
            delayed_d1=match(d3, d1, delayed).count,
            delayed_d2=match(d3, d2, delayed).count,
            total_signal=len(d1) + len(d2),
        )

        both = signal_detected & self.herald_detected
        t_signal_int = np.rint(t_signal).astype(np.int64)
        dt = (t_signal_int - self.t_herald_int)[both]
        return PhaseOutcome(
            setting=setting,
            phase_rad=phi,
            fringe_visibility=v,
            delayed_offset_fs=delayed_offset_fs,
            row=row,
            events=tuple(merged),
            events_by_detector=by_det,
            signal_dt_fs=dt,
            signal_is_short=short[both],
        )


def _warn_if_window_overlaps(config: RunConfig) -> None:
    half_delay_fs = (config.interferometer.arm_imbalance_m
                     / (2.0 * SPEED_OF_LIGHT) * SECONDS_TO_FS)
    if config.window.half_width_fs > half_delay_fs:
        warnings.warn(
            "coincidence window is wider than half the long-arm delay; "
            "heralded and delayed populations will overlap",
            stacklevel=3,
        )


def run_experiment_B_detailed(
    config: RunConfig,
    settings: list[PhaseSetting] | tuple[PhaseSetting, ...],
    seed: int,
) -> list[PhaseOutcome]:
    """Per-phase outcomes, in the order the settings were given."""
    if not settings:
        raise ValueError("at least one phase setting is required")
    _warn_if_window_overlaps(config)
    for s in settings:
        if abs(s.r2_displacement_m) >= config.interferometer.nominal_wavelength_m:
            warnings.warn(
                f"reflector displacement {s.r2_displacement_m} m exceeds one "
                "wavelength; phase wraps around",
                stacklevel=2,
            )
    engine = _ExperimentB(config, seed)
    return [engine.phase_outcome(s) for s in settings]


def run_experiment_B(
    config: RunConfig,
    settings: list[PhaseSetting] | tuple[PhaseSetting, ...],
    seed: int,
) -> SweepResult:
    """Route, propagate and count at each phase; rows sorted by phase.

    Deterministic in (config, settings, seed).  Distinct settings that
    alias to the same phase are rejected (the row table is keyed by
    phase).
    """
    outcomes = run_experiment_B_detailed(config, settings, seed)
    rows = sorted((o.row for o in outcomes), key=lambda r: r.phase_rad)
    return SweepResult(tuple(rows))


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CosineFit:
    mean: float
    visibility: float
    phase_offset_rad: float


@dataclass(frozen=True)
class VisibilityEstimate:
    value: float
    sigma: float
    fit: CosineFit | None


def fringe_visibility(sweep: SweepResult, channel: str) -> VisibilityEstimate | None:
    """(max - min)/(max + min) over a count channel, or None if all zero.

    The uncertainty propagates Poisson errors of the two extreme counts.
    When five or more phases are present a least-squares cosine fit is
    attached as a cross-check.
    """
    counts = sweep.counts(channel)
    c_max, c_min = max(counts), min(counts)
    if c_max == 0:
        return None
    total = c_max + c_min
    value = (c_max - c_min) / total
    sigma = 2.0 * math.sqrt(c_max * c_min / total) / total if c_min else 0.0

    fit = None
    if len(counts) >= 5:
        phi = np.array(sweep.phases_rad)
        design = np.column_stack([np.ones_like(phi), np.cos(phi), np.sin(phi)])
        coef, *_ = np.linalg.lstsq(design, np.array(counts, dtype=float),
                                   rcond=None)
        mean, a, b = coef
        if mean > 0:
            fit = CosineFit(mean=float(mean),
                            visibility=float(math.hypot(a, b) / mean),
                            phase_offset_rad=float(math.atan2(b, a)))
    return VisibilityEstimate(value=value, sigma=sigma, fit=fit)


def _circular_distance(a: float, b: float) -> float:
    d = math.fmod(abs(a - b), 2.0 * math.pi)
    return min(d, 2.0 * math.pi - d)


def switching_contrast(sweep: SweepResult, phase_tol: float = 0.35) -> float | None:
    """Worst-phase majority-port fraction of the heralded counts.

    Uses the rows nearest phase 0 and phase pi (each must lie within
    ``phase_tol``); 1.0 means the heralded coincidences switch cleanly
    between all-D1 and all-D2.  None if either row has no heralded
    counts.
    """
    fractions = []
    for target in (0.0, math.pi):
        row = min(sweep.rows,
                  key=lambda r: _circular_distance(r.phase_rad, target))
        if _circular_distance(row.phase_rad, target) > phase_tol:
            raise ValueError(
                f"no sweep row within {phase_tol} rad of phase {target}")
        total = row.heralded_d1 + row.heralded_d2
        if total == 0:
            return None
        fractions.append(max(row.heralded_d1, row.heralded_d2) / total)
    return min(fractions)


def arm_classifier_error(dt_fs, is_short) -> float:
    """Best achievable error of a threshold rule "short iff dt <= theta".

    Scans every threshold between observed arrival offsets and returns
    the minimum misclassification fraction; 0 means timing identifies
    the arm perfectly, 0.5 means it carries nothing.
    """
    dt = np.asarray(dt_fs)
    short = np.asarray(is_short, dtype=bool)
    n = dt.size
    if n == 0:
        raise ValueError("no events to classify")
    order = np.argsort(dt, kind="stable")
    short_sorted = short[order]
    # errors(k) = misclassified when the first k sorted events are called short
    long_prefix = np.concatenate([[0], np.cumsum(~short_sorted)])
    short_suffix = short.sum() - np.concatenate([[0], np.cumsum(short_sorted)])
    errors = long_prefix + short_suffix
    return float(errors.min() / n)
