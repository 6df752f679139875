"""Experiment files: ``[section]`` lines with unit-suffixed values.

A run is described by a small INI-style file whose values carry their
units (``width = 1cm``, ``window_half_width = 330ps``,
``detuning_rms = 2THz``), parsed explicitly at this boundary into the
package's canonical units: meters, Hz, and femtoseconds for times.
Unknown sections, unknown keys and missing units are errors; detector
settings default to ideal (efficiency 1, no jitter).

``format_config`` writes a canonical file back (base units, full float
precision), and parsing that output reproduces the configuration
exactly.
"""

from __future__ import annotations

import configparser
import re
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

from .coincidence import CoincidenceWindow
from .grating import GratingGeometry, PhotonLocalityModel, passband
from .interferometer import (
    DetectorBank,
    DetectorSpec,
    EventModel,
    InterferometerGeometry,
    PhaseSetting,
)
from .physics import SECONDS_TO_FS, SPEED_OF_LIGHT
from .source import SourceConfig, SourceStrategy


class ConfigError(ValueError):
    """Invalid, missing or unparsable configuration input."""


_LENGTH_TO_M = {
    "km": 1e3, "m": 1.0, "cm": 1e-2, "mm": 1e-3,
    "um": 1e-6, "µm": 1e-6, "nm": 1e-9, "pm": 1e-12,
}
_TIME_TO_FS = {
    "s": 1e15, "ms": 1e12, "us": 1e9, "µs": 1e9,
    "ns": 1e6, "ps": 1e3, "fs": 1.0,
}
_FREQUENCY_TO_HZ = {
    "Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9, "THz": 1e12,
}
_RATE_TO_HZ = dict(_FREQUENCY_TO_HZ, **{"/s": 1.0})

_UNIT_TABLES = {
    "length": _LENGTH_TO_M,
    "time": _TIME_TO_FS,
    "frequency": _FREQUENCY_TO_HZ,
    "rate": _RATE_TO_HZ,
}


def parse_quantity(text: str, kind: str) -> float:
    """Parse a unit-suffixed value into canonical units (m, fs, Hz).

    The unit suffix is required and case-sensitive; a bare number is an
    error by design so experiment files stay self-documenting.
    """
    units = _UNIT_TABLES[kind]
    t = text.strip()
    for suffix in sorted(units, key=len, reverse=True):
        if t.endswith(suffix):
            number = t[: -len(suffix)].strip()
            if not number:
                break
            try:
                value = float(number)
            except ValueError:
                raise ConfigError(f"{text!r} is not a valid {kind}") from None
            scale = units[suffix]
            return value if scale == 1.0 else value * scale
    raise ConfigError(
        f"{text!r}: expected a {kind} with a unit suffix "
        f"({', '.join(sorted(units))})"
    )


def parse_number(text: str) -> float:
    try:
        return float(text.strip())
    except ValueError:
        raise ConfigError(f"{text!r} is not a number") from None


def parse_count(text: str) -> int:
    t = text.strip()
    try:
        return int(t, 10)
    except ValueError:
        pass
    try:
        value = float(t)
    except ValueError:
        raise ConfigError(f"{text!r} is not a count") from None
    if value != int(value):
        raise ConfigError(f"{text!r} is not an integer count")
    return int(value)


def _parse_enum(text: str, enum_cls, what: str):
    normalized = text.strip().lower().replace("-", "_")
    try:
        return enum_cls(normalized)
    except ValueError:
        choices = ", ".join(e.value for e in enum_cls)
        raise ConfigError(
            f"{text!r} is not a valid {what} (choices: {choices})") from None


def parse_length_list(text: str) -> tuple[float, ...]:
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    return tuple(parse_quantity(p, "length") for p in parts)


@dataclass(frozen=True)
class RunConfig:
    """Everything one seeded run needs, cross-validated on construction."""

    source: SourceConfig
    grating: GratingGeometry
    locality: PhotonLocalityModel
    interferometer: InterferometerGeometry
    phase_setting: PhaseSetting
    event_model: EventModel
    detectors: DetectorBank
    window: CoincidenceWindow
    pairs: int
    sweep_displacements_m: tuple[float, ...] = ()
    hist_bin_fs: int | None = None
    hist_range_fs: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.pairs < 0:
            raise ConfigError("pairs must be >= 0")
        if self.hist_bin_fs is not None and self.hist_bin_fs <= 0:
            raise ConfigError("hist_bin must be positive")
        if self.hist_range_fs is not None and self.hist_range_fs <= 0:
            raise ConfigError("hist_range must be positive")

        half_delay_fs = (self.interferometer.arm_imbalance_m
                         / (2.0 * SPEED_OF_LIGHT) * SECONDS_TO_FS)
        if self.window.half_width_fs > half_delay_fs:
            warnings.warn(
                "coincidence window exceeds half the long-arm delay; "
                "heralded and delayed populations will overlap",
                stacklevel=2,
            )
        wavelength = self.interferometer.nominal_wavelength_m
        for d in (self.phase_setting.r2_displacement_m,
                  *self.sweep_displacements_m):
            if abs(d) >= wavelength:
                warnings.warn(
                    f"reflector displacement {d} m is at least one "
                    "wavelength; the phase wraps around",
                    stacklevel=2,
                )
        if self.source.strategy is SourceStrategy.TWO_PHOTON_DERIVED:
            mismatch = abs(self.grating.selected_wavelength_m
                           - self.source.pump_wavelength_m)
            half_band = 0.5 * passband(self.grating,
                                       self.grating.selected_wavelength_m)
            if mismatch > half_band:
                warnings.warn(
                    "unit-pair strategy expects the grating to select the "
                    "pump wavelength; the configured passband would reject "
                    "every pair",
                    stacklevel=2,
                )

    def sweep_settings(self) -> tuple[PhaseSetting, ...]:
        return tuple(PhaseSetting(d) for d in self.sweep_displacements_m)


_KNOWN_KEYS = {
    "source": {"pump_wavelength", "pair_rate", "detuning_rms",
               "laser_bandwidth", "strategy"},
    "grating": {"width", "sin_theta", "sin_theta0", "selected_wavelength",
                "locality"},
    "interferometer": {"herald_path", "short_path", "long_path",
                       "nominal_wavelength", "r2_displacement", "event_model"},
    "detectors": {"d1_efficiency", "d1_jitter_rms", "d2_efficiency",
                  "d2_jitter_rms", "d3_efficiency", "d3_jitter_rms"},
    "coincidence": {"window_half_width", "hist_bin", "hist_range"},
    "run": {"pairs"},
    "sweep": {"r2_displacements"},
}


class _Section:
    def __init__(self, parser: configparser.ConfigParser, name: str):
        self.name = name
        self.items = dict(parser.items(name)) if parser.has_section(name) else {}
        unknown = set(self.items) - _KNOWN_KEYS[name]
        if unknown:
            raise ConfigError(
                f"unknown key(s) in [{name}]: {', '.join(sorted(unknown))}")

    def require(self, key: str) -> str:
        if key not in self.items:
            raise ConfigError(f"missing required key {key!r} in [{self.name}]")
        return self.items[key]

    def get(self, key: str, default: str | None = None) -> str | None:
        return self.items.get(key, default)


def parse_config(text: str) -> RunConfig:
    """Parse an experiment file; raises ConfigError with a diagnostic."""
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    unknown = set(parser.sections()) - set(_KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")

    src = _Section(parser, "source")
    source = SourceConfig(
        pump_wavelength_m=parse_quantity(src.require("pump_wavelength"), "length"),
        pair_rate_hz=parse_quantity(src.require("pair_rate"), "rate"),
        detuning_rms_hz=parse_quantity(src.require("detuning_rms"), "frequency"),
        strategy=_parse_enum(src.require("strategy"), SourceStrategy,
                             "source strategy"),
        laser_bandwidth_hz=parse_quantity(src.require("laser_bandwidth"),
                                          "frequency"),
    )

    grt = _Section(parser, "grating")
    grating = GratingGeometry(
        width_m=parse_quantity(grt.require("width"), "length"),
        sin_theta=parse_number(grt.require("sin_theta")),
        sin_theta0=parse_number(grt.require("sin_theta0")),
        selected_wavelength_m=parse_quantity(grt.require("selected_wavelength"),
                                             "length"),
    )
    locality = _parse_enum(grt.require("locality"), PhotonLocalityModel,
                           "locality model")

    ifm = _Section(parser, "interferometer")
    interferometer = InterferometerGeometry(
        herald_path_m=parse_quantity(ifm.require("herald_path"), "length"),
        short_path_m=parse_quantity(ifm.require("short_path"), "length"),
        long_path_m=parse_quantity(ifm.require("long_path"), "length"),
        nominal_wavelength_m=parse_quantity(ifm.require("nominal_wavelength"),
                                            "length"),
    )
    displacement = ifm.get("r2_displacement")
    phase_setting = PhaseSetting(
        parse_quantity(displacement, "length") if displacement else 0.0)
    event_model = _parse_enum(ifm.require("event_model"), EventModel,
                              "event model")

    det = _Section(parser, "detectors")

    def detector(prefix: str) -> DetectorSpec:
        eff = det.get(f"{prefix}_efficiency")
        jit = det.get(f"{prefix}_jitter_rms")
        return DetectorSpec(
            efficiency=parse_number(eff) if eff is not None else 1.0,
            jitter_rms_fs=parse_quantity(jit, "time") if jit is not None else 0.0,
        )

    detectors = DetectorBank(detector("d1"), detector("d2"), detector("d3"))

    coin = _Section(parser, "coincidence")
    window = CoincidenceWindow(
        half_width_fs=int(round(parse_quantity(coin.require("window_half_width"),
                                               "time"))))
    hist_bin = coin.get("hist_bin")
    hist_range = coin.get("hist_range")

    run = _Section(parser, "run")
    pairs = parse_count(run.require("pairs"))

    swp = _Section(parser, "sweep")
    displacements_text = swp.get("r2_displacements")
    sweep_displacements = (parse_length_list(displacements_text)
                           if displacements_text else ())

    try:
        return RunConfig(
            source=source,
            grating=grating,
            locality=locality,
            interferometer=interferometer,
            phase_setting=phase_setting,
            event_model=event_model,
            detectors=detectors,
            window=window,
            pairs=pairs,
            sweep_displacements_m=sweep_displacements,
            hist_bin_fs=(int(round(parse_quantity(hist_bin, "time")))
                         if hist_bin else None),
            hist_range_fs=(int(round(parse_quantity(hist_range, "time")))
                           if hist_range else None),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def apply_overrides(
    config: RunConfig,
    *,
    event_model: EventModel | None = None,
    locality: PhotonLocalityModel | None = None,
    strategy: SourceStrategy | None = None,
    pairs: int | None = None,
    seed: int | None = None,
) -> RunConfig:
    """Fold command-line overrides into a parsed configuration."""
    if strategy is not None:
        config = replace(config, source=replace(config.source, strategy=strategy))
    if locality is not None:
        config = replace(config, locality=locality)
    if event_model is not None:
        config = replace(config, event_model=event_model)
    if pairs is not None:
        config = replace(config, pairs=pairs)
    if seed is not None:
        config = replace(config, seed=seed)
    return config


def format_config(config: RunConfig) -> str:
    """Canonical text form; parsing it reproduces the configuration exactly."""
    c = config
    lines = [
        "[source]",
        f"pump_wavelength = {c.source.pump_wavelength_m!r}m",
        f"pair_rate = {c.source.pair_rate_hz!r}Hz",
        f"detuning_rms = {c.source.detuning_rms_hz!r}Hz",
        f"laser_bandwidth = {c.source.laser_bandwidth_hz!r}Hz",
        f"strategy = {c.source.strategy.value}",
        "",
        "[grating]",
        f"width = {c.grating.width_m!r}m",
        f"sin_theta = {c.grating.sin_theta!r}",
        f"sin_theta0 = {c.grating.sin_theta0!r}",
        f"selected_wavelength = {c.grating.selected_wavelength_m!r}m",
        f"locality = {c.locality.value}",
        "",
        "[interferometer]",
        f"herald_path = {c.interferometer.herald_path_m!r}m",
        f"short_path = {c.interferometer.short_path_m!r}m",
        f"long_path = {c.interferometer.long_path_m!r}m",
        f"nominal_wavelength = {c.interferometer.nominal_wavelength_m!r}m",
        f"r2_displacement = {c.phase_setting.r2_displacement_m!r}m",
        f"event_model = {c.event_model.value}",
        "",
        "[detectors]",
    ]
    for name, spec in (("d1", c.detectors.d1), ("d2", c.detectors.d2),
                       ("d3", c.detectors.d3)):
        lines.append(f"{name}_efficiency = {spec.efficiency!r}")
        lines.append(f"{name}_jitter_rms = {spec.jitter_rms_fs!r}fs")
    lines += [
        "",
        "[coincidence]",
        f"window_half_width = {c.window.half_width_fs}fs",
    ]
    if c.hist_bin_fs is not None:
        lines.append(f"hist_bin = {c.hist_bin_fs}fs")
    if c.hist_range_fs is not None:
        lines.append(f"hist_range = {c.hist_range_fs}fs")
    lines += [
        "",
        "[run]",
        f"pairs = {c.pairs}",
    ]
    if c.sweep_displacements_m:
        lines += [
            "",
            "[sweep]",
            "r2_displacements = "
            + " ".join(f"{d!r}m" for d in c.sweep_displacements_m),
        ]
    return "\n".join(lines) + "\n"
