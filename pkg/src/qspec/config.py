"""Line-oriented ``key = value`` run configuration.

Key names carry their unit (``_nm``, ``_mm``, ``_per_cm``, ``_mrad``); a
value may repeat the unit as a trailing token (``lambda_pump_nm = 532 nm``).
``#`` starts a comment.  Omitted physical keys fall back to the reference
setup.
"""
from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field

from .errors import ConfigError
from .optics import MismatchMode, OpticalConfig
from .scans import ANGLE_MODES

UNIT_SUFFIXES = {"_nm": "nm", "_mm": "mm", "_per_cm": "cm^-1", "_mrad": "mrad"}
# suffixes we recognize only to report a unit mismatch
FOREIGN_SUFFIXES = ("_m", "_um", "_cm", "_rad", "_deg", "_per_m", "_per_mm", "_s")
UNIT_TOKENS = {"nm": "_nm", "mm": "_mm", "cm^-1": "_per_cm", "1/cm": "_per_cm", "cm-1": "_per_cm",
               "mrad": "_mrad", "m": "_m", "um": "_um", "cm": "_cm", "rad": "_rad"}


def _positive(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _ge2(v):
    return v >= 2


def _ge1(v):
    return v >= 1


def _small_angle(v):
    return abs(v) < 100.0  # mrad


def _amplitude(v):
    return 0 < v < 1e-2


def _parse_float(text):
    return float(text)


def _parse_int(text):
    v = float(text) if re.search(r"[.eE]", text) else int(text)
    if isinstance(v, float):
        if not v.is_integer():
            raise ValueError("not an integer")
        v = int(v)
    return v


def _parse_choice(options):
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    return parse


def _parse_path(text):
    return text


# key -> (parse, range check, range description)
KEYS = {
    "lambda_pump_nm": (_parse_float, _positive, "> 0"),
    "n_pump_crystal": (_parse_float, _positive, "> 0"),
    "n_signal_crystal": (_parse_float, _positive, "> 0"),
    "n_idler_crystal": (_parse_float, _positive, "> 0"),
    "n_pump_medium": (_parse_float, _positive, "> 0"),
    "n_signal_medium": (_parse_float, _positive, "> 0"),
    "n_idler_medium": (_parse_float, _positive, "> 0"),
    "alpha_per_cm": (_parse_float, _nonneg, ">= 0"),
    "crystal_length_mm": (_parse_float, _positive, "> 0"),
    "chamber_length_mm": (_parse_float, _positive, "> 0"),
    "pair_amplitude": (_parse_float, _amplitude, "in (0, 1e-2)"),
    "mismatch_mode": (_parse_choice([m.value for m in MismatchMode]), None, ""),
    "lambda_ref_nm": (_parse_float, _positive, "> 0"),
    "shots": (_parse_int, _ge1, ">= 1"),
    "lambda_signal_nm": (_parse_float, _positive, "> 0"),
    "lambda_min_nm": (_parse_float, _positive, "> 0"),
    "lambda_max_nm": (_parse_float, _positive, "> 0"),
    "lambda_steps": (_parse_int, _ge2, ">= 2"),
    "theta_min_mrad": (_parse_float, _small_angle, "|theta| < 100 mrad"),
    "theta_max_mrad": (_parse_float, _small_angle, "|theta| < 100 mrad"),
    "theta_steps": (_parse_int, _ge2, ">= 2"),
    "n_min": (_parse_float, _positive, "> 0"),
    "n_max": (_parse_float, _positive, "> 0"),
    "n_steps": (_parse_int, _ge2, ">= 2"),
    "alpha_min_per_cm": (_parse_float, _nonneg, ">= 0"),
    "alpha_max_per_cm": (_parse_float, _nonneg, ">= 0"),
    "alpha_steps": (_parse_int, _ge2, ">= 2"),
    "angle_mode": (_parse_choice(ANGLE_MODES), None, ""),
    "theta1_mrad": (_parse_float, _small_angle, "|theta| < 100 mrad"),
    "theta2_mrad": (_parse_float, _small_angle, "|theta| < 100 mrad"),
    "extrema_min_mrad": (_parse_float, _small_angle, "|theta| < 100 mrad"),
    "extrema_max_mrad": (_parse_float, _small_angle, "|theta| < 100 mrad"),
    "scan_parameter": (_parse_choice(["n_i_m", "alpha"]), None, ""),
    "output": (_parse_path, None, ""),
    "seed": (_parse_int, _nonneg, ">= 0"),
    "trials": (_parse_int, lambda v: v >= 100, ">= 100"),
}

OPTICAL_KEYS = [f.name for f in dataclasses.fields(OpticalConfig)]

ORDERED_RANGES = [("lambda_min_nm", "lambda_max_nm"), ("theta_min_mrad", "theta_max_mrad"),
                  ("n_min", "n_max"), ("alpha_min_per_cm", "alpha_max_per_cm"),
                  ("extrema_min_mrad", "extrema_max_mrad")]


@dataclass(frozen=True)
class RunConfig:
    optical: OpticalConfig = field(default_factory=OpticalConfig)
    lambda_signal_nm: float = 609.16
    lambda_min_nm: float = 600.0
    lambda_max_nm: float = 620.0
    lambda_steps: int = 201
    theta_min_mrad: float = -4.0
    theta_max_mrad: float = 4.0
    theta_steps: int = 401
    n_min: float = 1.0 - 1e-4
    n_max: float = 1.0
    n_steps: int = 101
    alpha_min_per_cm: float = 0.05
    alpha_max_per_cm: float = 0.5
    alpha_steps: int = 46
    angle_mode: str = "explicit"
    theta1_mrad: float = 2.09
    theta2_mrad: float = 2.73
    extrema_min_mrad: float = 0.5
    extrema_max_mrad: float = 4.0
    scan_parameter: str = "n_i_m"
    output: str = "out"
    seed: int = 0
    trials: int = 1000

    def __post_init__(self):
        for lo, hi in ORDERED_RANGES:
            if not getattr(self, lo) < getattr(self, hi):
                raise ConfigError(f"{lo} must be < {hi}")
        if self.angle_mode not in ANGLE_MODES:
            raise ConfigError(f"unknown angle_mode {self.angle_mode!r}")
        if self.lambda_min_nm <= self.optical.lambda_pump_nm or self.lambda_signal_nm <= self.optical.lambda_pump_nm:
            raise ConfigError("signal wavelengths must exceed lambda_pump_nm")

    # SI helpers
    @property
    def lambda_signal(self) -> float:
        return self.lambda_signal_nm * 1e-9

    @property
    def anchors(self) -> tuple[float, float]:
        return self.theta1_mrad * 1e-3, self.theta2_mrad * 1e-3

    @property
    def extrema_window(self) -> tuple[float, float]:
        return self.extrema_min_mrad * 1e-3, self.extrema_max_mrad * 1e-3


def _split_unit(key, raw):
    parts = raw.split()
    if len(parts) == 2 and parts[1] in UNIT_TOKENS:
        return parts[0], UNIT_TOKENS[parts[1]]
    return raw, None


def _key_suffix(key):
    for suf in sorted(list(UNIT_SUFFIXES) + list(FOREIGN_SUFFIXES), key=len, reverse=True):
        if key.endswith(suf):
            return key[: -len(suf)], suf
    return key, None


def _stem_index():
    index = {}
    for k in KEYS:
        stem, suf = _key_suffix(k)
        if suf is not None:
            index[stem] = k
    return index


def parse_config(text: str) -> RunConfig:
    """Parse and validate a run configuration; errors carry the offending line number."""
    stems = _stem_index()
    seen = {}
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", line=lineno)
        key, raw = (s.strip() for s in body.split("=", 1))
        if key not in KEYS:
            stem, suf = _key_suffix(key)
            if suf is not None and stem in stems:
                raise ConfigError(f"unit-suffix mismatch: {key!r} (expected {stems[stem]!r})", line=lineno)
            raise ConfigError(f"unknown key {key!r}", line=lineno)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} (first set on line {seen[key]})", line=lineno)
        seen[key] = lineno
        raw, unit = _split_unit(key, raw)
        if unit is not None:
            _, suf = _key_suffix(key)
            if suf != unit:
                raise ConfigError(f"unit-suffix mismatch: value unit for {key!r}", line=lineno)
        parse, check, desc = KEYS[key]
        try:
            value = parse(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})", line=lineno) from None
        if isinstance(value, float) and not math.isfinite(value):
            raise ConfigError(f"{key!r} must be finite", line=lineno)
        if check is not None and not check(value):
            raise ConfigError(f"{key!r} out of range: {value!r} (must be {desc})", line=lineno)
        values[key] = value

    optical = {k: values.pop(k) for k in list(values) if k in OPTICAL_KEYS}
    last = max(seen.values(), default=None)
    try:
        return RunConfig(optical=OpticalConfig(**optical), **values)
    except ConfigError as exc:
        raise ConfigError(str(exc), line=last) from None


def serialize_config(rc: RunConfig) -> str:
    lines = ["# optical setup"]
    for k in OPTICAL_KEYS:
        v = getattr(rc.optical, k)
        lines.append(f"{k} = {_fmt(v)}")
    lines.append("# scans")
    for f in dataclasses.fields(rc):
        if f.name == "optical":
            continue
        lines.append(f"{f.name} = {_fmt(getattr(rc, f.name))}")
    return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, MismatchMode):
        return v.value
    if isinstance(v, float):
        return repr(v)
    return str(v)
