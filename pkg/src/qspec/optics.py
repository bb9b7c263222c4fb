"""Wavelengths, wavenumbers, propagation phases and phase mismatches.

Everything below the config boundary is SI (metres, radians).  The config
itself stores the lab units its field names advertise.

Geometry: a single conserved transverse wavenumber ``q`` fixed by the
external signal angle, ``q = k_s^m sin(theta_s)``; the idler carries ``-q``
(collinear plane-wave pump) and each longitudinal component is
``k_z = sqrt(k^2 - q^2)``.  On-axis lengths ``l`` and ``l0`` weight the
longitudinal components.
"""
from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, OutOfModel

TWO_PI = 2.0 * math.pi
MAX_THETA = 0.1  # rad; small-angle regime of the model


class MismatchMode(str, enum.Enum):
    MATCHED = "matched"
    TABLE = "table"


@dataclass(frozen=True)
class OpticalConfig:
    """Physical constants of one run.  Defaults reproduce the reference setup."""

    lambda_pump_nm: float = 532.0
    n_pump_crystal: float = 2.3232
    n_signal_crystal: float = 2.2930
    n_idler_crystal: float = 2.1052
    n_pump_medium: float = 1.0
    n_signal_medium: float = 1.0
    n_idler_medium: float = 1.0 - 9e-5
    alpha_per_cm: float = 0.15
    crystal_length_mm: float = 0.5
    chamber_length_mm: float = 25.0
    pair_amplitude: float = 1e-3
    mismatch_mode: MismatchMode = MismatchMode.MATCHED
    lambda_ref_nm: float = 609.16
    shots: int = 10**8

    def __post_init__(self):
        object.__setattr__(self, "mismatch_mode", MismatchMode(self.mismatch_mode))
        for name in ("lambda_pump_nm", "crystal_length_mm", "chamber_length_mm", "lambda_ref_nm"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)!r}")
        for name in ("n_pump_crystal", "n_signal_crystal", "n_idler_crystal",
                     "n_pump_medium", "n_signal_medium", "n_idler_medium"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)!r}")
        if not self.alpha_per_cm >= 0:
            raise ConfigError(f"alpha_per_cm must be >= 0, got {self.alpha_per_cm!r}")
        if not 0 < self.pair_amplitude < 1e-2:
            raise ConfigError(f"pair_amplitude must lie in (0, 1e-2), got {self.pair_amplitude!r}")
        if int(self.shots) != self.shots or self.shots < 1:
            raise ConfigError(f"shots must be an integer >= 1, got {self.shots!r}")
        object.__setattr__(self, "shots", int(self.shots))
        if self.mismatch_mode is MismatchMode.MATCHED and self.lambda_ref_nm <= self.lambda_pump_nm:
            raise ConfigError("lambda_ref_nm must exceed lambda_pump_nm")

    # SI views
    @property
    def lambda_pump(self) -> float:
        return self.lambda_pump_nm * 1e-9

    @property
    def lambda_ref(self) -> float:
        return self.lambda_ref_nm * 1e-9

    @property
    def crystal_length(self) -> float:
        return self.crystal_length_mm * 1e-3

    @property
    def chamber_length(self) -> float:
        return self.chamber_length_mm * 1e-3

    @property
    def chamber_length_cm(self) -> float:
        return self.chamber_length_mm * 0.1

    def with_params(self, n_idler_medium=None, alpha_per_cm=None, **kw) -> "OpticalConfig":
        """Copy with the two estimated parameters (and any other field) replaced."""
        if n_idler_medium is not None:
            kw["n_idler_medium"] = n_idler_medium
        if alpha_per_cm is not None:
            kw["alpha_per_cm"] = alpha_per_cm
        return dataclasses.replace(self, **kw)


@dataclass(frozen=True)
class ModePoint:
    """One observation point.  Fields broadcast when built from arrays."""

    lambda_signal: np.ndarray
    theta_signal: np.ndarray
    lambda_idler: np.ndarray
    q_transverse: np.ndarray
    delta_crystal: np.ndarray
    delta_medium: np.ndarray
    phi_s: np.ndarray
    phi_i: np.ndarray
    phi_p: np.ndarray
    tau: float
    # d(delta_medium)/d(n_idler_medium); phi_i moves by the opposite amount
    d_delta_medium_dn: np.ndarray

    @property
    def total_phase(self):
        """Interference phase ``delta + delta^m``."""
        return self.delta_crystal + self.delta_medium


def idler_wavelength(cfg: OpticalConfig, lambda_signal):
    """Idler wavelength (m) from energy conservation."""
    lam_s = np.asarray(lambda_signal, dtype=float)
    if np.any(lam_s <= cfg.lambda_pump):
        raise OutOfModel("signal wavelength must exceed the pump wavelength")
    out = 1.0 / (1.0 / cfg.lambda_pump - 1.0 / lam_s)
    return out if out.ndim else float(out)


def transmissivity(cfg: OpticalConfig) -> float:
    return math.exp(-cfg.alpha_per_cm * cfg.chamber_length_cm)


def _collinear_mismatch(n_p, n_s, n_i, lambda_pump, lambda_signal):
    # k_p - k_s - k_i with 1/lambda_i eliminated; avoids cancelling large terms
    return TWO_PI * ((n_p - n_i) / lambda_pump - (n_s - n_i) / lambda_signal)


def _kz_deficit(k, q2):
    """k - sqrt(k^2 - q^2) without cancellation."""
    return q2 / (k + np.sqrt(k * k - q2))


def crystal_offset(cfg: OpticalConfig) -> float:
    """Collinear crystal mismatch removed in matched mode (1/m)."""
    if cfg.mismatch_mode is MismatchMode.TABLE:
        return 0.0
    return float(_collinear_mismatch(cfg.n_pump_crystal, cfg.n_signal_crystal,
                                     cfg.n_idler_crystal, cfg.lambda_pump, cfg.lambda_ref))


def mode_point(cfg: OpticalConfig, lambda_signal, theta_signal) -> ModePoint:
    """Build the observation point(s) at signal wavelength (m) and external angle (rad)."""
    lam_s = np.asarray(lambda_signal, dtype=float)
    theta = np.asarray(theta_signal, dtype=float)
    if np.any(np.abs(theta) >= MAX_THETA):
        raise OutOfModel(f"|theta_signal| must be < {MAX_THETA} rad")
    lam_i = np.asarray(idler_wavelength(cfg, lam_s))
    lam_p = cfg.lambda_pump
    l, l0 = cfg.crystal_length, cfg.chamber_length

    kp = TWO_PI * cfg.n_pump_crystal / lam_p
    ks = TWO_PI * cfg.n_signal_crystal / lam_s
    ki = TWO_PI * cfg.n_idler_crystal / lam_i
    kpm = TWO_PI * cfg.n_pump_medium / lam_p
    ksm = TWO_PI * cfg.n_signal_medium / lam_s
    kim = TWO_PI * cfg.n_idler_medium / lam_i

    q = ksm * np.sin(theta)
    q2 = q * q
    if np.any(q2 >= ki * ki) or np.any(q2 >= kim * kim) or np.any(q2 >= ks * ks):
        raise OutOfModel("transverse wavenumber exceeds a longitudinal wavenumber (evanescent mode)")

    ds, di = _kz_deficit(ks, q2), _kz_deficit(ki, q2)
    dsm, dim = _kz_deficit(ksm, q2), _kz_deficit(kim, q2)

    offset = crystal_offset(cfg)
    mis_c = _collinear_mismatch(cfg.n_pump_crystal, cfg.n_signal_crystal,
                                cfg.n_idler_crystal, lam_p, lam_s) - offset
    mis_m = _collinear_mismatch(cfg.n_pump_medium, cfg.n_signal_medium,
                                cfg.n_idler_medium, lam_p, lam_s)
    delta = l * (mis_c + ds + di)
    delta_m = l0 * (mis_m + dsm + dim)

    ksz, kiz = ks - ds, ki - di
    kszm, kizm = ksm - dsm, kim - dim
    # matched mode: effective crystal pump wavenumber carries the offset
    phi_s = ksz * l + kszm * l0
    phi_i = kiz * l + kizm * l0
    phi_p = (kp - offset) * l + kpm * l0 + np.zeros_like(phi_s)

    dkizm_dn = (kim / kizm) * (TWO_PI / lam_i)

    def _out(x):
        x = np.asarray(x, dtype=float)
        return x if x.ndim else float(x)

    return ModePoint(
        lambda_signal=_out(lam_s),
        theta_signal=_out(theta),
        lambda_idler=_out(lam_i),
        q_transverse=_out(q),
        delta_crystal=_out(delta),
        delta_medium=_out(delta_m),
        phi_s=_out(phi_s),
        phi_i=_out(phi_i),
        phi_p=_out(phi_p),
        tau=transmissivity(cfg),
        d_delta_medium_dn=_out(-l0 * dkizm_dn),
    )


def total_phase(cfg: OpticalConfig, lambda_signal, theta_signal):
    return mode_point(cfg, lambda_signal, theta_signal).total_phase


def fringe_angle(cfg: OpticalConfig, lambda_signal: float, phase: float,
                 theta_max: float = 0.05) -> float:
    """Positive angle (rad) at which the interference phase equals ``phase``.

    The phase grows monotonically with theta**2, so the root is unique.
    ``phase = m*pi`` gives an exact fringe extremum (peak for even m).
    """
    def f(t):
        return total_phase(cfg, lambda_signal, t) - phase

    lo, hi = f(0.0), f(theta_max)
    if lo > 0 or hi < 0:
        raise OutOfModel(f"phase {phase!r} not reached for 0 <= theta <= {theta_max}")
    if lo == 0:
        return 0.0
    return brentq(f, 0.0, theta_max, xtol=1e-18, rtol=4 * np.finfo(float).eps, maxiter=200)


def fringe_period_n(cfg: OpticalConfig, lambda_signal: float) -> float:
    """Shift in n_idler_medium that advances the collinear medium phase by 2*pi."""
    return idler_wavelength(cfg, lambda_signal) / cfg.chamber_length
