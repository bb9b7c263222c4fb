"""Per-mode output state of the two-crystal interferometer and its signal statistics.

Each monitored emission angle is one (signal, idler) mode pair in the
three-branch state

    c_vac |0_s 0_i 0_env> + c_loss |1_s 0_i 1_env> + c_pair |1_s 1_i 0_env>

where the loss branch is the first-crystal pair whose idler was absorbed and
the pair branch is the coherent sum of the transmitted first-crystal pair
and the second-crystal pair.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .optics import ModePoint, OpticalConfig, mode_point


@dataclass(frozen=True)
class BranchAmplitudes:
    c_vac: complex
    c_loss: complex
    c_pair: complex
    norm: float

    def vector(self) -> np.ndarray:
        """Normalized amplitude vector (vac, loss, pair); last axis is the branch."""
        v = np.stack(np.broadcast_arrays(self.c_vac, self.c_loss, self.c_pair), axis=-1)
        return v / np.asarray(self.norm)[..., None]


@dataclass(frozen=True)
class IntensityPoint:
    lambda_signal: float
    theta_signal: float
    intensity: float
    variance: float


def sinc_half(delta):
    """sinc(delta/2) with sinc(x) = sin(x)/x."""
    return np.sinc(np.asarray(delta) / (2.0 * np.pi))


def pair_amplitude(mp: ModePoint, cfg: OpticalConfig):
    """Single-crystal pair amplitude F, carrying the half-mismatch phase."""
    return cfg.pair_amplitude * sinc_half(mp.delta_crystal) * np.exp(0.5j * mp.delta_crystal)


def branch_amplitudes(mp: ModePoint, cfg: OpticalConfig) -> BranchAmplitudes:
    F = pair_amplitude(mp, cfg)
    tau = mp.tau
    c_loss = -1j * F * np.sqrt(1.0 - tau * tau) * np.exp(1j * mp.phi_s)
    c_pair = F * (tau * np.exp(1j * (mp.phi_i + mp.phi_s)) + np.exp(1j * mp.phi_p))
    c_vac = np.ones_like(c_pair)
    norm = np.sqrt(1.0 + np.abs(c_loss) ** 2 + np.abs(c_pair) ** 2)
    return BranchAmplitudes(c_vac=c_vac, c_loss=c_loss, c_pair=c_pair, norm=norm)


def signal_intensity_closed_form(mp: ModePoint, cfg: OpticalConfig):
    """Unnormalized mean signal photon number, 2 A^2 sinc^2(delta/2) (1 + tau cos(delta + delta^m))."""
    env = 2.0 * cfg.pair_amplitude ** 2 * sinc_half(mp.delta_crystal) ** 2
    return env * (1.0 + mp.tau * np.cos(mp.total_phase))


def signal_intensity_from_state(ba: BranchAmplitudes):
    """(intensity, variance) per shot of the signal occupancy on the normalized state."""
    p = (np.abs(ba.c_loss) ** 2 + np.abs(ba.c_pair) ** 2) / np.asarray(ba.norm) ** 2
    return p, p * (1.0 - p)


def normalized_intensity(mp: ModePoint, cfg: OpticalConfig):
    """Closed-form intensity with the exact state normalization applied."""
    s = signal_intensity_closed_form(mp, cfg)
    return s / (1.0 + s)


def intensity_point(cfg: OpticalConfig, lambda_signal: float, theta_signal: float) -> IntensityPoint:
    mp = mode_point(cfg, lambda_signal, theta_signal)
    p, var = signal_intensity_from_state(branch_amplitudes(mp, cfg))
    return IntensityPoint(float(lambda_signal), float(theta_signal), float(p), float(var))
