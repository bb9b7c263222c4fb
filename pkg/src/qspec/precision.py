"""Joint-estimation precision of (n_i^m, alpha) from signal intensities.

Parameters are ordered ``PARAMS = ("n_i_m", "alpha")`` with alpha in cm^-1,
so covariance entries carry units 1, cm^-1 and cm^-2.

Classical side: each monitored angle contributes a two-outcome occupancy
measurement with mean ``p_k`` and variance ``p_k (1 - p_k)``.  The
error-propagation covariance is ``C = M^-1 G diag(var) G^T`` with
``G = J^-1``, and its inverse is the occupancy Fisher information
``J^T diag(1/var) J``.  Regrets are built from the information form so they
stay defined when ``J`` loses rank.

Quantum side: the QFI of the product state of the monitored mode pairs,
i.e. the sum of the per-mode pure-state QFIs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SingularJacobian
from .optics import OpticalConfig, mode_point
from .state import normalized_intensity, pair_amplitude, signal_intensity_closed_form

PARAMS = ("n_i_m", "alpha")
COND_LIMIT = 1e12


def _modes(cfg, lambda_signal, thetas):
    return mode_point(cfg, lambda_signal, np.atleast_1d(np.asarray(thetas, dtype=float)))


def intensity_and_variance(cfg: OpticalConfig, lambda_signal: float, thetas):
    mp = _modes(cfg, lambda_signal, thetas)
    p = normalized_intensity(mp, cfg)
    return p, p * (1.0 - p)


def intensity_jacobian(cfg: OpticalConfig, lambda_signal: float, thetas) -> np.ndarray:
    """``J[k, mu] = d p_k / d mu`` of the normalized intensity, shape (K, 2)."""
    mp = _modes(cfg, lambda_signal, thetas)
    s = signal_intensity_closed_form(mp, cfg)
    env = 2.0 * np.abs(pair_amplitude(mp, cfg)) ** 2
    phase = mp.total_phase
    tau = mp.tau
    ds_dn = -env * tau * np.sin(phase) * mp.d_delta_medium_dn
    ds_da = env * np.cos(phase) * (-cfg.chamber_length_cm * tau)
    chain = 1.0 / (1.0 + s) ** 2
    return np.stack([ds_dn * chain, ds_da * chain], axis=-1)


def fisher_information(cfg: OpticalConfig, lambda_signal: float, thetas, shots=1) -> np.ndarray:
    """Classical Fisher information of the occupancy measurements (inverse of C)."""
    J = intensity_jacobian(cfg, lambda_signal, thetas)
    _, var = intensity_and_variance(cfg, lambda_signal, thetas)
    return shots * (J.T / var) @ J


# --- quantum Fisher information -------------------------------------------------

def amplitude_derivatives(cfg: OpticalConfig, lambda_signal: float, thetas):
    """Unnormalized amplitudes and their parameter derivatives.

    Returns ``(c, dc_dn, dc_dalpha)``, each of shape (K, 3) over the branches
    (vac, loss, pair).  ``dc_dalpha`` of the loss branch is infinite at
    ``tau = 1``.
    """
    mp = _modes(cfg, lambda_signal, thetas)
    F = pair_amplitude(mp, cfg)
    tau = mp.tau
    l0 = cfg.chamber_length_cm
    root = np.sqrt(1.0 - tau * tau)
    e_s = np.exp(1j * mp.phi_s)
    e_is = np.exp(1j * (mp.phi_i + mp.phi_s))
    c_loss = -1j * F * root * e_s
    c_pair = F * (tau * e_is + np.exp(1j * mp.phi_p))
    zero = np.zeros_like(c_pair)
    with np.errstate(divide="ignore", invalid="ignore"):
        dloss_da = -1j * F * e_s * (l0 * tau * tau / root)
    dpair_dn = F * tau * e_is * (-1j * mp.d_delta_medium_dn)
    dpair_da = -l0 * tau * F * e_is
    c = np.stack([zero + 1.0, c_loss, c_pair], axis=-1)
    dn = np.stack([zero, zero, dpair_dn], axis=-1)
    da = np.stack([zero, dloss_da, dpair_da], axis=-1)
    return c, dn, da


def normalized_amplitude_derivatives(cfg: OpticalConfig, lambda_signal: float, thetas):
    """Normalized state vectors and their analytic derivatives, each (K, 3)."""
    c, dn, da = amplitude_derivatives(cfg, lambda_signal, thetas)
    norm = np.linalg.norm(c, axis=-1, keepdims=True)
    out = [c / norm]
    for d in (dn, da):
        dnorm = np.real(np.sum(np.conj(c) * d, axis=-1, keepdims=True)) / norm
        out.append(d / norm - c * dnorm / norm ** 2)
    return tuple(out)


def pure_state_qfi(psi: np.ndarray, dpsi: list) -> np.ndarray:
    """4 Re(<d_mu psi|d_nu psi> - <d_mu psi|psi><psi|d_nu psi>) for a normalized state."""
    n = len(dpsi)
    out = np.empty((n, n))
    for a in range(n):
        for b in range(n):
            g = np.vdot(dpsi[a], dpsi[b]) - np.vdot(dpsi[a], psi) * np.vdot(psi, dpsi[b])
            out[a, b] = 4.0 * g.real
    return out


def qfi_per_mode(cfg: OpticalConfig, lambda_signal: float, thetas) -> np.ndarray:
    """QFI of each monitored mode pair, shape (K, 2, 2)."""
    mp = _modes(cfg, lambda_signal, thetas)
    c, dn, da = amplitude_derivatives(cfg, lambda_signal, thetas)
    F2 = np.abs(pair_amplitude(mp, cfg)) ** 2
    tau = mp.tau
    l0 = cfg.chamber_length_cm
    c_loss, c_pair = c[..., 1], c[..., 2]
    norm2 = 1.0 + np.abs(c_loss) ** 2 + np.abs(c_pair) ** 2

    # the loss-branch overlaps are written in closed form so the tau -> 1
    # limit stays finite where it exists
    loss_self = F2 * l0 ** 2 * tau ** 4 / (1.0 - tau * tau) if tau < 1.0 else np.inf
    loss_gauge = F2 * l0 * tau * tau  # conj(c_loss) * d c_loss / d alpha

    nn = np.abs(dn[..., 2]) ** 2
    aa = loss_self + np.abs(da[..., 2]) ** 2
    na = np.conj(dn[..., 2]) * da[..., 2]
    c_dn = np.conj(c_pair) * dn[..., 2]
    c_da = loss_gauge + np.conj(c_pair) * da[..., 2]

    out = np.empty(np.shape(nn) + (2, 2))
    out[..., 0, 0] = 4.0 * (nn / norm2 - np.abs(c_dn) ** 2 / norm2 ** 2)
    with np.errstate(invalid="ignore"):
        out[..., 1, 1] = 4.0 * (aa / norm2 - np.abs(c_da) ** 2 / norm2 ** 2)
    off = 4.0 * np.real(na / norm2 - np.conj(c_dn) * c_da / norm2 ** 2)
    out[..., 0, 1] = off
    out[..., 1, 0] = off
    if tau >= 1.0:
        out[..., 1, 1] = np.inf
    return out


def qfi_matrix(cfg: OpticalConfig, lambda_signal: float, thetas) -> np.ndarray:
    return qfi_per_mode(cfg, lambda_signal, thetas).sum(axis=0)


# --- covariance --------------------------------------------------------------

def _column_scales(qfi_diag, Jw):
    scales = np.sqrt(np.asarray(qfi_diag, dtype=float))
    colnorm = np.linalg.norm(Jw, axis=0)
    # infinite QFI (alpha = 0) can't normalize; fall back to the column norm
    return np.where(np.isfinite(scales), scales, colnorm)


def identifiability(J: np.ndarray, var: np.ndarray, qfi_diag) -> tuple[float, np.ndarray]:
    """Condition number of the whitened, QFI-normalized Jacobian and its null direction.

    Raw ``J`` mixes units (n is dimensionless, alpha is cm^-1); dividing each
    column by sqrt(QFI) and each row by the shot-noise deviation makes the
    singular values dimensionless.
    """
    Jw = J / np.sqrt(var)[:, None]
    scales = _column_scales(qfi_diag, Jw)
    if np.any(scales <= 0) or not np.all(np.isfinite(Jw)):
        null = (scales <= 0).astype(float)
        return np.inf, null / max(np.linalg.norm(null), 1.0)
    Jn = Jw / scales[None, :]
    sv, vt = np.linalg.svd(Jn)[1:]
    if Jn.shape[0] < 2 or sv[-1] == 0:
        return np.inf, vt[-1]
    return sv[0] / sv[-1], vt[-1]


def _singular_covariance(info, null, shots):
    cov = np.full((2, 2), np.nan)
    for mu in range(2):
        if abs(null[mu]) > 1e-6:
            cov[mu, mu] = np.inf
        else:
            cov[mu, mu] = 1.0 / info[mu, mu] if info[mu, mu] > 0 else np.inf
    return cov


def covariance_matrix(cfg: OpticalConfig, lambda_signal: float, thetas, shots=None) -> np.ndarray:
    """Error-propagation covariance of (n_i^m, alpha) for ``shots`` repetitions.

    Raises SingularJacobian (carrying an ``inf``-variance matrix) when the
    observables leave a parameter direction unconstrained.
    """
    M = cfg.shots if shots is None else shots
    J = intensity_jacobian(cfg, lambda_signal, thetas)
    _, var = intensity_and_variance(cfg, lambda_signal, thetas)
    qdiag = np.diag(qfi_matrix(cfg, lambda_signal, thetas))
    cond, null = identifiability(J, var, qdiag)
    if not cond < COND_LIMIT:
        info = (J.T / var) @ J
        raise SingularJacobian(
            f"intensity Jacobian is singular (normalized condition number {cond:.3g})",
            covariance=_singular_covariance(info, null, M) / M,
        )
    if J.shape[0] == 2:
        G = np.linalg.inv(J)
        C = (G * var[None, :]) @ G.T
    else:
        C = np.linalg.inv((J.T / var) @ J)
    C = 0.5 * (C + C.T)
    return C / M


# --- regrets and trade-off -------------------------------------------------

def _ratio_terms(phase, tau):
    c = np.cos(phase)
    s2 = np.sin(phase) ** 2
    denom = 1.0 + tau * c
    with np.errstate(divide="ignore", invalid="ignore"):
        t_n = np.where(denom > 0, s2 / np.where(denom > 0, denom, 1.0), 1.0 - c)
        t_a = np.where(denom > 0, (1.0 - tau * tau) * c * c / np.where(denom > 0, denom, 1.0), 0.0)
    return t_n, t_a


def approximate_regrets(phases, tau: float) -> tuple[float, float, float]:
    """Close-angle approximations (delta_n, delta_alpha, sum) from the fringe phases."""
    phases = np.atleast_1d(phases)
    t_n, t_a = _ratio_terms(phases, tau)
    dn = 1.0 - float(np.sum(t_n)) / 4.0
    da = 1.0 - float(np.sum(t_a)) / 4.0
    total = 1.5 + tau * float(np.sum(np.cos(phases))) / 4.0
    return dn, da, total


def normalized_regrets(qfi: np.ndarray, info: np.ndarray) -> np.ndarray:
    """Diagonal of (F - C^-1) / F, with 1 where F is zero or infinite."""
    out = np.ones(2)
    for mu in range(2):
        f = qfi[mu, mu]
        if np.isfinite(f) and f > 0:
            out[mu] = (f - info[mu, mu]) / f
    return out


@dataclass
class PrecisionReport:
    angles: np.ndarray
    intensities: np.ndarray
    covariance: np.ndarray
    qfi: np.ndarray
    regret: np.ndarray
    delta_n: float
    delta_alpha: float
    delta_n_approx: float
    delta_alpha_approx: float
    tradeoff_sum: float
    tradeoff_sum_approx: float
    singular: bool = False
    phases: np.ndarray = field(default=None, repr=False)
    tau: float = 1.0

    def as_dict(self) -> dict:
        def arr(x):
            return np.asarray(x, dtype=float).tolist()

        return {
            "angles_rad": arr(self.angles),
            "phases_rad": arr(self.phases),
            "intensities": arr(self.intensities),
            "tau": self.tau,
            "covariance": arr(self.covariance),
            "qfi": arr(self.qfi),
            "regret": arr(self.regret),
            "delta_n": self.delta_n,
            "delta_alpha": self.delta_alpha,
            "delta_n_approx": self.delta_n_approx,
            "delta_alpha_approx": self.delta_alpha_approx,
            "tradeoff_sum": self.tradeoff_sum,
            "tradeoff_sum_approx": self.tradeoff_sum_approx,
            "singular": self.singular,
        }


def precision_report(cfg: OpticalConfig, lambda_signal: float, thetas) -> PrecisionReport:
    """Covariance (M = 1), QFI, regret and trade-off sums for one angle selection."""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    mp = _modes(cfg, lambda_signal, thetas)
    p, _ = intensity_and_variance(cfg, lambda_signal, thetas)
    qfi = qfi_matrix(cfg, lambda_signal, thetas)
    info = fisher_information(cfg, lambda_signal, thetas, shots=1)
    singular = False
    try:
        cov = covariance_matrix(cfg, lambda_signal, thetas, shots=1)
    except SingularJacobian as exc:
        cov = exc.covariance
        singular = True
    with np.errstate(invalid="ignore"):
        regret = qfi - info
    dn, da = normalized_regrets(qfi, info)
    dn_apx, da_apx, sum_apx = approximate_regrets(mp.total_phase, mp.tau)
    return PrecisionReport(
        angles=thetas,
        intensities=p,
        covariance=cov,
        qfi=qfi,
        regret=regret,
        delta_n=float(dn),
        delta_alpha=float(da),
        delta_n_approx=dn_apx,
        delta_alpha_approx=da_apx,
        tradeoff_sum=float(dn + da),
        tradeoff_sum_approx=sum_apx,
        singular=singular,
        phases=np.atleast_1d(mp.total_phase),
        tau=mp.tau,
    )


@dataclass(frozen=True)
class QCRBCheck:
    min_eigenvalue: float
    trace: float
    qfi_singular: bool

    @property
    def satisfied(self) -> bool:
        return self.min_eigenvalue >= -1e-12 * abs(self.trace)


def qcrb_check(cfg: OpticalConfig, lambda_signal: float, thetas, shots=None) -> QCRBCheck:
    """Smallest eigenvalue of C - (M F)^-1.

    With a singular QFI only the diagonal scalar bounds
    ``C_mm >= 1/(M F_mm)`` over parameters with ``F_mm > 0`` are compared.
    """
    M = cfg.shots if shots is None else shots
    C = covariance_matrix(cfg, lambda_signal, thetas, shots=M)
    F = qfi_matrix(cfg, lambda_signal, thetas)
    trace = float(np.trace(C))
    diag = np.diag(F)
    f_singular = not (np.all(np.isfinite(F)) and np.all(diag > 0)
                      and np.linalg.det(F) > 1e-12 * diag[0] * diag[1])
    if f_singular:
        gaps = [C[m, m] - 1.0 / (M * diag[m]) for m in range(2) if diag[m] > 0 and np.isfinite(diag[m])]
        return QCRBCheck(min(gaps) if gaps else 0.0, trace, True)
    gap = C - np.linalg.inv(M * F)
    gap = 0.5 * (gap + gap.T)
    return QCRBCheck(float(np.linalg.eigvalsh(gap)[0]), trace, False)
