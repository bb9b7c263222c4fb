"""Photon-count simulation, weighted least-squares recovery of (n_i^m, alpha),
and the Monte-Carlo harness that checks the error-propagation covariance.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .errors import NonConvergence, QSpecError, SingularCurvature
from .optics import OpticalConfig, fringe_period_n
from .precision import (
    COND_LIMIT,
    covariance_matrix,
    identifiability,
    intensity_and_variance,
    intensity_jacobian,
    qfi_matrix,
)

INT64_MAX = 2**63 - 1
POISSON_LIMIT = 1e-3
EPS = float(np.finfo(float).eps)
MAX_ITER = 200
N_BOX = (0.9, 1.1)
ALPHA_BOX = (0.0, 10.0)


class CountOverflow(QSpecError, OverflowError):
    kind = "count_overflow"


def make_rng(seed) -> np.random.Generator:
    """Counter-based (Philox) generator from an int, SeedSequence or Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


@dataclass
class MeasurementRecord:
    angles: np.ndarray
    lambda_signal: float
    counts: np.ndarray
    shots: int
    truth: tuple

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=float)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if np.any(self.counts < 0):
            raise ValueError("counts must be nonnegative")
        if len(np.unique(self.angles)) < 2:
            raise ValueError("need at least two distinct angles")


@dataclass
class FitResult:
    estimate: np.ndarray
    covariance: np.ndarray
    iterations: int
    converged: bool
    residual_norm: float
    grad_norm: float
    message: str = ""


def simulate_counts(cfg: OpticalConfig, lambda_signal: float, angles, shots: int, seed=None) -> MeasurementRecord:
    """Photon counts accumulated over ``shots`` repetitions at each angle.

    Poisson(M p) for p < 1e-3 (the binomial limit), Binomial(M, p) otherwise.
    """
    angles = np.asarray(angles, dtype=float)
    rng = make_rng(seed)
    p, _ = intensity_and_variance(cfg, lambda_signal, angles)
    mean = shots * p
    if shots > INT64_MAX or np.any(mean > INT64_MAX):
        raise CountOverflow("expected counts exceed the 64-bit range")
    counts = np.empty(len(angles), dtype=np.int64)
    for k, pk in enumerate(p):
        if pk <= 0:
            counts[k] = 0
        elif pk < POISSON_LIMIT:
            counts[k] = rng.poisson(shots * pk)
        else:
            counts[k] = rng.binomial(shots, pk)
    return MeasurementRecord(angles, float(lambda_signal), counts, int(shots),
                             (cfg.n_idler_medium, cfg.alpha_per_cm))


def _fit_bounds(bounds):
    lo = np.array([N_BOX[0], ALPHA_BOX[0]])
    hi = np.array([N_BOX[1], ALPHA_BOX[1]])
    if bounds is not None:
        lo = np.maximum(lo, bounds[0])
        hi = np.minimum(hi, bounds[1])
    return lo, hi


def fit_parameters(record: MeasurementRecord, cfg: OpticalConfig, initial_guess, bounds=None) -> FitResult:
    """Fit (n_i^m, alpha) to counts by minimizing sum (N_k - M p_k)^2 / max(N_k, 1).

    ``cfg`` supplies every constant except the two unknowns.  Bounds narrow the
    physical box n in (0.9, 1.1), alpha in [0, 10] cm^-1; the fit is only
    identifiable within one fringe of n.  Raises SingularCurvature when the
    angles carry no information on one parameter direction; non-convergence
    is reported through ``FitResult.converged``.
    """
    x0 = np.asarray(initial_guess, dtype=float)
    lo, hi = _fit_bounds(bounds)
    if not (N_BOX[0] < x0[0] < N_BOX[1] and ALPHA_BOX[0] <= x0[1] <= ALPHA_BOX[1]):
        raise ValueError(f"initial guess {x0.tolist()} outside the physical box")
    x0 = np.clip(x0, lo, hi)
    M = record.shots
    counts = record.counts.astype(float)
    sw = 1.0 / np.sqrt(np.maximum(counts, 1.0))

    def model(x):
        return cfg.with_params(n_idler_medium=x[0], alpha_per_cm=x[1])

    def resid(x):
        p, _ = intensity_and_variance(model(x), record.lambda_signal, record.angles)
        return (counts - M * p) * sw

    def jac(x):
        return -M * intensity_jacobian(model(x), record.lambda_signal, record.angles) * sw[:, None]

    # a design that is degenerate at the start leaves Gauss-Newton with no step
    # along the flat direction; the solver would only drift along it
    cfg0 = model(x0)
    p0, var0 = intensity_and_variance(cfg0, record.lambda_signal, record.angles)
    cond0, _ = identifiability(intensity_jacobian(cfg0, record.lambda_signal, record.angles), var0,
                               np.diag(qfi_matrix(cfg0, record.lambda_signal, record.angles)))
    if not cond0 < COND_LIMIT:
        start = FitResult(estimate=x0, covariance=np.full((2, 2), np.inf), iterations=0, converged=False,
                          residual_norm=float(np.linalg.norm(resid(x0))), grad_norm=np.inf,
                          message="singular curvature at the initial guess")
        raise SingularCurvature(f"fit curvature is singular at the initial guess (normalized condition "
                                f"number {cond0:.3g})", result=start)

    g0 = np.linalg.norm(jac(x0).T @ resid(x0))
    sol = least_squares(resid, x0, jac=jac, bounds=(lo, hi), method="trf", x_scale="jac",
                        xtol=1e-10, ftol=None, gtol=max(1e-8 * g0, EPS),
                        max_nfev=MAX_ITER)
    x = sol.x
    Jr = sol.jac
    grad = np.linalg.norm(Jr.T @ sol.fun)
    converged = sol.status > 0

    fcfg = model(x)
    qdiag = M * np.diag(qfi_matrix(fcfg, record.lambda_signal, record.angles))
    cond, _ = identifiability(-Jr * np.sqrt(np.maximum(counts, 1.0))[:, None],
                              np.maximum(counts, 1.0), qdiag)
    result = FitResult(estimate=x, covariance=np.full((2, 2), np.inf), iterations=int(sol.nfev),
                       converged=converged, residual_norm=float(np.linalg.norm(sol.fun)),
                       grad_norm=float(grad), message=sol.message)
    if not cond < COND_LIMIT:
        raise SingularCurvature(f"fit curvature is singular (normalized condition number {cond:.3g})",
                                result=result)
    cov = np.linalg.inv(Jr.T @ Jr)
    result.covariance = 0.5 * (cov + cov.T)
    return result


@dataclass
class MonteCarloSummary:
    trials: int
    converged: int
    excluded: int
    truth: np.ndarray
    mean: np.ndarray
    sample_covariance: np.ndarray
    predicted_covariance: np.ndarray
    bias: np.ndarray
    covariance_se: np.ndarray
    qcrb_min_eigenvalue: float
    estimates: np.ndarray = field(repr=False, default=None)

    def as_dict(self) -> dict:
        def arr(x):
            return np.asarray(x, dtype=float).tolist()

        return {
            "trials": self.trials,
            "converged": self.converged,
            "excluded": self.excluded,
            "truth": arr(self.truth),
            "mean": arr(self.mean),
            "bias": arr(self.bias),
            "sample_covariance": arr(self.sample_covariance),
            "predicted_covariance": arr(self.predicted_covariance),
            "covariance_bootstrap_se": arr(self.covariance_se),
            "qcrb_min_eigenvalue": self.qcrb_min_eigenvalue,
        }


def _bootstrap_cov_se(est, rng, n_boot=400):
    n = len(est)
    idx = rng.integers(0, n, size=(n_boot, n))
    samples = est[idx]  # (B, n, 2)
    centered = samples - samples.mean(axis=1, keepdims=True)
    covs = np.einsum("bni,bnj->bij", centered, centered) / (n - 1)
    return covs.std(axis=0, ddof=1)


def monte_carlo(cfg: OpticalConfig, lambda_signal: float, angles, shots: int, trials: int,
                seed=0, threads: int = 1) -> MonteCarloSummary:
    """Repeat simulate + fit ``trials`` times and compare with the predicted covariance.

    Every trial draws from its own spawned Philox stream, so results do not
    depend on ``threads``.  The QCRB entry is the smallest eigenvalue of
    ``M F^{1/2} C_sample F^{1/2} - 1`` (a dimensionless check).
    """
    if trials < 100:
        raise ValueError("monte_carlo needs at least 100 trials")
    angles = np.asarray(angles, dtype=float)
    truth = np.array([cfg.n_idler_medium, cfg.alpha_per_cm])
    half = 0.5 * fringe_period_n(cfg, lambda_signal)
    bounds = (np.array([truth[0] - half, ALPHA_BOX[0]]), np.array([truth[0] + half, ALPHA_BOX[1]]))
    root = np.random.SeedSequence(seed)
    children = root.spawn(trials + 1)

    def one(k):
        rec = simulate_counts(cfg, lambda_signal, angles, shots, seed=children[k])
        try:
            res = fit_parameters(rec, cfg, truth, bounds=bounds)
        except (SingularCurvature, NonConvergence):
            return None
        return res.estimate if res.converged else None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(trials)))
    else:
        results = [one(k) for k in range(trials)]
    est = np.array([r for r in results if r is not None])
    if len(est) < 2:
        raise NonConvergence("fewer than two Monte-Carlo trials converged")
    mean = est.mean(axis=0)
    scov = np.cov(est.T, ddof=1)
    se = _bootstrap_cov_se(est, make_rng(children[trials]))
    predicted = covariance_matrix(cfg, lambda_signal, angles, shots=shots)

    F = shots * qfi_matrix(cfg, lambda_signal, angles)
    w, v = np.linalg.eigh(F)
    root_f = (v * np.sqrt(np.clip(w, 0, None))) @ v.T
    qcrb = float(np.linalg.eigvalsh(root_f @ scov @ root_f)[0] - 1.0)
    return MonteCarloSummary(
        trials=trials,
        converged=len(est),
        excluded=trials - len(est),
        truth=truth,
        mean=mean,
        sample_covariance=scov,
        predicted_covariance=predicted,
        bias=mean - truth,
        covariance_se=se,
        qcrb_min_eigenvalue=qcrb,
        estimates=est,
    )
