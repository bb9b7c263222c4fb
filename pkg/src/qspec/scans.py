"""Fringe extrema, observable-angle selection and the figure-style scans."""
from __future__ import annotations

import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import golden

from .errors import NoFringe, SingularJacobian
from .optics import OpticalConfig, fringe_angle, mode_point, total_phase, transmissivity
from .precision import covariance_matrix, precision_report
from .state import normalized_intensity

MAX_PHASE_STEP = 0.05  # rad of interference phase between grid points
TRADEOFF_TOL = 0.05


@dataclass(frozen=True)
class Extremum:
    angle: float
    kind: str  # "peak" or "valley"
    intensity: float


def intensity_curve(cfg: OpticalConfig, lambda_signal: float, thetas):
    return normalized_intensity(mode_point(cfg, lambda_signal, thetas), cfg)


def _dense_grid(cfg, lambda_signal, lo, hi, n=2001):
    while True:
        grid = np.linspace(lo, hi, n)
        step = np.max(np.abs(np.diff(total_phase(cfg, lambda_signal, grid))))
        if step <= MAX_PHASE_STEP or n > 2_000_000:
            return grid
        n = int(n * step / MAX_PHASE_STEP * 1.2) + 1


def find_extrema(cfg: OpticalConfig, lambda_signal: float, theta_range) -> list[Extremum]:
    """Peaks and valleys of the signal intensity inside ``theta_range`` (rad).

    Local extrema on a grid fine enough to resolve the fringes are polished
    by golden-section search.  Raises NoFringe if none are found.
    """
    lo, hi = map(float, theta_range)
    return list(_find_extrema(cfg, float(lambda_signal), lo, hi))


@functools.lru_cache(maxsize=512)
def _find_extrema(cfg, lambda_signal, lo, hi):
    grid = _dense_grid(cfg, lambda_signal, lo, hi)
    vals = intensity_curve(cfg, lambda_signal, grid)
    d = np.diff(vals)
    found = []
    i = 1
    while i < len(d):
        a, b = d[i - 1], d[i]
        plateau = b == 0 and i + 1 < len(d)
        nxt = d[i + 1] if plateau else b
        if a != 0 and nxt != 0 and np.sign(a) != np.sign(nxt):
            kind = "peak" if a > 0 else "valley"
            sgn = -1.0 if kind == "peak" else 1.0

            def f(t, sgn=sgn):
                return sgn * float(intensity_curve(cfg, lambda_signal, t))

            left, right = grid[i - 1], grid[i + 2] if plateau else grid[i + 1]
            mid = 0.5 * (grid[i] + grid[i + 1]) if plateau else grid[i]
            if f(mid) < min(f(left), f(right)):
                t = golden(f, brack=(left, mid, right), tol=1e-8)
            else:
                t = mid
            found.append(Extremum(float(t), kind, float(intensity_curve(cfg, lambda_signal, t))))
            i += 2 if plateau else 1
        else:
            i += 1
    if not found:
        raise NoFringe(f"no intensity extremum in [{lo:.6g}, {hi:.6g}] rad")
    return tuple(found)


def _nearest(cands, anchors):
    chosen = []
    pool = list(cands)
    for anchor in anchors:
        if not pool:
            raise NoFringe("not enough extrema of the requested kind in the search window")
        best = min(pool, key=lambda e: abs(e.angle - anchor))
        pool.remove(best)
        chosen.append(best)
    return chosen


ANGLE_MODES = ("explicit", "auto-peak-valley", "auto-peak-peak", "auto-valley-valley", "auto-quadrature")


def select_angles(cfg: OpticalConfig, lambda_signal: float, mode: str, anchors, window) -> tuple[float, float]:
    """Resolve the observable angle pair for a selection mode.

    Auto modes pick the extrema nearest to the anchors.  ``auto-quadrature``
    takes the fringe of the peak nearest the first anchor and returns the
    angles whose phases sit a quarter fringe apart, pi/4 past the peak and
    pi/4 before the following valley.
    """
    anchors = [float(a) for a in anchors]
    if mode == "explicit":
        return anchors[0], anchors[1]
    ext = find_extrema(cfg, lambda_signal, window)
    peaks = [e for e in ext if e.kind == "peak"]
    valleys = [e for e in ext if e.kind == "valley"]
    if mode == "auto-peak-valley":
        return _nearest(peaks, anchors[:1])[0].angle, _nearest(valleys, anchors[1:])[0].angle
    if mode == "auto-peak-peak":
        a, b = _nearest(peaks, anchors)
        return a.angle, b.angle
    if mode == "auto-valley-valley":
        a, b = _nearest(valleys, anchors)
        return a.angle, b.angle
    if mode == "auto-quadrature":
        peak = _nearest(peaks, anchors[:1])[0]
        base = 2 * math.pi * round(float(total_phase(cfg, lambda_signal, peak.angle)) / (2 * math.pi))
        return (fringe_angle(cfg, lambda_signal, base + math.pi / 4),
                fringe_angle(cfg, lambda_signal, base + 3 * math.pi / 4))
    raise ValueError(f"unknown angle mode {mode!r}")


def _pmap(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def spectrum_rows(cfg: OpticalConfig, lambdas, thetas):
    lam, th = np.meshgrid(np.asarray(lambdas, float), np.asarray(thetas, float), indexing="ij")
    vals = intensity_curve(cfg, lam, th)
    return [(l * 1e9, t * 1e3, v) for l, t, v in zip(lam.ravel(), th.ravel(), vals.ravel())]


def cross_section_rows(cfg: OpticalConfig, lambda_signal: float, thetas):
    mp = mode_point(cfg, lambda_signal, np.asarray(thetas, float))
    vals = normalized_intensity(mp, cfg)
    return [(t * 1e3, v, d, dm) for t, v, d, dm in
            zip(mp.theta_signal, vals, mp.delta_crystal, mp.delta_medium)]


def variance_map_rows(cfg: OpticalConfig, lambda_signal: float, angles, ns, alphas, shots, threads=1):
    points = [(n, a) for n in ns for a in alphas]

    def one(pt):
        n, a = pt
        try:
            C = covariance_matrix(cfg.with_params(n_idler_medium=n, alpha_per_cm=a),
                                  lambda_signal, angles, shots=shots)
            flag = 0
        except SingularJacobian as exc:
            C, flag = exc.covariance, 1
        return (n, a, C[0, 0], C[1, 1], C[0, 1], flag)

    return _pmap(one, points, threads)


def regret_scan_rows(cfg: OpticalConfig, lambda_signal: float, angles, parameter: str, values, threads=1):
    """Exact and approximate normalized regrets at fixed angles while one parameter moves."""
    key = {"n_i_m": "n_idler_medium", "alpha": "alpha_per_cm"}[parameter]

    def one(v):
        r = precision_report(cfg.with_params(**{key: v}), lambda_signal, angles)
        return (v, r.delta_n, r.delta_alpha, r.delta_n_approx, r.delta_alpha_approx,
                r.tradeoff_sum, r.tradeoff_sum_approx)

    return _pmap(one, list(values), threads)


SELECTIONS = {
    "peak/valley": ("auto-peak-valley", lambda tau: 1.5),
    "peak/peak": ("auto-peak-peak", lambda tau: 1.5 + tau / 2),
    "valley/valley": ("auto-valley-valley", lambda tau: 1.5 - tau / 2),
}


def tradeoff_check(cfg: OpticalConfig, lambda_signal: float, anchors, window, tol=TRADEOFF_TOL) -> dict:
    """Trade-off sums for the three extremum selections against their limits."""
    tau = transmissivity(cfg)
    out = {"tau": tau, "tolerance": tol, "selections": {}}
    for name, (mode, expect) in SELECTIONS.items():
        angles = select_angles(cfg, lambda_signal, mode, anchors, window)
        r = precision_report(cfg, lambda_signal, angles)
        target = expect(tau)
        out["selections"][name] = {
            "angles_mrad": [a * 1e3 for a in angles],
            "delta_n": r.delta_n,
            "delta_alpha": r.delta_alpha,
            "sum": r.tradeoff_sum,
            "sum_approx": r.tradeoff_sum_approx,
            "expected": target,
            "deviation": r.tradeoff_sum - target,
            "pass": bool(abs(r.tradeoff_sum - target) <= tol),
        }
    out["pass"] = all(s["pass"] for s in out["selections"].values())
    return out
