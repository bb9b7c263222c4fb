"""Independent numerical oracles used by the tests."""
import numpy as np

from qspec.optics import mode_point
from qspec.precision import pure_state_qfi
from qspec.state import branch_amplitudes, signal_intensity_from_state


def richardson_derivative(f, x, h):
    """Central differences at h, h/2, h/4 combined by Richardson extrapolation (O(h^6))."""
    d = [(f(x + s) - f(x - s)) / (2 * s) for s in (h, h / 2, h / 4)]
    r1 = [(4 * d[1] - d[0]) / 3, (4 * d[2] - d[1]) / 3]
    return (16 * r1[1] - r1[0]) / 15


def state_vectors(cfg, lambda_signal, thetas):
    """Normalized (vac, loss, pair) vectors built from the state module, shape (K, 3)."""
    mp = mode_point(cfg, lambda_signal, np.atleast_1d(thetas))
    return branch_amplitudes(mp, cfg).vector()


def state_intensity(cfg, lambda_signal, thetas):
    mp = mode_point(cfg, lambda_signal, np.atleast_1d(thetas))
    return signal_intensity_from_state(branch_amplitudes(mp, cfg))[0]


def step_sizes(cfg):
    return {"n": 1e-6 * cfg.n_idler_medium, "alpha": 1e-6 * max(cfg.alpha_per_cm, 1e-2)}


def fd_jacobian(cfg, lambda_signal, thetas):
    """d p_k / d(n, alpha) by differentiating the amplitude-derived intensity."""
    h = step_sizes(cfg)
    dn = richardson_derivative(
        lambda n: state_intensity(cfg.with_params(n_idler_medium=n), lambda_signal, thetas),
        cfg.n_idler_medium, h["n"])
    da = richardson_derivative(
        lambda a: state_intensity(cfg.with_params(alpha_per_cm=a), lambda_signal, thetas),
        cfg.alpha_per_cm, h["alpha"])
    return np.stack([dn, da], axis=-1)


def fd_state_derivatives(cfg, lambda_signal, thetas):
    h = step_sizes(cfg)
    dn = richardson_derivative(
        lambda n: state_vectors(cfg.with_params(n_idler_medium=n), lambda_signal, thetas),
        cfg.n_idler_medium, h["n"])
    da = richardson_derivative(
        lambda a: state_vectors(cfg.with_params(alpha_per_cm=a), lambda_signal, thetas),
        cfg.alpha_per_cm, h["alpha"])
    return state_vectors(cfg, lambda_signal, thetas), dn, da


def fd_qfi(cfg, lambda_signal, thetas):
    """QFI summed over modes from finite-difference state derivatives."""
    psi, dn, da = fd_state_derivatives(cfg, lambda_signal, thetas)
    return sum(pure_state_qfi(psi[k], [dn[k], da[k]]) for k in range(len(psi)))


def composite_qfi(cfg, lambda_signal, thetas):
    """QFI of the explicit tensor-product state of all monitored modes (FD derivatives)."""
    h = step_sizes(cfg)

    def product(c):
        vecs = state_vectors(c, lambda_signal, thetas)
        out = vecs[0]
        for v in vecs[1:]:
            out = np.kron(out, v)
        return out

    psi = product(cfg)
    dn = richardson_derivative(lambda n: product(cfg.with_params(n_idler_medium=n)), cfg.n_idler_medium, h["n"])
    da = richardson_derivative(lambda a: product(cfg.with_params(alpha_per_cm=a)), cfg.alpha_per_cm, h["alpha"])
    return pure_state_qfi(psi, [dn, da])


def random_configs(rng, count, alpha=(0.02, 1.0), theta=(0.5e-3, 4e-3), lam=(605e-9, 613e-9)):
    """(cfg, lambda_s, (theta1, theta2)) samples over the working domain."""
    from qspec.optics import OpticalConfig

    base = OpticalConfig()
    out = []
    for _ in range(count):
        n = 1.0 - rng.uniform(0, 1e-4)
        a = rng.uniform(*alpha)
        t1, t2 = rng.uniform(*theta, size=2)
        out.append((base.with_params(n_idler_medium=n, alpha_per_cm=a), rng.uniform(*lam), (t1, t2)))
    return out
