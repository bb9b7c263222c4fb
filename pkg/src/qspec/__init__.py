"""Induced-coherence SPDC interferometer: spectra, joint (n_i^m, alpha) precision, estimation."""
from .errors import (ConfigError, NoFringe, NonConvergence, OutOfModel, QSpecError,
                     SingularCurvature, SingularJacobian)
from .optics import (MismatchMode, ModePoint, OpticalConfig, fringe_angle, idler_wavelength,
                     mode_point, transmissivity)
from .state import (BranchAmplitudes, branch_amplitudes, signal_intensity_closed_form,
                    signal_intensity_from_state)
from .precision import (PrecisionReport, covariance_matrix, intensity_jacobian, precision_report,
                        qcrb_check, qfi_matrix)
from .estimation import FitResult, MeasurementRecord, MonteCarloSummary, fit_parameters, monte_carlo, simulate_counts
from .scans import find_extrema, select_angles
from .config import RunConfig, parse_config, serialize_config

__version__ = "0.1.0"
