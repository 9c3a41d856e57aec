"""Simulation and numerical verification for wave equations driven by Levy space-time noise."""
from . import cli_io, levy_noise, solver, sobolev, verification, wave_kernel
from .errors import (ConfigError, CoverageError, DivergenceError, LevyWaveError, ParameterError,
                     StatisticsError)
from .levy_noise import (LevyMeasure, TruncationSpec, Window, make_stable_measure, sample_noise,
                         user_density_measure)
from .reports import CheckReport
from .solver import Grid, make_initial_data, make_sigma, picard_solve
from .sobolev import BumpWindow, hr_norm, kernel_path_profile
from .wave_kernel import eval_kernel, kernel_fourier, kernel_p_mass

__version__ = "0.1.0"
