"""Ground states of attractive 2D condensates in a rotating quadratic-plus-quartic trap."""

from .errors import (
    ConfigurationError,
    DomainRangeError,
    InsufficientDataError,
    NumericalError,
    OrthogonalityError,
    OutputError,
    ResolutionError,
    RotbecError,
)
from .grid import ComplexField2D, Grid2D, gradient, integrate, laplacian, read_snapshot, write_snapshot
from .townes import RadialProfile, TownesConstants, default_constants, default_profile, shoot_townes, townes_constants
from .gpe import EnergyBreakdown, MinimizeOptions, MinimizerResult, TrapSpec, energy, init_trial, minimize
from .rescale import BlowupRecord, align_phase, blowup_record, locate_max, rescale
from .expansion import ExpansionSet, LinearizedOperator, build_expansion, expansion_residuals, solve_kernel_projected
from .vortex import VortexReport, scan_vortices, vortex_free_radius, winding_map
from .sweep import SweepConfig, SweepRecord, emit_report, fit_power_law, run_sweep

__version__ = "0.1.0"
