"""Pseudospectral laboratory for the focusing fractional NLS  i u_t - (-D)^s u = -|u|^a u."""
__version__ = "0.1.0"

from .spectral import (  # noqa: E402,F401
    Field, FnlsError, Grid, ModelParams, ParamError, Regime, derive_params, energy, frac_power,
    gaussian, lebesgue_norm, mass, rescale, sobolev_norm, translate, windowed_integral,
)
from .variational import (  # noqa: E402,F401
    GroundState, SharpConstants, compute_ground_state, gn_margin, maximize_weinstein,
    petviashvili_mass_critical, to_lebesgue_ground_state, to_sobolev_ground_state, weinstein_H, weinstein_K,
)
from .evolve import EvolveControls, TimeSeries, estimate_blowup, run  # noqa: E402,F401
from .diagnostics import build_weight, concentration_scan, virial_identity_defect  # noqa: E402,F401
from .profiles import (  # noqa: E402,F401
    ProfileSet, SyntheticSequenceSpec, align_to_ground_state, compactness_bound_check, extract, synthesize,
)
