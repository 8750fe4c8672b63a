"""RMS time-domain models: machine, excitation, governor/turbine, simulator."""

from .controls import (
    AvrAc5aParams,
    AvrState,
    GovState,
    HydroGovParams,
    avr_ac5a_derivatives,
    exciter_saturation,
    hydro_gov_turbine_derivatives,
    saturation_coefficients,
    se_from_params,
)
from .machine import swing_derivatives

__all__ = [
    "AvrAc5aParams",
    "AvrState",
    "GovState",
    "HydroGovParams",
    "avr_ac5a_derivatives",
    "exciter_saturation",
    "hydro_gov_turbine_derivatives",
    "saturation_coefficients",
    "se_from_params",
    "swing_derivatives",
]
