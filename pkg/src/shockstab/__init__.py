"""Numerical laboratory for the stability of viscous shocks of barotropic Navier-Stokes."""
from .hugoniot import Constants, EndStates, left_state_from_right, o1_constants, shock_speed
from .kernels import BACKEND as KERNEL_BACKEND
from .model import ModelParams
from .profile import ShockProfile, build_weight, shifted_eval, solve_profile

__version__ = "0.1.0"

__all__ = [
    "Constants",
    "EndStates",
    "KERNEL_BACKEND",
    "ModelParams",
    "ShockProfile",
    "build_weight",
    "left_state_from_right",
    "o1_constants",
    "shifted_eval",
    "shock_speed",
    "solve_profile",
]
