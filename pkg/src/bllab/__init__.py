"""Spectral laboratory for a vortex row above a wall.

Submodules are imported lazily so the command-line front end can pin BLAS
thread counts before numpy comes in.
"""

from __future__ import annotations

import importlib

__version__ = "0.1.0"

_EXPORTS = {
    "Grid2D": "grid",
    "make_grid": "grid",
    "Field2D": "field",
    "to_spectral": "field",
    "to_physical": "field",
    "differentiate": "field",
    "l2_norm_sq": "field",
    "HelmholtzSolver": "helmholtz",
    "solve_helmholtz": "helmholtz",
    "InfluenceMatrix": "influence",
    "build_influence_matrix": "influence",
    "ConditioningError": "influence",
    "PhysicalParams": "flow",
    "euler_streamfunction": "flow",
    "euler_velocity": "flow",
    "initial_velocity": "flow",
    "outer_flow": "flow",
    "OuterFlow": "flow",
    "mollified_vorticity": "flow",
    "NsState": "ns",
    "NsMachinery": "ns",
    "ns_init": "ns",
    "ns_step": "ns",
    "ns_run": "ns",
    "BlowUpError": "ns",
    "PrandtlState": "prandtl",
    "PrandtlMachinery": "prandtl",
    "prandtl_init": "prandtl",
    "prandtl_step": "prandtl",
    "prandtl_run": "prandtl",
    "wall_pressure_gradient": "diagnostics",
    "detect_ls": "diagnostics",
    "DiagnosticsRecord": "diagnostics",
    "diagnostics_record": "diagnostics",
    "budget_residuals": "diagnostics",
    "rescaled_enstrophy_compare": "diagnostics",
    "trace_pathlines": "diagnostics",
    "Pathline": "diagnostics",
    "ShellSpectrum": "spectra",
    "shell_sum": "spectra",
    "StripFit": "spectra",
    "fit_strip": "spectra",
    "track": "spectra",
    "TrackEvents": "spectra",
    "RunConfig": "config",
    "parse_config": "config",
    "ConfigError": "config",
    "Snapshot": "storage",
    "write_snapshot": "storage",
    "read_snapshot": "storage",
}


def __getattr__(name: str):
    try:
        modname = _EXPORTS[name]
    except KeyError:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}") from None
    module = importlib.import_module(f".{modname}", __name__)
    return getattr(module, name)


def __dir__():
    return sorted(set(globals()) | set(_EXPORTS))
