"""Run configuration: JSON schema, validation and problem assembly.

A configuration is a single JSON object; every validation constraint of the
core modules is checked here before any computation starts.  The resolved
configuration (all defaults filled in) is embedded into the run summary so a
run can be reproduced from its own outputs: ``RunConfig.from_json`` accepts
either a bare configuration or a summary file carrying one under "config".
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .basis import default_quadrature_order, make_basis, project_L2, SpectralField
from .errors import ConfigError
from .galerkin import DELTA_MIN_DEFAULT, FluidParams
from .interface import InitialPhase, mesh_initial

_FIELD_TYPES = ("zero", "taylor_green", "single_mode", "coefficients")


def _taylor_green_sampler(dimension, amplitude):
    if dimension == 2:
        def sampler(points):
            x, y = points[..., 0], points[..., 1]
            return amplitude * np.stack(
                [np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)], axis=-1
            )
    else:
        def sampler(points):
            x, y, z = points[..., 0], points[..., 1], points[..., 2]
            return amplitude * np.stack(
                [
                    np.sin(x) * np.cos(y) * np.cos(z),
                    -np.cos(x) * np.sin(y) * np.cos(z),
                    np.zeros_like(z),
                ],
                axis=-1,
            )
    return sampler


def build_initial_field(spec, basis, order):
    """Spectral field for one initial-data entry of the config.

    Analytic fields go through the L2 projection (hence divergence-free by
    construction); explicit coefficients or single modes are already in the
    span and are set directly.
    """
    kind = spec.get("type")
    if kind == "zero":
        return SpectralField(basis, np.zeros(len(basis)))
    if kind == "taylor_green":
        amplitude = float(spec.get("amplitude", 1.0))
        return project_L2(_taylor_green_sampler(basis.dimension, amplitude), basis, order)
    if kind == "single_mode":
        wavevector = tuple(int(k) for k in spec["wavevector"])
        phase = spec.get("phase", "cos")
        polarization = int(spec.get("polarization", 0))
        amplitude = float(spec.get("amplitude", 1.0))
        for j, mode in enumerate(basis.modes):
            if (
                mode.wavevector == wavevector
                and mode.phase == phase
                and mode.polarization == polarization
            ):
                coefficients = np.zeros(len(basis))
                coefficients[j] = amplitude
                return SpectralField(basis, coefficients)
        raise ConfigError(
            f"single_mode {wavevector}/{phase}/{polarization} is not in the basis "
            "(wavevector must be in the canonical half-space with max|k_i| <= kmax)"
        )
    if kind == "coefficients":
        values = np.asarray(spec["values"], dtype=np.float64)
        if values.shape != (len(basis),):
            raise ConfigError(
                f"coefficient list has length {values.size}, basis has {len(basis)} modes"
            )
        return SpectralField(basis, values)
    raise ConfigError(f"initial field type must be one of {_FIELD_TYPES}, got {kind!r}")


def _is_zero_field(spec):
    if spec.get("type") == "zero":
        return True
    if spec.get("type") in ("taylor_green", "single_mode"):
        return float(spec.get("amplitude", 1.0)) == 0.0
    if spec.get("type") == "coefficients":
        return not np.any(np.asarray(spec.get("values", [0.0])))
    return False


@dataclass
class RunConfig:
    """Validated parameters of one run (solver knobs resolved to defaults)."""

    dimension: int
    kmax: int
    T: float
    initial_velocity: dict
    initial_magnetic: dict
    phase_shape: dict
    nu_plus: float
    nu_minus: float
    sigma: float
    kappa: float
    delta: float = 0.1
    n_sub: int = 8
    tol: float = 1e-8
    omega: float = 1.0
    quadrature_order: int = None
    h_flow: float = 0.01
    dt_b: float = None
    mesh_resolution: int = None
    resample_2d: bool = False
    delta_min: float = DELTA_MIN_DEFAULT
    max_iter: int = 40
    output_dir: str = "out"
    cadence: float = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.dimension not in (2, 3):
            raise ConfigError(f"dimension must be 2 or 3, got {self.dimension}")
        if self.kmax < 1:
            raise ConfigError(f"kmax must be >= 1, got {self.kmax}")
        if self.T < 0.0 or not math.isfinite(self.T):
            raise ConfigError(f"T must be a finite nonnegative time, got {self.T}")
        if self.sigma <= 0.0:
            raise ConfigError(
                f"the magnetic diffusivity must satisfy sigma > 0, got {self.sigma}"
            )
        if self.kappa < 0.0:
            raise ConfigError(f"kappa must be nonnegative, got {self.kappa}")
        if self.nu_plus < 0.0 or self.nu_minus < 0.0:
            raise ConfigError("viscosities must be nonnegative")
        if self.nu_plus == 0.0 and self.nu_minus == 0.0:
            if self.kappa > 0.0 or not _is_zero_field(self.initial_magnetic):
                raise ConfigError(
                    "nu_plus = nu_minus = 0 is rejected when kappa > 0 or B0 != 0 "
                    "(no dissipation to control the iteration)"
                )
        if self.delta <= 0.0:
            raise ConfigError("delta must be positive")
        if self.n_sub < 2:
            raise ConfigError("n_sub must be at least 2")
        if self.tol <= 0.0:
            raise ConfigError("tol must be positive")
        if not 0.0 < self.omega <= 1.0:
            raise ConfigError("omega must lie in (0, 1]")
        if self.h_flow <= 0.0:
            raise ConfigError("h_flow must be positive")
        if self.quadrature_order is None:
            self.quadrature_order = default_quadrature_order(self.kmax)
        if self.quadrature_order < 1:
            raise ConfigError("quadrature_order must be positive")
        if self.dt_b is not None and self.dt_b <= 0.0:
            raise ConfigError("dt_b must be positive when given")
        if self.mesh_resolution is None:
            self.mesh_resolution = 256 if self.dimension == 2 else 4
        if self.dimension == 2 and self.mesh_resolution < 8:
            raise ConfigError("2D mesh_resolution must be >= 8 vertices")
        if self.dimension == 3 and self.mesh_resolution < 1:
            raise ConfigError("3D mesh_resolution (icosphere level) must be >= 1")
        if self.delta_min <= 0.0:
            raise ConfigError("delta_min must be positive")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be at least 1")
        if self.cadence is not None and self.cadence <= 0.0:
            raise ConfigError("cadence must be positive when given")
        self.phase_region()  # validates shape and containment

    def phase_region(self):
        shape = dict(self.phase_shape)
        kind = shape.get("shape")
        center = shape.get("center")
        if kind in ("disk", "ball"):
            radius = float(shape["radius"])
            radii = (radius,) * self.dimension
        elif kind in ("ellipse", "ellipsoid"):
            radii = tuple(float(r) for r in shape["radii"])
        else:
            raise ConfigError(f"unknown phase shape {kind!r}")
        try:
            return InitialPhase(kind, tuple(float(c) for c in center), radii)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid phase shape: {exc}") from exc

    def build(self):
        """Assemble basis, initial fields, mesh and parameters for the driver."""
        basis = make_basis(self.dimension, self.kmax)
        order = self.quadrature_order
        u0 = build_initial_field(self.initial_velocity, basis, order)
        b0 = build_initial_field(self.initial_magnetic, basis, order)
        phase = self.phase_region()
        mesh0 = mesh_initial(phase, self.mesh_resolution)
        params = FluidParams(self.nu_plus, self.nu_minus, self.sigma, self.kappa)
        return {
            "basis": basis,
            "order": order,
            "u0": u0,
            "B0": b0,
            "phase": phase,
            "mesh0": mesh0,
            "params": params,
        }

    def resolved(self):
        """Plain dict with every default filled in (embedded into summaries)."""
        return {
            "dimension": self.dimension,
            "kmax": self.kmax,
            "T": self.T,
            "initial_velocity": self.initial_velocity,
            "initial_magnetic": self.initial_magnetic,
            "phase": self.phase_shape,
            "nu_plus": self.nu_plus,
            "nu_minus": self.nu_minus,
            "sigma": self.sigma,
            "kappa": self.kappa,
            "solver": {
                "delta": self.delta,
                "n_sub": self.n_sub,
                "tol": self.tol,
                "omega": self.omega,
                "quadrature_order": self.quadrature_order,
                "h_flow": self.h_flow,
                "dt_b": self.dt_b,
                "mesh_resolution": self.mesh_resolution,
                "resample_2d": self.resample_2d,
                "delta_min": self.delta_min,
                "max_iter": self.max_iter,
            },
            "output": {"directory": self.output_dir, "cadence": self.cadence},
        }

    @classmethod
    def from_dict(cls, data):
        if "config" in data and isinstance(data["config"], dict):
            data = data["config"]  # summary files embed the resolved config
        solver = dict(data.get("solver", {}))
        output = dict(data.get("output", {}))
        required = (
            "dimension",
            "kmax",
            "T",
            "initial_velocity",
            "initial_magnetic",
            "phase",
            "nu_plus",
            "nu_minus",
            "sigma",
            "kappa",
        )
        missing = [key for key in required if key not in data]
        if missing:
            raise ConfigError(f"missing config fields: {', '.join(missing)}")
        try:
            return cls(
                dimension=int(data["dimension"]),
                kmax=int(data["kmax"]),
                T=float(data["T"]),
                initial_velocity=dict(data["initial_velocity"]),
                initial_magnetic=dict(data["initial_magnetic"]),
                phase_shape=dict(data["phase"]),
                nu_plus=float(data["nu_plus"]),
                nu_minus=float(data["nu_minus"]),
                sigma=float(data["sigma"]),
                kappa=float(data["kappa"]),
                delta=float(solver.get("delta", 0.1)),
                n_sub=int(solver.get("n_sub", 8)),
                tol=float(solver.get("tol", 1e-8)),
                omega=float(solver.get("omega", 1.0)),
                quadrature_order=(
                    int(solver["quadrature_order"])
                    if solver.get("quadrature_order") is not None
                    else None
                ),
                h_flow=float(solver.get("h_flow", 0.01)),
                dt_b=float(solver["dt_b"]) if solver.get("dt_b") is not None else None,
                mesh_resolution=(
                    int(solver["mesh_resolution"])
                    if solver.get("mesh_resolution") is not None
                    else None
                ),
                resample_2d=bool(solver.get("resample_2d", False)),
                delta_min=float(solver.get("delta_min", DELTA_MIN_DEFAULT)),
                max_iter=int(solver.get("max_iter", 40)),
                output_dir=str(output.get("directory", "out")),
                cadence=(
                    float(output["cadence"]) if output.get("cadence") is not None else None
                ),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid config value: {exc}") from exc

    @classmethod
    def from_json(cls, path):
        try:
            with open(str(path)) as handle:
                data = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config JSON must be an object")
        return cls.from_dict(data)
