"""Characteristic transport: the flow map of a divergence-free velocity field.

Solves dX/dt = u(t, X) forward and backward with classical fixed-step RK4
(last step shortened to land exactly on the target time), and integrates the
variational equation d(grad X)/dt = grad u . grad X alongside the trajectory
for Jacobian tracking.  Fixed stepping keeps trajectories reproducible
bit-for-bit for a given configuration; positions are wrapped into the
periodic cell only at cloud level, never inside the integrator, so the
variational equation sees no jumps.

A velocity sampler is any object with ``velocity(t, points) -> (m, d)`` and,
where Jacobians are needed, ``gradient(t, points) -> (m, d, d)``.
"""

from dataclasses import dataclass

import numpy as np

from .basis import TWO_PI, SpectralField
from .errors import IntegrationError


class SteadyField:
    """Time-independent sampler wrapping a single spectral field."""

    def __init__(self, field):
        self.field = field

    def velocity(self, t, points):
        return self.field.evaluate(points)

    def gradient(self, t, points):
        return self.field.gradient(points)


class AnalyticField:
    """Sampler built from callables, for analytic test velocities."""

    def __init__(self, velocity, gradient=None):
        self._velocity = velocity
        self._gradient = gradient

    def velocity(self, t, points):
        return np.asarray(self._velocity(t, points), dtype=np.float64)

    def gradient(self, t, points):
        if self._gradient is None:
            raise NotImplementedError("analytic field has no gradient callable")
        return np.asarray(self._gradient(t, points), dtype=np.float64)


class SpectralTrajectory:
    """Velocity sampler from coefficient snapshots, linear in time.

    Linear interpolation of coefficient vectors preserves divergence-freeness
    exactly (a linear combination of divergence-free fields).  Queries outside
    [times[0], times[-1]] clamp to the nearest endpoint.
    """

    def __init__(self, basis, times, coefficients):
        self.basis = basis
        self.times = np.asarray(times, dtype=np.float64)
        self.coefficients = np.atleast_2d(np.asarray(coefficients, dtype=np.float64))
        if self.times.ndim != 1 or self.times.size != self.coefficients.shape[0]:
            raise ValueError("times and coefficient rows must match")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0.0):
            raise ValueError("times must be strictly increasing")
        if self.coefficients.shape[1] != len(basis):
            raise ValueError("coefficient rows must match the basis size")

    @property
    def t_start(self):
        return float(self.times[0])

    @property
    def t_end(self):
        return float(self.times[-1])

    def coefficients_at(self, t):
        times = self.times
        if t <= times[0]:
            return self.coefficients[0]
        if t >= times[-1]:
            return self.coefficients[-1]
        j = int(np.searchsorted(times, t, side="right"))
        t0, t1 = times[j - 1], times[j]
        theta = (t - t0) / (t1 - t0)
        return (1.0 - theta) * self.coefficients[j - 1] + theta * self.coefficients[j]

    def field_at(self, t):
        return SpectralField(self.basis, self.coefficients_at(t))

    def velocity(self, t, points):
        return self.basis.synthesize(self.coefficients_at(t), points)

    def gradient(self, t, points):
        return self.basis.synthesize_gradient(self.coefficients_at(t), points)

    def extended(self, times, coefficients):
        """New trajectory with extra snapshots appended after the current end."""
        times = np.asarray(times, dtype=np.float64)
        coefficients = np.atleast_2d(np.asarray(coefficients, dtype=np.float64))
        if times.size and abs(times[0] - self.times[-1]) <= 1e-14:
            times = times[1:]
            coefficients = coefficients[1:]
        return SpectralTrajectory(
            self.basis,
            np.concatenate([self.times, times]),
            np.concatenate([self.coefficients, coefficients]),
        )


@dataclass
class ParticleCloud:
    """Positions carried by the flow; kept wrapped into the periodic cell."""

    positions: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.positions = np.mod(
            np.atleast_2d(np.asarray(self.positions, dtype=np.float64)), TWO_PI
        )


def _check_finite(values, t, reference_points):
    if np.all(np.isfinite(values)):
        return
    flat = np.isfinite(values).reshape(values.shape[0], -1).all(axis=1)
    bad = int(np.flatnonzero(~flat)[0])
    raise IntegrationError(
        f"non-finite velocity sample at t={t:.6g}, x={reference_points[bad]}",
        t=t,
        x=np.array(reference_points[bad]),
    )


def _step_sizes(t0, t1, h):
    span = t1 - t0
    if span == 0.0:
        return np.empty(0)
    n = max(1, int(np.ceil(abs(span) / h - 1e-12)))
    sizes = np.full(n, np.sign(span) * h)
    sizes[-1] = span - sizes[:-1].sum()
    return sizes


def _integrate(positions, sampler, t0, t1, h):
    """RK4 path of every row of ``positions`` from t0 to t1 (either direction)."""
    x = np.array(positions, dtype=np.float64)
    t = t0
    for dt in _step_sizes(t0, t1, h):
        k1 = sampler.velocity(t, x)
        _check_finite(k1, t, x)
        k2 = sampler.velocity(t + dt / 2, x + (dt / 2) * k1)
        k3 = sampler.velocity(t + dt / 2, x + (dt / 2) * k2)
        k4 = sampler.velocity(t + dt, x + dt * k3)
        _check_finite(k4, t + dt, x)
        x = x + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt
    return x


def advance_positions(positions, sampler, t0, t1, h, wrap=False):
    """Transport raw positions from t0 to t1 >= t0; optionally wrap at output."""
    if h <= 0.0:
        raise ValueError(f"step size must be positive, got {h}")
    if t1 < t0:
        raise ValueError(f"target time {t1} precedes start time {t0}")
    out = _integrate(positions, sampler, t0, t1, h)
    if wrap:
        out = np.mod(out, TWO_PI)
    return out


def integrate_positions(positions, sampler, t0, t1, h):
    """Transport raw positions between arbitrary times (either direction)."""
    if h <= 0.0:
        raise ValueError(f"step size must be positive, got {h}")
    return _integrate(positions, sampler, t0, t1, h)


def advance(cloud, sampler, t1, h):
    """New cloud at time t1, positions wrapped into the periodic cell."""
    positions = advance_positions(cloud.positions, sampler, cloud.t, t1, h, wrap=True)
    return ParticleCloud(positions, t1)


def backtrace(x, sampler, t, h):
    """Preimage of x under the flow map: integrates the ODE from t back to 0."""
    if h <= 0.0:
        raise ValueError(f"step size must be positive, got {h}")
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    out = _integrate(np.atleast_2d(x), sampler, t, 0.0, h)
    return out[0] if single else out


def jacobian(x0, sampler, t, h):
    """Flow-map Jacobian grad X_t(x0), integrating the variational equation.

    The matrix starts from the identity at time 0 and satisfies
    d(grad X)/dt = grad u(t, X) . grad X along the trajectory; for
    divergence-free u its determinant stays 1.
    """
    if h <= 0.0:
        raise ValueError(f"step size must be positive, got {h}")
    x0 = np.asarray(x0, dtype=np.float64)
    single = x0.ndim == 1
    x = np.atleast_2d(x0).copy()
    m, d = x.shape
    jac = np.broadcast_to(np.eye(d), (m, d, d)).copy()

    def rhs(t, x, jac):
        vel = sampler.velocity(t, x)
        _check_finite(vel, t, x)
        grad = sampler.gradient(t, x)
        return vel, grad @ jac

    s = 0.0
    for dt in _step_sizes(0.0, t, h):
        kx1, kj1 = rhs(s, x, jac)
        kx2, kj2 = rhs(s + dt / 2, x + (dt / 2) * kx1, jac + (dt / 2) * kj1)
        kx3, kj3 = rhs(s + dt / 2, x + (dt / 2) * kx2, jac + (dt / 2) * kj2)
        kx4, kj4 = rhs(s + dt, x + dt * kx3, jac + dt * kj3)
        x = x + (dt / 6) * (kx1 + 2 * kx2 + 2 * kx3 + kx4)
        jac = jac + (dt / 6) * (kj1 + 2 * kj2 + 2 * kj3 + kj4)
        s += dt
    return jac[0] if single else jac
