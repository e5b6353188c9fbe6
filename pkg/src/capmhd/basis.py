"""Divergence-free trigonometric basis on the periodic cell [0, 2*pi)^d.

Fields live in the span of real Fourier modes

    eta(x) = norm * trig(k . x) * e,        trig in {cos, sin},

with integer wavevector k != 0 restricted to a canonical half-space (so the
cos/sin pair is not duplicated through k -> -k) and unit polarization e
orthogonal to k.  Every mode is mean-free, exactly divergence-free by
construction, and an eigenfunction of the periodic Stokes operator with
eigenvalue |k|^2.  The modes are orthonormal in L2, so coefficient vectors
carry the L2 geometry (Parseval) and the mass matrix is the identity.

Quadrature is a tensor-product uniform grid, which integrates periodic
trigonometric polynomials exactly once the grid resolves their highest
wavenumber (order per axis >= 2*kmax + 1 for quadratic forms of the basis).
"""

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

_PHASES = ("cos", "sin")


def polarization_axis(wavevector, index):
    """Integer vector orthogonal to ``wavevector`` for polarization ``index``.

    The returned vector has integer entries, so its dot product with the
    wavevector vanishes in exact arithmetic.  In 2D the single polarization
    is the quarter-turn of k; in 3D the two polarizations are k x e_a and
    k x (k x e_a), where e_a is the coordinate axis of smallest |k_i|.
    """
    k = np.asarray(wavevector, dtype=np.int64)
    d = k.size
    if d == 2:
        if index != 0:
            raise ValueError(f"2D modes have a single polarization, got index {index}")
        return np.array([-k[1], k[0]], dtype=np.int64)
    if d == 3:
        if index not in (0, 1):
            raise ValueError(f"3D modes have polarizations 0 and 1, got index {index}")
        axis = np.zeros(3, dtype=np.int64)
        axis[int(np.argmin(np.abs(k)))] = 1
        first = np.cross(k, axis)
        if index == 0:
            return first
        return np.cross(k, first)
    raise ValueError(f"unsupported dimension {d}")


@dataclass(frozen=True)
class BasisMode:
    """One real trigonometric divergence-free mode.

    Attributes:
        wavevector: integer wavevector k, nonzero, in the canonical half-space.
        phase: "cos" or "sin".
        polarization: index 0..d-2 selecting the unit vector orthogonal to k.
        normalization: positive factor making the mode L2-unit on the cell.
    """

    wavevector: tuple
    phase: str
    polarization: int
    normalization: float

    def __post_init__(self):
        k = np.asarray(self.wavevector, dtype=np.int64)
        if k.size not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {k.size}")
        if not np.any(k):
            raise ValueError("wavevector must be nonzero (mean-free fields)")
        if self.phase not in _PHASES:
            raise ValueError(f"phase must be one of {_PHASES}, got {self.phase!r}")
        if self.normalization <= 0.0:
            raise ValueError("normalization must be positive")
        polarization_axis(k, self.polarization)  # validates the index

    @property
    def dimension(self):
        return len(self.wavevector)

    @property
    def eigenvalue(self):
        """Stokes eigenvalue |k|^2 of the mode."""
        k = np.asarray(self.wavevector, dtype=np.float64)
        return float(k @ k)

    def polarization_vector(self):
        """Unit polarization vector (float) orthogonal to the wavevector."""
        axis = polarization_axis(self.wavevector, self.polarization)
        return axis / np.linalg.norm(axis)


def _half_space(k):
    for entry in k:
        if entry > 0:
            return True
        if entry < 0:
            return False
    return False


def enumerate_modes(dimension, kmax):
    """All basis modes with 0 < max|k_i| <= kmax, canonically ordered.

    Wavevectors are restricted to the half-space whose first nonzero entry is
    positive; each carries (d-1) polarizations and both phases.  The ordering
    is lexicographic by (|k|^2, k, polarization, phase), so eigenvalues are
    nondecreasing along the list.
    """
    if dimension not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {dimension}")
    if kmax < 1:
        raise ValueError(f"kmax must be >= 1, got {kmax}")
    norm = math.sqrt(2.0 / TWO_PI**dimension)
    wavevectors = [
        k
        for k in itertools.product(range(-kmax, kmax + 1), repeat=dimension)
        if any(k) and _half_space(k)
    ]
    wavevectors.sort(key=lambda k: (sum(c * c for c in k), k))
    modes = []
    for k in wavevectors:
        for pol in range(dimension - 1):
            for phase in _PHASES:
                modes.append(BasisMode(k, phase, pol, norm))
    return modes


class Basis:
    """Ordered mode list with packed arrays for vectorized evaluation."""

    def __init__(self, modes, length=TWO_PI):
        modes = list(modes)
        if not modes:
            raise ValueError("basis must contain at least one mode")
        dims = {m.dimension for m in modes}
        if len(dims) != 1:
            raise ValueError("all modes must share one dimension")
        self.modes = modes
        self.dimension = dims.pop()
        self.length = float(length)
        self.wavevectors = np.array([m.wavevector for m in modes], dtype=np.float64)
        self.polarizations = np.array([m.polarization_vector() for m in modes])
        self.normalizations = np.array([m.normalization for m in modes])
        self.is_sine = np.array([m.phase == "sin" for m in modes])
        self.eigenvalues = np.array([m.eigenvalue for m in modes])

    def __len__(self):
        return len(self.modes)

    @property
    def kmax(self):
        return int(np.max(np.abs(self.wavevectors)))

    def _phase_angles(self, points):
        return points @ self.wavevectors.T

    def phase_values(self, points):
        """trig(k_j . x_m) as an (m, n) array."""
        theta = self._phase_angles(points)
        out = np.empty_like(theta)
        sin = self.is_sine
        out[:, sin] = np.sin(theta[:, sin])
        out[:, ~sin] = np.cos(theta[:, ~sin])
        return out

    def phase_derivatives(self, points):
        """d/dtheta trig(k_j . x_m) as an (m, n) array."""
        theta = self._phase_angles(points)
        out = np.empty_like(theta)
        sin = self.is_sine
        out[:, sin] = np.cos(theta[:, sin])
        out[:, ~sin] = -np.sin(theta[:, ~sin])
        return out

    def synthesize(self, coefficients, points):
        """Field values at ``points`` for one coefficient vector: (m, d)."""
        ph = self.phase_values(points)
        weights = (coefficients * self.normalizations)[:, None] * self.polarizations
        return ph @ weights

    def synthesize_gradient(self, coefficients, points):
        """Field Jacobians (grad u)_il = d_l u_i at ``points``: (m, d, d)."""
        dph = self.phase_derivatives(points)
        scaled = coefficients * self.normalizations
        outer = (
            scaled[:, None, None]
            * self.polarizations[:, :, None]
            * self.wavevectors[:, None, :]
        )
        return np.tensordot(dph, outer, axes=([1], [0]))

    def mode_values(self, points):
        """All modes at all points: (n, m, d)."""
        ph = self.phase_values(points)
        return ph.T[:, :, None] * (self.normalizations[:, None] * self.polarizations)[:, None, :]

    def mode_gradients(self, points):
        """Jacobians of all modes at all points: (n, m, d, d)."""
        dph = self.phase_derivatives(points)
        outer = (
            self.normalizations[:, None, None]
            * self.polarizations[:, :, None]
            * self.wavevectors[:, None, :]
        )
        return dph.T[:, :, None, None] * outer[:, None, :, :]


def make_basis(dimension, kmax, length=TWO_PI):
    return Basis(enumerate_modes(dimension, kmax), length=length)


@dataclass
class SpectralField:
    """A field in the span of ``basis``, stored by its coefficient vector."""

    basis: Basis
    coefficients: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.coefficients is None:
            self.coefficients = np.zeros(len(self.basis))
        self.coefficients = np.asarray(self.coefficients, dtype=np.float64)
        if self.coefficients.shape != (len(self.basis),):
            raise ValueError(
                f"coefficient vector has length {self.coefficients.size}, "
                f"basis has {len(self.basis)} modes"
            )
        if not np.all(np.isfinite(self.coefficients)):
            raise ValueError("coefficients must be finite")

    @property
    def dimension(self):
        return self.basis.dimension

    def evaluate(self, x):
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        values = self.basis.synthesize(self.coefficients, np.atleast_2d(x))
        return values[0] if single else values

    def gradient(self, x):
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        grads = self.basis.synthesize_gradient(self.coefficients, np.atleast_2d(x))
        return grads[0] if single else grads

    def norm(self):
        """L2 norm of the field (= Euclidean norm of coefficients)."""
        return float(np.linalg.norm(self.coefficients))

    def grad_norm_sq(self):
        """Squared L2 norm of the gradient: sum_j |k_j|^2 c_j^2."""
        return float(np.sum(self.basis.eigenvalues * self.coefficients**2))

    def with_coefficients(self, coefficients):
        return SpectralField(self.basis, np.array(coefficients, dtype=np.float64))


def evaluate(field, x):
    """Field value(s) at x; exact linearity in coefficients, periodic in x."""
    return field.evaluate(x)


def evaluate_gradient(field, x):
    """Jacobian matrix (grad u)_il = d_l u_i at x; trace vanishes to round-off."""
    return field.gradient(x)


def quadrature_rule(dimension, order, length=TWO_PI):
    """Uniform tensor grid points (order^d, d) and the constant weight.

    The uniform (trapezoidal) rule is spectrally exact for periodic
    integrands resolved by the grid.
    """
    if order < 1:
        raise ValueError(f"quadrature order must be >= 1, got {order}")
    axis = np.arange(order) * (length / order)
    grids = np.meshgrid(*([axis] * dimension), indexing="ij")
    points = np.stack([g.reshape(-1) for g in grids], axis=-1)
    weight = (length / order) ** dimension
    return points, weight


def default_quadrature_order(kmax):
    """Default order per axis, 4*kmax (dealiases quadratic forms)."""
    return 4 * int(kmax)


def _sample(sampler, points):
    values = np.asarray(sampler(points), dtype=np.float64)
    if values.shape != points.shape:
        values = np.array([sampler(p) for p in points], dtype=np.float64)
    return values


def project_L2(sampler, basis, order):
    """L2 projection of ``sampler`` onto the span of ``basis``.

    coefficient_j = quadrature of integral sampler . eta_j dx.  Projecting a
    field already in the span is the identity up to quadrature error; with
    ``order`` below the Nyquist requirement of the basis a diagnostic warning
    is emitted (the projection is still computed).
    """
    if order < 2 * basis.kmax + 1:
        warnings.warn(
            f"quadrature order {order} is below the Nyquist requirement "
            f"{2 * basis.kmax + 1} for kmax={basis.kmax}; projection may alias",
            RuntimeWarning,
            stacklevel=2,
        )
    points, weight = quadrature_rule(basis.dimension, order, basis.length)
    values = _sample(sampler, points)
    ph = basis.phase_values(points)
    pol_dot = values @ basis.polarizations.T
    coefficients = weight * basis.normalizations * np.sum(ph * pol_dot, axis=0)
    return SpectralField(basis, coefficients)


def gram_matrix(basis, order):
    """Quadrature Gram matrix of the basis (identity for the default basis)."""
    points, weight = quadrature_rule(basis.dimension, order, basis.length)
    ph = basis.phase_values(points) * basis.normalizations
    return weight * (ph.T @ ph) * (basis.polarizations @ basis.polarizations.T)


def convection_pairing(a_values, b_values, basis, points, weight):
    """Vector of integrals a . ((b . grad) eta_j) dx over all modes j.

    ``a_values`` and ``b_values`` are (m, d) samples at the quadrature
    ``points``.  Uses the rank-one structure grad(eta_j) = dtrig * e_j k_j^T,
    so a . (grad(eta_j) b) = dtrig(k_j . x) (a . e_j)(k_j . b).
    """
    dph = basis.phase_derivatives(points)
    a_pol = a_values @ basis.polarizations.T
    b_wav = b_values @ basis.wavevectors.T
    return weight * basis.normalizations * np.sum(dph * a_pol * b_wav, axis=0)


def strain_pairing(du_values, nu_values, basis, points, weight):
    """Vector of integrals 2 nu Du : D(eta_j) dx over all modes j.

    ``du_values`` are symmetric strain-rate samples (m, d, d); since Du is
    symmetric, Du : D(eta_j) = dtrig(k_j . x) (e_j . Du . k_j).
    """
    dph = basis.phase_derivatives(points)
    contracted = np.einsum(
        "ni,mil,nl->mn", basis.polarizations, du_values, basis.wavevectors
    )
    nu_values = np.asarray(nu_values, dtype=np.float64)
    return (
        2.0
        * weight
        * basis.normalizations
        * np.sum(nu_values[:, None] * dph * contracted, axis=0)
    )
