"""Lagrangian interface: meshes for the phase boundary and its measures.

The phase region starts as an analytic disk/ball or axis-aligned
ellipse/ellipsoid strictly inside the periodic cell.  Its boundary is carried
as an oriented closed mesh (polygon in 2D, triangle mesh in 3D) whose
vertices ride the flow map, while the phase indicator at an arbitrary point
is evaluated by back-tracing the point to time zero and testing membership in
the analytic initial region.  The geometric point-in-mesh test is kept as an
independent cross-check of the back-trace pathway.

Mesh vertices are never wrapped into the periodic cell: the region stays
strictly inside by construction and wrapping would tear the connectivity.
No remeshing happens by default; a degenerate element raises and aborts the
run (signalling under-resolution) rather than silently perturbing the
interface measure.  Uniform arc-length resampling (2D only) is available
behind an explicit call for configurations that opt in.
"""

from dataclasses import dataclass

import numpy as np

from .basis import TWO_PI
from .errors import MeshInvariantError, MeshQualityError
from .flowmap import advance_positions, backtrace

_QUALITY_FLOOR = 1e-12

_SHAPES_2D = ("disk", "ellipse")
_SHAPES_3D = ("ball", "ellipsoid")


@dataclass(frozen=True)
class InitialPhase:
    """Analytic descriptor of the initial phase region.

    The closure must sit inside the open cell with margin >= max(radii)/10.
    """

    kind: str
    center: tuple
    radii: tuple

    def __post_init__(self):
        center = np.asarray(self.center, dtype=np.float64)
        radii = np.asarray(self.radii, dtype=np.float64)
        d = center.size
        if d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {d}")
        if radii.size != d:
            raise ValueError("radii must have one entry per axis")
        if self.kind not in (_SHAPES_2D if d == 2 else _SHAPES_3D):
            raise ValueError(f"unknown shape {self.kind!r} in dimension {d}")
        if self.kind in ("disk", "ball") and not np.all(radii == radii[0]):
            raise ValueError(f"{self.kind} requires equal radii")
        if np.any(radii <= 0.0):
            raise ValueError("radii must be positive")
        margin = float(np.max(radii)) / 10.0
        if np.any(center - radii < margin) or np.any(center + radii > TWO_PI - margin):
            raise ValueError(
                "shape must lie inside the cell with margin >= max(radius)/10"
            )

    @property
    def dimension(self):
        return len(self.center)

    def contains(self, points):
        """Membership in the closed region ({0,1} ints, batched)."""
        points = np.asarray(points, dtype=np.float64)
        single = points.ndim == 1
        p = np.atleast_2d(points)
        scaled = (p - np.asarray(self.center)) / np.asarray(self.radii)
        inside = (np.sum(scaled**2, axis=-1) <= 1.0).astype(np.int64)
        return int(inside[0]) if single else inside


def disk(center, radius):
    return InitialPhase("disk", tuple(center), (float(radius),) * 2)


def ball(center, radius):
    return InitialPhase("ball", tuple(center), (float(radius),) * 3)


def ellipse(center, radii):
    return InitialPhase("ellipse", tuple(center), tuple(float(r) for r in radii))


def ellipsoid(center, radii):
    return InitialPhase("ellipsoid", tuple(center), tuple(float(r) for r in radii))


@dataclass
class InterfaceMesh:
    """Oriented closed Lagrangian mesh: polygon (2D) or triangle mesh (3D)."""

    vertices: np.ndarray
    elements: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.vertices = np.atleast_2d(np.asarray(self.vertices, dtype=np.float64))
        self.elements = np.atleast_2d(np.asarray(self.elements, dtype=np.int64))
        d = self.vertices.shape[1]
        if d not in (2, 3):
            raise ValueError(f"vertex dimension must be 2 or 3, got {d}")
        if self.elements.shape[1] != d:
            raise ValueError("elements must be segments in 2D, triangles in 3D")

    @property
    def dimension(self):
        return self.vertices.shape[1]

    def element_corners(self):
        """Corner coordinates per element: (ne, d, d)."""
        return self.vertices[self.elements]

    def validate(self):
        """Check closedness, outward orientation and element quality."""
        if not np.all(np.isfinite(self.vertices)):
            raise MeshInvariantError("mesh vertices contain non-finite entries")
        if self.dimension == 2:
            counts = np.bincount(self.elements.ravel(), minlength=len(self.vertices))
            if np.any(counts != 2):
                raise MeshInvariantError("2D mesh is not a closed polygon (vertex degree != 2)")
        else:
            edges = {}
            for tri in self.elements:
                for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                    edges[(int(a), int(b))] = edges.get((int(a), int(b)), 0) + 1
            for (a, b), count in edges.items():
                if count != 1 or edges.get((b, a), 0) != 1:
                    raise MeshInvariantError(
                        "3D mesh is not closed with consistent orientation "
                        f"(edge ({a},{b}))"
                    )
        measures = element_measures(self)
        if np.any(measures < _QUALITY_FLOOR):
            bad = int(np.argmin(measures))
            raise MeshQualityError(
                f"degenerate element {bad} (measure {measures[bad]:.3e})",
                element_id=bad,
            )
        if _signed_volume(self) <= 0.0:
            raise MeshInvariantError("mesh orientation is not consistently outward")
        return self


def element_measures(mesh):
    """Edge lengths (2D) or triangle areas (3D), one per element."""
    corners = mesh.element_corners()
    if mesh.dimension == 2:
        return np.linalg.norm(corners[:, 1] - corners[:, 0], axis=1)
    cross = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    return 0.5 * np.linalg.norm(cross, axis=1)


def element_centers(mesh):
    """Segment midpoints (2D) or triangle centroids (3D)."""
    return mesh.element_corners().mean(axis=1)


def _cross_2d(a, b):
    return a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]


def _signed_volume(mesh):
    corners = mesh.element_corners()
    if mesh.dimension == 2:
        return 0.5 * float(np.sum(_cross_2d(corners[:, 0], corners[:, 1])))
    triple = np.einsum("ei,ei->e", corners[:, 0], np.cross(corners[:, 1], corners[:, 2]))
    return float(np.sum(triple)) / 6.0


def _icosahedron():
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    vertices = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    vertices /= np.linalg.norm(vertices, axis=1)[:, None]
    return vertices, faces


def _subdivide(vertices, faces):
    verts = vertices.tolist()
    cache = {}

    def midpoint(i, j):
        key = (min(i, j), max(i, j))
        if key in cache:
            return cache[key]
        v = np.asarray(verts[i]) + np.asarray(verts[j])
        v = v / np.linalg.norm(v)
        verts.append(v.tolist())
        cache[key] = len(verts) - 1
        return cache[key]

    out = []
    for a, b, c in faces:
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        out += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
    return np.array(verts), np.array(out, dtype=np.int64)


def _icosphere(level):
    vertices, faces = _icosahedron()
    for _ in range(level):
        vertices, faces = _subdivide(vertices, faces)
    return vertices, faces


def mesh_initial(phase, resolution):
    """Discretize the boundary of the initial region.

    2D: a counter-clockwise polygon with ``resolution`` >= 8 vertices.
    3D: an icosphere at subdivision level ``resolution`` >= 1, scaled by the
    semi-axes.  Vertices lie on the analytic boundary exactly.
    """
    d = phase.dimension
    center = np.asarray(phase.center)
    radii = np.asarray(phase.radii)
    if d == 2:
        if resolution < 8:
            raise ValueError(f"2D resolution must be >= 8 vertices, got {resolution}")
        theta = np.arange(resolution) * (2.0 * np.pi / resolution)
        vertices = center + np.stack(
            [radii[0] * np.cos(theta), radii[1] * np.sin(theta)], axis=-1
        )
        idx = np.arange(resolution)
        elements = np.stack([idx, (idx + 1) % resolution], axis=-1)
    else:
        if resolution < 1:
            raise ValueError(f"icosphere subdivision level must be >= 1, got {resolution}")
        unit, elements = _icosphere(resolution)
        vertices = center + unit * radii
    mesh = InterfaceMesh(vertices, elements, t=0.0)
    return mesh.validate()


def advect(mesh, sampler, t1, h):
    """Transport mesh vertices to time t1; connectivity is unchanged."""
    vertices = advance_positions(mesh.vertices, sampler, mesh.t, t1, h, wrap=False)
    out = InterfaceMesh(vertices, mesh.elements.copy(), t=t1)
    return out.validate()


def perimeter(mesh):
    """Interface measure: total edge length (2D) / total triangle area (3D)."""
    return float(np.sum(element_measures(mesh)))


def normals(mesh):
    """Per-element unit outward normals."""
    corners = mesh.element_corners()
    if mesh.dimension == 2:
        tangents = corners[:, 1] - corners[:, 0]
        raw = np.stack([tangents[:, 1], -tangents[:, 0]], axis=-1)
    else:
        raw = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    lengths = np.linalg.norm(raw, axis=1)
    if np.any(lengths < _QUALITY_FLOOR):
        bad = int(np.argmin(lengths))
        raise MeshQualityError(f"degenerate element {bad} in normal computation", element_id=bad)
    return raw / lengths[:, None]


def enclosed_volume(mesh):
    """Volume enclosed by the mesh via the divergence theorem."""
    if mesh.dimension == 2:
        counts = np.bincount(mesh.elements.ravel(), minlength=len(mesh.vertices))
        if np.any(counts != 2):
            raise MeshInvariantError("enclosed volume requires a closed polygon")
    else:
        boundary = np.bincount(
            mesh.elements.ravel(), minlength=len(mesh.vertices)
        )
        if np.any(boundary[np.unique(mesh.elements)] < 3):
            raise MeshInvariantError("enclosed volume requires a closed surface")
    volume = _signed_volume(mesh)
    if volume <= 0.0:
        raise MeshInvariantError("mesh orientation is not consistently outward")
    return volume


def curvature_pairing(mesh, grad_eta):
    """Weak mean-curvature pairing: sum of measure * (I - n n^T) : grad_eta.

    ``grad_eta`` maps (m, d) points to (m, d, d) Jacobians; the quadrature
    node is the segment midpoint (2D) or triangle centroid (3D).  With
    grad_eta = I this returns (d - 1) * perimeter identically.
    """
    n = normals(mesh)
    centers = element_centers(mesh)
    grads = np.asarray(grad_eta(centers), dtype=np.float64)
    if not np.all(np.isfinite(grads)):
        raise ValueError("grad_eta returned non-finite values")
    trace = np.einsum("eii->e", grads)
    normal_part = np.einsum("ei,eij,ej->e", n, grads, n)
    return float(np.sum(element_measures(mesh) * (trace - normal_part)))


def curvature_pairing_modes(mesh, basis):
    """Curvature pairing against every basis mode at once: (n_modes,)."""
    n = normals(mesh)
    centers = element_centers(mesh)
    grads = basis.mode_gradients(centers)
    trace = np.einsum("jeii->je", grads)
    normal_part = np.einsum("ei,jeil,el->je", n, grads, n)
    return (trace - normal_part) @ element_measures(mesh)


def indicator(x, t, sampler, phase, h):
    """Phase indicator at time t by back-tracing to the initial region.

    This is the authoritative pathway; ``point_in_mesh`` is its geometric
    cross-check.
    """
    if t == 0.0:
        return phase.contains(x)
    return phase.contains(backtrace(x, sampler, t, h))


def point_in_mesh(mesh, points):
    """Geometric membership test against the mesh (even-odd ray casting)."""
    points = np.asarray(points, dtype=np.float64)
    single = points.ndim == 1
    p = np.atleast_2d(points)
    corners = mesh.element_corners()
    if mesh.dimension == 2:
        a, b = corners[:, 0], corners[:, 1]
        ay = a[None, :, 1] - p[:, None, 1]
        by = b[None, :, 1] - p[:, None, 1]
        straddle = (ay > 0.0) != (by > 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_cross = a[None, :, 0] + ay / (ay - by) * (b[None, :, 0] - a[None, :, 0])
        hits = straddle & (x_cross > p[:, None, 0])
        inside = (np.sum(hits, axis=1) % 2).astype(np.int64)
    else:
        direction = np.array([0.57735026918962580, 0.57735026918962562, 0.57735026918962551])
        a = corners[:, 0]
        e1 = corners[:, 1] - a
        e2 = corners[:, 2] - a
        pvec = np.cross(direction, e2)
        det = np.einsum("ei,ei->e", e1, pvec)
        inside = np.zeros(len(p), dtype=np.int64)
        valid_det = np.abs(det) > 1e-300
        for i, pt in enumerate(p):
            tvec = pt - a
            u = np.einsum("ei,ei->e", tvec, pvec) / np.where(valid_det, det, 1.0)
            qvec = np.cross(tvec, e1)
            v = np.einsum("i,ei->e", direction, qvec) / np.where(valid_det, det, 1.0)
            dist = np.einsum("ei,ei->e", e2, qvec) / np.where(valid_det, det, 1.0)
            hit = valid_det & (u >= 0) & (v >= 0) & (u + v <= 1) & (dist > 0)
            inside[i] = int(np.sum(hit)) % 2
    return int(inside[0]) if single else inside


def resample_polygon(mesh, n_vertices):
    """Uniform arc-length resampling of a 2D polygon (opt-in, off by default)."""
    if mesh.dimension != 2:
        raise ValueError("resampling is only available for 2D polygons")
    order = _polygon_order(mesh)
    loop = mesh.vertices[order]
    closed = np.vstack([loop, loop[:1]])
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    targets = np.arange(n_vertices) * (arc[-1] / n_vertices)
    new_vertices = np.empty((n_vertices, 2))
    for axis in range(2):
        new_vertices[:, axis] = np.interp(targets, arc, closed[:, axis])
    idx = np.arange(n_vertices)
    elements = np.stack([idx, (idx + 1) % n_vertices], axis=-1)
    return InterfaceMesh(new_vertices, elements, t=mesh.t).validate()


def _polygon_order(mesh):
    """Vertex indices walked along the polygon connectivity."""
    succ = {int(a): int(b) for a, b in mesh.elements}
    order = [int(mesh.elements[0, 0])]
    for _ in range(len(mesh.vertices) - 1):
        order.append(succ[order[-1]])
    return np.array(order, dtype=np.int64)


@dataclass(frozen=True)
class PhaseViscosity:
    """Two-phase viscosity nu(chi) = nu_plus * chi + nu_minus * (1 - chi)."""

    nu_plus: float
    nu_minus: float

    def __post_init__(self):
        if self.nu_plus < 0.0 or self.nu_minus < 0.0:
            raise ValueError("viscosities must be nonnegative")

    def value(self, chi):
        return self.nu_minus + (self.nu_plus - self.nu_minus) * np.asarray(chi, dtype=np.float64)


def write_mesh(mesh, path):
    """Dump the mesh: CSV polyline (2D) or Wavefront OBJ (3D)."""
    path = str(path)
    if mesh.dimension == 2:
        order = _polygon_order(mesh)
        lines = ["x,y"]
        for v in mesh.vertices[order]:
            lines.append(f"{v[0]:.12g},{v[1]:.12g}")
    else:
        lines = []
        for v in mesh.vertices:
            lines.append(f"v {v[0]:.12g} {v[1]:.12g} {v[2]:.12g}")
        for e in mesh.elements:
            lines.append(f"f {e[0] + 1} {e[1] + 1} {e[2] + 1}")
    with open(path, "w") as handle:
        handle.write("\n".join(lines) + "\n")


def mesh_filename(mesh, t):
    suffix = "csv" if mesh.dimension == 2 else "obj"
    return f"interface_t{t:.6f}.{suffix}"
