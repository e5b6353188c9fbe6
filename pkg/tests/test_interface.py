import numpy as np
import pytest

from capmhd import basis as cb
from capmhd import interface as ci
from capmhd.errors import MeshInvariantError, MeshQualityError

from conftest import (
    CENTER_2D,
    CENTER_3D,
    circle_first_variation,
    rigid_rotation,
    rotate_about,
    smooth_phi_2d,
    taylor_green_2d,
)


class TestInitialPhase:
    def test_shape_touching_cell_rejected(self):
        with pytest.raises(ValueError, match="margin"):
            ci.disk((1.0, np.pi), 1.0)

    def test_margin_rule(self):
        # margin is max(radius)/10: center 1.2 with radius 1.0 leaves 0.2 > 0.1
        ci.disk((1.2, np.pi), 1.0)
        with pytest.raises(ValueError, match="margin"):
            ci.disk((1.05, np.pi), 1.0)

    def test_contains(self):
        phase = ci.ellipse(CENTER_2D, (1.0, 0.5))
        assert phase.contains(np.array(CENTER_2D)) == 1
        assert phase.contains(np.array([np.pi + 0.9, np.pi])) == 1
        assert phase.contains(np.array([np.pi, np.pi + 0.9])) == 0


class TestMeshInitial:
    def test_circle_perimeter(self, circle_mesh):
        assert ci.perimeter(circle_mesh) == pytest.approx(2 * np.pi, abs=1e-3)

    def test_sphere_area(self, sphere_mesh):
        assert ci.perimeter(sphere_mesh) == pytest.approx(4 * np.pi, abs=1e-2 * 4 * np.pi)

    def test_vertices_on_analytic_boundary(self):
        phase = ci.ellipse(CENTER_2D, (1.0, 0.6))
        mesh = ci.mesh_initial(phase, 64)
        scaled = (mesh.vertices - np.array(CENTER_2D)) / np.array([1.0, 0.6])
        np.testing.assert_allclose(np.linalg.norm(scaled, axis=1), 1.0, atol=1e-12)

    def test_resolution_floor_2d(self):
        with pytest.raises(ValueError, match=">= 8"):
            ci.mesh_initial(ci.disk(CENTER_2D, 1.0), 4)

    def test_resolution_floor_3d(self):
        with pytest.raises(ValueError, match=">= 1"):
            ci.mesh_initial(ci.ball(CENTER_3D, 1.0), 0)


class TestAdvect:
    def test_zero_velocity_identity(self, circle_mesh):
        zero = taylor_green_2d(amplitude=0.0)
        out = ci.advect(circle_mesh, zero, 1.0, 0.1)
        np.testing.assert_array_equal(out.vertices, circle_mesh.vertices)
        np.testing.assert_array_equal(out.elements, circle_mesh.elements)
        assert out.t == 1.0

    def test_rigid_rotation_full_turn(self, circle_mesh):
        out = ci.advect(circle_mesh, rigid_rotation(), 2 * np.pi, 1e-3)
        assert np.max(np.linalg.norm(out.vertices - circle_mesh.vertices, axis=1)) <= 1e-5

    def test_volume_conserved_divergence_free(self, circle_mesh):
        out = ci.advect(circle_mesh, taylor_green_2d(), 0.5, 0.01)
        drift = abs(ci.enclosed_volume(out) - np.pi) / np.pi
        assert drift <= 1e-3

    def test_volume_drift_order(self):
        # halving both the edge length and the flow step reduces drift >= 2x
        tg = taylor_green_2d()
        coarse = ci.advect(ci.mesh_initial(ci.disk(CENTER_2D, 1.0), 256), tg, 0.5, 0.01)
        fine = ci.advect(ci.mesh_initial(ci.disk(CENTER_2D, 1.0), 512), tg, 0.5, 0.005)
        drift_coarse = abs(ci.enclosed_volume(coarse) - np.pi) / np.pi
        drift_fine = abs(ci.enclosed_volume(fine) - np.pi) / np.pi
        assert drift_coarse <= 1e-3
        assert drift_fine <= 1e-4
        assert drift_coarse / drift_fine >= 2.0

    def test_perimeter_bounded_by_gradient_exponential(self):
        # discrete form of the BV transport estimate: perimeter growth is
        # controlled by exp of the time-integrated velocity-gradient norm
        tg = taylor_green_2d()
        mesh = ci.mesh_initial(ci.disk(CENTER_2D, 1.0), 256)
        t_final, n_checks = 0.5, 10
        lip_integral = 0.0
        current = mesh
        for i in range(n_checks):
            t0, t1 = i * t_final / n_checks, (i + 1) * t_final / n_checks
            grads = tg.gradient(t0, current.vertices)
            op_norm = np.max(np.linalg.norm(grads, ord=2, axis=(1, 2)))
            lip_integral += op_norm * (t1 - t0)
            current = ci.advect(current, tg, t1, 0.01)
        bound = np.exp(lip_integral) * ci.perimeter(mesh)
        assert ci.perimeter(current) <= bound


class TestIndicator:
    def test_initial_time(self):
        phase = ci.disk(CENTER_2D, 1.0)
        zero = taylor_green_2d(amplitude=0.0)
        assert ci.indicator(np.array(CENTER_2D), 0.0, zero, phase, 0.1) == 1
        assert ci.indicator(np.array([0.5, 0.5]), 0.0, zero, phase, 0.1) == 0

    def test_rotated_inside_point(self):
        phase = ci.disk(CENTER_2D, 1.0)
        inside = np.array([np.pi + 0.7, np.pi])
        rotated = rotate_about(inside, CENTER_2D, 1.3)
        assert ci.indicator(rotated, 1.3, rigid_rotation(), phase, 1e-3) == 1

    def test_consistent_with_mesh_test(self):
        # back-trace pathway vs the geometric cross-check, away from the interface
        phase = ci.disk(CENTER_2D, 1.0)
        mesh = ci.mesh_initial(phase, 256)
        tg = taylor_green_2d()
        t = 0.4
        advected = ci.advect(mesh, tg, t, 0.01)
        edge = 2 * np.pi / 256
        rng = np.random.default_rng(67)
        points = rng.uniform(0.5, 2 * np.pi - 0.5, (400, 2))
        distances = np.min(
            np.linalg.norm(points[:, None, :] - advected.vertices[None, :, :], axis=2),
            axis=1,
        )
        far = points[distances >= 2 * edge]
        assert len(far) >= 100
        by_trace = ci.indicator(far, t, tg, phase, 0.01)
        by_mesh = ci.point_in_mesh(advected, far)
        np.testing.assert_array_equal(by_trace, by_mesh)


class TestPerimeter:
    def test_circle(self, circle_mesh):
        assert ci.perimeter(circle_mesh) == pytest.approx(2 * np.pi, abs=1e-3)

    def test_sphere(self, sphere_mesh):
        assert ci.perimeter(sphere_mesh) == pytest.approx(4 * np.pi, rel=1e-2)

    def test_isometry_invariance(self, circle_mesh):
        rotated = ci.advect(circle_mesh, rigid_rotation(), 1.0, 1e-3)
        assert abs(ci.perimeter(rotated) - ci.perimeter(circle_mesh)) <= 1e-6


class TestNormals:
    def test_circle_outward(self, circle_mesh):
        n = ci.normals(circle_mesh)
        centers = ci.element_centers(circle_mesh)
        radial = centers - np.array(CENTER_2D)
        radial /= np.linalg.norm(radial, axis=1)[:, None]
        assert np.max(np.linalg.norm(n - radial, axis=1)) <= 1e-2
        np.testing.assert_allclose(np.linalg.norm(n, axis=1), 1.0, atol=1e-12)

    def test_sphere_radial_and_north_pole(self, sphere_mesh):
        # facet normals approximate the sphere normal at each centroid; the
        # element nearest the pole points along +z up to its centroid offset
        n = ci.normals(sphere_mesh)
        centers = ci.element_centers(sphere_mesh)
        radial = centers - np.array(CENTER_3D)
        radial /= np.linalg.norm(radial, axis=1)[:, None]
        assert np.max(np.linalg.norm(n - radial, axis=1)) <= 1e-2
        top = np.argmax(centers[:, 2])
        assert n[top] @ np.array([0.0, 0.0, 1.0]) >= 0.995

    def test_flipped_orientation_rejected(self, circle_mesh):
        flipped = ci.InterfaceMesh(circle_mesh.vertices, circle_mesh.elements[:, ::-1], t=0.0)
        with pytest.raises(MeshInvariantError, match="orientation"):
            flipped.validate()

    def test_degenerate_element_rejected(self):
        vertices = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 0.0]])
        elements = np.array([[0, 1], [1, 2], [2, 0]])
        mesh = ci.InterfaceMesh(vertices, elements, t=0.0)
        with pytest.raises(MeshQualityError) as err:
            mesh.validate()
        assert err.value.element_id == 1


class TestCurvaturePairing:
    def test_identity_gradient_circle(self, circle_mesh):
        value = ci.curvature_pairing(
            circle_mesh, lambda p: np.broadcast_to(np.eye(2), (len(p), 2, 2))
        )
        assert value == ci.perimeter(circle_mesh)

    def test_identity_gradient_sphere(self, sphere_mesh):
        value = ci.curvature_pairing(
            sphere_mesh, lambda p: np.broadcast_to(np.eye(3), (len(p), 3, 3))
        )
        assert value == pytest.approx(2.0 * ci.perimeter(sphere_mesh), rel=1e-14)

    def test_against_circle_curvature_oracle(self):
        mesh = ci.mesh_initial(ci.disk(CENTER_2D, 1.0), 256)
        got = ci.curvature_pairing(mesh, lambda p: smooth_phi_2d(p)[1])
        exact = circle_first_variation(CENTER_2D, 1.0, smooth_phi_2d)
        assert got == pytest.approx(exact, rel=1e-3)

    def test_modes_variant_matches_generic(self, circle_mesh):
        basis = cb.make_basis(2, 2)
        stacked = ci.curvature_pairing_modes(circle_mesh, basis)
        for j in [0, 3, len(basis) - 1]:
            coeffs = np.zeros(len(basis))
            coeffs[j] = 1.0
            mode_field = cb.SpectralField(basis, coeffs)
            direct = ci.curvature_pairing(circle_mesh, mode_field.gradient)
            assert stacked[j] == pytest.approx(direct, abs=1e-14)


class TestEnclosedVolume:
    def test_circle(self, circle_mesh):
        assert ci.enclosed_volume(circle_mesh) == pytest.approx(np.pi, abs=1e-3)

    def test_sphere(self, sphere_mesh):
        assert ci.enclosed_volume(sphere_mesh) == pytest.approx(4 * np.pi / 3, rel=1e-2)

    def test_taylor_green_advection(self, circle_mesh):
        out = ci.advect(circle_mesh, taylor_green_2d(), 0.5, 0.005)
        assert ci.enclosed_volume(out) == pytest.approx(np.pi, rel=1e-3)

    def test_open_mesh_rejected(self, circle_mesh):
        open_mesh = ci.InterfaceMesh(circle_mesh.vertices, circle_mesh.elements[:-1], t=0.0)
        with pytest.raises(MeshInvariantError, match="closed"):
            ci.enclosed_volume(open_mesh)


class TestResample:
    def test_uniform_resampling_preserves_geometry(self):
        mesh = ci.mesh_initial(ci.ellipse(CENTER_2D, (1.0, 0.5)), 200)
        out = ci.resample_polygon(mesh, 400)
        assert len(out.vertices) == 400
        assert ci.perimeter(out) == pytest.approx(ci.perimeter(mesh), rel=1e-3)
        assert ci.enclosed_volume(out) == pytest.approx(ci.enclosed_volume(mesh), rel=1e-3)

    def test_rejected_in_3d(self, sphere_mesh):
        with pytest.raises(ValueError, match="2D"):
            ci.resample_polygon(sphere_mesh, 100)


class TestPhaseViscosity:
    def test_blend(self):
        nu = ci.PhaseViscosity(0.3, 0.1)
        assert nu.value(1.0) == pytest.approx(0.3)
        assert nu.value(0.0) == pytest.approx(0.1)
        np.testing.assert_allclose(nu.value(np.array([0, 1])), [0.1, 0.3])

    def test_negative_rejected(self):
        with pytest.raises(ValueError, match="nonnegative"):
            ci.PhaseViscosity(-0.1, 0.1)


class TestMeshIO:
    def test_csv_polyline_round_shape(self, tmp_path, circle_mesh):
        path = tmp_path / ci.mesh_filename(circle_mesh, 0.25)
        assert path.name == "interface_t0.250000.csv"
        ci.write_mesh(circle_mesh, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "x,y"
        assert len(lines) == 1 + len(circle_mesh.vertices)

    def test_obj_output(self, tmp_path, sphere_mesh):
        path = tmp_path / ci.mesh_filename(sphere_mesh, 0.0)
        assert path.suffix == ".obj"
        ci.write_mesh(sphere_mesh, path)
        text = path.read_text().splitlines()
        n_v = sum(1 for line in text if line.startswith("v "))
        n_f = sum(1 for line in text if line.startswith("f "))
        assert n_v == len(sphere_mesh.vertices)
        assert n_f == len(sphere_mesh.elements)
