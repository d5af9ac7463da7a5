import numpy as np
import pytest

from cathtwin.geometry import PhantomSpec, load_heart_model, synthesize_phantom, write_stl_binary
from cathtwin.geometry.phantom import phantom_geometry


def test_default_phantom_valid_and_deterministic(phantom):
    model, target = phantom
    model.mesh.validate_closed()
    model2, target2 = synthesize_phantom()
    np.testing.assert_array_equal(model.mesh.vertices, model2.mesh.vertices)
    np.testing.assert_array_equal(target.p1, target2.p1)


def test_target_separation_is_annulus_thickness(phantom):
    _, target = phantom
    spec = PhantomSpec()
    assert np.linalg.norm(target.p2 - target.p1) == pytest.approx(
        spec.annulus_thickness, abs=1e-9
    )
    np.testing.assert_allclose(np.linalg.norm(target.axis), 1.0, atol=1e-12)


def test_annulus_center_inside(phantom, phantom_sdf):
    model, target = phantom
    center = 0.5 * (target.p1 + target.p2)
    # analytic oracle: the annulus circle center is inside both spheres
    assert phantom_sdf.sdf(center[None])[0] < 0
    from cathtwin.geometry import containment_query
    assert containment_query(model, [center])[0].inside


def test_annulus_radius_precondition():
    with pytest.raises(ValueError, match="annulus_radius"):
        synthesize_phantom(PhantomSpec(annulus_radius=45.0))


def test_nonpositive_dimension_rejected():
    with pytest.raises(ValueError):
        synthesize_phantom(PhantomSpec(svc_length=-1.0))


def test_output_passes_load_validation(phantom):
    model, _ = phantom
    reloaded = load_heart_model(write_stl_binary(model.mesh))
    assert len(reloaded.mesh.faces) == len(model.mesh.faces)


def test_geometry_layout():
    geom = phantom_geometry(PhantomSpec())
    s = geom.spec
    # the annulus circle lies on both spheres
    d_a = np.linalg.norm(geom.annulus_center - geom.atrium_center)
    d_v = np.linalg.norm(geom.annulus_center - geom.ventricle_center)
    assert np.hypot(d_a, s.annulus_radius) == pytest.approx(s.atrium_radius)
    assert np.hypot(d_v, s.annulus_radius) == pytest.approx(s.ventricle_radius)
    np.testing.assert_allclose(np.linalg.norm(geom.annulus_axis), 1.0)


def test_port_on_or_inside(phantom):
    model, _ = phantom
    assert model.contains(model.insertion_port.origin[None])[0]
