import numpy as np
import pytest

from kelvin_enclosure.fem import (SolverError, build_mesh, crack_jump, neumann_from_function,
                                  neumann_sin3, read_mesh, solve_neumann, write_mesh)
from kelvin_enclosure.geometry import CrackSet, GeometryError, SlabGeometry


def smooth_field(p):
    return np.cos(p[:, 0]) * np.cosh(p[:, 1])


def smooth_flux(p, n):
    return (-np.sin(p[:, 0]) * np.cosh(p[:, 1]) * n[0]
            + np.cos(p[:, 0]) * np.sinh(p[:, 1]) * n[1])


def centred(u, w):
    return u - (w @ u) / w.sum()


@pytest.fixture(scope="module")
def small():
    g = SlabGeometry(2.0, 0.4, 0.2)
    cr = CrackSet.from_joined([(0.8, 1.1)], 0.2, 2.0)
    m = build_mesh(g, cr, 0.04, 4000)
    return g, cr, m


def test_mesh_basic_invariants(small):
    _, cr, m = small
    assert m.n_components() == 1
    # counterclockwise triangles with positive area
    p = m.nodes[m.triangles]
    area = 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                  - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
    assert np.all(area > 0)
    # solid area = slab minus the two cavities
    holes = sum((hi - lo) * 0.04 for lo, hi in cr.intervals)
    assert area.sum() == pytest.approx(2.0 * 0.4 - holes, rel=1e-12)
    # both cavities reach a lateral edge and cut a 0.04 window out of it
    assert m.boundary_weights.sum() == pytest.approx(2 * (2.0 + 0.4) - 2 * 0.04, rel=1e-12)
    assert len(m.cavities) == 2


def test_stiffness_annihilates_constants(small):
    m = small[2]
    K = m.stiffness
    np.testing.assert_allclose(K @ np.ones(K.shape[0]), 0.0, atol=1e-10)
    assert abs(K - K.T).max() < 1e-12


def test_element_count_near_target():
    g = SlabGeometry.centered(8.0, 0.4, 0.2)
    cr = CrackSet.from_joined([(2.5, 3.0)], 0.2, 8.0)
    m = build_mesh(g, cr)
    assert 0.95 * 30720 <= m.n_elements <= 1.1 * 30720


def test_tips_lie_on_grid():
    g = SlabGeometry.centered(8.0, 0.4, 0.2)
    cr = CrackSet.from_joined([(2.5, 3.0), (5.1, 5.33)], 0.2, 8.0)
    m = build_mesh(g, cr, target_elements=8000)
    xs = np.unique(m.nodes[:, 0])
    for t in cr.tips:
        assert np.min(np.abs(xs - t)) < 1e-12


def test_cavity_too_wide():
    g = SlabGeometry(2.0, 0.4, 0.2)
    cr = CrackSet.from_joined([(0.8, 1.1)], 0.2, 2.0)
    with pytest.raises(GeometryError):
        build_mesh(g, cr, crack_width=0.5, target_elements=2000)


def test_trace_converges_on_smooth_field():
    # crack-free box, exact harmonic u = cos x1 cosh x2
    g = SlabGeometry(2.0, 1.0, 0.5)
    cr = CrackSet.from_joined([(0.0, 2.0)], 0.5, 2.0)
    errs = []
    for target in (2000, 8000, 32000):
        m = build_mesh(g, cr, target_elements=target)
        cd = solve_neumann(m, neumann_from_function(m, smooth_flux))
        ue = centred(smooth_field(cd.points), m.boundary_weights)
        errs.append(np.abs(cd.u_trace - ue).max())
    assert errs[-1] < 1e-4
    assert errs[0] / errs[1] > 2.5 and errs[1] / errs[2] > 2.5


def test_trace_is_mean_free_and_gauge_recorded(small):
    m = small[2]
    cd = solve_neumann(m, neumann_sin3(m))
    assert abs(m.boundary_weights @ cd.u_trace) < 1e-12
    np.testing.assert_allclose(cd.u_full[m.outer_nodes], cd.u_trace)
    assert cd.residual < 1e-12


def test_non_mean_free_data_rejected(small):
    m = small[2]
    g = neumann_sin3(m)
    bad = type(g)(m, g.values + 1.0, g.support_mask)
    with pytest.raises(SolverError):
        solve_neumann(m, bad)


def test_sin3_forcing_support_and_mean():
    g = SlabGeometry.centered(8.0, 0.4, 0.2)
    m = build_mesh(g, CrackSet.from_joined([(2.5, 3.0)], 0.2, 8.0), target_elements=4000)
    f = neumann_sin3(m, exclusion=0.05)
    assert abs(f.integral()) < 1e-12
    pts = m.nodes[m.outer_nodes]
    side = (pts[:, 0] < 0.05 - 1e-12) | (pts[:, 0] > 8.0 - 0.05 + 1e-12)
    assert np.all(f.values[side] == 0.0)
    assert not np.any(f.support_mask[side])
    # three full periods over bottom + top: antisymmetric sample pattern
    ft = neumann_sin3(m, mode="top")
    assert np.all(ft.values[pts[:, 1] < 0.4 - 1e-12] == 0.0)
    with pytest.raises(ValueError):
        neumann_sin3(m, mode="sideways")


def test_crack_free_has_no_jump():
    g = SlabGeometry.centered(8.0, 0.4, 0.2)
    cr = CrackSet.from_joined([(0.0, 8.0)], 0.2, 8.0)
    m = build_mesh(g, cr, target_elements=4000)
    cd = solve_neumann(m, neumann_sin3(m))
    assert crack_jump(cd, cr) == []


def test_jump_small_at_tips():
    g = SlabGeometry.centered(8.0, 0.4, 0.2)
    cr = CrackSet.from_joined([(2.5, 3.0)], 0.2, 8.0)
    m = build_mesh(g, cr)
    cd = solve_neumann(m, neumann_sin3(m))
    for x, jump in crack_jump(cd, cr):
        interior = np.abs(jump).max()
        for k, t in ((0, x[0]), (-1, x[-1])):
            if 0 < t < 8.0:
                assert abs(jump[k]) < 0.1 * interior


def test_mesh_file_round_trip(tmp_path, small):
    m = small[2]
    write_mesh(m, tmp_path / "m.txt")
    m2 = read_mesh(tmp_path / "m.txt")
    np.testing.assert_array_equal(m2.nodes, m.nodes)
    np.testing.assert_array_equal(m2.triangles, m.triangles)
    np.testing.assert_array_equal(m2.boundary_edges, m.boundary_edges)
    assert list(m2.edge_tags) == list(m.edge_tags)
    assert m2.cavities == m.cavities
