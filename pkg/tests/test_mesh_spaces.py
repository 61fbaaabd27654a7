import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from porosplit.discretization import SIDES, BCSpec, SideBC, build_mesh, build_spaces
from porosplit.discretization.mesh import INTERIOR
from porosplit.errors import ConfigError


@pytest.mark.parametrize(
    "args,counts",
    [((1, 1, 1.0, 1.0), (4, 5, 2)), ((2, 1, 2.0, 1.0), (6, 9, 4))],
)
def test_counts(args, counts):
    m = build_mesh(*args)
    assert (m.n_vertices, m.n_edges, m.n_triangles) == counts


@pytest.mark.parametrize("nx,ny,Lx,Ly", [(0, 1, 1, 1), (1, 0, 1, 1), (1, 1, 0.0, 1), (1, 1, 1, -2), (1.5, 1, 1, 1)])
def test_invalid(nx, ny, Lx, Ly):
    with pytest.raises(ConfigError):
        build_mesh(nx, ny, Lx, Ly)


@given(st.integers(1, 7), st.integers(1, 7), st.floats(0.1, 10), st.floats(0.1, 10))
def test_topology(nx, ny, Lx, Ly):
    m = build_mesh(nx, ny, Lx, Ly)
    assert m.n_vertices - m.n_edges + m.n_triangles == 1
    assert m.n_triangles == 2 * nx * ny
    assert np.all(m.signed_areas() > 0)
    assert m.signed_areas().sum() == pytest.approx(Lx * Ly)

    incident = np.bincount(m.tri_edges.ravel(), minlength=m.n_edges)
    boundary = m.edge_side != INTERIOR
    assert np.all(incident[boundary] == 1) and np.all(incident[~boundary] == 2)
    # edges sorted and oriented low -> high
    assert np.all(m.edges[:, 0] < m.edges[:, 1])
    assert np.all(np.diff(m.edges[:, 0] * m.n_vertices + m.edges[:, 1]) > 0)
    # local edge k is opposite local vertex k
    for t in range(m.n_triangles):
        for k in range(3):
            assert m.triangles[t, k] not in m.edges[m.tri_edges[t, k]]
    perimeter = sum(m.edge_lengths()[m.boundary_edges(s)].sum() for s in SIDES)
    assert perimeter == pytest.approx(2 * (Lx + Ly))


def test_side_tags():
    m = build_mesh(3, 2, 3.0, 2.0)
    mid = m.vertices[m.edges].mean(axis=1)
    assert np.allclose(mid[m.boundary_edges("bottom"), 1], 0.0)
    assert np.allclose(mid[m.boundary_edges("top"), 1], 2.0)
    assert np.allclose(mid[m.boundary_edges("left"), 0], 0.0)
    assert np.allclose(mid[m.boundary_edges("right"), 0], 3.0)


def test_row_major_vertices():
    m = build_mesh(2, 1, 2.0, 1.0)
    assert np.allclose(m.vertices[:3], [[0, 0], [1, 0], [2, 0]])


class TestSpaces:
    def test_all_fixed_impermeable(self):
        dm = build_spaces(build_mesh(1, 1), BCSpec.uniform("fixed", "impermeable"))
        assert (dm.n_u, dm.n_q, dm.n_p) == (0, 1, 2)

    def test_all_free_drained(self):
        with pytest.warns(RuntimeWarning, match="singular mechanics operator compensated by mass term"):
            dm = build_spaces(build_mesh(1, 1), BCSpec.uniform("free", "drained"))
        assert (dm.n_u, dm.n_q, dm.n_p) == (8, 5, 2)

    def test_rollers(self):
        mesh = build_mesh(2, 2)
        bc = BCSpec({s: SideBC("fixed_x" if s in ("left", "right") else "free") for s in SIDES})
        dm = build_spaces(mesh, bc)
        # three vertices per vertical side lose their x component
        assert dm.n_u == 2 * 9 - 6
        assert np.all(dm.u_free[np.isin(dm.u_free // 2, [0, 3, 6, 2, 5, 8])] % 2 == 1)

    def test_count_formula(self):
        mesh = build_mesh(3, 4)
        bc = BCSpec(
            {
                "bottom": SideBC("fixed", "impermeable"),
                "top": SideBC("free", "drained"),
                "left": SideBC("free", "impermeable"),
                "right": SideBC("free", "drained"),
            }
        )
        dm = build_spaces(mesh, bc)
        assert dm.n_u == 2 * mesh.n_vertices - 2 * 4
        assert dm.n_q == mesh.n_edges - 3 - 4
        assert dm.n_p == mesh.n_triangles
        u, q, p = dm.slices()
        assert (u.stop, q.start, q.stop, p.start) == (dm.n_u, dm.n_u, dm.n_u + dm.n_q, dm.n_u + dm.n_q)

    def test_full_vectors(self):
        mesh = build_mesh(2, 2)
        dm = build_spaces(mesh, BCSpec.uniform("fixed", "impermeable"))
        full = dm.u_full(np.arange(dm.n_u) + 1.0)
        assert full.shape == (18,) and full[0] == 0.0 and np.count_nonzero(full) == dm.n_u
        assert dm.q_full(np.ones(dm.n_q)).sum() == dm.n_q

    def test_no_warning_when_fixed(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            build_spaces(build_mesh(2, 2), BCSpec.uniform("fixed_y", "impermeable"))

    def test_bad_side(self):
        with pytest.raises(ConfigError):
            SideBC("clamped")
        with pytest.raises(ConfigError):
            BCSpec({"bottom": SideBC()})
