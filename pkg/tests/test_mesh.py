import numpy as np
import pytest

from eave.mesh import (
    AcutenessFailure,
    DualityViolation,
    MeshFormatError,
    MeshValidationError,
    PolygonalMesh,
    build_dual_pairing,
    generate_hexa_dual,
    generate_ncvx,
    generate_triangle_mesh,
    generate_voro_dual,
    generate_voronoi,
    read_mesh,
    write_mesh,
)
from eave.mesh.dual import hexagonal_seeds
from eave.mesh.generators import NCVX_DENT, ncvx_y_lines
from eave.mesh.polymesh import BOUNDARY, signed_area
from eave.mesh.voronoi import clipped_voronoi, lloyd, triangle_angles

GENERATORS = [
    ("tri-right", lambda: generate_triangle_mesh(5)),
    ("tri-equilateral", lambda: generate_triangle_mesh(6, "equilateral")),
    ("tri-perturbed", lambda: generate_triangle_mesh(7, "perturbed", seed=2)),
    ("hexa-dual", lambda: generate_hexa_dual(6).primary),
    ("voro-dual", lambda: generate_voro_dual(60, seed=4).primary),
    ("voro", lambda: generate_voronoi(50, 0, seed=1)),
    ("opti", lambda: generate_voronoi(50, 30, seed=1)),
    ("ncvx", lambda: generate_ncvx(4)),
]


def check_tiling(mesh):
    mesh.validate()
    areas = np.array([signed_area(mesh.cell_vertices(k)) for k in range(mesh.n_cells)])
    assert np.all(areas > 0.0)
    assert abs(areas.sum() - 1.0) <= 1e-10
    counts = (mesh.edge_cells != BOUNDARY).sum(1)
    bnd = mesh.edge_cells[:, 1] == BOUNDARY
    assert np.all(counts[bnd] == 1) and np.all(counts[~bnd] == 2)
    assert np.allclose(np.hypot(*mesh.tangents.T), mesh.edge_lengths)
    # boundary edges lie on the sides of the square
    V, E = mesh.vertices, mesh.edges[bnd]
    a, b = V[E[:, 0]], V[E[:, 1]]
    on = ((a[:, 0] == b[:, 0]) & np.isin(a[:, 0], [0.0, 1.0])) | ((a[:, 1] == b[:, 1]) & np.isin(a[:, 1], [0.0, 1.0]))
    assert np.all(on)


@pytest.mark.parametrize("name,gen", GENERATORS, ids=[g[0] for g in GENERATORS])
def test_generators_tile_the_square(name, gen):
    check_tiling(gen())


@pytest.mark.parametrize("name,gen", GENERATORS, ids=[g[0] for g in GENERATORS])
def test_generators_deterministic(name, gen):
    assert gen() == gen()


def test_triangle_counts():
    m = generate_triangle_mesh(1)
    assert (m.n_cells, m.n_vertices) == (2, 4)
    m = generate_triangle_mesh(2)
    assert (m.n_cells, m.n_vertices) == (8, 9)
    with pytest.raises(ValueError):
        generate_triangle_mesh(0)
    with pytest.raises(ValueError):
        generate_triangle_mesh(3, "criss")


def test_equilateral_interior_triangles_acute():
    m = generate_triangle_mesh(8, "equilateral")
    T = m.cell_idx.reshape(-1, 3)
    ang = triangle_angles(m.vertices, T)
    V = m.vertices[T]
    touches_side = np.any((V[..., 0] == 0.0) | (V[..., 0] == 1.0), axis=1)
    assert np.all(ang[~touches_side] < np.pi / 2)


def test_single_seed_voronoi_is_square():
    vr = clipped_voronoi([[0.3, 0.6]])
    assert vr.mesh.n_cells == 1
    assert sorted(map(tuple, vr.mesh.vertices.tolist())) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert len(vr.triangles) == 0


def test_lloyd_reduces_area_variation():
    rng = np.random.default_rng(7)
    hist = []
    lloyd(rng.uniform(size=(64, 2)), 40, history=hist)
    assert len(hist) == 41
    assert np.all(np.diff(hist[:10]) < 0)
    assert hist[-1] < 0.3 * hist[0]


def test_voronoi_validation():
    with pytest.raises(ValueError):
        generate_voronoi(0)
    with pytest.raises(ValueError):
        generate_voronoi(10, -1)


def test_ncvx_structure():
    n = 4
    m = generate_ncvx(n)
    assert m.n_cells == 3 * n * n
    ys = np.unique(m.vertices[:, 1])
    assert np.all(np.isin(ys, ncvx_y_lines(n)))
    reflex = 0
    for k in range(m.n_cells):
        xy = m.cell_vertices(k)
        a, b = np.roll(xy, 1, 0) - xy, np.roll(xy, -1, 0) - xy
        cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
        reflex += int(np.any(cross > 0))  # turning clockwise at a vertex of a CCW polygon
    assert reflex == n * n
    assert len(m.cell_vertices(0)) == 8
    dent = m.vertices[m.cells[0][3]]
    assert dent == pytest.approx([(1 - NCVX_DENT) / n, 0.5 / n])
    with pytest.raises(ValueError):
        generate_ncvx(1)


# -- dual pairs ----------------------------------------------------------------
def test_hexa_dual_invariants():
    pair = generate_hexa_dual(8)
    mesh = pair.primary
    inner = mesh.interior_edges
    # |E*||E| = 2|D_E|
    rel = np.abs(pair.dual_length[inner] * mesh.edge_lengths[inner] - 2 * pair.patch_area[inner])
    assert np.all(rel <= 1e-12 * pair.patch_area[inner])
    # the vertex <-> triangle map is a bijection onto interior vertices
    iv = np.flatnonzero(~mesh.boundary_flags)
    assert sorted(pair.triangle_to_vertex.tolist()) == iv.tolist()
    assert np.all(pair.vertex_to_triangle[pair.triangle_to_vertex] == np.arange(pair.n_triangles))
    ang = triangle_angles(pair.seeds, pair.dual_triangles)
    assert np.all(ang < np.pi / 2)
    assert len(pair.pairing) == len(inner)
    p = pair.patch(int(inner[0]))
    assert p.area == pytest.approx(0.5 * p.dual_length * mesh.edge_lengths[inner[0]])


def test_hexa_dual_interior_edges_are_regular():
    n = 8
    pair = generate_hexa_dual(n)
    mesh = pair.primary
    m = int(np.floor(2 * n / np.sqrt(3)))
    # interior hexagons are regular in x-scaled coordinates; every interior
    # dual edge has length 1/n (row neighbours) or sqrt(1/(4n^2) + 1/m^2)
    s = mesh.edge_cells[:, 1] != BOUNDARY
    d = pair.dual_length[s]
    allowed = np.array([1.0 / n, np.hypot(0.5 / n, 1.0 / m)])
    assert np.all(np.min(np.abs(d[:, None] - allowed[None]), axis=1) < 1e-12)
    touches = np.zeros(mesh.n_cells, dtype=bool)
    touches[mesh.edge_cells[~s, 0]] = True
    sizes = np.array([len(c) for c in mesh.cells])
    assert np.all(sizes[~touches] == 6) and (~touches).sum() > 0


def test_ideal_hexagon_weights():
    # regular hexagon with circumradius 1/sqrt(3) around a seed: the dual
    # edge to each neighbour has length 1 and the hexagon side is 1/sqrt(3)
    ang = np.pi / 6 + np.arange(6) * np.pi / 3
    hexagon = np.stack([np.cos(ang), np.sin(ang)], 1) / np.sqrt(3)
    from eave.vem import fvm_weights

    w = fvm_weights(hexagon[None], np.zeros((1, 2)))[0]
    assert np.allclose(w, np.sqrt(3) / 2, atol=1e-14)
    tri_angles = triangle_angles(np.array([[0, 0], [1, 0], [0.5, np.sqrt(3) / 2]]), np.array([[0, 1, 2]]))
    assert np.allclose(tri_angles, np.pi / 3)


def test_perturbed_circumcenter_rejected():
    pair = generate_hexa_dual(6)
    seeds = pair.seeds.copy()
    seeds[10] += [1e-3, 0.0]
    with pytest.raises(DualityViolation):
        build_dual_pairing(pair.primary, seeds, pair.dual_triangles)
    # moving a primary vertex breaks the circumcenter match instead
    V = pair.primary.vertices.copy()
    v = int(pair.triangle_to_vertex[0])
    V[v] += [1e-3, 0.0]
    moved = PolygonalMesh(V, pair.primary.cells)
    with pytest.raises(DualityViolation):
        build_dual_pairing(moved, pair.seeds, pair.dual_triangles)


def test_obtuse_triangle_rejected():
    seeds = np.array([[0.2, 0.2], [0.8, 0.25], [0.5, 0.3], [0.5, 0.8]])
    vr = clipped_voronoi(seeds)
    ang = triangle_angles(vr.seeds, vr.triangles)
    assert np.any(ang >= np.pi / 2)
    with pytest.raises(DualityViolation) as exc:
        build_dual_pairing(vr.mesh, vr.seeds, vr.triangles)
    assert exc.value.triangle is not None


def test_voro_dual_acute_and_deterministic():
    a = generate_voro_dual(120, seed=5)
    b = generate_voro_dual(120, seed=5)
    assert a == b
    assert np.all(triangle_angles(a.seeds, a.dual_triangles) < np.pi / 2)
    assert len(a.pairing) == len(a.primary.interior_edges)


def test_voro_dual_cap_raises():
    with pytest.raises(AcutenessFailure) as exc:
        generate_voro_dual(200, seed=0, lloyd_iters=0, max_rounds=0)
    assert exc.value.n_obtuse > 0


def test_hexagonal_seed_rows():
    s = hexagonal_seeds(4)
    m = int(np.floor(8 / np.sqrt(3)))
    assert len(s) == (m + 1) // 2 * 4 + m // 2 * 3
    assert np.all((s > 0) & (s < 1))


# -- file format -------------------------------------------------------------
def test_round_trip_hexa_dual(tmp_path):
    pair = generate_hexa_dual(5)
    p = tmp_path / "h.mesh"
    write_mesh(pair, p)
    back = read_mesh(p)
    assert back == pair
    assert np.array_equal(back.primary.vertices, pair.primary.vertices)
    assert np.array_equal(back.dual_length, pair.dual_length)


def test_round_trip_plain_mesh(tmp_path):
    m = generate_voronoi(30, 3, seed=2)
    p = tmp_path / "v.mesh"
    write_mesh(m, p)
    back = read_mesh(p)
    assert back == m and np.array_equal(back.vertices, m.vertices)
    write_mesh(back, tmp_path / "v2.mesh")
    assert (tmp_path / "v2.mesh").read_bytes() == p.read_bytes()


def test_truncated_file(tmp_path):
    p = tmp_path / "t.mesh"
    write_mesh(generate_triangle_mesh(2), p)
    lines = p.read_text().splitlines()
    p.write_text("\n".join(lines[:-3]) + "\n")
    with pytest.raises(MeshFormatError) as exc:
        read_mesh(p)
    assert exc.value.line is not None and "end of file" in str(exc.value)


def test_bad_number_reports_line(tmp_path):
    p = tmp_path / "b.mesh"
    p.write_text("poly-mesh v1\nVERTICES 3\n0 0\n1 x\n0 1\nCELLS 1\n0 1 2\n")
    with pytest.raises(MeshFormatError) as exc:
        read_mesh(p)
    assert exc.value.line == 4


def test_wrong_header(tmp_path):
    p = tmp_path / "h.mesh"
    p.write_text("mesh v2\n")
    with pytest.raises(MeshFormatError) as exc:
        read_mesh(p)
    assert exc.value.line == 1


def test_clockwise_cell_named(tmp_path):
    p = tmp_path / "cw.mesh"
    p.write_text("poly-mesh v1\nVERTICES 4\n0 0\n1 0\n1 1\n0 1\nCELLS 2\n0 1 2\n0 3 2\n")
    with pytest.raises(MeshValidationError, match="cell 1"):
        read_mesh(p)


def test_tampered_pairing_rejected(tmp_path):
    pair = generate_hexa_dual(4)
    p = tmp_path / "d.mesh"
    write_mesh(pair, p)
    lines = p.read_text().splitlines()
    k = lines.index(next(l for l in lines if l.startswith("PAIRING"))) + 1
    e, L, mx, my = lines[k].split()
    lines[k] = f"{e} {float(L) * 1.01!r} {mx} {my}"
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(MeshFormatError, match="disagrees"):
        read_mesh(p)
