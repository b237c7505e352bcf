import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_star_polygon
from eave.mesh import generate_hexa_dual
from eave.vem import (
    DegeneratePolygon,
    LocalElement,
    MissingPairing,
    StabChoice,
    fvm_flux,
    fvm_poisson_local,
    pi_nabla,
    pi_nabla_affine,
    poisson_local,
    poisson_local_batch,
    projection_batch,
    stab_matrix,
)

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def polygon_props(xy):
    x, y = xy[:, 0], xy[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    c = x * yn - xn * y
    A = 0.5 * c.sum()
    cen = np.array([((x + xn) * c).sum(), ((y + yn) * c).sum()]) / (6 * A)
    h = max(np.hypot(*(p - q)) for p in xy for q in xy)
    return A, cen, h


def projection_oracle(xy, v):
    """Solve the two defining conditions directly as a least-squares system."""
    A, cen, h = polygon_props(xy)
    n = len(xy)
    rows, rhs = [], []
    for k in (1, 2):
        # int_K grad(p).grad(m_k) = (|K|/h^2) c_k ; int_dK v grad(m_k).n
        row = np.zeros(3)
        row[k] = A / h**2
        b = 0.0
        for i in range(n):
            p, q = xy[i], xy[(i + 1) % n]
            t = q - p
            nrm = np.array([t[1], -t[0]])  # outward normal times length
            grad_mk = np.eye(2)[k - 1] / h
            b += 0.5 * (v[i] + v[(i + 1) % n]) * grad_mk @ nrm
        rows.append(row)
        rhs.append(b)
    M = np.column_stack([np.ones(n), (xy - cen) / h])
    rows.append(M.mean(0))
    rhs.append(np.mean(v))
    return np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)[0]


def test_unit_square_hat_against_oracle():
    v = np.array([1.0, 0.0, 0.0, 0.0])
    got = pi_nabla(SQUARE) @ v
    assert np.allclose(got, projection_oracle(SQUARE, v), atol=1e-14)
    # gradient (-1/2, -1/2), diameter sqrt(2)
    assert np.allclose(got, [0.25, -0.5 * np.sqrt(2), -0.5 * np.sqrt(2)], atol=1e-15)
    assert np.allclose(pi_nabla_affine(SQUARE, v), [0.75, -0.5, -0.5], atol=1e-15)


@given(st.integers(0, 100_000), st.integers(3, 12))
def test_projection_matches_oracle_on_random_polygons(seed, n):
    rng = np.random.default_rng(seed)
    xy = random_star_polygon(rng, n)
    v = rng.normal(size=n)
    assert np.allclose(pi_nabla(xy) @ v, projection_oracle(xy, v), atol=1e-12)


def test_p1_reproduction_on_200_random_polygons():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        n = int(rng.integers(3, 13))
        xy = random_star_polygon(rng, n, center=rng.uniform(-2, 2, 2), rmin=0.1, rmax=1.5)
        c = rng.normal(size=3)
        v = c[0] + c[1] * xy[:, 0] + c[2] * xy[:, 1]
        got = pi_nabla_affine(xy, v)
        assert np.allclose(got, c, rtol=1e-12, atol=1e-12 * np.abs(c).max())


def test_specific_linear_and_constant():
    xy = random_star_polygon(np.random.default_rng(0), 7)
    v = 2 * xy[:, 0] - xy[:, 1] + 1
    assert np.allclose(pi_nabla_affine(xy, v), [1.0, 2.0, -1.0], atol=1e-12)
    assert np.allclose(pi_nabla_affine(xy, np.full(7, 3.0)), [3.0, 0.0, 0.0], atol=1e-13)


@pytest.mark.parametrize("choice", [StabChoice.SV, StabChoice.SE])
def test_stabilisation_kernel_and_psd(choice, rng):
    for n in (3, 5, 9):
        xy = random_star_polygon(rng, n)
        S = stab_matrix(xy, choice)
        assert np.allclose(S, S.T, atol=1e-14)
        assert np.linalg.eigvalsh(S).min() >= -1e-12
        for c in ([1, 0, 0], [0, 1, 0], [0, 0, 1], [0.3, -2, 5]):
            p = c[0] + c[1] * xy[:, 0] + c[2] * xy[:, 1]
            assert np.abs(S @ p).max() < 1e-12 * max(1.0, np.abs(p).max())


def test_sv_on_square_equals_direct_construction():
    # D = I - (values of Pi phi_j at the vertices), built from the monomials
    P = pi_nabla(SQUARE)
    A, cen, h = polygon_props(SQUARE)
    M = np.column_stack([np.ones(4), (SQUARE - cen) / h])
    D = np.eye(4) - M @ P
    assert np.allclose(stab_matrix(SQUARE, "sv"), D.T @ D, atol=1e-15)
    # only the bilinear mode xy survives I - Pi on the square
    q = np.array([1.0, -1.0, 1.0, -1.0])
    assert np.allclose(stab_matrix(SQUARE, "sv"), np.outer(q, q) / 4, atol=1e-15)


def test_poisson_local_unit_square():
    # consistency part for the square: |K| grad(phi_i).grad(phi_j) of the projection
    K = poisson_local(SQUARE, "sv")
    q = np.array([1.0, -1.0, 1.0, -1.0])
    G = np.array([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]])
    assert np.allclose(K, G @ G.T + np.outer(q, q) / 4, atol=1e-15)


@given(st.integers(0, 100_000), st.integers(3, 10), st.sampled_from(["sv", "se"]))
def test_poisson_local_properties(seed, n, choice):
    rng = np.random.default_rng(seed)
    xy = random_star_polygon(rng, n)
    K = poisson_local(xy, choice)
    assert np.allclose(K, K.T, atol=1e-13)
    assert np.abs(K.sum(1)).max() < 1e-12
    # positive on the complement of constants
    Q = np.linalg.qr(np.column_stack([np.ones(n), rng.normal(size=(n, n - 1))]))[0][:, 1:]
    assert np.linalg.eigvalsh(Q.T @ K @ Q).min() > 0.0
    # consistency: a_h(p, v) = int grad p . grad Pi v
    A, cen, h = polygon_props(xy)
    g = rng.normal(size=2)
    p = xy @ g
    v = rng.normal(size=n)
    gv = pi_nabla_affine(xy, v)[1:]
    assert p @ K @ v == pytest.approx(A * g @ gv, rel=1e-10, abs=1e-12)


def cotangent_stiffness(xy):
    K = np.zeros((3, 3))
    for c in range(3):
        a, b = (c + 1) % 3, (c + 2) % 3
        u, w = xy[a] - xy[c], xy[b] - xy[c]
        cot = (u @ w) / abs(u[0] * w[1] - u[1] * w[0])
        K[a, b] = K[b, a] = -0.5 * cot
    K[np.diag_indices(3)] = -K.sum(1)
    return K


@given(st.integers(0, 100_000))
def test_triangle_reduces_to_cotangent_matrix(seed):
    rng = np.random.default_rng(seed)
    xy = random_star_polygon(rng, 3, rmin=0.5)
    for choice in ("sv", "se"):
        assert np.allclose(poisson_local(xy, choice), cotangent_stiffness(xy), atol=1e-12)
    assert np.allclose(stab_matrix(xy, "sv"), 0.0, atol=1e-13)


def test_fvm_triangle_with_circumcenter_is_cotangent():
    xy = np.array([[0.0, 0.0], [1.0, 0.1], [0.3, 0.8]])
    a, b, c = xy
    d = 2 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
    ux = ((a @ a) * (b[1] - c[1]) + (b @ b) * (c[1] - a[1]) + (c @ c) * (a[1] - b[1])) / d
    uy = ((a @ a) * (c[0] - b[0]) + (b @ b) * (a[0] - c[0]) + (c @ c) * (b[0] - a[0])) / d
    assert np.allclose(fvm_poisson_local(xy, (ux, uy)), cotangent_stiffness(xy), atol=1e-13)


def test_fvm_local_on_hexa_dual():
    pair = generate_hexa_dual(6)
    mesh = pair.primary
    omega = pair.omega()
    for k in range(mesh.n_cells):
        cell = mesh.cells[k]
        A = fvm_poisson_local(mesh.cell_vertices(k), pair.seeds[k])
        assert np.abs(A @ np.ones(len(cell))).max() < 1e-14
        assert np.allclose(A, A.T)
        for i in range(len(cell)):
            j = (i + 1) % len(cell)
            e = mesh.halfedge_edge[mesh.cell_ptr[k] + i]
            side = 0 if mesh.edge_cells[e, 0] == k else 1
            w = pair.seed_distance[e, side] / mesh.edge_lengths[e]
            if len(cell) > 2:
                assert A[i, j] == pytest.approx(-w, abs=1e-14)
        if mesh.boundary_flags[cell].any():
            continue
        # interior seeds sit at the centre of their cell: w_E = |E*|/(2|E|)
        es = mesh.halfedge_edge[mesh.cell_ptr[k] : mesh.cell_ptr[k + 1]]
        assert np.allclose(
            [pair.seed_distance[e, 0 if mesh.edge_cells[e, 0] == k else 1] for e in es],
            0.5 * pair.dual_length[es],
        )
    assert np.all(omega[mesh.interior_edges] > 0)


def test_fvm_flux_linear_and_constant():
    pair = generate_hexa_dual(5)
    mesh = pair.primary
    g = fvm_flux(mesh.vertices[:, 0], pair)
    assert np.allclose(g, mesh.tangents[:, 0] / mesh.edge_lengths, atol=1e-14)
    assert np.allclose(fvm_flux(np.full(mesh.n_vertices, 2.0), pair), 0.0)

    class Broken:
        primary = mesh
        dual_length = np.full(mesh.n_edges, np.nan)

    with pytest.raises(MissingPairing):
        fvm_flux(np.zeros(mesh.n_vertices), Broken())


def test_degenerate_polygon_rejected():
    with pytest.raises(DegeneratePolygon):
        pi_nabla(np.array([[0, 0], [1, 0], [2, 0]], dtype=float))
    with pytest.raises(DegeneratePolygon):
        pi_nabla(np.array([[0, 0], [1e-8, 0], [0, 1e-8]], dtype=float))
    with pytest.raises(ValueError):
        pi_nabla(np.zeros((2, 2)))


def test_batch_matches_single(rng):
    xs = np.stack([random_star_polygon(rng, 6) for _ in range(5)])
    B = poisson_local_batch(xs, "se")
    for k in range(5):
        assert np.allclose(B[k], poisson_local(xs[k], "se"), atol=1e-15)
    pd = projection_batch(xs)
    assert np.allclose(pd.pi @ pd.pi, pd.pi, atol=1e-12)


def test_local_element_and_stab_parse():
    mesh = generate_hexa_dual(4).primary
    el = LocalElement.from_mesh(mesh, 3)
    assert el.n == len(mesh.cells[3])
    assert np.allclose(el.tangents.sum(0), 0.0)
    assert StabChoice.parse("SE") is StabChoice.SE
    with pytest.raises(ValueError):
        StabChoice.parse("sx")
    with pytest.raises(ValueError):
        poisson_local(SQUARE, "none")
