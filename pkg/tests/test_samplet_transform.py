import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from samplets.cluster_tree import build_tree
from samplets.errors import (DegenerateLeafError, DimensionError, UnderResolvedLeafError,
                             ConfigError)
from samplets.geometry import Frame
from samplets.index_sets import custom_set, tensor_set, total_degree_set, vandermonde
from samplets.samplet_transform import (MomentMatrix, SampletBasis, build_basis, cluster_qr,
                                        internal_moment_matrix, leaf_moment_matrix,
                                        samplet_basis)
from samplets.sampling import PointSet, halton, sample_uniform


def two_point_tree():
    return build_tree([[0.0], [1.0]], 0)


def test_leaf_moment_examples():
    t = two_point_tree()
    M0 = leaf_moment_matrix(t.root, total_degree_set(1, 0), t.tree_points())
    assert np.allclose(M0.matrix, [[np.sqrt(2), np.sqrt(2)]], rtol=1e-15)
    M1 = leaf_moment_matrix(t.root, total_degree_set(1, 1), t.tree_points())
    assert np.allclose(M1.matrix, [[np.sqrt(2), np.sqrt(2)], [0, np.sqrt(2)]], rtol=1e-15)
    x = sample_uniform(7, 2, 1).coords
    M = leaf_moment_matrix(t.root, total_degree_set(2, 2), x, N=100)
    assert np.allclose(M.matrix[0], 10.0)


def test_two_point_haar_filter():
    t = two_point_tree()
    f = cluster_qr(leaf_moment_matrix(t.root, total_degree_set(1, 0), t.tree_points()))
    s = f.q_sigma[:, 0]
    assert abs(abs(s[0]) - 1 / np.sqrt(2)) < 1e-15 and s[0] == pytest.approx(-s[1], abs=1e-15)
    assert abs(s.sum()) < 1e-15
    assert np.allclose(f.q_phi[:, 0], [1 / np.sqrt(2)] * 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 40), st.integers(1, 2), st.integers(0, 3), st.integers(0, 2 ** 32))
def test_cluster_qr_contract(n, d, k, seed):
    iset = total_degree_set(d, k)
    if n < len(iset):
        n = len(iset)
    x = sample_uniform(n, d, seed).coords
    M = MomentMatrix(0, np.sqrt(50.0) * vandermonde(x, iset).T, Frame.raw(d))
    f = cluster_qr(M)
    Q = f.Q
    assert np.max(np.abs(Q.T @ Q - np.eye(n))) < 1e-12
    # moments of the generated distributions are R^T (lower triangular), zero below
    mom = Q.T @ M.matrix.T
    assert np.allclose(mom[:f.m_phi], f.R, atol=1e-10 * np.abs(M.matrix).max())
    if f.m_sigma:
        assert np.max(np.abs(mom[f.m_phi:])) <= 1e-10 * np.abs(M.matrix).max()
    assert np.allclose(np.tril(f.R, -1), 0) and np.all(np.diag(f.R) >= 0)
    # apply_qt / apply_q agree with the dense matrix
    v = np.random.default_rng(seed).standard_normal((n, 3))
    assert np.allclose(f.apply_qt(v), Q.T @ v, atol=1e-13)
    assert np.allclose(f.apply_q(v), Q @ v, atol=1e-13)
    # independent oracle: numpy QR spans the same scaling space
    Qn, _ = np.linalg.qr(M.matrix.T)
    assert np.allclose(np.abs(Qn.T @ f.q_phi), np.eye(f.m_phi), atol=1e-8)


def test_internal_node_shapes():
    iset = total_degree_set(2, 2)
    b = samplet_basis(sample_uniform(2000, 2, 3), 2, iset)
    f = b.filters[0]
    assert f.Q.shape == (12, 12) and f.q_sigma.shape == (12, 6)


def test_internal_moment_two_point_leaves():
    # N = 4 points, two per leaf; child scaling moment is sqrt(N) * |tau_c| / sqrt(|tau_c|)
    b = samplet_basis([[0.1], [0.3], [0.6], [0.9]], 1, total_degree_set(1, 0))
    kids = [(b.filters[c], b.frames[c], b.index_set) for c in (1, 2)]
    M = internal_moment_matrix(b.tree.root, kids, b.frames[0])
    assert np.allclose(M.matrix, [[2 * np.sqrt(2), 2 * np.sqrt(2)]], rtol=1e-15)
    with pytest.raises(ConfigError):
        internal_moment_matrix(b.tree.root, [kids[0], None])


def test_internal_moment_matches_direct_evaluation():
    iset = total_degree_set(2, 2)
    pts = sample_uniform(3000, 2, 9)
    b = samplet_basis(pts, 3, iset)
    for c in b.tree.non_leaves:
        frame = b.frames[c.id]
        V = vandermonde(frame.to_local(pts.coords), iset)
        _, scal = b._forward(V, keep=True)
        # the analysis coefficient of a distribution is its action divided by N
        direct = np.vstack([b.N * scal[k] for k in c.children])
        kids = [(b.filters[k], b.frames[k], iset) for k in c.children]
        M = internal_moment_matrix(c, kids, frame)
        assert np.max(np.abs(M.matrix - direct.T)) < 1e-12 * np.abs(direct).max()


def test_filters_do_not_depend_on_the_frame():
    iset = total_degree_set(1, 2)
    pts = halton(512, 1)
    b = samplet_basis(pts, 3, iset)
    x = b.tree.tree_points()
    raw = Frame.raw(1)
    filt = {}
    for c in reversed(b.tree.clusters):
        if c.is_leaf:
            M = leaf_moment_matrix(c, iset, x[c.begin:c.end], b.N, raw)
        else:
            M = internal_moment_matrix(c, [(filt[k], raw, iset) for k in c.children], raw)
        filt[c.id] = cluster_qr(M)
        assert np.max(np.abs(filt[c.id].Q - b.filters[c.id].Q)) < 1e-8


def test_column_counts():
    iset = total_degree_set(2, 1)
    b = samplet_basis(sample_uniform(500, 2, 2), 3, iset)
    assert b.N == 500 and b.n_scaling == 3 and len(b.samplet_columns()) == 497
    b0 = samplet_basis([[0.1, 0.2], [0.5, 0.9], [0.7, 0.3]], 0, iset)
    assert b0.n_scaling == 3 and len(b0.samplet_columns()) == 0


@pytest.mark.parametrize("d,k,N,seed", [(1, 2, 1024, 0), (2, 2, 1024, 1), (3, 1, 512, 2)])
def test_dense_orthogonality_and_fast_equivalence(d, k, N, seed):
    b = samplet_basis(sample_uniform(N, d, seed), 3 if d > 1 else 4, total_degree_set(d, k))
    U = b.dense_matrix()
    assert np.max(np.abs(U.T @ U - np.eye(N))) < 1e-10
    assert np.max(np.abs(U @ U.T - np.eye(N))) < 1e-10
    v = np.random.default_rng(seed).standard_normal(N)
    assert np.max(np.abs(b.analyze(v) - U.T @ (v / np.sqrt(N)))) < 1e-12
    col = 17
    assert np.allclose(b.column(col), U[:, col], atol=1e-15)


def test_analyze_examples():
    iset = total_degree_set(2, 2)
    pts = sample_uniform(4096, 2, 5)
    b = samplet_basis(pts, 4, iset)
    c = b.analyze(np.full(b.N, 3.5))
    assert c[0] == pytest.approx(3.5, rel=1e-13)
    assert np.max(np.abs(c[b.n_scaling:])) < 1e-10 * 3.5
    x, y = pts.coords.T
    data = 1 + 2 * x - x * y + 0.5 * y ** 2
    assert np.max(np.abs(b.analyze(data)[b.n_scaling:])) < 1e-10 * np.linalg.norm(data)
    assert not b.analyze(np.zeros(b.N)).any()
    with pytest.raises(DimensionError):
        b.analyze(np.zeros(b.N - 1))
    with pytest.raises(DimensionError):
        b.synthesize(np.zeros(b.N + 1))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_roundtrip_and_energy(seed):
    b = samplet_basis(sample_uniform(4096, 2, seed), 3, total_degree_set(2, 2))
    v = np.random.default_rng(seed).standard_normal(b.N)
    c = b.analyze(v)
    assert np.max(np.abs(b.synthesize(c) - v)) < 1e-10
    assert abs(np.linalg.norm(c) - np.linalg.norm(v) / np.sqrt(b.N)) < 1e-12 * np.linalg.norm(v)
    assert not b.synthesize(np.zeros(b.N)).any()


def test_block_transform():
    b = samplet_basis(halton(1000, 2), 3, total_degree_set(2, 1))
    V = np.random.default_rng(0).random((1000, 4))
    C = b.analyze(V)
    assert np.allclose(C[:, 2], b.analyze(V[:, 2]), atol=1e-15)
    assert np.allclose(b.synthesize(C), V, atol=1e-12)


def test_vanishing_moment_examples():
    pts = sample_uniform(2048, 2, 4)
    b = samplet_basis(pts, 3, total_degree_set(2, 1))
    assert b.check_vanishing_moments() < 1e-10
    assert b.check_vanishing_moments(total_degree_set(2, 2)) > 1e-4
    haar = samplet_basis([[0.25], [0.75]], 0, total_degree_set(1, 0))
    assert haar.check_vanishing_moments() < 1e-15


@pytest.mark.parametrize("iset", [tensor_set(2, 2), custom_set([(0, 0), (1, 0), (0, 1), (2, 0),
                                                                (3, 0), (0, 2)])])
def test_downward_closed_generality(iset):
    b = samplet_basis(sample_uniform(2048, 2, 6), 3, iset)
    U = b.dense_matrix()
    assert np.max(np.abs(U.T @ U - np.eye(b.N))) < 1e-10
    assert b.check_vanishing_moments() < 1e-10
    v = np.random.default_rng(1).random(b.N)
    assert np.max(np.abs(b.synthesize(b.analyze(v)) - v)) < 1e-10


def test_samplet_action_examples():
    pts = sample_uniform(1024, 1, 3)
    b = samplet_basis(pts, 4, total_degree_set(1, 2))
    poly = lambda x: 1 - 3 * x[:, 0] + x[:, 0] ** 2
    for col in (5, 100, 1023):
        assert abs(b.samplet_action(col, poly)) < 1e-10 * b.N * 3
    one = lambda x: np.ones(len(x))
    assert b.samplet_action(0, one) == pytest.approx(b.filters[0].R[0, 0], rel=1e-13)
    assert b.samplet_action(0, one) == pytest.approx(np.sqrt(b.N) * b.column(0).sum(), rel=1e-12)
    assert b.samplet_action(7, lambda x: np.zeros(len(x))) == 0.0
    with pytest.raises(ConfigError):
        b.samplet_action(b.N, one)


def test_column_owner_and_ordering():
    b = samplet_basis(sample_uniform(256, 1, 0), 3, total_degree_set(1, 1))
    assert b.column_owner(0) == (0, "phi", 0)
    assert b.column_owner(2) == (0, "sigma", 2)
    levels = [b.tree.clusters[b.column_owner(c)[0]].level for c in b.samplet_columns()]
    assert levels == sorted(levels)


def test_under_resolved_and_degenerate_leaves():
    iset = total_degree_set(1, 2)
    with pytest.raises(UnderResolvedLeafError):
        samplet_basis([[0.1], [0.2], [0.3], [0.7], [0.8]], 1, iset)
    with pytest.raises(DegenerateLeafError):
        samplet_basis([[0.1], [0.1], [0.1], [0.7], [0.8], [0.9]], 1, iset)
    tree = build_tree([[0.1], [0.2], [0.7], [0.8], [0.9]], 1)
    loose = build_basis(tree, iset, strict=False)
    U = loose.dense_matrix()
    assert np.max(np.abs(U.T @ U - np.eye(5))) < 1e-12
    assert loose.filters[1].m_phi == 2


def test_text_roundtrip(tmp_path):
    pts = sample_uniform(800, 2, 12)
    b = samplet_basis(pts, 3, total_degree_set(2, 2))
    b.save(tmp_path / "basis.txt")
    back = SampletBasis.load(tmp_path / "basis.txt", pts)
    v = np.random.default_rng(2).random(b.N)
    assert np.array_equal(back.analyze(v), b.analyze(v))
    assert np.array_equal(back.tree.permutation, b.tree.permutation)
    assert back.to_text() == b.to_text()


def test_construction_is_deterministic():
    pts = halton(3000, 3)
    a = samplet_basis(pts, 3, total_degree_set(3, 2))
    b = samplet_basis(pts, 3, total_degree_set(3, 2))
    assert a.to_text() == b.to_text()
