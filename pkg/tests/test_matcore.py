import numpy as np
import pytest
from hypothesis import given, strategies as st

from qsdp import matcore as mc

seeds = st.integers(min_value=0, max_value=2**31 - 1)
dims = st.sampled_from([2, 3, 4])


def test_kron_identity_and_basis():
    assert np.allclose(mc.kron(np.eye(2), np.eye(2)), np.eye(4))
    m = mc.kron(mc.PAULI_X, mc.proj(mc.ket(0, 2)))
    expected = np.zeros((4, 4))
    expected[2, 0] = expected[0, 2] = 1
    assert np.allclose(m, expected)


def test_kron_matches_index_formula(rng):
    a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    b = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    k = mc.kron(a, b)
    for i in range(2):
        for j in range(2):
            for p in range(2):
                for q in range(2):
                    assert k[2 * i + p, 2 * j + q] == pytest.approx(a[i, j] * b[p, q])


def test_partial_trace_bell_and_product(rng):
    bell = mc.proj(mc.maximally_entangled(2))
    assert np.allclose(mc.partial_trace(bell, (2, 2), [0]), np.eye(2) / 2)
    rho, sigma = mc.random_density(2, rng), mc.random_density(3, rng)
    assert np.allclose(mc.partial_trace(mc.kron(rho, sigma), (2, 3), [0]), rho)
    assert np.allclose(mc.partial_trace(mc.kron(rho, sigma), (2, 3), [1]), sigma)


def test_partial_trace_index_sum(rng):
    a = mc.random_density(4, rng)
    t = a.reshape(2, 2, 2, 2)
    oracle = np.array([[sum(t[i, k, j, k] for k in range(2)) for j in range(2)] for i in range(2)])
    assert np.allclose(mc.partial_trace(a, (2, 2), [0]), oracle, atol=1e-14)


def test_partial_trace_dim_mismatch():
    with pytest.raises(ValueError):
        mc.partial_trace(np.eye(4), (2, 3), [0])


def test_register_split_labels():
    s = mc.RegisterSplit((2, 4), ("A", "B"))
    assert s.total == 8 and s.index("B") == 1
    with pytest.raises(ValueError):
        mc.RegisterSplit((2, 2), ("A",))


def test_herm_eig_examples():
    w, v = mc.herm_eig(np.diag([1.0, 3.0]))
    assert np.allclose(w, [3, 1])
    w, v = mc.herm_eig(mc.PAULI_X)
    assert np.allclose(w, [1, -1])
    assert np.allclose(np.abs(v[:, 0]), [2**-0.5, 2**-0.5])
    with pytest.raises(ValueError):
        mc.herm_eig(np.array([[0, 1], [0, 0]]))


@given(seeds)
def test_herm_eig_reconstructs(seed):
    a = mc.random_hermitian(8, np.random.default_rng(seed))
    w, v = mc.herm_eig(a)
    assert np.all(np.diff(w) <= 1e-12)
    assert np.max(np.abs(v @ np.diag(w) @ v.conj().T - a)) <= 1e-9 * max(1, mc.spectral_norm(a))
    assert mc.is_unitary(v)


def test_svd_examples(rng):
    _, s, _ = mc.svd(np.eye(3))
    assert np.allclose(s, 1)
    _, s, _ = mc.svd(np.outer(mc.ket(0, 2), np.array([1, 1]) / np.sqrt(2)))
    assert np.allclose(s, [1, 0])
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    u, s, v = mc.svd(a)
    assert np.max(np.abs(u @ np.diag(s) @ v.conj().T - a)) <= 1e-9


def test_matfunc_examples(rng):
    assert np.allclose(mc.matfunc_herm(np.diag([0, np.log(2)]), np.exp), np.diag([1, 2]))
    assert np.allclose(mc.matfunc_herm(np.diag([2.0, -3.0]), np.sign), np.diag([1, -1]))
    a = mc.random_hermitian(4, rng, norm=1.0)
    taylor = sum(np.linalg.matrix_power(a, n) / np.prod(np.arange(1, n + 1, dtype=float)) for n in range(41))
    assert np.max(np.abs(mc.matfunc_herm(a, np.exp) - taylor)) <= 1e-8


def test_matfunc_sv_examples(rng):
    r = np.outer(mc.ket(0, 2), np.array([1, 1]) / np.sqrt(2))
    assert np.allclose(mc.matfunc_sv(r, np.sign), r)
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    assert np.allclose(mc.matfunc_sv(a, lambda x: x), a)
    w = mc.matfunc_sv(a, np.sign)
    p = w.conj().T @ w
    assert np.max(np.abs(p @ p - p)) <= 1e-9
    with pytest.raises(ValueError):
        mc.matfunc_sv(a, np.cos)


@given(seeds, dims)
def test_sv_and_herm_calculi_agree_on_odd_polys(seed, d):
    rng = np.random.default_rng(seed)
    a = mc.random_hermitian(d, rng)
    c = rng.standard_normal(3)
    poly = lambda x: c[0] * x + c[1] * x**3 + c[2] * x**5
    assert np.allclose(mc.matfunc_sv(a, poly), mc.matfunc_herm(a, poly), atol=1e-9)


def test_norms_and_distances(rng):
    rho = mc.random_density(3, rng)
    assert mc.trace_distance(rho, rho) == pytest.approx(0, abs=1e-14)
    assert mc.trace_distance(mc.proj(mc.ket(0, 2)), mc.proj(mc.ket(1, 2))) == pytest.approx(1)
    sigma = mc.random_density(3, rng)
    oracle = 0.5 * np.sum(np.abs(np.linalg.eigvalsh(rho - sigma)))
    assert mc.trace_distance(rho, sigma) == pytest.approx(oracle, abs=1e-12)


@given(seeds)
def test_trace_norm_variational(seed):
    a = mc.random_hermitian(4, np.random.default_rng(seed))
    h = mc.matfunc_herm(a, np.sign)
    assert mc.hs_inner(h, a).real == pytest.approx(mc.trace_norm(a), abs=1e-9)


def test_fidelity_examples(rng):
    rho = mc.random_density(2, rng)
    assert mc.fidelity(rho, rho) == pytest.approx(1, abs=1e-9)
    assert mc.fidelity(np.eye(2) / 2, mc.proj(mc.ket(0, 2))) == pytest.approx(2**-0.5)
    sigma = mc.random_density(2, rng)
    sr = mc.psd_sqrt(rho)
    oracle = np.trace(mc.psd_sqrt(sr @ sigma @ sr)).real
    assert mc.fidelity(rho, sigma) == pytest.approx(oracle, abs=1e-9)
    with pytest.raises(ValueError):
        mc.fidelity(np.diag([1.5, -0.5]), rho)


def test_channel_examples(rng):
    x = mc.random_density(2, rng)
    assert np.allclose(mc.Channel.identity(2)(x), x)
    paulis = [mc.PAULI_I, mc.PAULI_X, mc.PAULI_Y, mc.PAULI_Z]
    dep = mc.Channel.from_kraus([p / 2 for p in paulis])
    assert np.allclose(dep(x), np.eye(2) / 2 * np.trace(x))
    ch = mc.random_channel(3, 2, rng, n_kraus=3)
    y = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    assert np.allclose(mc.apply_channel(ch, y), mc.apply_channel(ch, y, use_kraus=True), atol=1e-9)
    with pytest.raises(ValueError):
        ch(np.eye(2))


def test_random_channel_raises_kraus_count(rng):
    ch = mc.random_channel(8, 2, rng, n_kraus=2)
    assert (ch.dim_in, ch.dim_out) == (8, 2)
    assert ch.is_trace_preserving()


@given(seeds, dims, dims)
def test_channel_trace_preservation_and_duality(seed, din, dout):
    rng = np.random.default_rng(seed)
    ch = mc.random_channel(din, dout, rng)
    assert ch.is_trace_preserving()
    assert mc.is_hermitian(ch.choi, tol=1e-10)
    choi = mc.choi_from_kraus(ch.kraus)
    assert np.max(np.abs(choi - ch.choi)) <= 1e-10
    adj = mc.adjoint_channel(ch)
    for _ in range(5):
        x = mc.random_hermitian(din, rng)
        y = mc.random_hermitian(dout, rng)
        assert np.trace(ch(x)) == pytest.approx(np.trace(x), abs=1e-9)
        assert mc.hs_inner(ch(x), y) == pytest.approx(mc.hs_inner(x, adj(y)), abs=1e-9)


def test_adjoint_duality_hundred_pairs(rng):
    ch = mc.random_channel(2, 3, rng)
    adj = mc.adjoint_channel(ch)
    for _ in range(100):
        x, y = mc.random_hermitian(2, rng), mc.random_hermitian(3, rng)
        assert abs(mc.hs_inner(ch(x), y) - mc.hs_inner(x, adj(y))) <= 1e-9


def test_linear_map_roundtrip(rng):
    ch = mc.random_channel(2, 2, rng)
    lm = mc.LinearMap(ch, mc.adjoint_channel(ch), 2, 2)
    assert np.allclose(lm.to_channel().choi, ch.choi)
    x = mc.random_hermitian(2, rng)
    assert np.allclose(lm.adjoint()(x), mc.adjoint_channel(ch)(x))


def test_maximally_entangled():
    assert np.allclose(mc.maximally_entangled(1), [1])
    assert np.allclose(mc.maximally_entangled(2), np.array([1, 0, 0, 1]) / np.sqrt(2))
    v = mc.maximally_entangled(4)
    assert np.allclose(mc.partial_trace(mc.proj(v), (4, 4), [0]), np.eye(4) / 4)
    assert np.allclose(mc.partial_trace(mc.proj(v), (4, 4), [1]), np.eye(4) / 4)


def test_permutation_unitary_matches_permute(rng):
    a = rng.standard_normal((12, 12))
    p = mc.permutation_unitary((2, 3, 2), (2, 0, 1))
    assert np.allclose(p @ a @ p.conj().T, mc.permute_subsystems(a, (2, 3, 2), (2, 0, 1)))
    x, y, z = rng.standard_normal(2), rng.standard_normal(3), rng.standard_normal(2)
    assert np.allclose(p @ np.kron(np.kron(x, y), z), np.kron(np.kron(z, x), y))
