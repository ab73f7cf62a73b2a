import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qsdp import matcore as mc
from qsdp import mmwu
from qsdp import protosdp as ps

seeds = st.integers(min_value=0, max_value=2**31 - 1)


@pytest.fixture(scope="module")
def compiled():
    out = {}
    for r in (1, 2):
        spec, prover, _ = ps.toy_protocol(r)
        out[r] = (spec, prover, ps.compile_protocol(spec))
    spec, prover, _ = ps.trivial_protocol()
    out["trivial"] = (spec, prover, ps.compile_protocol(spec))
    return out


def test_spec_validation():
    spec, _, _ = ps.toy_protocol(1)
    with pytest.raises(ValueError):
        ps.ProtocolSpec(1, (2,), (), (1, 1), 3, spec.channels, 1.0)
    with pytest.raises(ValueError):
        ps.ProtocolSpec(1, (2,), (), (1,), 2, spec.channels, 1.0)
    with pytest.raises(ValueError):
        ps.ProtocolSpec(1, (2,), (), (1, 1), 2, spec.channels, 0.0)
    leaky = mc.Channel.from_kraus([0.5 * np.eye(4)[:, :2]])
    with pytest.raises(ValueError):
        ps.ProtocolSpec(1, (2,), (), (1, 1), 2, (leaky,), 1.0)
    with pytest.raises(ValueError):
        ps.toy_protocol(4)


def test_register_order():
    spec, _, _ = ps.toy_protocol(2)
    assert [n for n, _ in spec.registers()] == ["M1W0", "M'1W1", "M2W1", "ZSW2"]


def test_trivial_protocol_honest_point(compiled):
    spec, prover, comp = compiled["trivial"]
    point = ps.honest_point(spec, prover)
    assert ps.residual(comp, point) <= 1e-9
    assert np.trace(point.big_a).real == pytest.approx(1)


def test_block_layout_and_width(compiled):
    for key, (spec, _, comp) in compiled.items():
        r = spec.rounds
        assert comp.norm == 4 * (2 * r + 2)
        names = [n for n, _, _ in comp.blocks]
        assert names[0] == "trace" and names[-1] == "accept" and len(names) == 2 * r + 2
        b = comp.instance.b
        trace_off = comp.blocks[0][1]
        assert b[trace_off, trace_off] == pytest.approx(1 / comp.norm)
        _, off, size = next(blk for blk in comp.blocks if blk[0] == "start")
        start = np.zeros((size, size))
        start[0, 0] = 1 / comp.norm
        assert np.allclose(b[off:off + size, off:off + size], start)
        assert mc.spectral_norm(b) <= 1
        assert mmwu.certify_width(comp.instance) <= 1 + 1e-6


@pytest.mark.parametrize("r", [1, 2])
def test_honest_points_are_feasible(compiled, r):
    spec, prover, comp = compiled[r]
    point = ps.honest_point(spec, prover)
    assert point.meta["matches_c"]
    assert ps.residual(comp, point) <= 1e-8
    dec = ps.decode_point(point, spec)
    assert dec["acceptance"] == pytest.approx(spec.accept_prob, abs=1e-9)


def test_two_round_link_blocks_vanish(compiled):
    spec, prover, comp = compiled[2]
    vals = comp.block_values(ps.honest_point(spec, prover).big_a)
    for name, v in vals.items():
        if name.startswith("link") or name.startswith("channel"):
            assert np.max(np.abs(v)) <= 1e-9


def test_three_round_protocol_is_feasible():
    spec, prover, _ = ps.toy_protocol(3)
    comp = ps.compile_protocol(spec, width_check=False)
    assert ps.residual(comp, ps.honest_point(spec, prover)) <= 1e-8


def test_decode_edge_cases():
    spec, prover, _ = ps.trivial_protocol()
    dec = ps.decode_point(ps.honest_point(spec, prover), spec)
    zsw = dec["marginals"]["ZSW1"]
    assert np.allclose(dec["output"], mc.partial_trace(zsw, (2, 2, 1), [1]))
    margs = list(ps.honest_point(spec, prover).meta["marginals"])
    margs[-1] = np.kron(mc.proj(mc.ket(0, 2)), np.eye(2) / 2)
    with pytest.raises(ValueError):
        ps.decode_point(ps.product_point(spec, margs), spec)


def test_rounding_fixed_point(compiled):
    spec, prover, comp = compiled[2]
    point = ps.honest_point(spec, prover)
    rounded, rep = ps.round_feasible(point, spec, 0.0)
    assert mc.trace_distance(rounded.big_a, point.big_a) <= 1e-8


@pytest.mark.parametrize("r", [1, 2])
@pytest.mark.parametrize("p", [1e-2, 1e-3, 1e-4])
def test_rounding_restores_constraints(compiled, r, p):
    spec, prover, comp = compiled[r]
    pert = ps.depolarize_point(ps.honest_point(spec, prover), spec, p)
    eps = ps.residual(comp, pert)
    rounded, rep = ps.round_feasible(pert, spec, eps)
    assert ps.relaxed_violation(comp, rounded) <= 1e-8
    assert rep["td"] <= 2 * rep["r_prime"] * eps ** 0.25
    assert rep["chain_ok"] and rep["round_loss_ok"]


def test_rounding_fidelity_collapse():
    spec, prover, _ = ps.toy_protocol(2)
    margs = list(ps.honest_point(spec, prover).meta["marginals"])
    margs[1] = np.kron(mc.proj(mc.ket(1, 2)), mc.proj(mc.ket(1, 2)))
    with pytest.raises(RuntimeError):
        ps.round_feasible(ps.product_point(spec, margs), spec, 1.0)


def test_triangle_examples(rng):
    rho = mc.random_density(2, rng)
    assert ps.fidelity_triangle_check(rho, rho, rho)["ok"]
    tau = mc.random_density(2, rng)
    chk = ps.fidelity_triangle_check(rho, rho, tau)
    assert chk["fidelity"] >= chk["bound"] - 1e-12


@settings(max_examples=200)
@given(seeds, st.sampled_from([2, 3]))
def test_triangle_never_violated(seed, d):
    rng = np.random.default_rng(seed)
    rho, sigma, tau = (mc.random_density(d, rng) for _ in range(3))
    assert ps.fidelity_triangle_check(rho, sigma, tau)["ok"]


@pytest.mark.parametrize("r", [1, 2])
def test_prover_reconstruction_from_rounded_points(compiled, r):
    spec, prover, comp = compiled[r]
    pert = ps.depolarize_point(ps.honest_point(spec, prover), spec, 1e-3)
    rounded, _ = ps.round_feasible(pert, spec, ps.residual(comp, pert))
    rec = ps.reconstruct_prover(rounded, spec)
    assert rec["isometric_verifier"]
    assert rec["consistency"] <= 1e-6


def test_load_protocol_roundtrip():
    spec, _, _ = ps.toy_protocol(2)
    doc = {"rounds": 2, "registers": {"M": list(spec.msg), "Mp": list(spec.reply), "W": list(spec.work),
                                       "S": spec.s_dim},
           "channels": [list(c.kraus) for c in spec.channels], "accept_prob": 1.0}
    back = ps.load_protocol(doc)
    assert back.msg == spec.msg and back.work == spec.work
    assert all(np.allclose(a.choi, b.choi) for a, b in zip(back.channels, spec.channels))
