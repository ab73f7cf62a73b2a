"""Acceptance criteria 1–13. Each test prints one PASS/FAIL line and asserts the criterion.

Run alone with ``pytest tests/test_acceptance.py -v`` or as a script with
``python tests/test_acceptance.py``.
"""
from __future__ import annotations

import sys
import time

import numpy as np
import pytest

from qsdp import blockenc as be
from qsdp import chebpoly as cp
from qsdp import matcore as mc
from qsdp import mmwu, protosdp, statesynth, uhlmann

SEED = 42
RESULTS: dict[int, tuple[bool, str]] = {}


def _report(num: int, ok: bool, detail: str, capsys=None):
    RESULTS[num] = (ok, detail)
    line = f"{'PASS' if ok else 'FAIL'} criterion {num:2d}: {detail}"
    if capsys is not None:
        with capsys.disabled():
            print("\n" + line)
    else:
        print(line)
    return ok


# ------------------------------------------------------------------ criteria


def check_sign_bound():
    worst, slow = [], 0.0
    ok = True
    for kappa in (0.1, 0.05, 0.02):
        cp.sign_series.cache_clear()
        t0 = time.perf_counter()
        s = cp.sign_series(kappa)
        gap, peak = cp.sign_error(s, kappa)
        dt = time.perf_counter() - t0
        slow = max(slow, dt)
        ok &= gap <= kappa and peak <= 1 + kappa and dt < 10
        worst.append(f"κ={kappa}: err {gap:.2e}, max|P| {peak:.4f}, d={s.degree}")
    return ok, "; ".join(worst) + f"; slowest {slow:.2f}s"


def check_sgn_coefficients():
    s = cp.cheb_project(np.sign, 51, tol=1e-11, parity="odd")
    diffs = [abs(s.coeffs[i] - (-1) ** ((i - 1) // 2) * 4 / (np.pi * i)) for i in range(1, 52, 2)]
    err = max(diffs)
    return err <= 1e-8, f"max |c̃_i − closed form| = {err:.2e} over odd i ≤ 51"


def check_sqrt_bound():
    parts, ok = [], True
    for kappa in (0.1, 0.05):
        cp.sqrt_series.cache_clear()
        t0 = time.perf_counter()
        s = cp.sqrt_series(kappa)
        err = cp.sqrt_error(s, kappa)
        dt = time.perf_counter() - t0
        ok &= err <= kappa and dt < 10
        parts.append(f"κ={kappa}: err {err:.2e} ({dt:.2f}s)")
    return ok, "; ".join(parts)


def _herm_be(d, rng):
    a = mc.random_hermitian(d, rng, norm=rng.uniform(0.3, 1.0))
    return be.from_matrix(a, alpha=1.0), a


def check_blockenc_equivalence(n: int = 50):
    rng = np.random.default_rng(SEED)
    worst = {}
    t0 = time.perf_counter()
    s_poly = cp.ChebSeries(np.array([0.1, 0.4, -0.2, 0.3]))
    for d in (2, 4, 8):
        for _ in range(n):
            ea, a = _herm_be(d, rng)
            eb, b = _herm_be(d, rng)
            cases = []
            p = be.product(ea, eb)
            cases.append(("product", p, a @ b))
            y = rng.normal(size=2) + 1j * rng.normal(size=2)
            lc = be.lincomb(y, [ea, eb])
            cases.append(("lincomb", lc, y[0] * a + y[1] * b))
            if d >= 4:
                split = [2, d // 2]
                pt = be.partial_trace_be(ea, split, 0)
                cases.append(("partial_trace", pt, mc.partial_trace(a, split, [1])))
            ch = mc.random_channel(d, d, rng, n_kraus=2)
            so = be.apply_superop_be(ea, ch)
            cases.append(("superoperator", so, mc.apply_channel(ch, a)))
            pu = be.purify_be(ea)
            col = np.kron(a, np.eye(d)) @ mc.maximally_entangled(d)
            cases.append(("purify", pu, np.outer(col, mc.ket(0, d * d))))
            k = int(rng.integers(0, 6))
            ck = be.cheb_of_be(ea, k)
            cases.append(("chebyshev", ck, mc.matfunc_herm(a, lambda x: np.cos(k * np.arccos(np.clip(x, -1, 1))))))
            po = be.poly_of_be(ea, s_poly)
            cases.append(("polynomial", po, mc.matfunc_herm(a, s_poly)))
            for name, enc, target in cases:
                err = mc.spectral_norm(be.extract_block(enc) - target)
                slack = err - enc.eps
                worst[name] = max(worst.get(name, -np.inf), slack)
    dt = time.perf_counter() - t0
    ok = all(v <= 1e-8 for v in worst.values()) and dt < 300
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    return ok, f"max(error − certified eps): {detail}; {dt:.1f}s"


def check_fixed_point():
    worst = 0.0
    t0 = time.perf_counter()
    for eta in np.round(np.arange(0.1, 1.0, 0.1), 10):
        amp = np.sqrt(1 - eta)
        u = be.complete_unitary(np.array([[amp], [np.sqrt(eta)]], dtype=complex), [0])
        enc = be.BlockEncoding(u, 1.0, 0.0, 1, 1)
        for m in range(4):
            e_meas, succ = be.fixed_point_success(enc, m)
            worst = max(worst, abs(succ - (1 - eta ** (3 ** m))), abs(e_meas - eta))
    dt = time.perf_counter() - t0
    return worst <= 1e-9 and dt < 30, f"max |success − (1 − η^(3^m))| = {worst:.1e}; {dt:.2f}s"


def check_gibbs(n: int = 20):
    rng = np.random.default_rng(SEED)
    worst_td, worst_budget, viol = 0.0, 0.0, 0
    t0 = time.perf_counter()
    for i in range(n):
        d = 2 if i % 2 == 0 else 4
        a = mc.random_hermitian(d, rng, norm=rng.uniform(0.2, 2.0))
        beta = float(rng.uniform(-2, 2))
        nrm = mc.spectral_norm(a)
        req = statesynth.GibbsRequest(be.from_matrix(a, alpha=nrm), beta, nrm)
        res = statesynth.gibbs_pure(req)
        col = statesynth.gibbs_extract(req)
        red = statesynth.reduced_state(col, [d, col.size // d], [0])
        from scipy.linalg import expm
        g = expm(beta * a)
        td = mc.trace_distance(red, g / np.trace(g).real)
        viol += td > res.budget or res.budget > 1e-3
        worst_td, worst_budget = max(worst_td, td), max(worst_budget, res.budget)
    dt = time.perf_counter() - t0
    return viol == 0 and dt < 120, f"max td {worst_td:.1e}, max budget {worst_budget:.1e}, {viol} violations; {dt:.1f}s"


def check_mmwu(n: int = 30):
    rng = np.random.default_rng(SEED)
    insts = [mmwu.random_feasible_instance((2, 4, 8)[i % 3], rng)[0] for i in range(n)]
    worst, pot, viol = 0.0, True, 0
    t0 = time.perf_counter()
    for inst in insts:
        for eps in (0.2, 0.3, 0.5):
            for kind, delta in (("exact", 0.0), ("poly", 0.05)):
                td, gibbs, dl = mmwu.make_oracles(kind, inst.dim, delta)
                rep = mmwu.solve(inst, eps, td, gibbs, dl)
                viol += rep.residual > 11 * eps + 2 * dl
                pot &= rep.potential_ok
                worst = max(worst, rep.residual / (11 * eps + 2 * dl))
    dt = time.perf_counter() - t0
    return viol == 0 and pot and dt < 600, \
        f"{n} instances × 3 ε × 2 oracles: max residual/bound {worst:.3f}, potential ok {pot}; {dt:.1f}s"


def check_block_solve():
    rng = np.random.default_rng(SEED)
    inst, _ = mmwu.random_feasible_instance(2, rng)
    t0 = time.perf_counter()
    purif, rep = mmwu.solve_block_encoded(inst, 0.4)
    exact = mmwu.solve(inst, 0.4)
    d = inst.dim
    red = mc.partial_trace(mc.proj(purif), [d, purif.size // d], [0])
    td = mc.trace_distance(red, exact.rho)
    dt = time.perf_counter() - t0
    return td <= 1e-2 and dt < 300, f"td(block-encoded, exact) = {td:.1e}, T = {rep.T}; {dt:.1f}s"


def check_protocols():
    t0 = time.perf_counter()
    parts, ok = [], True
    for r in (1, 2, 3):
        spec, prover, _ = protosdp.toy_protocol(r)
        comp = protosdp.compile_protocol(spec)
        point = protosdp.honest_point(spec, prover)
        res = protosdp.residual(comp, point)
        pert = protosdp.depolarize_point(point, spec, 1e-3)
        eps = protosdp.residual(comp, pert)
        rounded, rep = protosdp.round_feasible(pert, spec, eps)
        viol = protosdp.relaxed_violation(comp, rounded)
        bound = 2 * rep["r_prime"] * 1e-3 ** 0.25
        ok &= res <= 1e-8 and viol <= 1e-8 and rep["td"] <= bound and rep["td"] <= rep["td_bound"]
        parts.append(f"r={r}: residual {res:.0e}, S̃ violation {viol:.0e}, td {rep['td']:.1e} ≤ {bound:.2f}")
    dt = time.perf_counter() - t0
    return ok and dt < 120, "; ".join(parts) + f"; {dt:.1f}s"


def check_uhlmann_exact(n: int = 100):
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    worst = 0.0
    dims = [(2, 2), (2, 4), (4, 2), (4, 4)]
    for i in range(n):
        da, db = dims[i % len(dims)]
        pair = uhlmann.StatePair(mc.random_state(da * db, rng), mc.random_state(da * db, rng), (da, db))
        res = uhlmann.uhlmann_exact(pair)
        worst = max(worst, abs(res.overlap - res.fid))
    s2 = 1 / np.sqrt(2)
    fix = uhlmann.StatePair(np.kron([1, 0], [1, 0]), np.kron([s2, s2], [s2, s2]), (2, 2))
    ov = uhlmann.uhlmann_exact(fix).overlap
    fix_err = abs(ov - s2)
    dt = time.perf_counter() - t0
    return worst <= 1e-8 and fix_err <= 1e-9 and dt < 60, \
        f"max |overlap − F| = {worst:.1e} over {n} pairs; fixture error {fix_err:.1e}; {dt:.2f}s"


def check_oaa():
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    exact, fitted = 0.0, 0.0
    for d in (2, 4, 8):
        for l in (1, 2, 3, 4):
            out = uhlmann.oaa_experiment(d, l, 0.01, rng)
            exact = max(exact, out["residual_exact"])
            fitted = max(fitted, out["fitted_c"])
    dt = time.perf_counter() - t0
    return exact <= 1e-7 and fitted <= 10 and dt < 120, \
        f"exact residual {exact:.1e}; fitted C {fitted:.3f} at κ = 0.01; {dt:.2f}s"


def check_uhlmann_circuit():
    t0 = time.perf_counter()
    s2 = 1 / np.sqrt(2)
    bell = mc.maximally_entangled(2)
    fixtures = {"|00⟩/|++⟩": (np.kron([1, 0], [1, 0]), np.kron([s2, s2], [s2, s2])), "Bell/Bell": (bell, bell)}
    parts, ok = [], True
    for name, (psi, phi) in fixtures.items():
        _, rep = uhlmann.uhlmann_circuit(uhlmann.StatePair(psi, phi, (2, 2)), 0.02)
        ok &= rep["deviation_sq"] <= rep["bound"] and rep["slack"] <= 0.1
        parts.append(f"{name}: dev² {rep['deviation_sq']:.6f} ≤ {rep['bound']:.6f} (slack {rep['slack']:.1e})")
    spec, prover, dq = protosdp.toy_protocol(1)
    synth = uhlmann.prover_from_protocol(spec, protosdp.protocol_purifications(spec, prover, dq), 0.02)
    honest = protosdp.pure_run(spec, prover, dq)["acceptance"]
    loss = honest - protosdp.synthesized_acceptance(spec, synth, dq)
    ok &= loss <= 1e-2
    dt = time.perf_counter() - t0
    return ok and dt < 600, "; ".join(parts) + f"; prover loss {loss:.1e}; {dt:.1f}s"


def check_purification(n: int = 10):
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(n):
        rho = mc.random_density(2, rng)
        res = statesynth.purify_mixed(rho, rng=rng)
        red = statesynth.reduced_state(res.state, [2, 2], [0])
        worst = max(worst, mc.trace_distance(red, rho))
    dt = time.perf_counter() - t0
    return worst <= 1e-3 and dt < 60, f"max td(Tr₂ purification, ρ) = {worst:.1e} over {n} states; {dt:.2f}s"


CRITERIA = {
    1: check_sign_bound, 2: check_sgn_coefficients, 3: check_sqrt_bound, 4: check_blockenc_equivalence,
    5: check_fixed_point, 6: check_gibbs, 7: check_mmwu, 8: check_block_solve, 9: check_protocols,
    10: check_uhlmann_exact, 11: check_oaa, 12: check_uhlmann_circuit, 13: check_purification,
}


@pytest.mark.parametrize("num", sorted(CRITERIA))
def test_criterion(num, capsys):
    ok, detail = CRITERIA[num]()
    assert _report(num, bool(ok), detail, capsys), detail


if __name__ == "__main__":
    failed = 0
    for num in sorted(CRITERIA):
        ok, detail = CRITERIA[num]()
        failed += not _report(num, bool(ok), detail)
    sys.exit(1 if failed else 0)
