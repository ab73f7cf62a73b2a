"""Matrix multiplicative weights for SDP feasibility, classically and on block encodings."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import blockenc as be_mod
from . import matcore as mc
from . import statesynth
from .chebpoly import sign_series

TdOracle = Callable[[np.ndarray], np.ndarray]
GibbsOracle = Callable[[np.ndarray, float], np.ndarray]

WIDTH_SAMPLES = 50
CHECK_TOL = 1e-9


@dataclass(frozen=True)
class SdpInstance:
    """Feasibility problem Φ(ρ) = B over density matrices ρ."""

    phi: mc.Channel | mc.LinearMap
    b: np.ndarray
    width_certified: bool = True
    label: str = ""
    phi_adj: mc.Channel | mc.LinearMap = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        b = mc.as_matrix(self.b)
        d = b.shape[0]
        if b.shape != (d, d) or not mc.is_hermitian(b, 1e-10):
            raise ValueError("B must be a square Hermitian matrix")
        if self.phi.dim_in != d or self.phi.dim_out != d:
            raise ValueError(f"channel dims ({self.phi.dim_in}→{self.phi.dim_out}) do not match B ({d})")
        if isinstance(self.phi, mc.Channel):
            if not mc.is_hermitian(self.phi.choi, 1e-10):
                raise ValueError("Φ must preserve Hermiticity (Hermitian Choi matrix)")
            adj = mc.adjoint_channel(self.phi)
        else:
            y = mc.random_hermitian(d, np.random.default_rng(7))
            if not mc.is_hermitian(self.phi(y), 1e-9):
                raise ValueError("Φ must preserve Hermiticity")
            adj = self.phi.adjoint()
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "phi_adj", adj)
        if self.width_certified:
            certify_width(self)

    @property
    def dim(self) -> int:
        return self.b.shape[0]


def certify_width(inst: SdpInstance, samples: int = WIDTH_SAMPLES, seed: int = 42) -> float:
    """Spot-check ‖B‖∞ ≤ 1 and ‖Φ*(Y)‖∞ ≤ ‖Y‖∞ on random Hermitian Y; returns the worst ratio."""
    if mc.spectral_norm(inst.b) > 1 + CHECK_TOL:
        raise ValueError(f"‖B‖∞ = {mc.spectral_norm(inst.b):.6g} exceeds 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        y = mc.random_hermitian(inst.dim, rng, norm=1.0)
        worst = max(worst, mc.spectral_norm(inst.phi_adj(y)))
    if worst > 1 + 1e-6:
        raise ValueError(f"adjoint map is not contracting (ratio {worst:.6g})")
    return worst


@dataclass(frozen=True)
class SolveReport:
    rho: np.ndarray
    residual: float
    epsilon: float
    delta: float
    T: int
    iterates: tuple | None = None
    history: tuple = ()
    bound: float = float("nan")
    potential_ok: bool = True
    ledger: tuple = ()
    diagnostics: dict = field(default_factory=dict, compare=False)


def iteration_count(d: int, eps: float) -> int:
    return max(1, math.ceil(math.log(d) / eps ** 2 - 1e-12))


def residual(inst: SdpInstance, rho: np.ndarray) -> float:
    return mc.trace_norm(inst.phi(mc.as_matrix(rho)) - inst.b)


def _hermitian_input(m: np.ndarray) -> np.ndarray:
    m = mc.as_matrix(m)
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if not mc.is_hermitian(m, 1e-9 * scale):
        raise ValueError("oracle input must be Hermitian")
    return 0.5 * (m + m.conj().T)


def exact_td_oracle(m: np.ndarray) -> np.ndarray:
    """sgn(M), with eigenvalues at round-off level mapped to 0."""
    m = _hermitian_input(m)
    w, v = np.linalg.eigh(m)
    cut = 1e-12 * max(1.0, float(np.max(np.abs(w))))
    s = np.where(np.abs(w) <= cut, 0.0, np.sign(w))
    return (v * s) @ v.conj().T


def td_kappa(d: int, c: float, delta: float) -> float:
    return delta / (6 * d * c)


def poly_td_oracle(m: np.ndarray, c: float, delta: float) -> np.ndarray:
    """P^sgn(M/C) with κ = δ/(6DC); (C, δ)-goodness is checked on every call."""
    m = _hermitian_input(m)
    if delta <= 0 or c <= 0:
        raise ValueError("C and delta must be positive")
    nrm = mc.spectral_norm(m)
    if nrm > c * (1 + CHECK_TOL):
        raise ValueError(f"‖M‖∞ = {nrm:.6g} exceeds the width bound C = {c}")
    s = sign_series(td_kappa(m.shape[0], c, delta))
    h = mc.matfunc_herm(m / c, lambda x: s(np.clip(x, -1.0, 1.0)))
    h_norm = mc.spectral_norm(h)
    gap = abs(float(np.real(mc.hs_inner(h, m))) - mc.trace_norm(m))
    if h_norm > 2 + CHECK_TOL or gap > delta + CHECK_TOL:
        raise RuntimeError(f"trace distance oracle not good: ‖H‖={h_norm:.3g}, pairing gap={gap:.3g}")
    return h


def exact_gibbs_oracle(m: np.ndarray, eps: float) -> np.ndarray:
    """exp(−εM)/Tr exp(−εM), spectrally shifted so the exponent never overflows."""
    m = _hermitian_input(m)
    w, v = np.linalg.eigh(m)
    x = -eps * w
    x -= np.max(x)
    e = np.exp(x)
    g = (v * e) @ v.conj().T
    return g / np.sum(e)


def make_oracles(kind: str, d: int, delta: float = 0.0, width: float = 2.0) -> tuple[TdOracle, GibbsOracle, float]:
    """(trace distance oracle, Gibbs oracle, δ) for ``kind`` in {"exact", "poly"}."""
    if kind == "exact":
        return exact_td_oracle, exact_gibbs_oracle, 0.0
    if kind == "poly":
        if delta <= 0:
            raise ValueError("polynomial oracles need delta > 0")
        return (lambda m: poly_td_oracle(m, width, delta)), exact_gibbs_oracle, float(delta)
    raise ValueError(f"unknown oracle kind {kind!r}")


def potential_rhs(pairing_sum: float, d: int, eps: float, delta: float, t: int) -> float:
    return pairing_sum - math.log(d) / eps - 2 * t * (eps + delta + math.sinh(2 * eps))


def solve(inst: SdpInstance, eps: float, td_oracle: TdOracle | None = None,
          gibbs_oracle: GibbsOracle | None = None, delta: float = 0.0,
          store_iterates: bool = False) -> SolveReport:
    """Run T = ⌈ln D/ε²⌉ rounds from ρ₁ = I/D and average ρ_1..ρ_T."""
    if not inst.width_certified:
        raise ValueError("solve needs an instance with certified width")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    td_oracle = td_oracle or exact_td_oracle
    gibbs_oracle = gibbs_oracle or exact_gibbs_oracle
    d = inst.dim
    T = iteration_count(d, eps)
    rho_t = np.eye(d, dtype=complex) / d
    total = np.zeros((d, d), dtype=complex)
    adj_sum = np.zeros((d, d), dtype=complex)
    pair_sum = 0.0
    iterates, history = [], []
    potential_ok = True
    for t in range(1, T + 1):
        diff = inst.phi(rho_t) - inst.b
        diff = 0.5 * (diff + diff.conj().T)
        width = mc.spectral_norm(diff)
        if width > 2 + CHECK_TOL:
            raise RuntimeError(f"width bound violated at t={t}: ‖Φ(ρ_t) − B‖∞ = {width:.6g}")
        h = td_oracle(diff)
        gap = abs(float(np.real(mc.hs_inner(h, diff))) - mc.trace_norm(diff))
        if mc.spectral_norm(h) > 2 + CHECK_TOL or gap > delta + CHECK_TOL:
            raise RuntimeError(f"trace distance oracle failed at t={t} (pairing gap {gap:.3g})")
        g_h = inst.phi_adj(h)
        pair_sum += float(np.real(mc.hs_inner(rho_t, g_h)))
        adj_sum = adj_sum + g_h
        lam_min = float(np.linalg.eigvalsh(0.5 * (adj_sum + adj_sum.conj().T))[0])
        rhs = potential_rhs(pair_sum, d, eps, delta, t)
        ok = lam_min >= rhs - CHECK_TOL
        potential_ok &= ok
        total += rho_t
        if store_iterates:
            iterates.append(rho_t)
        history.append({"t": t, "width": width, "pairing_gap": gap, "lambda_min": lam_min,
                        "potential_rhs": rhs, "potential_ok": bool(ok)})
        rho_next = gibbs_oracle(adj_sum, eps)
        g_err = mc.trace_distance(rho_next, exact_gibbs_oracle(adj_sum, eps)) * 2
        if g_err > delta + CHECK_TOL:
            raise RuntimeError(f"Gibbs oracle failed at t={t} (trace-norm error {g_err:.3g})")
        rho_t = rho_next
    rho = total / T
    return SolveReport(rho=rho, residual=residual(inst, rho), epsilon=eps, delta=delta, T=T,
                       iterates=tuple(iterates) if store_iterates else None, history=tuple(history),
                       bound=11 * eps + 2 * delta, potential_ok=bool(potential_ok))


def dual_witness_bound(inst: SdpInstance, h: np.ndarray) -> float:
    """Lower bound on every residual ‖Φ(ρ) − B‖₁ from a Hermitian witness H."""
    h = _hermitian_input(h)
    h = h / max(mc.spectral_norm(h), 1e-300)
    lam = float(np.linalg.eigvalsh(inst.phi_adj(h))[0])
    return lam - float(np.real(mc.hs_inner(inst.b, h)))


# ------------------------------------------------------------------ instances


def identity_instance(d: int) -> SdpInstance:
    return SdpInstance(mc.Channel.identity(d), np.eye(d, dtype=complex) / d, label="identity")


def random_feasible_instance(d: int, rng: np.random.Generator, n_kraus: int = 2) -> tuple[SdpInstance, np.ndarray]:
    """(Φ, Φ(σ)) for a random CPTP Φ and density σ, so the instance is exactly feasible."""
    ch = mc.random_channel(d, d, rng, n_kraus)
    sigma = mc.random_density(d, rng)
    b = ch(sigma)
    return SdpInstance(ch, 0.5 * (b + b.conj().T), label="feasible"), sigma


def scaled_infeasible_instance(d: int, rng: np.random.Generator, scale: float = 0.5) -> SdpInstance:
    """Trace mismatch Tr B = scale ≠ 1 makes the instance infeasible; I is a witness."""
    inst, _ = random_feasible_instance(d, rng)
    return SdpInstance(inst.phi, scale * inst.b, label="infeasible")


# ------------------------------------------------------------ block-encoded


def _maximally_mixed_be(d: int) -> tuple[be_mod.BlockEncoding, np.ndarray]:
    phi = mc.maximally_entangled(d)
    prep = be_mod.complete_unitary(phi.reshape(-1, 1), [0])
    return be_mod.from_state_prep(prep, [d, d], traced=1), phi


def solve_block_encoded(inst: SdpInstance, eps: float, delta: float = 0.05,
                        target_be_error: float = 1e-8,
                        budget_threshold: float | None = None) -> tuple[np.ndarray, SolveReport]:
    """Run every round on block encodings and return the purification (1/√T)Σ_t |ψ_t⟩|t⟩.

    The returned vector has register order (system D, purifying copy D, round index T).
    Width normalisations are re-tuned to the known norm bounds (2 for the
    constraint violation, t(1+κ) for the accumulated loss) before each polynomial.
    The certified budget (mean of the per-iterate Gibbs budgets) is reported; it
    is raised as an error only when it exceeds ``budget_threshold``.
    """
    d = inst.dim
    if d > 8:
        raise ValueError("the block-encoded pipeline is limited to D ≤ 8")
    if not isinstance(inst.phi, mc.Channel):
        inst = SdpInstance(inst.phi.to_channel(), inst.b, inst.width_certified, inst.label)
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    T = iteration_count(d, eps)
    width = 2.0
    kappa = td_kappa(d, width, delta)
    sgn = sign_series(kappa)
    rho_be, psi = _maximally_mixed_be(d)
    b_be = be_mod.from_entries(inst.b)
    h_bes, psis, ledger, ancillas, budgets, h_mats = [], [psi], [], [rho_be.a_circuit], [], []
    # H_T and ρ_{T+1} never reach the average, so rounds stop at T − 1
    for t in range(1, T):
        phi_be = be_mod.apply_superop_be(rho_be, inst.phi)
        raw = be_mod.lincomb([1.0, -1.0], [phi_be, b_be])
        diff = be_mod.retune_alpha(raw, width)
        h_be = be_mod.poly_of_be(diff, sgn)
        h_bes.append(h_be)
        h_mats.append(be_mod.extract_block(h_be))
        acc = be_mod.lincomb([1.0] * t, h_bes) if t > 1 else h_be
        adj = be_mod.apply_superop_be(acc, inst.phi_adj)
        bound = t * (1 + kappa)
        adj = be_mod.retune_alpha(adj, bound)
        req = statesynth.GibbsRequest(adj, -eps, bound, target_be_error)
        pure = statesynth.gibbs_pure(req)
        mixed = statesynth.gibbs_mixed(req, pure)
        budgets.append(pure.budget)
        rounds = [phi_be, b_be, raw, diff, h_be, acc, adj]
        ledger.extend({**row, "round": t} for row in [r.ledger_row() for r in rounds] + mixed.stages)
        # nominal width: prep register (D² qubit levels) plus the amplified circuit's ancillas
        nominal = int(round(np.log2(d * d))) + pure.encoding.a_circuit
        rho_be = replace(mixed.encoding, a_circuit=nominal)
        ancillas.append(nominal)
        col = be_mod.extract_block(pure.encoding)[:, 0]
        psis.append(col / np.linalg.norm(col))
    state = np.stack(psis, axis=1).reshape(-1) / np.sqrt(T)  # (system, copy, round)
    rho = mc.partial_trace(np.outer(state, state.conj()), [d, d, T], [0])
    certified = float(np.mean([0.0] + budgets))
    diag = {"kappa": kappa, "sign_degree": sgn.degree, "ancillas": ancillas, "gibbs_budgets": budgets,
            "certified_budget": certified, "H": h_mats}
    if budget_threshold is not None and certified > budget_threshold:
        raise RuntimeError(f"certified budget {certified:.3g} exceeds {budget_threshold:.3g}; ledger: {ledger}")
    report = SolveReport(rho=rho, residual=residual(inst, rho), epsilon=eps, delta=delta, T=T,
                         bound=11 * eps + 2 * delta, ledger=tuple(ledger), diagnostics=diag)
    return state, report
