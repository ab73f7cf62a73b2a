"""Gibbs-state preparation, purification of mixed states and Pauli entry estimation."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from . import blockenc as be_mod
from . import matcore as mc
from .blockenc import BlockEncoding
from .chebpoly import exp_error_bound, exp_series, sqrt_series

DEFAULT_TARGET = 1e-8


@dataclass(frozen=True)
class GibbsRequest:
    """Request for exp(βA)/Tr exp(βA); β is signed, so β < 0 gives exp(−|β|A)."""

    hamiltonian_be: BlockEncoding
    beta: float
    norm_bound: float
    target: float = DEFAULT_TARGET

    def __post_init__(self):
        if not np.isfinite(self.beta):
            raise ValueError("beta must be finite")
        nrm = mc.spectral_norm(be_mod.extract_block(self.hamiltonian_be))
        if self.norm_bound < nrm - self.hamiltonian_be.eps - 1e-9:
            raise ValueError(f"norm_bound {self.norm_bound} is below the encoded norm {nrm}")
        if not 0 < self.target < 1:
            raise ValueError("target must lie in (0, 1)")


@dataclass(frozen=True)
class GibbsResult:
    encoding: BlockEncoding
    budget: float
    stages: list = field(default_factory=list)


def exp_of_be(be: BlockEncoding, beta: float, k: int, norm_bound: float | None = None) -> BlockEncoding:
    """Encoding of exp(βA) from the degree-k Taylor series of exp(βα x)."""
    p = be.alpha if norm_bound is None else norm_bound
    series = exp_series(beta * be.alpha, k)
    out = be_mod.poly_of_be(be, series)
    eps = 4 * k * out.alpha * np.sqrt(be.eps / be.alpha) + 2 * exp_error_bound(beta * p, k)
    return replace(out, eps=eps, label="exp")


def taylor_degree(beta: float, norm_bound: float, target: float) -> int:
    return int(np.ceil(2 * np.e * abs(beta) * norm_bound + np.log(1 / target))) + 2


def amplification_depth(success_lb: float, target: float, cap: int = be_mod.FIXED_POINT_MAX_DEPTH) -> int:
    """Smallest m with (1 − success_lb)^{3^m} ≤ target."""
    eta = 1.0 - success_lb
    for m in range(cap + 1):
        if eta ** (3 ** m) <= target:
            return m
    raise RuntimeError(f"amplification needs more than {cap} levels (success bound {success_lb:.3e})")


def gibbs_pure(req: GibbsRequest) -> GibbsResult:
    """(1, budget)-encoding of |Γ⟩⟨0…0| with Tr_2 |Γ⟩⟨Γ| ≈ exp(βA)/Tr exp(βA)."""
    h = req.hamiltonian_be
    d = h.sys_dim
    half = req.beta / 2
    k = taylor_degree(half, req.norm_bound, req.target)
    e = exp_of_be(h, half, k, req.norm_bound)
    pur = be_mod.purify_be(e)
    blk = be_mod.extract_block(h)
    herm = 0.5 * (blk + blk.conj().T)
    nu = np.sqrt(d / np.trace(mc.matfunc_herm(req.beta * herm, np.exp)).real)
    scaled = be_mod.rescale(pur, nu)
    gamma = e.alpha * np.exp(abs(req.beta) * req.norm_bound / 2)
    m = amplification_depth(1.0 / gamma ** 2, req.target)
    amp = be_mod.fixed_point_amplify(pur, m)
    q = (1 - 1 / gamma ** 2) ** (3 ** m)
    state_err = 2 * e.eps * np.exp(abs(req.beta) * req.norm_bound / 2)
    budget = state_err + (1 - np.sqrt(1 - q)) + np.sqrt(q)
    amp = replace(amp, eps=state_err + (1 - np.sqrt(1 - q)), label="gibbs_pure")
    stages = [h.ledger_row(), e.ledger_row(), pur.ledger_row(), scaled.ledger_row(), amp.ledger_row()]
    return GibbsResult(amp, float(budget), stages)


def gibbs_pure_be(req: GibbsRequest) -> BlockEncoding:
    return gibbs_pure(req).encoding


def gibbs_mixed(req: GibbsRequest, pure: GibbsResult | None = None) -> GibbsResult:
    pure = pure if pure is not None else gibbs_pure(req)
    v = pure.encoding
    d = req.hamiltonian_be.sys_dim
    mixed = be_mod.from_state_prep(v.unitary, [d, v.dim // d], traced=1)
    mixed = replace(mixed, eps=pure.budget, label="gibbs_mixed")
    return GibbsResult(mixed, pure.budget, pure.stages + [mixed.ledger_row()])


def gibbs_mixed_be(req: GibbsRequest) -> BlockEncoding:
    return gibbs_mixed(req).encoding


def gibbs_extract(req: GibbsRequest) -> np.ndarray:
    """Normalised 2n-qubit purification read off the amplified encoding."""
    col = be_mod.extract_block(gibbs_pure_be(req))[:, 0]
    return col / np.linalg.norm(col)


def gibbs_exact(a: np.ndarray, beta: float) -> np.ndarray:
    g = mc.matfunc_herm(beta * mc.as_matrix(a), np.exp)
    return g / np.trace(g).real


# --------------------------------------------------------------- purification


@dataclass(frozen=True)
class PurifyResult:
    state: np.ndarray
    budget: float
    success_prob: float
    attempts_used: int


def sqrt_psd_be(be: BlockEncoding, kappa: float, proj_tol: float = 1e-9) -> tuple[BlockEncoding, dict]:
    """Encoding of √(A/(2α)) for PSD A via B = A − αI and the square-root series."""
    alpha = be.alpha
    b = be_mod.lincomb([1.0, -alpha], [be, be_mod.identity_be(be.sys_dim)])
    b = be_mod.retune_alpha(b, alpha)
    s = sqrt_series(kappa, proj_tol=proj_tol)
    out = be_mod.poly_of_be(b, s)
    info = {"shift": s.meta["shift"], "projection_error": s.meta["projection_error"], "degree": s.degree}
    return replace(out, label="sqrt"), info


def purify_mixed(rho: np.ndarray, attempts: int = 64, kappa: float = 0.02,
                 rng: np.random.Generator | None = None) -> PurifyResult:
    """Purification √D(√ρ ⊗ I)|Φ⟩ synthesised from a block encoding of ρ, with repeat-until-success."""
    rho = mc.as_matrix(rho)
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if w[0] < -1e-9 or abs(np.sum(w) - 1) > 1e-9:
        raise ValueError("purify_mixed needs a density matrix")
    rng = rng if rng is not None else np.random.default_rng(42)
    d = rho.shape[0]
    a_be = be_mod.from_entries(rho)
    root, info = sqrt_psd_be(a_be, kappa)
    pur = be_mod.purify_be(root)
    col = pur.corner()[:, 0]  # post-selected amplitude vector, norm² = success probability
    p_succ = float(np.vdot(col, col).real)
    used = 0
    for used in range(1, attempts + 1):
        if rng.random() < p_succ:
            break
    else:
        raise RuntimeError(f"all {attempts} attempts failed (success probability {p_succ:.3e}, "
                           f"failure bound {(1 - p_succ) ** attempts:.3e})")
    state = col / np.sqrt(p_succ)
    # exact series: R² = (1−c)ρ/(2α) + c I, i.e. a depolarised ρ
    c, alpha = info["shift"], a_be.alpha
    dep = c * d / ((1 - c) / (2 * alpha) + c * d)
    e = info["projection_error"]
    tr_min = (1 - c) / (2 * alpha) + c * d
    budget = dep * (1 - 1 / d) + d * 2 * e * (2 + e) / tr_min
    return PurifyResult(state, float(budget), p_succ, used)


# ----------------------------------------------------------- Pauli estimation

_PAULIS = (mc.PAULI_I, mc.PAULI_X, mc.PAULI_Y, mc.PAULI_Z)


def pauli_strings(r: int):
    for idx in itertools.product(range(4), repeat=r):
        yield idx, mc.kron(*[_PAULIS[i] for i in idx]) if r else np.ones((1, 1), dtype=complex)


def pauli_expectations(rho: np.ndarray, shots: int | None = None,
                       rng: np.random.Generator | None = None) -> dict:
    """Tr(ρP) for every Pauli string, exact (shots=None) or from ±1 measurement samples."""
    rho = mc.as_matrix(rho)
    r = int(round(np.log2(rho.shape[0])))
    if 2 ** r != rho.shape[0]:
        raise ValueError("Pauli estimation needs a qubit register")
    if shots is not None and shots < 1:
        raise ValueError("shots must be at least 1")
    rng = rng if rng is not None else np.random.default_rng(42)
    out = {}
    for idx, p in pauli_strings(r):
        t = float(np.real(np.trace(rho @ p)))
        if shots is not None and any(idx):
            plus = rng.binomial(shots, min(1.0, max(0.0, (1 + t) / 2)))
            t = 2 * plus / shots - 1
        out[idx] = t
    return out


def estimate_entries(rho: np.ndarray, shots: int | None, x: int, y: int,
                     rng: np.random.Generator | None = None, expectations: dict | None = None) -> complex:
    """c_xy = 2^{−r} Σ_P α_P ⟨x|P|y⟩ with α_P the (estimated) Pauli expectations."""
    rho = mc.as_matrix(rho)
    r = int(round(np.log2(rho.shape[0])))
    ex = expectations if expectations is not None else pauli_expectations(rho, shots, rng)
    total = 0j
    for idx, p in pauli_strings(r):
        total += ex[idx] * p[x, y]
    return total / 2 ** r


def reduced_state(psi: np.ndarray, dims, keep) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return mc.partial_trace(np.outer(psi, psi.conj()), dims, keep)

