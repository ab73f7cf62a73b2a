"""Block-encoding calculus with explicit (α, ε, a) bookkeeping.

Ordering convention: every unitary acts on ``system ⊗ ancilla`` with the
ancilla qubits as the trailing tensor factor, so the encoded block is the
submatrix whose row and column indices are multiples of ``2**a``.

All unitaries are materialised densely. When a construction would exceed
``MAX_DIM`` the inputs (or the output) are re-realised by a one-ancilla
unitary dilation of their block. The block, α and ε are unchanged by this;
``a_circuit`` keeps the ancilla count of the uncompressed construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import matcore as mc
from .chebpoly import ChebSeries

MAX_DIM = 1024
FLOAT_SLACK = 1e-9
FIXED_POINT_MAX_DEPTH = 12


def _nqubits(d: int) -> int:
    q = int(np.ceil(np.log2(d))) if d > 1 else 0
    return q


def _is_pow2(d: int) -> bool:
    return d >= 1 and (d & (d - 1)) == 0


@dataclass(frozen=True)
class BlockEncoding:
    unitary: np.ndarray
    alpha: float
    eps: float
    a: int
    sys_dim: int
    a_circuit: int | None = None
    label: str = ""
    stats: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        u = mc.as_matrix(self.unitary)
        if u.shape != (self.sys_dim * 2 ** self.a,) * 2:
            raise ValueError(f"unitary shape {u.shape} inconsistent with sys_dim={self.sys_dim}, a={self.a}")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        object.__setattr__(self, "unitary", u)
        if self.a_circuit is None:
            object.__setattr__(self, "a_circuit", self.a)

    @property
    def dim(self) -> int:
        return self.unitary.shape[0]

    def corner(self) -> np.ndarray:
        """(I ⊗ ⟨0^a|) U (I ⊗ |0^a⟩) without the α factor."""
        s = 2 ** self.a
        return self.unitary[::s, ::s]

    def ledger_row(self) -> dict:
        return {"stage": self.label, "alpha": float(self.alpha), "eps": float(self.eps),
                "ancillas": int(self.a_circuit), "ancillas_realised": int(self.a)}


def extract_block(be: BlockEncoding) -> np.ndarray:
    return be.alpha * be.corner()


def check_encoding(be: BlockEncoding, target: np.ndarray, slack: float = 1e-8) -> float:
    """Return ‖target − extract‖∞ and raise if it exceeds eps + slack."""
    err = mc.spectral_norm(mc.as_matrix(target) - extract_block(be))
    if err > be.eps + slack:
        raise AssertionError(f"encoding error {err:.3e} exceeds certified {be.eps:.3e}")
    return err


# ------------------------------------------------------------------ helpers


def complete_unitary(cols: np.ndarray, positions: Sequence[int]) -> np.ndarray:
    """Unitary whose columns at ``positions`` are the orthonormal ``cols``.

    Remaining columns come from a Householder QR of ``cols`` (deterministic).
    """
    cols = mc.as_matrix(cols)
    n, k = cols.shape
    if len(positions) != k:
        raise ValueError("one position per column is required")
    gram = cols.conj().T @ cols
    if np.max(np.abs(gram - np.eye(k))) > 1e-9:
        raise ValueError("columns are not orthonormal")
    q, _ = np.linalg.qr(cols, mode="complete")
    rest = q[:, k:]
    u = np.zeros((n, n), dtype=complex)
    pos = list(positions)
    others = [i for i in range(n) if i not in set(pos)]
    u[:, pos] = cols
    u[:, others] = rest
    return u


def _dilate_contraction(m: np.ndarray) -> np.ndarray:
    """One-ancilla unitary dilation of a contraction, ancilla last."""
    m = mc.as_matrix(m)
    return _anc_first_to_last(embed_almost_unitary(m), m.shape[0], 2)


def _anc_first_to_last(big: np.ndarray, d: int, da: int) -> np.ndarray:
    return mc.permute_subsystems(big, [da, d], [1, 0])


def embed_almost_unitary(a: np.ndarray, delta: float | None = None) -> np.ndarray:
    """Unitary A₀ = [[A, −B], [B, A]] with B = U√(1−Σ²)V†.

    The returned matrix is in the block form above, i.e. the extra qubit is the
    leading tensor factor. ``delta`` (optional) enforces σ_min ≥ 1 − δ.
    """
    a = mc.as_matrix(a)
    u, s, v = mc.svd(a)
    if s.size and s[0] > 1 + 1e-9:
        raise ValueError(f"largest singular value {s[0]:.6g} exceeds 1")
    if delta is not None and s.size and s[-1] < 1 - delta - 1e-12:
        raise ValueError(f"smallest singular value {s[-1]:.6g} below 1 - delta")
    s = np.clip(s, 0.0, 1.0)
    a_c = (u * s) @ v.conj().T
    b = (u * np.sqrt(1 - s ** 2)) @ v.conj().T
    return np.block([[a_c, -b], [b, a_c]])


def _embed_system_anc(u_small: np.ndarray, sys_dim: int, a_small: int, a_total: int) -> np.ndarray:
    """Extend a unitary on sys ⊗ anc(a_small) with identity on extra trailing ancillas."""
    extra = a_total - a_small
    if extra == 0:
        return u_small
    return np.kron(u_small, np.eye(2 ** extra))


def compress(be: BlockEncoding) -> BlockEncoding:
    """Re-realise the same block with a single ancilla qubit."""
    if be.a <= 1:
        return be
    u = _dilate_contraction(be.corner())
    return replace(be, unitary=u, a=1)


def _fit(be: BlockEncoding) -> BlockEncoding:
    return compress(be) if be.dim > MAX_DIM else be


def _prefit(bes: Sequence[BlockEncoding], prospective: int) -> list[BlockEncoding]:
    return [compress(b) for b in bes] if prospective > MAX_DIM else list(bes)


# -------------------------------------------------------------- constructors


def identity_be(d: int) -> BlockEncoding:
    return BlockEncoding(np.eye(d, dtype=complex), 1.0, 0.0, 0, d, label="identity")


def from_unitary(u: np.ndarray, label: str = "unitary") -> BlockEncoding:
    u = mc.as_matrix(u)
    if not mc.is_unitary(u, 1e-9):
        raise ValueError("matrix is not unitary")
    return BlockEncoding(u, 1.0, 0.0, 0, u.shape[0], label=label)


def from_matrix(a: np.ndarray, alpha: float | None = None, label: str = "dilation") -> BlockEncoding:
    """(α, 0, 1)-encoding of an arbitrary square matrix by unitary dilation."""
    a = mc.as_matrix(a)
    nrm = mc.spectral_norm(a)
    alpha = float(alpha) if alpha is not None else max(nrm, 1e-300)
    if nrm > alpha * (1 + 1e-12):
        raise ValueError(f"alpha={alpha} is below the operator norm {nrm}")
    return BlockEncoding(_dilate_contraction(a / alpha), alpha, 0.0, 1, a.shape[0], label=label)


def from_entries(a: np.ndarray) -> BlockEncoding:
    """(D, 0, 1 + log D)-encoding built from entry rotations."""
    a = mc.as_matrix(a)
    d = a.shape[0]
    if a.shape != (d, d) or not _is_pow2(d):
        raise ValueError("from_entries needs a square matrix with power-of-two dimension")
    if np.max(np.abs(a)) > 1 + 1e-12:
        raise ValueError("entries must have magnitude at most 1")
    n = _nqubits(d)
    if d * 2 ** (n + 1) > MAX_DIM:
        # same block A/D, realised compactly; a_circuit keeps the rotation circuit's width
        return BlockEncoding(_dilate_contraction(a / d), float(d), 0.0, 1, d, n + 1, "from_entries")
    h = mc.kron(*([mc.HADAMARD] * n)) if n else np.ones((1, 1), dtype=complex)
    amp = np.clip(np.abs(a), 0, 1)
    comp = np.sqrt(1 - amp ** 2)
    # theta_j[i, h, f] = (1/√D) · H|j⟩_h · (A_ij if f==0 else √(1−|A_ij|²))
    cols = np.zeros((d, d, 2, d), dtype=complex)
    for j in range(d):
        cols[:, :, 0, j] = np.outer(a[:, j], h[:, j]) / np.sqrt(d)
        cols[:, :, 1, j] = np.outer(comp[:, j], h[:, j]) / np.sqrt(d)
    cols = cols.reshape(d * d * 2, d)
    a_anc = n + 1
    positions = [j * 2 ** a_anc for j in range(d)]
    u = complete_unitary(cols, positions)
    return BlockEncoding(u, float(d), 0.0, a_anc, d, label="from_entries")


def _state_prep_unitary(amps: np.ndarray) -> np.ndarray:
    """Binary-tree rotation cascade preparing Σ amps_j |j⟩ (amps ≥ 0) from |0⟩."""
    amps = np.asarray(amps, dtype=float)
    n = _nqubits(amps.size)
    full = np.zeros(2 ** n)
    full[: amps.size] = amps
    full /= np.linalg.norm(full)
    u = np.eye(1, dtype=complex)
    for level in range(n):
        # multiplexed Ry on qubit `level`, controlled by the first `level` qubits
        blocks = []
        chunk = 2 ** (n - level)
        for p in range(2 ** level):
            seg = full[p * chunk:(p + 1) * chunk]
            left, right = np.linalg.norm(seg[: chunk // 2]), np.linalg.norm(seg[chunk // 2:])
            th = 2 * np.arctan2(right, left)
            c, s = np.cos(th / 2), np.sin(th / 2)
            blocks.append(np.array([[c, -s], [s, c]], dtype=complex))
        mux = mc.direct_sum(blocks)
        u = mux @ np.kron(u, np.eye(2))
    return u


def from_state_prep(prep: np.ndarray, split: mc.RegisterSplit | Sequence[int], traced: int = 1) -> BlockEncoding:
    """(1, 0, log(D_X D_Y))-encoding of Tr_traced(|ψ⟩⟨ψ|) for |ψ⟩ = prep|0⟩."""
    prep = mc.as_matrix(prep)
    if not mc.is_unitary(prep, 1e-9):
        raise ValueError("state-preparation matrix must be unitary")
    if not isinstance(split, mc.RegisterSplit):
        split = mc.RegisterSplit(tuple(split))
    if len(split.dims) != 2 or prep.shape[0] != split.total:
        raise ValueError("state preparation needs a bipartite split matching its dimension")
    if traced not in (0, 1):
        raise ValueError("traced must be 0 or 1")
    dx, dy = split.dims if traced == 1 else split.dims[::-1]
    if traced == 0:
        perm = mc.permutation_unitary(split.dims, [1, 0])
        prep = perm @ prep
    na = _nqubits(dx * dy)
    if 2 ** na != dx * dy:
        raise ValueError("ancilla register X⊗Y must be a whole number of qubits")
    # registers: X' (system, dx) ⊗ X (dx) ⊗ Y (dy); W = prep† · SWAP(X', X) · prep
    if dx * dx * dy > MAX_DIM:
        psi = prep[:, 0]
        rho = mc.partial_trace(np.outer(psi, psi.conj()), [dx, dy], [0])
        return BlockEncoding(_dilate_contraction(rho), 1.0, 0.0, 1, dx, na, "state_prep")
    p_full = np.kron(np.eye(dx), prep)
    w = p_full.conj().T @ mc.permute_subsystems(p_full, [dx, dx, dy], [1, 0, 2], side="left")
    be = BlockEncoding(w, 1.0, 0.0, na, dx, label="state_prep")
    return _fit(be)


# --------------------------------------------------------------- combinators


def _on_sys_and_anc(u: np.ndarray, sys_dim: int, a_own: int, a_before: int, a_after: int) -> np.ndarray:
    """Lift a unitary on sys ⊗ anc_own to sys ⊗ anc_before ⊗ anc_own ⊗ anc_after."""
    db, da, dd = 2 ** a_before, 2 ** a_own, 2 ** a_after
    big = np.kron(np.kron(np.eye(db), u), np.eye(dd))  # order: before, sys, own, after
    return mc.permute_subsystems(big, [db, sys_dim, da, dd], [1, 0, 2, 3])


def product(be_a: BlockEncoding, be_b: BlockEncoding) -> BlockEncoding:
    """(αβ, βε_A + αε_B, a+b)-encoding of A·B."""
    if be_a.sys_dim != be_b.sys_dim:
        raise ValueError("product requires equal system dimensions")
    d = be_a.sys_dim
    nominal_a = be_a.a_circuit + be_b.a_circuit
    be_a, be_b = _prefit([be_a, be_b], d * 2 ** (be_a.a + be_b.a))
    ua = _on_sys_and_anc(be_a.unitary, d, be_a.a, 0, be_b.a)
    ub = _on_sys_and_anc(be_b.unitary, d, be_b.a, be_a.a, 0)
    alpha = be_a.alpha * be_b.alpha
    eps = be_b.alpha * be_a.eps + be_a.alpha * be_b.eps
    out = BlockEncoding(ua @ ub, alpha, eps, be_a.a + be_b.a, d, nominal_a, "product")
    return _fit(out)


def adjoint_be(be: BlockEncoding) -> BlockEncoding:
    return replace(be, unitary=be.unitary.conj().T, label="adjoint")


def tensor_identity(be: BlockEncoding, d: int, side: str = "right") -> BlockEncoding:
    """Encoding of A⊗I_d (side='right') or I_d⊗A (side='left')."""
    s, da = be.sys_dim, 2 ** be.a
    big = np.kron(be.unitary, np.eye(d))  # sys, anc, extra
    if side == "right":
        u = mc.permute_subsystems(big, [s, da, d], [0, 2, 1])
    elif side == "left":
        u = mc.permute_subsystems(big, [s, da, d], [2, 0, 1])
    else:
        raise ValueError("side must be 'left' or 'right'")
    return _fit(BlockEncoding(u, be.alpha, be.eps, be.a, s * d, be.a_circuit, "tensor_identity"))


def permute_system(be: BlockEncoding, dims: Sequence[int], perm: Sequence[int]) -> BlockEncoding:
    p = mc.permutation_unitary(dims, perm)
    pp = np.kron(p, np.eye(2 ** be.a))
    return replace(be, unitary=pp @ be.unitary @ pp.conj().T, label="permute")


def lincomb(ys: Sequence[complex], bes: Sequence[BlockEncoding]) -> BlockEncoding:
    """Encoding of Σ y_j A_j with α = Σ |y_j| α_j."""
    if len(bes) == 0 or len(ys) != len(bes):
        raise ValueError("lincomb needs one weight per (non-empty) encoding")
    ys = np.asarray(ys, dtype=complex)
    if not np.all(np.isfinite(ys)):
        raise ValueError("weights must be finite")
    d = bes[0].sys_dim
    if any(b.sys_dim != d for b in bes):
        raise ValueError("lincomb requires equal system dimensions")
    ytil = ys * np.array([b.alpha for b in bes])
    norm1 = float(np.sum(np.abs(ytil)))
    if norm1 == 0:
        raise ValueError("all weights are zero")
    m = len(bes)
    q = _nqubits(m)
    nominal_a = max(b.a_circuit for b in bes) + q
    bes = _prefit(list(bes), d * 2 ** (max(b.a for b in bes) + q))
    a_max = max(b.a for b in bes)
    dim_inner = d * 2 ** a_max
    blocks = []
    for j in range(2 ** q):
        if j < m:
            u = _embed_system_anc(bes[j].unitary, d, bes[j].a, a_max)
            ph = ytil[j] / abs(ytil[j]) if ytil[j] != 0 else 1.0
            blocks.append(ph * u)
        else:
            blocks.append(np.eye(dim_inner, dtype=complex))
    select = mc.direct_sum(blocks)  # index register leading
    prep = _state_prep_unitary(np.sqrt(np.abs(ytil) / norm1)) if q else np.ones((1, 1), dtype=complex)
    prep_full = np.kron(prep, np.eye(dim_inner))
    w = prep_full.conj().T @ select @ prep_full
    # move index register after the ancillas
    w = mc.permute_subsystems(w, [2 ** q, d, 2 ** a_max], [1, 2, 0])
    eps_prime = max(b.eps for b in bes) / min(b.alpha for b in bes)
    eps = norm1 * eps_prime
    return _fit(BlockEncoding(w, norm1, eps, a_max + q, d, nominal_a, "lincomb"))


def partial_trace_be(be: BlockEncoding, split: mc.RegisterSplit | Sequence[int], traced: int) -> BlockEncoding:
    """(D_Y α, 2 D_Y ε)-encoding of Tr_Y(A) for Y = split.dims[traced]."""
    if not isinstance(split, mc.RegisterSplit):
        split = mc.RegisterSplit(tuple(split))
    if split.total != be.sys_dim:
        raise ValueError("register split does not match the system dimension")
    dims = list(split.dims)
    if not 0 <= traced < len(dims):
        raise ValueError("traced index out of range")
    dy = dims[traced]
    if dy == 1:
        return be
    if not _is_pow2(dy):
        raise ValueError("traced register must be a whole number of qubits")
    keep = [i for i in range(len(dims)) if i != traced]
    perm = keep + [traced]
    be_p = permute_system(be, dims, perm)
    dx = int(np.prod([dims[i] for i in keep]))
    ny = _nqubits(dy)
    nominal = be.a_circuit + ny + ny
    be_p = _prefit([be_p], dx * dy * 2 ** be_p.a * dy)[0]
    # view (X, Y, anc) with Y re-labelled as ancilla: (X, Y, anc) is already system-first
    base = BlockEncoding(be_p.unitary, be_p.alpha, be_p.eps, be_p.a + ny, dx, label="pt_base")
    terms = []
    for i in range(dy):
        shift = np.roll(np.eye(dy), i, axis=0)  # |0⟩ → |i⟩
        s_full = mc.kron(np.eye(dx), shift, np.eye(2 ** be_p.a))
        terms.append(replace(base, unitary=s_full.conj().T @ base.unitary @ s_full))
    out = lincomb([1.0] * dy, terms)
    return replace(out, eps=2 * dy * be.eps, a_circuit=nominal, label="partial_trace")


def apply_superop_be(be: BlockEncoding, ch: mc.Channel) -> BlockEncoding:
    """Encoding of Φ(A) via Φ(A) = Tr_X(J (A ⊗ I_Y))."""
    if ch.dim_in != be.sys_dim:
        raise ValueError("channel input dimension does not match the encoding")
    din, dout = ch.dim_in, ch.dim_out
    scale = max(1.0, float(np.max(np.abs(ch.choi))))
    j_be = from_entries(ch.choi / scale)
    j_be = replace(j_be, alpha=j_be.alpha * scale, eps=j_be.eps * scale)
    ax = tensor_identity(be, dout, "right")
    prod = product(j_be, ax)
    out = partial_trace_be(prod, [din, dout], 0)
    return replace(out, label="superoperator")


def purify_be(be: BlockEncoding) -> BlockEncoding:
    """(α, ε, a + 2 log D)-encoding of (A ⊗ I)|Φ⟩⟨0…0|."""
    d = be.sys_dim
    if not _is_pow2(d):
        raise ValueError("purification needs a power-of-two system dimension")
    nz = 2 * _nqubits(d)
    nominal = be.a_circuit + nz
    phi = mc.maximally_entangled(d)
    if d * d * 2 ** (min(be.a, 1) + nz) > MAX_DIM:
        col = np.kron(be.corner(), np.eye(d)) @ phi
        return _column_encoding(col, be.alpha, be.eps, nominal, "purify")
    be = _prefit([be], d * d * 2 ** (be.a + nz))[0]
    da = 2 ** be.a
    # registers: X (d), Y (d), anc (da), Z (d*d)
    prep_phi = complete_unitary(phi.reshape(-1, 1), [0])
    prep = mc.kron(prep_phi, np.eye(da), np.eye(d * d))
    u_a = np.kron(mc.permute_subsystems(np.kron(be.unitary, np.eye(d)), [d, da, d], [0, 2, 1]), np.eye(d * d))
    v = mc.permute_subsystems(u_a @ prep, [d * d, da, d * d], [2, 1, 0], side="right")
    return _fit(BlockEncoding(v, be.alpha, be.eps, be.a + nz, d * d, nominal, "purify"))


def _column_encoding(col: np.ndarray, alpha: float, eps: float, nominal: int, label: str) -> BlockEncoding:
    """Compact realisation of α·|col⟩⟨0| (col already divided by α)."""
    n = col.size
    blk = np.zeros((n, n), dtype=complex)
    blk[:, 0] = col
    return BlockEncoding(_dilate_contraction(blk), alpha, eps, 1, n, nominal, label)


def retune_alpha(be: BlockEncoding, alpha: float) -> BlockEncoding:
    """Realise the same matrix with a different post-selection factor.

    Raising α is a rotation on one extra qubit. Lowering α is done by
    re-dilating the block; at desk scale this stands in for uniform
    singular-value amplification and requires ‖block‖ ≤ α.
    """
    blk = extract_block(be)
    if alpha >= be.alpha:
        r = be.alpha / alpha
        rot = np.array([[r, -np.sqrt(1 - r * r)], [np.sqrt(1 - r * r), r]], dtype=complex)
        u = np.kron(be.unitary, rot)
        return _fit(BlockEncoding(u, alpha, be.eps, be.a + 1, be.sys_dim, be.a_circuit + 1, "retune_alpha"))
    if mc.spectral_norm(blk) > alpha * (1 + 1e-12):
        raise ValueError("cannot lower alpha below the norm of the encoded block")
    return BlockEncoding(_dilate_contraction(blk / alpha), alpha, be.eps, 1, be.sys_dim, be.a_circuit,
                         "retune_alpha")


def rescale(be: BlockEncoding, factor: float) -> BlockEncoding:
    """Reinterpret an (α, ε) encoding of A as an (fα, fε) encoding of fA."""
    return replace(be, alpha=be.alpha * factor, eps=be.eps * factor, label="rescale")


# ------------------------------------------------------------- polynomials


def _hermitian_check(be: BlockEncoding):
    blk = be.corner()
    tol = 2 * be.eps / be.alpha + 1e-8
    if np.max(np.abs(blk - blk.conj().T)) > tol:
        raise ValueError("Chebyshev transforms require a Hermitian block")


def _walk_operator(be: BlockEncoding) -> tuple[np.ndarray, int]:
    """Hermitian unitary V = (H⊗I)(|0⟩⟨1|⊗U + |1⟩⟨0|⊗U†)(H⊗I) with its reflection, ancilla last."""
    u = be.unitary
    n = u.shape[0]
    zero = np.zeros_like(u)
    sym = np.block([[zero, u], [u.conj().T, zero]])  # extra qubit leading
    h = np.kron(mc.HADAMARD, np.eye(n))
    v = h @ sym @ h
    v = _anc_first_to_last(v, n, 2)  # (sys, anc, extra)
    a1 = be.a + 1
    refl = np.full(be.sys_dim * 2 ** a1, -1.0)
    refl[:: 2 ** a1] = 1.0
    return refl[:, None] * v, a1


def cheb_of_be(be: BlockEncoding, k: int, backend: str = "walk") -> BlockEncoding:
    """(1, 4k√(ε/α), a+1)-encoding of T_k(A/α)."""
    if k < 0:
        raise ValueError("degree must be non-negative")
    _hermitian_check(be)
    nominal = be.a_circuit + 1
    eps = 4 * k * np.sqrt(be.eps / be.alpha)
    if backend == "walk":
        be_c = _prefit([be], be.dim * 2)[0]
        w, a1 = _walk_operator(be_c)
        u = np.linalg.matrix_power(w, k) if k > 0 else np.eye(w.shape[0], dtype=complex)
        out = BlockEncoding(u, 1.0, eps, a1, be.sys_dim, nominal, f"cheb[{k}]")
    elif backend == "dilation":
        blk = be.corner()
        herm = 0.5 * (blk + blk.conj().T)
        tk = mc.matfunc_herm(herm, lambda x: np.cos(k * np.arccos(np.clip(x, -1, 1))))
        out = BlockEncoding(_dilate_contraction(tk), 1.0, eps, 1, be.sys_dim, nominal, f"cheb[{k}]")
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return _fit(out)


def _poly_block_via_walk(be: BlockEncoding, coeffs: np.ndarray) -> np.ndarray:
    be_c = _prefit([be], be.dim * 2)[0]
    w, a1 = _walk_operator(be_c)
    s = 2 ** a1
    acc = np.zeros((be.sys_dim, be.sys_dim), dtype=complex)
    p = np.eye(w.shape[0], dtype=complex)
    for i, c in enumerate(coeffs):
        if i:
            p = w @ p
        if c != 0:
            acc += c * p[::s, ::s]
    return acc


def poly_of_be(be: BlockEncoding, s: ChebSeries, backend: str = "auto") -> BlockEncoding:
    """(‖c‖₁, ‖c‖₁(slack + 4d√(ε/α)))-encoding of P(A/α).

    ``lcu`` realises the linear combination of walk powers literally;
    ``dilation`` evaluates the same walk-based block and embeds it with one
    ancilla. ``auto`` picks ``lcu`` when the materialised unitary stays small.
    """
    coeffs = np.asarray(s.coeffs, dtype=float)
    if coeffs.size == 0:
        raise ValueError("empty series")
    _hermitian_check(be)
    nz = np.flatnonzero(coeffs)
    if nz.size == 0:
        raise ValueError("series is identically zero")
    l1 = float(np.sum(np.abs(coeffs)))
    d = s.degree
    eps = l1 * 4 * d * np.sqrt(be.eps / be.alpha)
    nominal = be.a_circuit + 1 + _nqubits(nz.size)
    if backend == "auto":
        backend = "lcu" if be.sys_dim * 2 ** (2 + _nqubits(nz.size)) <= MAX_DIM and nz.size <= 64 else "dilation"
    if backend == "lcu":
        terms = [cheb_of_be(be, int(i)) for i in nz]
        out = lincomb(coeffs[nz], terms)
        out = replace(out, eps=eps, a_circuit=nominal)
    elif backend == "dilation":
        blk = _poly_block_via_walk(be, coeffs) / l1
        out = BlockEncoding(_dilate_contraction(blk), l1, eps, 1, be.sys_dim, nominal)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return replace(out, label="poly")


# -------------------------------------------------------- amplification


def fixed_point_amplify(be: BlockEncoding, m: int) -> BlockEncoding:
    """π/3 fixed-point amplification of the column U|0…0⟩ onto the ancilla-zero subspace.

    Output: (1, 2ε/α·… + η^{3^m} slack)-encoding of |ψ⟩⟨0…0|, with an extra
    swap register so that only the all-zero input column survives.
    """
    if not 0 <= m <= FIXED_POINT_MAX_DEPTH:
        raise ValueError(f"recursion depth must lie in [0, {FIXED_POINT_MAX_DEPTH}]")
    d = be.sys_dim
    nominal = be.a_circuit + _nqubits(d)
    be = _prefit([be], be.dim * d)[0]
    u = be.unitary
    n = u.shape[0]
    s = 2 ** be.a
    w3 = np.exp(-1j * np.pi / 3)
    target = np.zeros(n)
    target[::s] = 1.0
    r_t = np.ones(n, dtype=complex) - w3 * target  # diagonal of I − e^{−iπ/3}Π
    r_s = np.ones(n, dtype=complex)
    r_s[0] -= w3
    um = u
    for _ in range(m):
        um = um @ (r_s[:, None] * um.conj().T) @ (r_t[:, None] * um)
    eta = 1.0 - float(np.sum(np.abs(u[::s, 0]) ** 2))
    success = float(np.sum(np.abs(um[::s, 0]) ** 2))
    dz = 2 ** _nqubits(d)
    eps = 2 * be.eps / be.alpha + 1.0 - np.sqrt(max(0.0, 1.0 - eta ** (3 ** m)))
    stats = {"eta": eta, "success": success, "depth": m}
    label = f"fixed_point[{m}]"
    if n * dz > MAX_DIM:
        out = _column_encoding(um[::s, 0], 1.0, eps, nominal, label)
        return replace(out, stats=stats)
    # registers (sys, anc, Z): V = U^(m) on (sys, anc) after exchanging sys with Z
    v = np.kron(um, np.eye(dz))[:, _swap_index(d, s, dz)]
    return BlockEncoding(v, 1.0, eps, be.a + _nqubits(d), d, nominal, label, stats)


def _swap_index(d: int, da: int, dz: int) -> np.ndarray:
    """Column map of the permutation exchanging sys with the first d levels of Z."""
    x, a, z = np.meshgrid(np.arange(d), np.arange(da), np.arange(dz), indexing="ij")
    swap = z < d
    nx = np.where(swap, z, x)
    nz = np.where(swap, x, z)
    return (nx * da * dz + a * dz + nz).reshape(-1)


def fixed_point_success(be: BlockEncoding, m: int) -> tuple[float, float]:
    """(η, measured success after depth m) for the column U|0⟩."""
    st = fixed_point_amplify(be, m).stats
    return st["eta"], st["success"]


def robust_oaa(j: BlockEncoding, l: int) -> np.ndarray:
    """K = S^l J with S = −J L J† L and L = 2Π − I."""
    if l < 0:
        raise ValueError("iteration count must be non-negative")
    u = j.unitary
    n = u.shape[0]
    s = 2 ** j.a
    refl = -np.ones(n, dtype=complex)
    refl[::s] = 1.0
    step = -(u * refl[None, :]) @ (u.conj().T * refl[None, :])
    return np.linalg.matrix_power(step, l) @ u


def oaa_alpha(l: int) -> float:
    return 1.0 / np.sin(np.pi / (2 * (2 * l + 1)))


def oaa_residual(j: BlockEncoding, l: int, w_tilde: np.ndarray, phis: Sequence[np.ndarray]) -> float:
    """max_φ ‖K|φ⟩|0⟩ − sin((2l+1)θ)|0⟩W̃|φ⟩‖ with θ = arcsin(1/α)."""
    k = robust_oaa(j, l)
    theta = np.arcsin(min(1.0, 1.0 / j.alpha))
    s = 2 ** j.a
    amp = np.sin((2 * l + 1) * theta)
    worst = 0.0
    for phi in phis:
        inp = np.kron(phi, mc.ket(0, s))
        want = np.kron(amp * (w_tilde @ phi), mc.ket(0, s))
        worst = max(worst, float(np.linalg.norm(k @ inp - want)))
    return worst
