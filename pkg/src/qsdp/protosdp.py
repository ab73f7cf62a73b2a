"""Compile an r-round verifier into a small-width feasibility SDP, decode and round its points."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import matcore as mc
from . import uhlmann as uh
from .mmwu import SdpInstance

ACCEPT_TOL = 1e-8
MAX_TOTAL_DIM = 1 << 10
COLLAPSE_FIDELITY = 0.1


@dataclass(frozen=True)
class ProtocolSpec:
    """Verifier of an r-round protocol.

    Channel j maps M_j ⊗ W_{j−1} to M′_j ⊗ W_j, and the last one maps
    M_r ⊗ W_{r−1} to Z ⊗ S ⊗ W_r with a qubit flag Z.
    ``msg`` holds dim M_1..M_r, ``reply`` dim M′_1..M′_{r−1}, ``work`` dim W_0..W_r.
    """

    rounds: int
    msg: tuple
    reply: tuple
    work: tuple
    s_dim: int
    channels: tuple
    accept_prob: float
    label: str = ""

    def __post_init__(self):
        r = int(self.rounds)
        for name in ("msg", "reply", "work", "channels"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if r < 1:
            raise ValueError("a protocol needs at least one round")
        if len(self.msg) != r or len(self.reply) != r - 1 or len(self.work) != r + 1:
            raise ValueError("register chain mismatch: need r message, r−1 reply and r+1 workspace dims")
        if len(self.channels) != r:
            raise ValueError(f"expected {r} verifier channels, got {len(self.channels)}")
        if not 0 < self.accept_prob <= 1:
            raise ValueError("accept_prob must lie in (0, 1]")
        for j, ch in enumerate(self.channels, start=1):
            din, dout = self.channel_dims(j)
            if (ch.dim_in, ch.dim_out) != (din, dout):
                raise ValueError(f"register chain mismatch in round {j}: channel is {ch.dim_in}→{ch.dim_out}, "
                                 f"registers need {din}→{dout}")
            if not ch.is_trace_preserving(1e-9):
                raise ValueError(f"verifier channel {j} is not trace preserving")

    def out_factors(self, j: int) -> tuple:
        if j == self.rounds:
            return (2, self.s_dim, self.work[j])
        return (self.reply[j - 1], self.work[j])

    def in_factors(self, j: int) -> tuple:
        return (self.msg[j - 1], self.work[j - 1])

    def channel_dims(self, j: int) -> tuple[int, int]:
        return int(np.prod(self.in_factors(j))), int(np.prod(self.out_factors(j)))

    def registers(self) -> list[tuple[str, tuple]]:
        """ℛ in order M_1W_0, M′_1W_1, M_2W_1, …, M_rW_{r−1}, ZSW_r."""
        regs = []
        for j in range(1, self.rounds + 1):
            regs.append((f"M{j}W{j - 1}", self.in_factors(j)))
            regs.append((f"ZSW{j}" if j == self.rounds else f"M'{j}W{j}", self.out_factors(j)))
        return regs

    def register_split(self) -> mc.RegisterSplit:
        regs = self.registers()
        return mc.RegisterSplit(tuple(int(np.prod(f)) for _, f in regs), tuple(n for n, _ in regs))


@dataclass(frozen=True)
class FeasiblePoint:
    big_a: np.ndarray
    register_map: mc.RegisterSplit
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        a = mc.as_matrix(self.big_a)
        if a.shape != (self.register_map.total,) * 2:
            raise ValueError("point dimension does not match the register map")
        object.__setattr__(self, "big_a", a)

    def marginal(self, k: int) -> np.ndarray:
        return mc.partial_trace(self.big_a, self.register_map, [k])


@dataclass(frozen=True)
class CompiledProtocol:
    """The SDP instance plus the layout of its direct-sum blocks."""

    instance: SdpInstance
    blocks: list
    norm: int
    dim_a: int
    spec: ProtocolSpec

    def block_values(self, big_a: np.ndarray) -> dict:
        """Unnormalised Γ^(j)(A) − B^(j) for every block, keyed by name."""
        d = self.instance.dim
        x = np.zeros((d, d), dtype=complex)
        x[:self.dim_a, :self.dim_a] = big_a
        diff = (self.instance.phi(x) - self.instance.b) * self.norm
        return {name: diff[o:o + n, o:o + n] for name, o, n in self.blocks}


def _lift(y: np.ndarray, k: int, dims: Sequence[int]) -> np.ndarray:
    before = int(np.prod(dims[:k]))
    after = int(np.prod(dims[k + 1:]))
    return mc.kron(np.eye(before), y, np.eye(after))


def _trace_first(x: np.ndarray, f0: int, rest: int) -> np.ndarray:
    return mc.partial_trace(x, (f0, rest), [1])


def compile_protocol(spec: ProtocolSpec, width_check: bool = True) -> CompiledProtocol:
    """Φ(A) = (1/N) ⊕_j Γ^(j)(A), B = (1/N) ⊕_j B^(j) with N = 4(2r+2), zero-padded to one square size."""
    r = spec.rounds
    split = spec.register_split()
    dims = list(split.dims)
    dim_a = split.total
    if dim_a > MAX_TOTAL_DIM:
        raise ValueError(f"total dimension {dim_a} exceeds {MAX_TOTAL_DIM}")
    norm = 4 * (2 * r + 2)
    chans = spec.channels
    adjs = [mc.adjoint_channel(c) for c in chans]
    n_out = 2 * r + 2
    zs = spec.out_factors(r)
    accept_proj = mc.kron(mc.proj(mc.ket(1, 2)), np.eye(zs[1] * zs[2]))
    w0 = spec.work[0]

    # each block: (name, size, forward(marginals, a), adjoint(y) on A, B block)
    blocks = [("trace", 1, lambda m, a: np.array([[np.trace(a)]]),
               lambda y: y[0, 0] * np.eye(dim_a), np.ones((1, 1)))]
    for i in range(1, r + 1):
        ki, ko = 2 * (i - 1), 2 * (i - 1) + 1

        def fwd(m, a, ki=ki, ko=ko, ch=chans[i - 1]):
            return m[ko] - mc.apply_channel(ch, m[ki])

        def adj(y, ki=ki, ko=ko, ad=adjs[i - 1]):
            return _lift(y, ko, dims) - _lift(mc.apply_channel(ad, y), ki, dims)

        blocks.append((f"channel{i}", dims[ko], fwd, adj, np.zeros((dims[ko], dims[ko]))))
    for i in range(1, r):
        ko, kn = 2 * (i - 1) + 1, 2 * i
        mp, wi, mn = spec.reply[i - 1], spec.work[i], spec.msg[i]

        def fwd(m, a, ko=ko, kn=kn, mp=mp, wi=wi, mn=mn):
            return _trace_first(m[ko], mp, wi) - _trace_first(m[kn], mn, wi)

        def adj(y, ko=ko, kn=kn, mp=mp, mn=mn):
            return _lift(np.kron(np.eye(mp), y), ko, dims) - _lift(np.kron(np.eye(mn), y), kn, dims)

        blocks.append((f"link{i}", wi, fwd, adj, np.zeros((wi, wi))))
    m1 = spec.msg[0]
    start = np.zeros((w0, w0))
    start[0, 0] = 1.0
    blocks.append(("start", w0, lambda m, a: _trace_first(m[0], m1, w0),
                   lambda y: _lift(np.kron(np.eye(m1), y), 0, dims), start))
    last = len(dims) - 1
    blocks.append(("accept", 1, lambda m, a: np.array([[np.trace(accept_proj @ m[last])]]),
                   lambda y: y[0, 0] * _lift(accept_proj, last, dims), spec.accept_prob * np.ones((1, 1))))
    assert len(blocks) == n_out

    out_dim = sum(b[1] for b in blocks)
    d = max(dim_a, out_dim)
    layout, off = [], 0
    for name, n, *_ in blocks:
        layout.append((name, off, n))
        off += n

    def forward(x):
        a = x[:dim_a, :dim_a]
        margs = [mc.partial_trace(a, split, [k]) for k in range(len(dims))]
        out = np.zeros((d, d), dtype=complex)
        for (name, o, n), blk in zip(layout, blocks):
            out[o:o + n, o:o + n] = blk[2](margs, a)
        return out / norm

    def adjoint(y):
        acc = np.zeros((dim_a, dim_a), dtype=complex)
        for (name, o, n), blk in zip(layout, blocks):
            acc += blk[3](y[o:o + n, o:o + n])
        out = np.zeros((d, d), dtype=complex)
        out[:dim_a, :dim_a] = acc / norm
        return out

    b = np.zeros((d, d), dtype=complex)
    for (name, o, n), blk in zip(layout, blocks):
        b[o:o + n, o:o + n] = blk[4]
    phi = mc.LinearMap(forward, adjoint, d, d)
    inst = SdpInstance(phi, b / norm, width_certified=width_check, label=spec.label or f"protocol-r{r}")
    return CompiledProtocol(inst, layout, norm, dim_a, spec)


# ----------------------------------------------------------------- simulation


def _kraus(ch: mc.Channel) -> tuple:
    if ch.kraus is None:
        raise ValueError("protocol simulation needs verifier channels with Kraus operators")
    return ch.kraus


def simulate(spec: ProtocolSpec, prover: Sequence[np.ndarray]) -> dict:
    """Mixed-state run of the protocol with prover unitaries acting on M ⊗ Q.

    Returns the marginals on every register of ℛ and the acceptance probability.
    """
    r = spec.rounds
    if len(prover) != r:
        raise ValueError(f"expected {r} prover unitaries")
    for j in range(2, r + 1):
        if spec.msg[j - 1] != spec.reply[j - 2]:
            raise ValueError(f"prover round {j} must map a {spec.reply[j - 2]}-dim reply to a "
                             f"{spec.msg[j - 1]}-dim message unitarily")
    m = spec.msg[0]
    dq = prover[0].shape[0] // m
    if dq * m != prover[0].shape[0]:
        raise ValueError("prover unitary does not factor as M ⊗ Q")
    w = spec.work[0]
    rho = np.zeros((m * w * dq,) * 2, dtype=complex)
    rho[0, 0] = 1.0
    margs = []
    for j in range(1, r + 1):
        m, w = spec.in_factors(j)
        u = mc.as_matrix(prover[j - 1])
        if u.shape != (m * dq,) * 2 or not mc.is_unitary(u, 1e-8):
            raise ValueError(f"prover round {j}: need a unitary on M ⊗ Q of size {m * dq}")
        full = mc.permute_subsystems(np.kron(u, np.eye(w)), [m, dq, w], [0, 2, 1])
        rho = full @ rho @ full.conj().T
        margs.append(mc.partial_trace(rho, (m * w, dq), [0]))
        out = int(np.prod(spec.out_factors(j)))
        new = np.zeros((out * dq,) * 2, dtype=complex)
        for k in _kraus(spec.channels[j - 1]):
            kk = np.kron(k, np.eye(dq))
            new += kk @ rho @ kk.conj().T
        rho = new
        margs.append(mc.partial_trace(rho, (out, dq), [0]))
    zsw = margs[-1]
    acc = float(np.real(np.trace(mc.partial_trace(zsw, (2, zsw.shape[0] // 2), [0]) @ mc.proj(mc.ket(1, 2)))))
    return {"marginals": margs, "acceptance": acc}


def honest_point(spec: ProtocolSpec, prover: Sequence[np.ndarray], tol: float = ACCEPT_TOL) -> FeasiblePoint:
    """Tensor product of the intermediate states of an honest run."""
    sim = simulate(spec, prover)
    gap = sim["acceptance"] - spec.accept_prob
    return FeasiblePoint(mc.kron(*sim["marginals"]), spec.register_split(),
                         {"acceptance": sim["acceptance"], "acceptance_gap": gap,
                          "matches_c": abs(gap) <= tol, "marginals": sim["marginals"]})


def product_point(spec: ProtocolSpec, marginals: Sequence[np.ndarray], meta: dict | None = None) -> FeasiblePoint:
    return FeasiblePoint(mc.kron(*marginals), spec.register_split(), dict(meta or {}, marginals=list(marginals)))


def decode_point(point: FeasiblePoint, spec: ProtocolSpec) -> dict:
    a = point.big_a
    w = np.linalg.eigvalsh(0.5 * (a + a.conj().T))
    if w[0] < -1e-8 or abs(np.trace(a).real - 1) > 1e-8:
        raise ValueError("decode_point needs a PSD trace-one point")
    margs = [point.marginal(k) for k in range(len(point.register_map.dims))]
    z, s, wr = spec.out_factors(spec.rounds)
    zsw = margs[-1]
    accepted = mc.kron(mc.proj(mc.ket(1, 2)), np.eye(s * wr)) @ zsw
    acc = float(np.trace(accepted).real)
    if acc < 1e-12:
        raise ValueError(f"acceptance probability {acc:.3e} is below 1e-12; the output is undefined")
    out = mc.partial_trace(accepted, (z, s, wr), [1]) / acc
    return {"marginals": dict(zip(point.register_map.labels, margs)), "acceptance": acc, "output": out}


def residual(compiled: CompiledProtocol, point: FeasiblePoint) -> float:
    d = compiled.instance.dim
    x = np.zeros((d, d), dtype=complex)
    x[:compiled.dim_a, :compiled.dim_a] = point.big_a
    return mc.trace_norm(compiled.instance.phi(x) - compiled.instance.b)


def relaxed_violation(compiled: CompiledProtocol, point: FeasiblePoint) -> float:
    """Largest entry of any constraint block other than acceptance."""
    vals = compiled.block_values(point.big_a)
    return max(float(np.max(np.abs(v))) for k, v in vals.items() if k != "accept")


# ------------------------------------------------------------------- rounding


def _as_state(m: np.ndarray) -> np.ndarray:
    w, v = mc.herm_eig(0.5 * (m + m.conj().T))
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        raise ValueError("a marginal has no positive part")
    return (v * (w / w.sum())) @ v.conj().T


def _purify(rho: np.ndarray, dq: int) -> np.ndarray:
    """Vector Σ √λ_k |e_k⟩|k⟩ on (support of ρ) ⊗ C^dq."""
    w, v = mc.herm_eig(rho)
    w = np.clip(w, 0.0, None)
    order = np.argsort(w)[::-1]
    keep = [k for k in order if w[k] > 1e-15]
    if len(keep) > dq:
        raise ValueError("purifying register is too small")
    out = np.zeros((rho.shape[0], dq), dtype=complex)
    for slot, k in enumerate(keep):
        out[:, slot] = np.sqrt(w[k]) * v[:, k]
    return out.reshape(-1)


def uhlmann_extension(tau_w: np.ndarray, target_mw: np.ndarray, dm: int) -> tuple[np.ndarray, float]:
    """State on M ⊗ W with W-marginal exactly τ and maximal fidelity with ``target_mw``."""
    dw = tau_w.shape[0]
    p = dm * dw
    t = _purify(target_mw, p).reshape(dm, dw, p).transpose(1, 0, 2).reshape(-1)
    s = _purify(tau_w, dm * p)
    pair = uh.StatePair(t, s, (dw, dm * p))
    u = uh.uhlmann_unitary(pair)
    ext = (s.reshape(dw, dm * p) @ u.T).reshape(dw, dm, p)
    rho = np.einsum("wmp,xnp->mwnx", ext, ext.conj()).reshape(dm * dw, dm * dw)
    return rho, mc.fidelity(rho, target_mw)


def round_feasible(point: FeasiblePoint, spec: ProtocolSpec, eps: float) -> tuple[FeasiblePoint, dict]:
    """Turn an ε-feasible point into one satisfying every constraint but acceptance exactly.

    ε′ is the largest trace distance among the relaxed constraints after each
    marginal is made a state; the fidelity bound of every register grows by
    at most 3√ε′ per step (6√ε′ per round).
    """
    r = spec.rounds
    n_reg = 2 * r
    primes = [_as_state(point.marginal(k)) for k in range(n_reg)]
    eps_terms = []
    for i in range(1, r + 1):
        eps_terms.append(mc.trace_distance(primes[2 * i - 1], mc.apply_channel(spec.channels[i - 1], primes[2 * i - 2])))
    for i in range(1, r):
        mp, wi, mn = spec.reply[i - 1], spec.work[i], spec.msg[i]
        eps_terms.append(mc.trace_distance(_trace_first(primes[2 * i - 1], mp, wi),
                                           _trace_first(primes[2 * i], mn, wi)))
    m1, w0 = spec.in_factors(1)
    start = np.zeros((w0, w0), dtype=complex)
    start[0, 0] = 1.0
    eps_terms.append(mc.trace_distance(_trace_first(primes[0], m1, w0), start))
    eps_p = max(eps_terms)
    step = 3 * np.sqrt(eps_p)

    out = [None] * n_reg
    out[0] = np.kron(mc.partial_trace(primes[0], (m1, w0), [0]), start)
    bounds = [min(1.0, eps_p)]
    losses = []
    for i in range(1, r + 1):
        ki, ko = 2 * (i - 1), 2 * (i - 1) + 1
        out[ko] = mc.apply_channel(spec.channels[i - 1], out[ki])
        bounds.append(min(1.0, bounds[-1] + step))
        if i < r:
            mp, wi, mn = spec.reply[i - 1], spec.work[i], spec.msg[i]
            tau = _trace_first(out[ko], mp, wi)
            out[ko + 1], _ = uhlmann_extension(tau, primes[ko + 1], mn)
            bounds.append(min(1.0, bounds[-1] + step))
    fids = [mc.fidelity(_as_state(o), p) for o, p in zip(out, primes)]
    for k, f in enumerate(fids):
        if f < COLLAPSE_FIDELITY:
            raise RuntimeError(f"rounding abandoned: fidelity {f:.3f} on register {k} is below {COLLAPSE_FIDELITY}")
        losses.append(1 - f)
    round_ok = all(losses[2 * i] <= losses[2 * i - 2] + 2 * step + 1e-12 for i in range(1, r))
    chain_ok = all(l <= b + 1e-12 for l, b in zip(losses, bounds))
    f_bound = float(np.prod([1 - b for b in bounds]))
    r_prime = (1 - f_bound) / np.sqrt(eps) if eps > 0 else 0.0
    rounded = product_point(spec, out)
    reference = mc.kron(*primes)
    td = mc.trace_distance(rounded.big_a, reference)
    report = {"eps": eps, "eps_prime": eps_p, "r_prime": float(r_prime),
              "td": td, "td_bound": 2 * r_prime * eps ** 0.25 if eps > 0 else 0.0,
              "td_to_input": mc.trace_distance(rounded.big_a, point.big_a),
              "fidelities": fids, "losses": losses, "loss_bounds": bounds,
              "chain_ok": chain_ok, "round_loss_ok": round_ok,
              "product_fidelity": float(np.prod(fids))}
    return rounded, report


def fidelity_triangle_check(rho: np.ndarray, sigma: np.ndarray, tau: np.ndarray, tol: float = 1e-9) -> dict:
    """F(ρ,τ) ≥ 1 − δ − ε − 2√(δε) with δ = 1 − F(ρ,σ), ε = 1 − F(σ,τ)."""
    d = max(0.0, 1 - mc.fidelity(rho, sigma))
    e = max(0.0, 1 - mc.fidelity(sigma, tau))
    lhs = mc.fidelity(rho, tau)
    bound = 1 - d - e - 2 * np.sqrt(d * e)
    return {"fidelity": lhs, "bound": float(bound), "ok": bool(lhs >= bound - tol)}


def depolarize_point(point: FeasiblePoint, spec: ProtocolSpec, p: float) -> FeasiblePoint:
    """Replace every register marginal by (1 − p)ρ_R + p I/d_R and re-form the product."""
    margs = []
    for k, d in enumerate(point.register_map.dims):
        m = point.marginal(k)
        margs.append((1 - p) * m + p * np.eye(d) / d)
    return product_point(spec, margs, {"depolarized": p})


# ------------------------------------------------------- provers and purifications


def _isometry(ch: mc.Channel) -> np.ndarray:
    """Stinespring isometry V = Σ_k K_k ⊗ |k⟩ (environment last)."""
    ks = _kraus(ch)
    v = sum(np.kron(k, mc.ket(i, len(ks)).reshape(-1, 1)) for i, k in enumerate(ks))
    return v


def _verifier_step(vec: np.ndarray, spec: ProtocolSpec, j: int, e: int, dq: int) -> tuple[np.ndarray, int]:
    """Apply round j's verifier to a vector ordered (W, E, M, Q); returns (W′, E′, M′, Q)."""
    m, w = spec.in_factors(j)
    outf = spec.out_factors(j)
    w_new = outf[-1]
    mo = int(np.prod(outf[:-1]))
    v = _isometry(spec.channels[j - 1])
    nk = v.shape[0] // (mo * w_new)
    t = vec.reshape(w, e, m, dq).transpose(2, 0, 1, 3).reshape(m * w, e * dq)
    t = (v @ t).reshape(mo, w_new, nk, e, dq)
    t = t.transpose(1, 2, 3, 0, 4).reshape(-1)
    return t, nk * e


def _prover_step(vec: np.ndarray, u: np.ndarray, dm: int, dq: int) -> np.ndarray:
    rest = vec.size // (dm * dq)
    return (vec.reshape(rest, dm * dq) @ u.T).reshape(-1)


def pure_run(spec: ProtocolSpec, prover: Sequence[np.ndarray], dq: int) -> dict:
    """Pure-state run; every prover unitary acts on M ⊗ Q with dim Q = dq.

    Returns the states before each prover turn (φ_0..φ_{r−1}), after each
    prover turn (ψ_1..ψ_r), their A/B splits and the acceptance probability.
    """
    w0, m1 = spec.work[0], spec.msg[0]
    vec = np.zeros(w0 * m1 * dq, dtype=complex)
    vec[0] = 1.0
    e = 1
    phis, psis, splits, margs = [], [], [], []
    for j in range(1, spec.rounds + 1):
        m, w = spec.in_factors(j)
        phis.append(vec)
        splits.append((w * e, m * dq))
        vec = _prover_step(vec, mc.as_matrix(prover[j - 1]), m, dq)
        psis.append(vec)
        t = vec.reshape(w, e, m, dq).transpose(2, 0, 1, 3).reshape(m * w, e * dq)
        margs.append(t @ t.conj().T)
        vec, e = _verifier_step(vec, spec, j, e, dq)
        outf = spec.out_factors(j)
        mo, wn = int(np.prod(outf[:-1])), outf[-1]
        t = vec.reshape(wn, e, mo, dq).transpose(2, 0, 1, 3).reshape(mo * wn, e * dq)
        margs.append(t @ t.conj().T)
    zsw = margs[-1]
    acc = float(np.real(np.trace(mc.partial_trace(zsw, (2, zsw.shape[0] // 2), [0])[1:, 1:])))
    return {"phis": phis, "psis": psis, "splits": splits, "marginals": margs, "acceptance": acc, "final": vec}


def protocol_purifications(spec: ProtocolSpec, prover: Sequence[np.ndarray], dq: int) -> list:
    """State pairs (ψ_j, φ_{j−1}) for each prover round; A is the verifier's side."""
    run = pure_run(spec, prover, dq)
    return [uh.StatePair(p, f, s) for p, f, s in zip(run["psis"], run["phis"], run["splits"])]


def synthesized_acceptance(spec: ProtocolSpec, synth: uh.ProverSynthesis, dq: int) -> float:
    """Acceptance when round j's prover applies K_j on M ⊗ Q ⊗ R, with one shared ancilla register R."""
    anc = max(k.shape[0] // (spec.msg[j] * dq) for j, k in enumerate(synth.rounds))
    padded = []
    for j, k in enumerate(synth.rounds):
        own = k.shape[0] // (spec.msg[j] * dq)
        padded.append(np.kron(k, np.eye(anc // own)))
    return pure_run(spec, padded, dq * anc)["acceptance"]


def reconstruct_prover(point: FeasiblePoint, spec: ProtocolSpec) -> dict:
    """Prover unitaries that reproduce a point's marginals, built from Uhlmann unitaries.

    Exact when every verifier channel is an isometry; otherwise the Stinespring
    environment is out of the prover's reach and the mismatch is reported.
    """
    margs = [point.marginal(k) for k in range(2 * spec.rounds)]
    dq = max(int(np.prod(spec.in_factors(j))) for j in range(1, spec.rounds + 1))
    w0, m1 = spec.work[0], spec.msg[0]
    vec = np.zeros(w0 * m1 * dq, dtype=complex)
    vec[0] = 1.0
    e = 1
    unitaries = []
    for j in range(1, spec.rounds + 1):
        m, w = spec.in_factors(j)
        target = _purify(_as_state(margs[2 * (j - 1)]), dq).reshape(m, w, dq).transpose(1, 0, 2)
        tvec = np.zeros((w, e, m, dq), dtype=complex)
        tvec[:, 0] = target
        pair = uh.StatePair(tvec.reshape(-1), vec, (w * e, m * dq))
        u = uh.uhlmann_unitary(pair)
        unitaries.append(u)
        vec = _prover_step(vec, u, m, dq)
        vec, e = _verifier_step(vec, spec, j, e, dq)
    run = pure_run(spec, unitaries, dq)
    gaps = [mc.trace_distance(a, _as_state(b)) for a, b in zip(run["marginals"], margs)]
    isometric = all(len(_kraus(c)) == 1 for c in spec.channels)
    return {"unitaries": unitaries, "dq": dq, "consistency": max(gaps), "per_register": gaps,
            "isometric_verifier": isometric, "acceptance": run["acceptance"]}


# ------------------------------------------------------------- toy protocols


def _iso(pairs: dict, din: int, dout: int) -> mc.Channel:
    v = np.zeros((dout, din), dtype=complex)
    for i, o in pairs.items():
        v[o, i] = 1.0
    return mc.Channel.from_kraus([v])


_CNOT = np.eye(4, dtype=complex)[[0, 1, 3, 2]]
_SWAP = np.eye(4, dtype=complex)[[0, 2, 1, 3]]


def _ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def trivial_protocol() -> tuple[ProtocolSpec, list, int]:
    """One round; the verifier copies the message to S and always accepts."""
    ch = _iso({m: 2 + m for m in range(2)}, 2, 4)
    spec = ProtocolSpec(1, (2,), (), (1, 1), 2, (ch,), 1.0, "trivial")
    return spec, [np.eye(4, dtype=complex)], 2


def _parity_check() -> mc.Channel:
    # |m, w⟩ → |[m = w]⟩_Z |w⟩_S
    return _iso({m * 2 + w: (1 if m == w else 0) * 2 + w for m in range(2) for w in range(2)}, 4, 4)


def toy_protocol(r: int) -> tuple[ProtocolSpec, list, int]:
    """(spec, honest prover unitaries on M ⊗ Q, dim Q) for r ∈ {1, 2, 3}."""
    if r == 1:
        # accept iff the message reads 0; honest prover sends cos(π/8)|0⟩ + sin(π/8)|1⟩
        ch = _iso({m: (1 if m == 0 else 0) * 2 + m for m in range(2)}, 2, 4)
        c = float(np.cos(np.pi / 8) ** 2)
        spec = ProtocolSpec(1, (2,), (), (1, 1), 2, (ch,), c, "toy-r1")
        return spec, [np.kron(_ry(np.pi / 4), np.eye(2))], 2
    if r == 2:
        # verifier stores M_1, returns |0⟩, then checks M_2 against the stored qubit
        store = _iso({m: 0 * 2 + m for m in range(2)}, 2, 4)
        spec = ProtocolSpec(2, (2, 2), (2,), (1, 2, 1), 2, (store, _parity_check()), 1.0, "toy-r2")
        bell = _CNOT @ np.kron(mc.HADAMARD, np.eye(2))
        return spec, [bell, _SWAP], 2
    if r == 3:
        had = mc.Channel.from_kraus([mc.HADAMARD])
        store = _iso({m: 0 * 2 + m for m in range(2)}, 2, 4)
        spec = ProtocolSpec(3, (2, 2, 2), (2, 2), (1, 1, 2, 1), 2, (had, store, _parity_check()), 1.0, "toy-r3")
        return spec, [np.eye(4, dtype=complex), _CNOT, _SWAP], 2
    raise ValueError("toy protocols exist for r ∈ {1, 2, 3}")


def load_protocol(doc: dict) -> ProtocolSpec:
    """ProtocolSpec from a parsed protocol document (see the CLI file format)."""
    regs = doc["registers"]
    chans = tuple(mc.Channel.from_kraus(ks) for ks in doc["channels"])
    return ProtocolSpec(int(doc["rounds"]), tuple(regs["M"]), tuple(regs.get("Mp", ())), tuple(regs["W"]),
                        int(regs["S"]), chans, float(doc["accept_prob"]), doc.get("label", ""))

