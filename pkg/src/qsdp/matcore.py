"""Dense complex linear algebra: decompositions, norms, channels and reference oracles.

Matrices are plain ``numpy.ndarray`` objects of dtype complex128. Helpers here
never mutate their inputs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

HERM_TOL = 1e-12
UNITARY_TOL = 1e-10


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {m.shape}")
    return m


def is_hermitian(a: np.ndarray, tol: float = HERM_TOL) -> bool:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= tol * scale)


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = as_matrix(u)
    if u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.asarray(a)).T


@dataclass(frozen=True)
class RegisterSplit:
    """Ordered tensor factorisation of a Hilbert space."""

    dims: tuple[int, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if any(d < 1 for d in self.dims):
            raise ValueError("register dimensions must be positive")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"R{i}" for i in range(len(self.dims))))
        elif len(self.labels) != len(self.dims):
            raise ValueError("one label per register is required")

    @property
    def total(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64))

    def index(self, label: str) -> int:
        return self.labels.index(label)


def kron(*mats) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, np.asarray(m, dtype=complex))
    return out


def partial_trace(a: np.ndarray, split: RegisterSplit | Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep`` (kept order follows ``split``)."""
    a = as_matrix(a)
    if not isinstance(split, RegisterSplit):
        split = RegisterSplit(tuple(split))
    dims = split.dims
    n = split.total
    if a.shape != (n, n):
        raise ValueError(f"matrix shape {a.shape} does not match register split {dims}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError("keep index out of range")
    k = len(dims)
    t = a.reshape(dims + dims)
    row = list(range(k))
    col = [k + i if i in keep else i for i in range(k)]
    out_labels = keep + [k + i for i in keep]
    res = np.einsum(t, row + col, out_labels)
    dk = int(np.prod([dims[i] for i in keep], dtype=np.int64)) if keep else 1
    return np.asarray(res).reshape(dk, dk)


def permute_subsystems(a: np.ndarray, dims: Sequence[int], perm: Sequence[int], side: str = "both") -> np.ndarray:
    """Reorder tensor factors: new factor i is old factor perm[i].

    ``side="both"`` returns P a P†; ``"left"`` returns P a and ``"right"`` returns a P.
    """
    a = as_matrix(a)
    dims = list(dims)
    n = int(np.prod(dims))
    idx = np.arange(n).reshape(dims).transpose(list(perm)).reshape(-1)
    if side == "both":
        return a[np.ix_(idx, idx)]
    if side == "left":
        return a[idx, :]
    if side == "right":
        inv = np.empty_like(idx)
        inv[idx] = np.arange(n)
        return a[:, inv]
    raise ValueError("side must be 'both', 'left' or 'right'")


def permutation_unitary(dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Unitary P with P (x_0 ⊗ ... ⊗ x_{k-1}) = x_{perm[0]} ⊗ ... ."""
    dims = list(dims)
    n = int(np.prod(dims))
    idx = np.arange(n).reshape(dims)
    new_idx = idx.transpose(list(perm)).reshape(-1)
    p = np.zeros((n, n), dtype=complex)
    p[np.arange(n), new_idx] = 1.0
    return p


def _fix_phases(vecs: np.ndarray) -> np.ndarray:
    """Make the first non-negligible entry of each column real and positive."""
    out = vecs.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size:
            ph = col[nz[0]] / abs(col[nz[0]])
            out[:, j] = col / ph
    return out


def herm_eig(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues in descending order."""
    a = as_matrix(a)
    if not is_hermitian(a):
        raise ValueError("herm_eig requires a Hermitian matrix")
    h = 0.5 * (a + a.conj().T)
    w, v = np.linalg.eigh(h)
    order = np.argsort(-w, kind="stable")
    return w[order], _fix_phases(v[:, order])


def svd(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (U, s, V) with a = U diag(s) V†, s descending."""
    a = as_matrix(a)
    u, s, vh = np.linalg.svd(a)
    return u, s, vh.conj().T


def matfunc_herm(a: np.ndarray, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    w, v = herm_eig(a)
    fw = np.asarray(f(w), dtype=complex)
    return (v * fw) @ v.conj().T


def matfunc_sv(a: np.ndarray, f: Callable[[np.ndarray], np.ndarray], rank_tol: float = 1e-12) -> np.ndarray:
    """Singular-value transform U f(Σ) V† restricted to the numerical support."""
    a = as_matrix(a)
    f0 = np.asarray(f(np.zeros(1)), dtype=float)
    if abs(float(f0[0])) > 1e-12:
        raise ValueError("singular-value functions must satisfy f(0) = 0")
    u, s, v = svd(a)
    if s.size == 0 or s[0] == 0:
        return np.zeros_like(a)
    r = int(np.sum(s > rank_tol * s[0]))
    fs = np.asarray(f(s[:r]), dtype=complex)
    return (u[:, :r] * fs) @ v[:, :r].conj().T


def trace_norm(a: np.ndarray) -> float:
    return float(np.sum(np.linalg.svd(as_matrix(a), compute_uv=False)))


def spectral_norm(a: np.ndarray) -> float:
    a = as_matrix(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.svd(a, compute_uv=False)[0])


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * trace_norm(as_matrix(a) - as_matrix(b))


def psd_sqrt(a: np.ndarray) -> np.ndarray:
    return matfunc_herm(a, lambda w: np.sqrt(np.clip(w, 0.0, None)))


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Square-root fidelity ‖√ρ √σ‖₁."""
    rho, sigma = as_matrix(rho), as_matrix(sigma)
    for m in (rho, sigma):
        w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
        if w.size and w[0] < -1e-9:
            raise ValueError("fidelity requires positive semidefinite inputs")
    return trace_norm(psd_sqrt(rho) @ psd_sqrt(sigma))


def maximally_entangled(d: int) -> np.ndarray:
    if d < 1:
        raise ValueError("dimension must be at least 1")
    v = np.zeros(d * d, dtype=complex)
    v[np.arange(d) * (d + 1)] = 1.0 / np.sqrt(d)
    return v


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def proj(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


# ---------------------------------------------------------------- channels


def choi_from_kraus(kraus: Sequence[np.ndarray]) -> np.ndarray:
    """J = Σ_ij |i⟩⟨j| ⊗ Φ(|j⟩⟨i|), input factor first."""
    k0 = as_matrix(kraus[0])
    dout, din = k0.shape
    j = np.zeros((din * dout, din * dout), dtype=complex)
    for kmat in kraus:
        kmat = as_matrix(kmat)
        # T[i, a, j, b] = K[a, j] conj(K[b, i])
        t = np.einsum("aj,bi->iajb", kmat, kmat.conj())
        j += t.reshape(din * dout, din * dout)
    return j


def choi_from_map(fn: Callable[[np.ndarray], np.ndarray], din: int, dout: int) -> np.ndarray:
    j = np.zeros((din * dout, din * dout), dtype=complex)
    for a in range(din):
        for b in range(din):
            e = np.zeros((din, din), dtype=complex)
            e[b, a] = 1.0
            j[a * dout:(a + 1) * dout, b * dout:(b + 1) * dout] = as_matrix(fn(e))
    return j


@dataclass(frozen=True)
class Channel:
    """Linear map between square matrices stored by its Choi matrix (input factor first)."""

    choi: np.ndarray
    dim_in: int
    dim_out: int
    kraus: tuple[np.ndarray, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        c = as_matrix(self.choi)
        n = self.dim_in * self.dim_out
        if c.shape != (n, n):
            raise ValueError(f"Choi shape {c.shape} inconsistent with dims ({self.dim_in}, {self.dim_out})")
        object.__setattr__(self, "choi", c)

    @classmethod
    def from_kraus(cls, kraus: Sequence[np.ndarray]) -> "Channel":
        ks = tuple(as_matrix(k) for k in kraus)
        if not ks:
            raise ValueError("empty Kraus list")
        dout, din = ks[0].shape
        if any(k.shape != (dout, din) for k in ks):
            raise ValueError("Kraus operators must share one shape")
        return cls(choi_from_kraus(ks), din, dout, ks)

    @classmethod
    def identity(cls, d: int) -> "Channel":
        return cls.from_kraus([np.eye(d)])

    def is_trace_preserving(self, tol: float = 1e-10) -> bool:
        # Tr_out J = I for TP maps under this convention (transposed, but I is symmetric)
        red = partial_trace(self.choi, (self.dim_in, self.dim_out), [0])
        return bool(np.max(np.abs(red - np.eye(self.dim_in))) <= tol)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return apply_channel(self, x)


def apply_channel(ch: Channel, x: np.ndarray, use_kraus: bool = False) -> np.ndarray:
    """Φ(x) = Tr_in(J (x ⊗ I))."""
    x = as_matrix(x)
    if x.shape != (ch.dim_in, ch.dim_in):
        raise ValueError(f"input shape {x.shape} does not match channel input dimension {ch.dim_in}")
    if use_kraus:
        if ch.kraus is None:
            raise ValueError("channel has no Kraus representation")
        return sum(k @ x @ k.conj().T for k in ch.kraus)
    t = ch.choi.reshape(ch.dim_in, ch.dim_out, ch.dim_in, ch.dim_out)
    return np.einsum("iajb,ji->ab", t, x)


def adjoint_channel(ch: Channel) -> Channel:
    """Hilbert–Schmidt adjoint Φ* with ⟨Φ(X),Y⟩ = ⟨X,Φ*(Y)⟩."""
    kraus = None
    if ch.kraus is not None:
        kraus = tuple(k.conj().T for k in ch.kraus)
    t = ch.choi.reshape(ch.dim_in, ch.dim_out, ch.dim_in, ch.dim_out).conj()
    din, dout = ch.dim_out, ch.dim_in

    def fn(e: np.ndarray) -> np.ndarray:
        return np.einsum("iajb,ab->ji", t, e)

    return Channel(choi_from_map(fn, din, dout), din, dout, kraus)


@dataclass(frozen=True)
class LinearMap:
    """Superoperator given by callables for the map and its Hilbert–Schmidt adjoint.

    Used where the Choi matrix would be too large to store.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    adj: Callable[[np.ndarray], np.ndarray]
    dim_in: int
    dim_out: int

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = as_matrix(x)
        if x.shape != (self.dim_in, self.dim_in):
            raise ValueError(f"input shape {x.shape} does not match map input dimension {self.dim_in}")
        return self.fn(x)

    def adjoint(self) -> "LinearMap":
        return LinearMap(self.adj, self.fn, self.dim_out, self.dim_in)

    def to_channel(self) -> Channel:
        return Channel(choi_from_map(self.fn, self.dim_in, self.dim_out), self.dim_in, self.dim_out)


def hs_inner(a: np.ndarray, b: np.ndarray) -> complex:
    return complex(np.vdot(as_matrix(a), as_matrix(b)))


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_hermitian(d: int, rng: np.random.Generator, norm: float | None = None) -> np.ndarray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = 0.5 * (z + z.conj().T)
    if norm is not None:
        h *= norm / max(spectral_norm(h), 1e-300)
    return h


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    r = d if rank is None else rank
    g = rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_state(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_channel(din: int, dout: int, rng: np.random.Generator, n_kraus: int = 2) -> Channel:
    """Random CPTP map via a Stiefel isometry.

    The Kraus count is raised if needed so the stacked isometry has at least
    ``din`` rows.
    """
    n_kraus = max(n_kraus, -(-din // dout))
    g = rng.standard_normal((dout * n_kraus, din)) + 1j * rng.standard_normal((dout * n_kraus, din))
    q, _ = np.linalg.qr(g)
    ks = [q[i * dout:(i + 1) * dout, :] for i in range(n_kraus)]
    return Channel.from_kraus(ks)


def direct_sum(mats: Sequence[np.ndarray]) -> np.ndarray:
    shapes = [as_matrix(m).shape for m in mats]
    r = sum(s[0] for s in shapes)
    c = sum(s[1] for s in shapes)
    out = np.zeros((r, c), dtype=complex)
    i = j = 0
    for m, (a, b) in zip(mats, shapes):
        out[i:i + a, j:j + b] = m
        i += a
        j += b
    return out


PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
