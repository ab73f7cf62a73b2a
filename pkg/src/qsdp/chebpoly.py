"""Chebyshev-basis approximations to sign, square root and exponential."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial import chebyshev as npcheb
from scipy.fft import dct
from scipy.special import erf

DEGREE_CAP = 1 << 17
NODE_CAP = 1 << 23
QUAD_TOL = 1e-10


@dataclass(frozen=True)
class ChebSeries:
    """Coefficients c_0..c_d of Σ c_i T_i(x)."""

    coeffs: np.ndarray
    parity: str | None = None  # "odd", "even" or None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        if c.size == 0:
            raise ValueError("a series needs at least one coefficient")
        if self.parity == "odd":
            c[0::2] = 0.0
        elif self.parity == "even":
            c[1::2] = 0.0
        elif self.parity is not None:
            raise ValueError(f"unknown parity {self.parity!r}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self.coeffs)))

    def __call__(self, x):
        return cheb_eval(self, x)


def cheb_eval(s: ChebSeries, x):
    """Clenshaw evaluation on [-1, 1]."""
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1 + 1e-12):
        raise ValueError("Chebyshev series are evaluated on [-1, 1] only")
    out = npcheb.chebval(np.clip(xa, -1.0, 1.0), s.coeffs)
    return float(out) if np.ndim(out) == 0 else out


def _gauss_cheb_coeffs(f: Callable, d: int, n: int) -> np.ndarray:
    theta = np.pi * (np.arange(n) + 0.5) / n
    vals = np.asarray(f(np.cos(theta)), dtype=float)
    # DCT-II gives Σ_j v_j cos(π i (j+1/2)/n) scaled by 2
    c = dct(vals, type=2)[: d + 1] / n
    c[0] *= 0.5
    return c


def cheb_project(f: Callable, d: int, nodes: int | None = None, tol: float = QUAD_TOL,
                 parity: str | None = None) -> ChebSeries:
    """Orthogonal projection of ``f`` onto degree-``d`` Chebyshev polynomials.

    Coefficients come from Gauss–Chebyshev quadrature; the node count doubles
    until no coefficient moves by more than ``tol``.
    """
    if d < 0:
        raise ValueError("degree must be non-negative")
    n = max(4 * (d + 1), nodes or 0, 16)
    prev = _gauss_cheb_coeffs(f, d, n)
    while True:
        n *= 2
        if n > NODE_CAP:
            raise RuntimeError(f"quadrature did not converge within {NODE_CAP} nodes")
        cur = _gauss_cheb_coeffs(f, d, n)
        if np.max(np.abs(cur - prev)) <= tol:
            return ChebSeries(cur, parity=parity, meta={"nodes": n})
        prev = cur


def erf_scale(kappa: float) -> float:
    return float(np.sqrt(2.0 * np.log(2.0 / (np.pi * kappa * kappa))) / kappa)


def _check_kappa(kappa: float):
    if not (1e-4 <= kappa < 1):
        raise ValueError("kappa must lie in [1e-4, 1)")


def _verify_grid(kappa: float) -> int:
    return int(max(np.ceil(10.0 / kappa), 4001))


def sign_error(s: ChebSeries, kappa: float, npts: int | None = None) -> tuple[float, float]:
    """(max |P - sgn| on κ ≤ |x| ≤ 1, max |P| on [-1, 1])."""
    npts = npts or _verify_grid(kappa)
    xs = np.linspace(kappa, 1.0, npts)
    gap_err = float(np.max(np.abs(s(xs) - 1.0)))  # odd series: negative side mirrors
    allx = np.linspace(-1.0, 1.0, 2 * npts + 1)
    return gap_err, float(np.max(np.abs(s(allx))))


@lru_cache(maxsize=32)
def sign_series(kappa: float) -> ChebSeries:
    """Odd polynomial within κ of sgn(x) away from |x| < κ and bounded by 1+κ."""
    _check_kappa(kappa)
    k = erf_scale(kappa)
    target = lambda x: erf(k * x)  # noqa: E731
    d = int(np.ceil(k)) | 1
    history = []
    while d <= DEGREE_CAP:
        s = cheb_project(target, d, parity="odd")
        gap, peak = sign_error(s, kappa)
        history.append((d, gap))
        if gap <= kappa and peak <= 1 + kappa:
            return ChebSeries(s.coeffs, "odd", {"kappa": kappa, "erf_scale": k, "max_error": gap,
                                                 "schedule": history, "nodes": s.meta["nodes"]})
        d = 2 * d + 1
    raise RuntimeError(f"sign approximation failed to reach kappa={kappa} below degree {DEGREE_CAP}")


def sqrt_error(s: ChebSeries, kappa: float, npts: int | None = None) -> float:
    xs = np.linspace(-1.0, 1.0, npts or _verify_grid(kappa))
    return float(np.max(np.abs(np.sqrt((xs + 1) / 2) - s(xs))))


@lru_cache(maxsize=32)
def sqrt_series(kappa: float, proj_tol: float | None = None) -> ChebSeries:
    """Polynomial within κ of √((x+1)/2) on [-1, 1].

    With ``proj_tol`` the degree keeps doubling until the series is also within
    ``proj_tol`` of the smoothed target √((1−c)(x+1)/2 + c), c = κ²/8.
    """
    _check_kappa(kappa)
    c = kappa * kappa / 8
    target = lambda x: np.sqrt((1 - c) * (x + 1) / 2 + c)  # noqa: E731
    d = int(np.ceil(1.0 / kappa))
    history = []
    xs = np.linspace(-1.0, 1.0, _verify_grid(kappa))
    while d <= DEGREE_CAP:
        s = cheb_project(target, d)
        err = sqrt_error(s, kappa)
        proj_err = float(np.max(np.abs(s(xs) - target(xs))))
        history.append((d, err))
        if err <= kappa and (proj_tol is None or proj_err <= proj_tol):
            return ChebSeries(s.coeffs, None, {"kappa": kappa, "shift": c, "max_error": err,
                                               "projection_error": proj_err, "schedule": history})
        d *= 2
    raise RuntimeError(f"sqrt approximation failed to reach kappa={kappa} below degree {DEGREE_CAP}")


def exp_series(beta_alpha: float, k: int) -> ChebSeries:
    """Chebyshev form of the degree-k Taylor polynomial of exp(beta_alpha·x)."""
    if k < 1:
        raise ValueError("Taylor degree must be at least 1")
    mono = np.ones(k + 1)
    for n in range(1, k + 1):
        mono[n] = mono[n - 1] * beta_alpha / n
    coeffs = npcheb.poly2cheb(mono)
    if not np.all(np.isfinite(coeffs)):
        raise OverflowError("exp series coefficients overflow")
    return ChebSeries(coeffs, None, {"beta_alpha": beta_alpha, "taylor_degree": k})


def exp_error_bound(beta_alpha: float, k: int) -> float:
    return float(np.exp(2 * np.e * abs(beta_alpha) - k))


def harmonic(d: int) -> float:
    return float(np.sum(1.0 / np.arange(1, d + 1))) if d >= 1 else 0.0


def sgn_projection_coeff(i: int) -> float:
    """Exact Chebyshev coefficient of sgn for index i."""
    if i % 2 == 0:
        return 0.0
    return (-1) ** ((i - 1) // 2) * 4.0 / (np.pi * i)


def series_table(s: ChebSeries) -> str:
    lines = ["index\tcoefficient\tcumulative_l1"]
    acc = 0.0
    for i, c in enumerate(s.coeffs):
        acc += abs(c)
        lines.append(f"{i}\t{c:.17g}\t{acc:.17g}")
    return "\n".join(lines) + "\n"
