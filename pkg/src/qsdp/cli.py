"""Command-line front end: JSON instance files in, JSON reports out.

Exit status: 0 on success, 2 when a certified bound is violated, 1 on I/O or
parse errors.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import erf

from . import blockenc as be_mod
from . import chebpoly, mmwu, protosdp, statesynth, uhlmann
from . import matcore as mc

EXIT_OK, EXIT_IO, EXIT_BOUND = 0, 1, 2
DEFAULT_SEED = 42


class FormatError(ValueError):
    """Malformed instance file; the message names the offending key."""


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    inputs: tuple
    eps: float | None = None
    delta: float | None = None
    kappa: float | None = None
    beta: float | None = None
    degree: int | None = None
    oracle: str = "exact"
    seed: int = DEFAULT_SEED
    out: str | None = None
    dump_iterates: bool = False
    verbose: bool = False
    kind: str = "sign"
    backend: str = "poly"


# ------------------------------------------------------------------ file I/O


def _complex(x, where: str) -> complex:
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
        return complex(x[0], x[1])
    raise FormatError(f"{where}: expected a number or a [re, im] pair, got {x!r}")


def decode_matrix(rows, where: str) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise FormatError(f"{where}: expected a list of rows")
    n = len(rows[0])
    if any(len(r) != n for r in rows):
        raise FormatError(f"{where}: rows have unequal lengths")
    return np.array([[_complex(v, f"{where}[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(rows)],
                    dtype=complex)


def decode_vector(vals, where: str) -> np.ndarray:
    if not isinstance(vals, list) or not vals:
        raise FormatError(f"{where}: expected a non-empty list")
    return np.array([_complex(v, f"{where}[{i}]") for i, v in enumerate(vals)], dtype=complex)


def encode_matrix(a: np.ndarray) -> list:
    a = np.asarray(a, dtype=complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in a]


def encode_vector(v: np.ndarray) -> list:
    return [[float(x.real), float(x.imag)] for x in np.asarray(v, dtype=complex).reshape(-1)]


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise FormatError(f"{where}: missing key {key!r}")
    return doc[key]


def _dims(doc: dict, where: str) -> list:
    dims = _require(doc, "dims", where)
    if not isinstance(dims, list) or not dims or not all(isinstance(d, int) and d > 0 for d in dims):
        raise FormatError(f"{where}: 'dims' must be a list of positive integers")
    return dims


def _kraus(items, where: str) -> mc.Channel:
    if not isinstance(items, list) or not items:
        raise FormatError(f"{where}: expected a non-empty Kraus list")
    ks = [decode_matrix(k, f"{where}[{i}]") for i, k in enumerate(items)]
    try:
        return mc.Channel.from_kraus(ks)
    except ValueError as exc:
        raise FormatError(f"{where}: {exc}") from exc


def read_document(path: str | Path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"{path}: cannot read file ({exc.strerror})") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or "kind" not in doc:
        raise FormatError(f"{path}: top level must be an object with a 'kind' field")
    return doc


def parse_matrix_file(path: str | Path):
    """Parse a document into a matrix, state, Channel, SdpInstance or ProtocolSpec."""
    doc = read_document(path)
    kind, where = doc["kind"], str(path)
    if kind == "matrix":
        dims = _dims(doc, where)
        m = decode_matrix(_require(doc, "data", where), f"{where}: data")
        if m.shape != (int(np.prod(dims)),) * 2:
            raise FormatError(f"{where}: data shape {m.shape} does not match dims {dims}")
        return m
    if kind == "state":
        dims = _dims(doc, where)
        v = decode_vector(_require(doc, "data", where), f"{where}: data")
        if v.size != int(np.prod(dims)):
            raise FormatError(f"{where}: {v.size} amplitudes do not match dims {dims}")
        if abs(np.linalg.norm(v) - 1) > 1e-10:
            raise FormatError(f"{where}: state is not normalised (norm {np.linalg.norm(v):.12g})")
        return v
    if kind == "channel":
        dims = _dims(doc, where)
        ch = _kraus(_require(doc, "kraus", where), f"{where}: kraus")
        if [ch.dim_in, ch.dim_out] != list(dims):
            raise FormatError(f"{where}: Kraus shape {ch.dim_in}→{ch.dim_out} does not match dims {dims}")
        return ch
    if kind == "sdp":
        dims = _dims(doc, where)
        ch = _kraus(_require(doc, "kraus", where), f"{where}: kraus")
        b = decode_matrix(_require(doc, "data", where), f"{where}: data")
        if b.shape != (dims[0], dims[0]):
            raise FormatError(f"{where}: B shape {b.shape} does not match dims {dims}")
        try:
            return mmwu.SdpInstance(ch, b, label=doc.get("label", ""))
        except ValueError as exc:
            raise FormatError(f"{where}: {exc}") from exc
    if kind == "protocol":
        regs = _require(doc, "registers", where)
        chans = _require(doc, "channels", where)
        if not isinstance(chans, list):
            raise FormatError(f"{where}: 'channels' must be a list of Kraus lists")
        try:
            spec = protosdp.ProtocolSpec(
                int(_require(doc, "rounds", where)), tuple(_require(regs, "M", f"{where}: registers")),
                tuple(regs.get("Mp", ())), tuple(_require(regs, "W", f"{where}: registers")),
                int(_require(regs, "S", f"{where}: registers")),
                tuple(_kraus(c, f"{where}: channels[{i}]") for i, c in enumerate(chans)),
                float(_require(doc, "accept_prob", where)), doc.get("label", ""))
        except (ValueError, TypeError) as exc:
            raise FormatError(f"{where}: {exc}") from exc
        return spec
    raise FormatError(f"{where}: unknown kind {kind!r}")


def protocol_prover(path: str | Path) -> tuple[list, int] | None:
    """Optional honest prover stored in a protocol file: unitaries on M ⊗ Q and dim Q."""
    doc = read_document(path)
    if "prover" not in doc:
        return None
    us = [decode_matrix(u, f"{path}: prover[{i}]") for i, u in enumerate(doc["prover"])]
    return us, int(_require(doc, "prover_memory", str(path)))


def write_document(doc: dict, path: str | Path | None) -> str:
    text = json.dumps(_plain(doc), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")
    return text


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x):
            return encode_matrix(x) if x.ndim == 2 else encode_vector(x)
        return x.tolist()
    return x


# --------------------------------------------------------------- subcommands


def _one(cfg: RunConfig, n: int = 1):
    if len(cfg.inputs) != n:
        raise FormatError(f"{cfg.subcommand} expects {n} input file(s), got {len(cfg.inputs)}")


def cmd_solve_sdp(cfg: RunConfig) -> tuple[dict, int]:
    _one(cfg)
    inst = parse_matrix_file(cfg.inputs[0])
    if not isinstance(inst, mmwu.SdpInstance):
        raise FormatError(f"{cfg.inputs[0]}: expected kind 'sdp'")
    eps = cfg.eps if cfg.eps is not None else 0.3
    delta = cfg.delta if cfg.delta is not None else (0.0 if cfg.oracle == "exact" else 0.05)
    params = {"eps": eps, "delta": delta, "oracle": cfg.oracle, "dim": inst.dim}
    if cfg.oracle == "blockenc":
        purif, rep = mmwu.solve_block_encoded(inst, eps, delta=delta)
        params["purification_dim"] = int(purif.size)
    else:
        td, gibbs, delta = mmwu.make_oracles(cfg.oracle, inst.dim, delta)
        params["delta"] = delta
        rep = mmwu.solve(inst, eps, td, gibbs, delta, store_iterates=cfg.dump_iterates)
    report = {"parameters": params, "residual": rep.residual, "bound": rep.bound, "T": rep.T,
              "within_feasible_bound": rep.residual <= rep.bound, "potential_ok": rep.potential_ok,
              "rho": rep.rho, "history": rep.history, "ledger": rep.ledger,
              "diagnostics": {k: v for k, v in rep.diagnostics.items() if k != "H"}}
    if not rep.residual <= rep.bound:
        diff = inst.phi(rep.rho) - inst.b
        report["dual_witness_bound"] = mmwu.dual_witness_bound(inst, mmwu.exact_td_oracle(diff))
    if cfg.dump_iterates and rep.iterates is not None:
        report["iterates"] = list(rep.iterates)
    return report, EXIT_OK if rep.potential_ok else EXIT_BOUND


def cmd_gibbs(cfg: RunConfig) -> tuple[dict, int]:
    _one(cfg)
    h = parse_matrix_file(cfg.inputs[0])
    if not isinstance(h, np.ndarray) or h.ndim != 2 or not mc.is_hermitian(h, 1e-10):
        raise FormatError(f"{cfg.inputs[0]}: expected a Hermitian matrix")
    beta = cfg.beta if cfg.beta is not None else 1.0
    target = cfg.eps if cfg.eps is not None else statesynth.DEFAULT_TARGET
    nrm = mc.spectral_norm(h)
    h_be = be_mod.from_matrix(h, alpha=max(nrm, 1e-12))
    req = statesynth.GibbsRequest(h_be, beta, nrm, target)
    res = statesynth.gibbs_pure(req)
    col = statesynth.gibbs_extract(req)
    d = h.shape[0]
    prepared = statesynth.reduced_state(col, [d, col.size // d], [0])
    exact = statesynth.gibbs_exact(h, beta)
    td = mc.trace_distance(prepared, exact)
    report = {"parameters": {"beta": beta, "target": target, "norm_bound": nrm}, "state": prepared,
              "trace_distance": td, "budget": res.budget, "ledger": res.stages}
    return report, EXIT_OK if td <= res.budget else EXIT_BOUND


def cmd_purify(cfg: RunConfig) -> tuple[dict, int]:
    _one(cfg)
    rho = parse_matrix_file(cfg.inputs[0])
    if not isinstance(rho, np.ndarray) or rho.ndim != 2:
        raise FormatError(f"{cfg.inputs[0]}: expected a density matrix")
    kappa = cfg.kappa if cfg.kappa is not None else 0.02
    res = statesynth.purify_mixed(rho, kappa=kappa, rng=np.random.default_rng(cfg.seed))
    d = rho.shape[0]
    red = statesynth.reduced_state(res.state, [d, d], [0])
    td = mc.trace_distance(red, rho)
    report = {"parameters": {"kappa": kappa, "seed": cfg.seed}, "purification": res.state,
              "trace_distance": td, "budget": res.budget, "success_probability": res.success_prob,
              "attempts": res.attempts_used}
    return report, EXIT_OK if td <= res.budget else EXIT_BOUND


def _state_pair(cfg: RunConfig) -> uhlmann.StatePair:
    _one(cfg, 2)
    docs = [read_document(p) for p in cfg.inputs]
    vecs = [parse_matrix_file(p) for p in cfg.inputs]
    for p, d, v in zip(cfg.inputs, docs, vecs):
        if d["kind"] != "state":
            raise FormatError(f"{p}: expected kind 'state'")
    dims = [_dims(d, str(p)) for p, d in zip(cfg.inputs, docs)]
    if dims[0] != dims[1] or len(dims[0]) != 2:
        raise FormatError("uhlmann needs two states with identical two-register dims [A, B]")
    return uhlmann.StatePair(vecs[0], vecs[1], tuple(dims[0]))


def cmd_uhlmann(cfg: RunConfig) -> tuple[dict, int]:
    pair = _state_pair(cfg)
    ex = uhlmann.uhlmann_exact(pair)
    report = {"parameters": {"dims": list(pair.split.dims)}, "overlap": ex.overlap, "fidelity": ex.fid,
              "w": ex.w}
    status = EXIT_OK if abs(ex.overlap - ex.fid) <= 1e-8 else EXIT_BOUND
    if cfg.kappa is not None:
        k, rep = uhlmann.uhlmann_circuit(pair, cfg.kappa, cfg.backend)
        report["circuit"] = rep
        report["parameters"].update(kappa=cfg.kappa, backend=cfg.backend)
        if cfg.verbose:
            report["unitary"] = k
        if rep["deviation_sq"] > rep["bound"] + 1e-12:
            status = EXIT_BOUND
    return report, status


def cmd_chebfit(cfg: RunConfig) -> tuple[dict, int]:
    if cfg.inputs:
        raise FormatError("chebfit takes no input files")
    kappa = cfg.kappa if cfg.kappa is not None else 0.05
    if cfg.kind == "sign":
        if cfg.degree is not None:
            k = chebpoly.erf_scale(kappa)
            s = chebpoly.cheb_project(lambda x: erf(k * x), cfg.degree | 1, parity="odd")
        else:
            s = chebpoly.sign_series(kappa)
        gap, peak = chebpoly.sign_error(s, kappa)
        ok = gap <= kappa and peak <= 1 + kappa
        errs = {"max_error": gap, "max_abs": peak}
    elif cfg.kind == "sqrt":
        if cfg.degree is not None:
            s = chebpoly.cheb_project(lambda x: np.sqrt((x + 1) / 2), cfg.degree)
        else:
            s = chebpoly.sqrt_series(kappa)
        err = chebpoly.sqrt_error(s, kappa)
        ok = err <= kappa
        errs = {"max_error": err}
    else:
        raise FormatError(f"unknown series kind {cfg.kind!r}")
    report = {"parameters": {"kind": cfg.kind, "kappa": kappa, "degree": s.degree}, "errors": errs,
              "within_kappa": ok, "l1_norm": s.l1_norm, "coefficients": s.coeffs}
    return report, EXIT_OK if ok else EXIT_BOUND


def cmd_protocol_compile(cfg: RunConfig) -> tuple[dict, int]:
    _one(cfg)
    spec = parse_matrix_file(cfg.inputs[0])
    if not isinstance(spec, protosdp.ProtocolSpec):
        raise FormatError(f"{cfg.inputs[0]}: expected kind 'protocol'")
    comp = protosdp.compile_protocol(spec)
    ratio = mmwu.certify_width(comp.instance, seed=cfg.seed)
    report = {"parameters": {"rounds": spec.rounds, "accept_prob": spec.accept_prob},
              "dim": comp.instance.dim, "dim_a": comp.dim_a, "norm": comp.norm,
              "registers": [{"name": n, "factors": list(f)} for n, f in spec.registers()],
              "blocks": [{"name": n, "offset": o, "size": s} for n, o, s in comp.blocks],
              "width_ratio": ratio}
    status = EXIT_OK
    prov = protocol_prover(cfg.inputs[0])
    if prov is not None:
        point = protosdp.honest_point(spec, prov[0])
        res = protosdp.residual(comp, point)
        report["honest"] = {"residual": res, "acceptance": point.meta["acceptance"],
                            "matches_c": point.meta["matches_c"]}
        if res > 1e-8:
            status = EXIT_BOUND
    return report, status


def cmd_prover_synth(cfg: RunConfig) -> tuple[dict, int]:
    _one(cfg)
    spec = parse_matrix_file(cfg.inputs[0])
    if not isinstance(spec, protosdp.ProtocolSpec):
        raise FormatError(f"{cfg.inputs[0]}: expected kind 'protocol'")
    prov = protocol_prover(cfg.inputs[0])
    if prov is None:
        raise FormatError(f"{cfg.inputs[0]}: prover-synth needs 'prover' and 'prover_memory'")
    us, dq = prov
    kappa = cfg.kappa if cfg.kappa is not None else 0.02
    pairs = protosdp.protocol_purifications(spec, us, dq)
    synth = uhlmann.prover_from_protocol(spec, pairs, kappa, cfg.backend)
    honest = protosdp.pure_run(spec, us, dq)["acceptance"]
    got = protosdp.synthesized_acceptance(spec, synth, dq)
    allowance = float(sum(np.sqrt(r["deviation_sq"]) for r in synth.reports))
    report = {"parameters": {"kappa": kappa, "backend": cfg.backend},
              "honest_acceptance": honest, "synthesized_acceptance": got, "loss": honest - got,
              "allowance": allowance,
              "rounds": [{k: v for k, v in r.items() if k != "ledger"} | {"ledger": r["ledger"]}
                         for r in synth.reports]}
    if cfg.verbose:
        report["unitary"] = synth.unitary
    return report, EXIT_OK if got >= honest - allowance - 1e-9 else EXIT_BOUND


COMMANDS = {
    "solve-sdp": cmd_solve_sdp, "gibbs": cmd_gibbs, "purify": cmd_purify, "uhlmann": cmd_uhlmann,
    "chebfit": cmd_chebfit, "protocol-compile": cmd_protocol_compile, "prover-synth": cmd_prover_synth,
}


def run(cfg: RunConfig) -> int:
    start = time.perf_counter()
    try:
        report, status = COMMANDS[cfg.subcommand](cfg)
    except (FormatError, ValueError) as exc:
        # ValueError covers inputs the numerical modules reject (wrong dims, non-PSD states)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except RuntimeError as exc:
        print(f"bound violation: {exc}", file=sys.stderr)
        return EXIT_BOUND
    report = {"subcommand": cfg.subcommand, "status": status, **report,
              "timing": {"wall_seconds": time.perf_counter() - start}}
    try:
        write_document(report, cfg.out)
    except OSError as exc:
        print(f"error: cannot write report: {exc}", file=sys.stderr)
        return EXIT_IO
    return status


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; here 2 is reserved for bound violations."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_IO, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qsdp", description=__doc__.splitlines()[0])
    p.add_argument("subcommand", choices=sorted(COMMANDS))
    p.add_argument("inputs", nargs="*", help="input document(s)")
    p.add_argument("--eps", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--degree", type=int)
    p.add_argument("--oracle", choices=["exact", "poly", "blockenc"], default="exact")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out")
    p.add_argument("--dump-iterates", action="store_true")
    p.add_argument("--kind", choices=["sign", "sqrt"], default="sign", help="chebfit series")
    p.add_argument("--backend", choices=["poly", "reference"], default="poly", help="Uhlmann circuit backend")
    p.add_argument("-v", "--verbose", action="store_true", help="include unitaries in reports")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name, lo, hi in (("eps", 0, 1), ("delta", 0, 1), ("kappa", 1e-4, 1)):
        val = getattr(args, name)
        if val is not None and not lo <= val < hi:
            print(f"error: --{name} must lie in [{lo}, {hi})", file=sys.stderr)
            return EXIT_IO
    cfg = RunConfig(args.subcommand, tuple(args.inputs), args.eps, args.delta, args.kappa, args.beta,
                    args.degree, args.oracle, args.seed, args.out, args.dump_iterates, args.verbose,
                    args.kind, args.backend)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
