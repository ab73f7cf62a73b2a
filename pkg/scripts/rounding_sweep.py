"""Perturb honest points of the toy protocols and round them back.

Prints, for each protocol and perturbation strength, the residual of the
perturbed point, the measured r′, the trace distance moved by rounding and
the bound 2r′ε^{1/4}.
"""
from __future__ import annotations

import argparse

from qsdp import protosdp as ps


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rounds", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--strengths", type=float, nargs="+", default=[1e-2, 1e-3, 1e-4])
    args = ap.parse_args(argv)
    print("r  p        eps       eps'      r'      td        bound     S̃-violation")
    for r in args.rounds:
        spec, prover, _ = ps.toy_protocol(r)
        comp = ps.compile_protocol(spec, width_check=False)
        honest = ps.honest_point(spec, prover)
        for p in args.strengths:
            pert = ps.depolarize_point(honest, spec, p)
            eps = ps.residual(comp, pert)
            rounded, rep = ps.round_feasible(pert, spec, eps)
            viol = ps.relaxed_violation(comp, rounded)
            print(f"{r}  {p:<8.0e} {eps:<9.2e} {rep['eps_prime']:<9.2e} {rep['r_prime']:<7.3f} "
                  f"{rep['td']:<9.2e} {rep['td_bound']:<9.2e} {viol:.1e}")


if __name__ == "__main__":
    main()
