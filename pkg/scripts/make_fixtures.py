"""Write the JSON fixture documents used by the CLI tests and examples."""
from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from qsdp import matcore as mc
from qsdp import mmwu, protosdp
from qsdp.cli import encode_matrix, encode_vector, write_document


def sdp_doc(inst: mmwu.SdpInstance, label: str) -> dict:
    return {"kind": "sdp", "dims": [inst.dim], "label": label,
            "kraus": [encode_matrix(k) for k in inst.phi.kraus], "data": encode_matrix(inst.b)}


def protocol_doc(spec: protosdp.ProtocolSpec, prover, dq: int) -> dict:
    return {"kind": "protocol", "label": spec.label, "rounds": spec.rounds,
            "registers": {"M": list(spec.msg), "Mp": list(spec.reply), "W": list(spec.work), "S": spec.s_dim},
            "channels": [[encode_matrix(k) for k in ch.kraus] for ch in spec.channels],
            "accept_prob": spec.accept_prob,
            "prover": [encode_matrix(u) for u in prover], "prover_memory": dq}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dir", default=str(Path(__file__).resolve().parents[1] / "tests" / "fixtures"))
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args(argv)
    out = Path(args.dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    s2 = 1 / np.sqrt(2)
    docs = {
        "identity2.json": {"kind": "matrix", "dims": [2], "data": encode_matrix(np.eye(2))},
        "bell.json": {"kind": "state", "dims": [2, 2], "data": encode_vector(mc.maximally_entangled(2))},
        "psi00.json": {"kind": "state", "dims": [2, 2], "data": encode_vector(np.kron([1, 0], [1, 0]))},
        "phi_plusplus.json": {"kind": "state", "dims": [2, 2],
                              "data": encode_vector(np.kron([s2, s2], [s2, s2]))},
        "hamiltonian.json": {"kind": "matrix", "dims": [2],
                             "data": encode_matrix(mc.random_hermitian(2, rng, norm=1.5))},
        "mixed.json": {"kind": "matrix", "dims": [2], "data": encode_matrix(mc.random_density(2, rng))},
        "sdp_identity.json": sdp_doc(mmwu.identity_instance(2), "identity"),
        "sdp_feasible.json": sdp_doc(mmwu.random_feasible_instance(2, rng)[0], "feasible"),
    }
    ch = mc.random_channel(2, 2, rng)
    docs["channel.json"] = {"kind": "channel", "dims": [2, 2], "kraus": [encode_matrix(k) for k in ch.kraus]}
    docs["protocol_trivial.json"] = protocol_doc(*protosdp.trivial_protocol())
    for r in (1, 2, 3):
        docs[f"protocol_r{r}.json"] = protocol_doc(*protosdp.toy_protocol(r))
    for name, doc in docs.items():
        write_document(doc, out / name)
    (out / "malformed.json").write_text('{"kind": "matrix", "dims": [2], "data": [[1, 0], [0]]}\n')
    print(f"wrote {len(docs) + 1} fixtures to {out}")


if __name__ == "__main__":
    main()
