import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qsdp import cli
from qsdp import matcore as mc

FIX = Path(__file__).parent / "fixtures"


def _run(tmp_path, *args, name="out.json"):
    out = tmp_path / name
    code = cli.main([*args, "--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None), out


def _strip_timing(text):
    doc = json.loads(text)
    doc.pop("timing")
    return json.dumps(doc, sort_keys=True)


def test_parse_identity_and_bell():
    assert np.array_equal(cli.parse_matrix_file(FIX / "identity2.json"), np.eye(2))
    bell = cli.parse_matrix_file(FIX / "bell.json")
    assert np.linalg.norm(bell) == pytest.approx(1, abs=1e-12)


def test_parse_channel_and_protocol():
    ch = cli.parse_matrix_file(FIX / "channel.json")
    assert isinstance(ch, mc.Channel) and ch.is_trace_preserving()
    spec = cli.parse_matrix_file(FIX / "protocol_r2.json")
    assert spec.rounds == 2


def test_malformed_file_names_the_key(tmp_path):
    with pytest.raises(cli.FormatError, match="data"):
        cli.parse_matrix_file(FIX / "malformed.json")
    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "state", "dims": [2], "data": [[1, 0], [1, 0]]}')
    with pytest.raises(cli.FormatError, match="normalised"):
        cli.parse_matrix_file(bad)
    bad.write_text('{"kind": "matrix", "dims": [3], "data": [[[1, 0]]]}')
    with pytest.raises(cli.FormatError, match="dims"):
        cli.parse_matrix_file(bad)
    bad.write_text("{not json")
    with pytest.raises(cli.FormatError, match="line 1"):
        cli.parse_matrix_file(bad)


@given(st.integers(0, 2**31 - 1), st.sampled_from([2, 3]))
def test_channel_roundtrip_is_bit_identical(tmp_path_factory, seed, d):
    ch = mc.random_channel(d, d, np.random.default_rng(seed))
    path = tmp_path_factory.mktemp("rt") / "ch.json"
    cli.write_document({"kind": "channel", "dims": [d, d], "kraus": [cli.encode_matrix(k) for k in ch.kraus]},
                       path)
    back = cli.parse_matrix_file(path)
    assert all(np.array_equal(a, b) for a, b in zip(ch.kraus, back.kraus))


def test_solve_sdp_identity_fixture(tmp_path):
    code, rep, _ = _run(tmp_path, "solve-sdp", str(FIX / "sdp_identity.json"))
    assert code == 0
    assert rep["residual"] == pytest.approx(0, abs=1e-12)


def test_solve_sdp_poly_oracle(tmp_path):
    code, rep, _ = _run(tmp_path, "solve-sdp", str(FIX / "sdp_feasible.json"), "--oracle", "poly",
                        "--eps", "0.3", "--delta", "0.05", "--dump-iterates")
    assert code == 0 and rep["within_feasible_bound"]
    assert len(rep["iterates"]) == rep["T"]


def test_uhlmann_fixture(tmp_path):
    code, rep, _ = _run(tmp_path, "uhlmann", str(FIX / "psi00.json"), str(FIX / "phi_plusplus.json"))
    assert code == 0
    assert rep["overlap"][0] == pytest.approx(0.7071, abs=1e-4)
    assert rep["overlap"][0] == pytest.approx(2**-0.5, abs=1e-6)


def test_uhlmann_circuit_report(tmp_path):
    code, rep, _ = _run(tmp_path, "uhlmann", str(FIX / "psi00.json"), str(FIX / "phi_plusplus.json"),
                        "--kappa", "0.1")
    assert code == 0
    assert rep["circuit"]["deviation_sq"] <= rep["circuit"]["bound"]
    assert all({"alpha", "eps", "ancillas"} <= set(row) for row in rep["circuit"]["ledger"])


def test_gibbs_and_purify(tmp_path):
    code, rep, _ = _run(tmp_path, "gibbs", str(FIX / "hamiltonian.json"), "--beta", "1.0")
    assert code == 0 and rep["trace_distance"] <= rep["budget"]
    code, rep, _ = _run(tmp_path, "purify", str(FIX / "mixed.json"), name="p.json")
    assert code == 0 and rep["trace_distance"] <= rep["budget"]


def test_chebfit_table(tmp_path):
    code, rep, _ = _run(tmp_path, "chebfit", "--kappa", "0.1")
    assert code == 0 and rep["within_kappa"]
    code, rep, _ = _run(tmp_path, "chebfit", "--kind", "sign", "--kappa", "0.05", "--degree", "5")
    assert code == 2 and not rep["within_kappa"]


def test_protocol_compile_and_prover_synth(tmp_path):
    code, rep, _ = _run(tmp_path, "protocol-compile", str(FIX / "protocol_r1.json"))
    assert code == 0
    assert rep["honest"]["residual"] <= 1e-8 and rep["norm"] == 16
    code, rep, _ = _run(tmp_path, "prover-synth", str(FIX / "protocol_r1.json"), "--kappa", "0.1",
                        name="s.json")
    assert code == 0 and rep["loss"] <= 1e-2


def test_reports_are_reproducible(tmp_path):
    args = ["purify", str(FIX / "mixed.json"), "--seed", "7"]
    _, _, a = _run(tmp_path, *args, name="a.json")
    _, _, b = _run(tmp_path, *args, name="b.json")
    assert _strip_timing(a.read_text()) == _strip_timing(b.read_text())
    text = a.read_text()
    assert text.endswith("\n") and not text.endswith("\n\n")


def test_exit_codes_for_bad_input(tmp_path, capsys):
    assert cli.main(["gibbs", str(FIX / "malformed.json")]) == 1
    assert "data" in capsys.readouterr().err
    assert cli.main(["gibbs", str(tmp_path / "missing.json")]) == 1
    assert cli.main(["solve-sdp", str(FIX / "sdp_identity.json"), "--eps", "1.5"]) == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["no-such-command"])
    assert exc.value.code == 1
    bad = tmp_path / "neg.json"
    cli.write_document({"kind": "matrix", "dims": [2], "data": cli.encode_matrix(np.diag([1.5, -0.5]))}, bad)
    assert cli.main(["purify", str(bad)]) == 1


def test_default_seed():
    assert cli.build_parser().parse_args(["chebfit"]).seed == 42
    assert cli.RunConfig("chebfit", ()).seed == 42
