import json
import struct

import jsonschema
import numpy as np
import pytest

from entpower.cli import load_schema, main
from entpower.io import (
    HEADER,
    MAGIC,
    MatrixFormatError,
    read_csv,
    read_matrix,
    write_csv,
    write_matrix,
    write_matrix_jsonl,
)
from entpower.sampling import SeededStream, haar_unitary
from entpower.tensor import swap_operator


def test_binary_round_trip_is_bit_exact(tmp_path):
    u = haar_unitary(6, SeededStream(1))
    path = tmp_path / "u.bin"
    write_matrix(path, u)
    back = read_matrix(path)
    assert back.tobytes() == u.tobytes()
    assert path.stat().st_size == HEADER.size + 16 * 36


def test_binary_layout(tmp_path):
    path = tmp_path / "m.bin"
    write_matrix(path, np.array([[1 + 2j, 3.0]]))
    raw = path.read_bytes()
    assert raw[:8] == MAGIC
    assert struct.unpack("<QQ", raw[8:24]) == (1, 2)
    assert struct.unpack("<4d", raw[24:]) == (1.0, 2.0, 3.0, 0.0)


def test_jsonl_round_trip(tmp_path):
    u = haar_unitary(3, SeededStream(2))
    path = tmp_path / "u.jsonl"
    write_matrix_jsonl(path, u)
    assert np.array_equal(read_matrix(path), u)


@pytest.mark.parametrize("payload,offset", [
    (b"NOTMAGIC" + b"\0" * 16, 0),
    (MAGIC + b"\0" * 4, 12),
    (MAGIC + struct.pack("<QQ", 2, 2) + b"\0" * 10, 34),
])
def test_binary_diagnostics_name_the_offset(tmp_path, payload, offset):
    path = tmp_path / "bad.bin"
    path.write_bytes(payload)
    with pytest.raises(MatrixFormatError) as info:
        read_matrix(path)
    assert info.value.offset == offset
    assert f"byte offset {offset}" in str(info.value)


def test_non_finite_entry_offset(tmp_path):
    m = np.eye(2, dtype=complex)
    m[1, 0] = np.nan
    path = tmp_path / "nan.bin"
    write_matrix(path, m)
    with pytest.raises(MatrixFormatError) as info:
        read_matrix(path)
    assert info.value.offset == HEADER.size + 16 * 2


def test_jsonl_diagnostics(tmp_path):
    path = tmp_path / "bad.jsonl"
    text = '{"rows": 2, "cols": 1}\n[[1, 0]]\n[[1, 0], oops]\n'
    path.write_text(text)
    with pytest.raises(MatrixFormatError) as info:
        read_matrix(path)
    assert info.value.offset == text.index("oops")


def test_csv_is_lossless(tmp_path):
    path = tmp_path / "x.csv"
    vals = [0.1, 1 / 3, np.pi, 1e-300]
    write_csv(path, ("a", "n"), [(v, k) for k, v in enumerate(vals)])
    header, data = read_csv(path)
    assert header == ["a", "n"]
    assert list(data[:, 0]) == vals


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_metrics_command(tmp_path, capsys):
    path = tmp_path / "swap.bin"
    write_matrix(path, swap_operator(2))
    code, out, _ = run(capsys, "metrics", path, "--dA", 2, "--dB", 2)
    assert code == 0
    rec = json.loads(out)
    assert rec["Ep"] == pytest.approx(0.0, abs=1e-12)
    assert rec["E"] == pytest.approx(0.75, abs=1e-12)
    assert {"E", "E_US", "S_AB", "S_AA", "Ep", "ep", "bounds"} <= rec.keys()

    write_matrix(path, np.eye(6))
    code, out, _ = run(capsys, "metrics", path, "--dA", 2, "--dB", 3)
    assert code == 0 and json.loads(out)["Ep"] == pytest.approx(0.0, abs=1e-12)


def test_metrics_input_errors(tmp_path, capsys):
    bad = tmp_path / "bad.bin"
    bad.write_bytes(MAGIC + b"\1")
    code, _, err = run(capsys, "metrics", bad, "--dA", 2, "--dB", 2)
    assert code == 2 and "byte offset" in err

    path = tmp_path / "m.bin"
    write_matrix(path, 2 * np.eye(4))
    assert run(capsys, "metrics", path, "--dA", 2, "--dB", 2)[0] == 2
    write_matrix(path, np.eye(4))
    assert run(capsys, "metrics", path, "--dA", 2, "--dB", 3)[0] == 2
    assert run(capsys, "metrics", tmp_path / "missing.bin", "--dA", 2, "--dB", 2)[0] == 2


def test_maximize_command(capsys):
    code, out, _ = run(capsys, "maximize", "--d-side", 2, "--restarts", 5, "--seed", 3)
    assert code == 0
    rec = json.loads(out)
    jsonschema.validate(rec, load_schema("maximize"))
    assert rec["gap"] <= 1e-10
    assert run(capsys, "maximize", "--d-side", 2, "--restarts", 0)[0] == 2
    assert run(capsys, "maximize", "--d-side", 9)[0] == 2


def test_maximize_cap_is_a_compute_error(capsys):
    code, out, _ = run(capsys, "maximize", "--d-side", 3, "--restarts", 2, "--max-iter", 1)
    assert code == 1
    assert "ep_final" in json.loads(out)


def test_fig3_schema_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(capsys, "fig", "fig3", "--L", "8,16,32,48", "--grid", 65, "--out", a)[0] == 0
    assert run(capsys, "fig", "fig3", "--L", "8,16,32,48", "--grid", 65, "--out", b)[0] == 0
    text = (a / "fig3.csv").read_text()
    assert text == (b / "fig3.csv").read_text()
    lines = text.splitlines()
    assert lines[0] == "J,Ep_V,E_loc_tstar,L"
    assert len(lines) == 1 + 4 * 65
    manifest = json.loads((a / "fig3.manifest.json").read_text())
    assert manifest["seed"] == 0 and manifest["outputs"] == [str(a / "fig3.csv")]


def test_fig1_small_run(tmp_path, capsys):
    args = ("fig", "fig1", "--L", 4, "--model", "integrable", "--points", 20, "--out", tmp_path)
    assert run(capsys, *args)[0] == 0
    header, data = read_csv(tmp_path / "fig1_integrable_L4.csv")
    assert header == ["t", "E_U", "E_US", "Ep", "n_realizations", "seed"]
    assert data.shape == (20, 6)
    assert data[0, 2] == pytest.approx(1 - 1 / 16, abs=1e-14)


def test_fig2_deterministic_across_jobs(tmp_path, capsys):
    base = ("fig", "fig2", "--L", 4, "--model", "mbl", "--points", 10, "--realizations", 3,
            "--seed", 5)
    run(capsys, *base, "--out", tmp_path / "a")
    run(capsys, *base, "--jobs", 2, "--out", tmp_path / "b")
    name = "fig2_mbl_L4.csv"
    assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


@pytest.mark.parametrize("argv", [
    ("fig", "fig1", "--L", 10),
    ("fig", "fig4", "--L", 8),
    ("fig", "fig3", "--L", 7),
    ("fig", "fig1", "--model", "heisenberg"),
    ("fig", "fig3", "--grid", 1),
    ("fig", "fig5"),
    ("metrics",),
    ("maximize", "--d-side", 2, "--seed", -1),
])
def test_out_of_range_parameters_fail_fast(argv, capsys, tmp_path):
    assert run(capsys, *argv, "--out", tmp_path)[0] == 2
    assert not list(tmp_path.glob("*.csv"))
