import math

import numpy as np
import pytest

from trefftz_stokes import cli
from trefftz_stokes.analysis import l2_error, norm_0h, norm_1h
from trefftz_stokes.mesh import build_structured_mesh
from trefftz_stokes.problems import stream_function_solution
from trefftz_stokes.solver import SolverError
from trefftz_stokes.stokes_dg import DGSpace


def _kv(text):
    return dict(line.split("=", 1) for line in text.strip().splitlines())


def test_check_dims_ok(capsys):
    assert cli.main(["check-dims"]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "d=2 dim T(T):   6 10 14 18 22 26" in out
    assert "d=3 dim X_h(T): 13 34 70 125 203 308" in out
    assert "d=2 k=3 numerical kernel dim on n=2: [14]" in out


def test_check_dims_rejects_large_k(capsys):
    assert cli.main(["check-dims", "--k-max", "7"]) == cli.EXIT_CONFIG


def test_check_dims_mismatch_exit(monkeypatch, capsys):
    real = cli.dim_formulas
    monkeypatch.setattr(cli, "dim_formulas", lambda k, d=2: (real(k, d)[0], real(k, d)[1] + (k == 3)))
    assert cli.main(["check-dims", "--k-max", "3"]) == cli.EXIT_DIMS
    err = capsys.readouterr().err
    assert "MISMATCH d=2 k=3" in err


def test_solve_trefftz_counts(capsys):
    assert cli.main(["solve", "--method", "trefftz", "--k", "2", "--n", "4"]) == cli.EXIT_OK
    kv = _kv(capsys.readouterr().out)
    assert kv["ndof_full"] == "481"
    assert kv["ndof_condensed"] == "321"
    assert float(kv["galerkin_residual"]) < 1e-10
    assert float(kv["algebraic_residual"]) < 1e-10


def test_solve_dg_counts(capsys):
    assert cli.main(["solve", "--method", "dg", "--k", "1", "--n", "1"]) == cli.EXIT_OK
    kv = _kv(capsys.readouterr().out)
    assert kv["ndof_full"] == "15"
    assert kv["method"] == "dg"


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "--k", "5"],
        ["solve", "--k", "0"],
        ["solve", "--method", "cg"],
        ["solve", "--nu", "-1"],
        ["solve", "--problem", "nope"],
        ["solve", "--k", "2,3"],
        ["solve", "--n", "0"],
        ["convergence", "--levels", "4,2"],
        ["convergence", "--alpha-scale", "0"],
    ],
)
def test_invalid_config_exit(argv, capsys):
    assert cli.main(argv) == cli.EXIT_CONFIG
    assert "invalid configuration" in capsys.readouterr().err


def test_solver_failure_exit(monkeypatch, capsys):
    def boom(system, space):
        raise SolverError("forced")

    monkeypatch.setattr(cli, "solve_dg", boom)
    assert cli.main(["convergence", "--method", "dg", "--k", "1", "--levels", "1,2"]) == cli.EXIT_SOLVER
    err = capsys.readouterr().err
    assert "dg k=1 n=1" in err and "forced" in err


def test_residual_contract_enforced(monkeypatch):
    monkeypatch.setattr(cli, "ALGEBRAIC_TOL", 0.0)
    with pytest.raises(cli.RunFailure, match="residual contract"):
        cli.run_single(cli.RunConfig(), "dg", 1, 1)


def test_convergence_csv_format(tmp_path):
    out = tmp_path / "conv.csv"
    assert cli.main(["convergence", "--k", "1,2", "--levels", "1,2", "--out", str(out)]) == cli.EXIT_OK
    raw = out.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == cli.CSV_HEADER
    assert len(lines) == 1 + 2 * 2 * 2
    keys = [(r.split(",")[0], int(r.split(",")[1]), int(r.split(",")[3])) for r in lines[1:]]
    assert keys == sorted(keys)
    row = lines[1].split(",")
    assert len(row) == len(cli.CSV_HEADER.split(","))
    assert float(row[4]) == math.sqrt(2)
    assert all(cli._fmt(float(v)) == v for v in row[7:])


def test_fmt_17_digits():
    assert cli._fmt(0.1) == "0.10000000000000001"
    assert cli._fmt(3) == "3"
    assert cli._fmt(np.int64(7)) == "7"


def test_convergence_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["convergence", "--k", "2", "--levels", "1,2"]
    assert cli.main(argv + ["--out", str(a)]) == 0
    assert cli.main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_convergence_stdout(capsys):
    assert cli.main(["convergence", "--method", "dg", "--k", "1", "--levels", "1"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == cli.CSV_HEADER


def test_dump_matrix(tmp_path, capsys):
    path = tmp_path / "K.txt"
    assert cli.main(["solve", "--method", "dg", "--k", "1", "--n", "1", "--dump-matrix", str(path)]) == 0
    entries = [line.split() for line in path.read_text().splitlines()]
    rows = [(int(r), int(c)) for r, c, _ in entries]
    assert rows == sorted(rows)
    assert max(r for r, _ in rows) == 14
    values = {(int(r), int(c)): float(v) for r, c, v in entries}
    assert all(abs(values[(c, r)] - v) == 0 for (r, c), v in values.items())


def test_dump_kernel_dims(tmp_path, capsys):
    path = tmp_path / "kd.csv"
    assert cli.main(["solve", "--k", "3", "--n", "2", "--dump-kernel-dims", str(path)]) == 0
    lines = path.read_text().splitlines()
    assert lines[0] == "element_id,rank,kernel_dim"
    assert len(lines) == 9
    assert all(line.split(",")[1:] == ["12", "14"] for line in lines[1:])


def test_convergence_dumps_are_suffixed(tmp_path):
    base = tmp_path / "kd.csv"
    config = cli.RunConfig(methods=("trefftz",), ks=(1,), levels=(1, 2), dump_kernel_dims=str(base), out=str(tmp_path / "c.csv"))
    cli.cmd_convergence(config)
    assert (tmp_path / "kd_trefftz_k1_n1.csv").exists()
    assert (tmp_path / "kd_trefftz_k1_n2.csv").exists()


def test_zero_data_row_equals_exact_norms():
    config = cli.RunConfig(methods=("trefftz",), ks=(2,), levels=(2,), zero_data=True)
    res = cli.run_single(config, "trefftz", 2, 2)
    assert not np.any(np.abs(res.solution.coefficients) > 1e-11)
    prob = stream_function_solution(1.0)
    space = DGSpace(build_structured_mesh(2), 2)
    zero = np.zeros(space.ndof)
    rep = res.report
    assert abs(rep.u_l2 - l2_error(space, zero, prob.u, "u")) < 1e-14
    assert abs(rep.p_l2 - l2_error(space, zero, prob.p, "p")) < 1e-14
    assert abs(rep.u_1h - norm_1h(space, zero, prob.u, prob.grad_u)) < 1e-14
    assert abs(rep.p_0h - norm_0h(space, zero, prob.p, prob.grad_p)) < 1e-14


def test_run_config_validate():
    assert cli.RunConfig().validate().ks == (2,)
    with pytest.raises(cli.ConfigError):
        cli.RunConfig(levels=()).validate()
    with pytest.raises(cli.ConfigError):
        cli.RunConfig(methods=()).validate()
