import subprocess
import sys

import numpy as np
import pytest

from ifemeig import CircularProblem
from ifemeig.cli import main, oracle_table

CFG = """\
domain = disk 1.0
interface = circle 0 0 0.38
beta = 1000 1
sizes = 8 16
k = 4
"""


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "study.cfg"
    p.write_text(CFG)
    return str(p)


def test_oracle_table_multiplicities():
    text = oracle_table(CircularProblem(beta_minus=1.0, beta_plus=1000.0), 10)
    lines = text.splitlines()[1:]
    assert len(lines) == 6                      # ten values, four of them double
    vals = [float(ln.split()[1]) for ln in lines]
    assert np.allclose(vals, [39.972, 101.523, 182.474, 210.605, 281.713, 340.329], atol=1e-3)
    assert [int(ln.split()[3]) for ln in lines] == [1, 2, 2, 1, 2, 2]


def test_oracle_equal_beta_prints_bessel_zeros(capsys):
    assert main(["oracle", "--beta", "1", "1", "--count", "1"]) == 0
    out = capsys.readouterr().out
    assert "5.783185963" in out


def test_oracle_stiff_inside_values(capsys):
    assert main(["oracle", "--beta", "1000", "1", "--count", "10"]) == 0
    out = capsys.readouterr().out
    for v in ("6.047", "27.355", "34.126", "39.742", "45.091", "59.871"):
        assert v in out


def test_solve(cfg, capsys, tmp_path):
    out_dir = tmp_path / "res"
    assert main(["solve", "--config", cfg, "--k", "3", "--out", str(out_dir)]) == 0
    out = capsys.readouterr().out
    assert "index,lambda,residual" in out
    assert (out_dir / "eigenvalues.csv").read_text().count("\n") == 4


def test_converge_csv(cfg, capsys, tmp_path):
    assert main(["converge", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert "level,h,dof,lambda_1,err_1,ord_1" in out
    out_dir = tmp_path / "conv"
    assert main(["converge", "--config", cfg, "--kappa", "0.1", "1", "--out", str(out_dir)]) == 0
    assert (out_dir / "report_kappa_0.1.csv").exists()
    assert (out_dir / "report_kappa_1.csv").exists()


def test_export(cfg, tmp_path, capsys):
    out_dir = tmp_path / "fields"
    assert main(["export", "--config", cfg, "--index", "2", "--format", "csv",
                 "--out", str(out_dir)]) == 0
    assert (out_dir / "eigenfunction_2.csv").exists()
    assert main(["export", "--config", cfg, "--index", "9"]) == 1
    assert "error:" in capsys.readouterr().err


def test_errors_exit_nonzero(tmp_path, capsys):
    assert main(["solve", "--config", str(tmp_path / "missing.cfg")]) == 1
    bad = tmp_path / "bad.cfg"
    bad.write_text("beta = 1\n")
    assert main(["converge", "--config", str(bad)]) == 1
    assert "line 1" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["frobnicate"])


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "ifemeig", "oracle", "--count", "3"],
                       capture_output=True, text=True, check=True)
    assert "39.97" in r.stdout
