import csv
import math

import pytest

from drumlab.cli import ConfigError, main, parse_config

CARDIOID = """\
# cardioid drum with a radial density
map = cardioid
density = "1/(1+4*(u^2+v^2))"   # rho in target coordinates
cutoff = 40
n_max = 100
"""


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def write_cfg(tmp_path, text, name="case.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_default_spectrum(tmp_path):
    assert main(["spectrum", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "spectrum_dirichlet.csv")
    assert rows[0] == ["N", "E"]
    assert rows[1][0] == "1"
    assert float(rows[1][1]) == pytest.approx(math.pi ** 2 / 2, rel=1e-12)
    assert rows[1][1].startswith("4.934802")
    neumann = read_csv(tmp_path / "spectrum_neumann.csv")
    assert abs(float(neumann[1][1])) < 1e-10
    assert len(rows) - 1 == 400  # a quarter of 40 x 40


def test_cardioid_spectrum(tmp_path):
    cfg = write_cfg(tmp_path, CARDIOID + "bc = dirichlet\n")
    assert main(["spectrum", "--config", str(cfg), "--out", "out"]) == 0
    rows = read_csv(tmp_path / "out" / "spectrum_dirichlet.csv")
    assert float(rows[1][1]) == pytest.approx(10.6769, rel=0.02)
    assert not (tmp_path / "out" / "spectrum_neumann.csv").exists()


def test_invalid_density_reports_offset(tmp_path, capsys):
    cfg = write_cfg(tmp_path, 'density = "1/("\n')
    assert main(["spectrum", "--config", str(cfg)]) == 2
    err = capsys.readouterr().err
    assert "byte offset 3" in err
    assert len(err.strip().splitlines()) == 1


@pytest.mark.parametrize("text", ["cutoff = many\n", "colour = red\n", "just words\n",
                                  "map = spiral\n", "cutoff = 70\n", "n_min = 5\nn_max = 2\n",
                                  "bc = periodic\n", "quadrature = 1\n"])
def test_config_errors_exit_2(tmp_path, text, capsys):
    cfg = write_cfg(tmp_path, text)
    assert main(["weyl", "--config", str(cfg)]) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config_and_bad_arguments(tmp_path):
    assert main(["spectrum", "--config", str(tmp_path / "nope.cfg")]) == 2
    assert main(["frobnicate"]) == 2
    assert main([]) == 2


def test_numerical_failure_exit_3(tmp_path, capsys):
    cfg = write_cfg(tmp_path, 'density = "x"\ncutoff = 4\n')
    assert main(["spectrum", "--config", str(cfg), "--out", "o"]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_parse_config_comments_and_quotes():
    cfg = parse_config('density = "2 + x"  # a comment\nbc = n\nquadrature = auto\n')
    assert cfg.density == "2 + x"
    # a quoted hash is kept and reaches the expression parser
    with pytest.raises(ConfigError, match="byte offset 6"):
        parse_config('density = "2 + x #"\n')
    assert [b.value for b in cfg.bc] == ["neumann"]
    assert cfg.quadrature is None
    with pytest.raises(ConfigError):
        parse_config("half_side = -1\n")


def test_weyl_columns(tmp_path):
    assert main(["weyl", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "weyl.csv")
    assert rows[0] == ["N", "E_leading", "E_weylsigma_D", "E_weylsigma_N", "E_conjecture_D", "E_conjecture_N"]
    r100 = next(r for r in rows[1:] if r[0] == "100")
    assert float(r100[1]) == pytest.approx(314.159265, abs=1e-6)
    for r in rows[1:]:
        # the unit square has Lbar / sqrt(Abar) = 4
        assert float(r[4]) == pytest.approx(float(r[2]), rel=1e-12)
        assert float(r[5]) == pytest.approx(float(r[3]), rel=1e-12)
    assert len(rows) - 1 == 200


def test_weyl_cardioid_leading(tmp_path):
    cfg = write_cfg(tmp_path, CARDIOID)
    assert main(["weyl", "--config", str(cfg), "--out", "."]) == 0
    r100 = read_csv(tmp_path / "weyl.csv")[100]
    assert float(r100[1]) == pytest.approx(4 * math.pi * 100 / 1.21205, rel=1e-4)


def test_audit_homogeneous(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "cutoff = 20\n")
    assert main(["audit", "--config", str(cfg), "--out", "a"]) == 0
    out = capsys.readouterr().out
    assert "within bound (2.500 <= 2.539)" in out
    assert "admissible" in out and "NOT" not in out
    rows = read_csv(tmp_path / "a" / "audit.csv")
    assert rows[0] == ["N", "E_D", "E_N", "xi", "delta", "delta_pred_conjecture", "delta_pred_weylsigma"]
    assert len(rows) - 1 == 100
    for r in rows[1:]:
        assert math.isfinite(float(r[3])) and float(r[3]) >= -16


def test_audit_cardioid(tmp_path, capsys):
    cfg = write_cfg(tmp_path, CARDIOID)
    assert main(["audit", "--config", str(cfg), "--out", "."]) == 0
    out = capsys.readouterr().out
    assert "VIOLATES (2.78" in out and "not a conformal density" in out
    assert "isoperimetric" in out


def test_audit_refuses_unreliable_range(tmp_path):
    cfg = write_cfg(tmp_path, "cutoff = 10\nn_max = 50\n")
    assert main(["audit", "--config", str(cfg)]) == 3


def test_perturb_geometric_series(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "density = 1.1\nbc = dirichlet\ncutoff = 8\n")
    assert main(["perturb", "--config", str(cfg), "--state", "1,1"]) == 0
    out = capsys.readouterr().out
    e = math.pi ** 2 / 2
    sums = [float(line.split("partial sum =")[1].split()[0]) for line in out.splitlines() if "partial sum" in line]
    expected = [e * x for x in (1, 0.9, 0.91, 0.909)]
    assert sums == pytest.approx(expected, rel=1e-12)
    resummed = float(out.split("resummed =")[1].split()[0])
    assert resummed == pytest.approx(e / 1.1, rel=1e-12)


def test_perturb_degenerate_state(tmp_path, capsys):
    cfg = write_cfg(tmp_path, 'density = "1 + 0.1*x^2*y^2"\nbc = dirichlet\ncutoff = 10\n')
    assert main(["perturb", "--config", str(cfg), "--state", "1,2"]) == 0
    out = capsys.readouterr().out
    assert "degenerate with [(2, 1)]" in out
    assert "first-order split" in out
    assert "E^(2)" not in out


def test_perturb_smooth_series_improves(tmp_path, capsys):
    cfg = write_cfg(tmp_path, 'density = "1 + 0.05*cos(pi*x/2)*cos(pi*y/2)"\nbc = dirichlet\ncutoff = 20\n')
    assert main(["perturb", "--config", str(cfg), "--state", "1,1"]) == 0
    out = capsys.readouterr().out
    res = [float(line.split("residual =")[1]) for line in out.splitlines() if "partial sum" in line]
    assert res[3] < res[1]


@pytest.mark.parametrize("state", ["0,1", "1", "a,b", "50,1"])
def test_perturb_unknown_state(tmp_path, state):
    cfg = write_cfg(tmp_path, "bc = dirichlet\ncutoff = 10\n")
    assert main(["perturb", "--config", str(cfg), "--state", state]) == 2
    assert main(["perturb", "--config", str(cfg)]) == 2


@pytest.mark.parametrize("command", ["spectrum", "weyl", "audit"])
def test_outputs_are_byte_deterministic(tmp_path, command):
    cfg = write_cfg(tmp_path, 'map = cardioid\ndensity = "1/(1+4*(u^2+v^2))"\ncutoff = 24\n')
    assert main([command, "--config", str(cfg), "--out", "one"]) == 0
    assert main([command, "--config", str(cfg), "--out", "two"]) == 0
    files = sorted(p.name for p in (tmp_path / "one").iterdir())
    assert files
    for name in files:
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()


def test_thread_cap(tmp_path, monkeypatch):
    cfg = write_cfg(tmp_path, "cutoff = 12\n")
    assert main(["spectrum", "--config", str(cfg), "--out", "free"]) == 0
    monkeypatch.setenv("DRUMLAB_THREADS", "1")
    assert main(["spectrum", "--config", str(cfg), "--out", "one"]) == 0
    assert ((tmp_path / "one" / "spectrum_dirichlet.csv").read_bytes()
            == (tmp_path / "free" / "spectrum_dirichlet.csv").read_bytes())
    monkeypatch.setenv("DRUMLAB_THREADS", "lots")
    assert main(["spectrum", "--config", str(cfg)]) == 2
