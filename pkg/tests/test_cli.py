import subprocess
import sys

import pytest

from fblec import cli
from fblec.effcap import QosDerived
from fblec.errors import ConfigError


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_ec_prints_one_row(capsys):
    code, out, _ = run(["ec", "--user", "oma-strong", "--method", "closed-form", "--rho-db", "20",
                        "--theta", "0.01"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 1
    fields = lines[0].split(",")
    assert fields[:4] == ["oma", "strong", "closed_form", "20"]
    assert float(fields[10]) > 0


def test_ec_header_flag(capsys):
    code, out, _ = run(["ec", "--header", "--method", "quadrature"], capsys)
    assert code == 0
    assert out.splitlines()[0] == ",".join(cli.sw.CSV_COLUMNS)


def test_ec_bad_epsilon_is_usage_error(capsys):
    code, _, err = run(["ec", "--epsilon", "1.5"], capsys)
    assert code == 2
    assert "epsilon" in err


def test_bad_flag_value_is_usage_error():
    with pytest.raises(SystemExit) as info:
        cli.main(["ec", "--theta", "abc"])
    assert info.value.code == 2


def test_ec_numeric_failure_exit_one(capsys):
    code, _, err = run(["ec", "--user", "multiuser", "--method", "closed_form"], capsys)
    assert code == 1
    assert "DomainError" in err


def test_ec_monte_carlo_deterministic(capsys):
    argv = ["ec", "--user", "noma-weak", "--method", "monte-carlo", "--seed", "12", "--samples", "20000"]
    _, first, _ = run(argv, capsys)
    _, second, _ = run(argv, capsys)
    _, other, _ = run(argv[:-3] + ["13", "--samples", "20000"], capsys)
    assert first == second
    assert first != other


def test_seed_environment_default(capsys, monkeypatch):
    argv = ["ec", "--method", "monte_carlo", "--samples", "5000"]
    monkeypatch.setenv(cli.SEED_ENV, "77")
    _, from_env, _ = run(argv, capsys)
    _, from_flag, _ = run(argv + ["--seed", "77"], capsys)
    monkeypatch.delenv(cli.SEED_ENV)
    _, default, _ = run(argv, capsys)
    assert from_env == from_flag != default


def test_three_layer_precedence(tmp_path, monkeypatch):
    monkeypatch.delenv(cli.SEED_ENV, raising=False)
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# file layer\ntheta = 0.02\nrho_db = 5\nseed = 4\n")
    args = cli.build_parser().parse_args(["ec", "--config", str(cfg), "--rho-db", "10"])
    merged = cli.resolve(args)
    assert merged["rho_db"] == 10.0      # flag beats file
    assert merged["theta"] == 0.02       # file beats default
    assert merged["seed"] == 4
    assert merged["epsilon"] == 1e-6     # default survives


def test_every_flag_has_a_config_key():
    parser = cli.build_parser()
    sub = parser._subparsers._group_actions[0].choices
    for p in sub.values():
        for action in p._actions:
            if action.dest in ("help", "config", "header"):
                continue
            assert action.dest in cli.SETTINGS


def test_csv_columns_are_config_keys():
    for column in cli.sw.CSV_COLUMNS:
        if column in ("ec", "std_err", "diag"):
            continue
        assert column in cli.SETTINGS


@pytest.mark.parametrize(
    "text,line",
    [
        ("theta = 0.01\nrho_db =\n", 2),
        ("theta = 0.01\n\n# note\nrho_db\n", 4),
        ("colour = red\n", 1),
        ("theta = fast\n", 1),
    ],
)
def test_config_parse_errors_name_line(text, line):
    with pytest.raises(ConfigError, match=f":{line}:"):
        cli.parse_config_text(text, "x.cfg")


def test_truncated_config_exit_code(tmp_path, capsys):
    cfg = tmp_path / "cut.cfg"
    cfg.write_text("theta = 0.01\nalpha1 = 0.3\nalpha2 =")
    code, _, err = run(["sweep", "--config", str(cfg), "--preset", "fig1"], capsys)
    assert code == 2
    assert "cut.cfg:3" in err


def test_sweep_fig1_csv(tmp_path, capsys):
    out = tmp_path / "fig1.csv"
    code, _, _ = run(["sweep", "--preset", "fig1", "--samples", "2000", "--out", str(out)], capsys)
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 73
    assert lines[0] == "scheme,user,method,rho_db,theta,epsilon,blocklength,alpha1,alpha2,num_pairs,ec,std_err,diag"


def test_sweep_byte_identical(tmp_path, capsys):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        run(["sweep", "--preset", "fig4", "--samples", "3000", "--seed", "5", "--out", str(p)], capsys)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_sweep_file_settings_reach_sweep(tmp_path, capsys):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("axis = rho_db\ngrid = 0,10\nusers = noma_strong\nmethods = quadrature\nepsilon = 1e-5\n")
    code, out, _ = run(["sweep", "--config", str(cfg), "--blocklength", "200"], capsys)
    assert code == 0
    rows = out.splitlines()[1:]
    assert len(rows) == 2
    assert all(r.split(",")[5:7] == ["1e-05", "200"] for r in rows)


def test_sweep_emit_plot(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code, _, _ = run(["sweep", "--preset", "fig2", "--emit-plot", "--samples", "2000"], capsys)
    assert code == 0
    script = (tmp_path / "fig2_plot.py").read_text()
    assert "fig2.csv" in script
    assert "fblec" not in script
    done = subprocess.run([sys.executable, "fig2_plot.py"], cwd=tmp_path, capture_output=True)
    assert done.returncode == 0, done.stderr
    assert (tmp_path / "fig2.png").exists()


def test_sweep_unwritable_path(capsys):
    code, _, err = run(["sweep", "--preset", "fig1", "--samples", "1000", "--out", "/nonexistent/dir/x.csv"],
                       capsys)
    assert code == 1
    assert "I/O error" in err


def test_sweep_needs_grid(capsys):
    code, _, _ = run(["sweep", "--axis", "rho_db"], capsys)
    assert code == 2


def test_validate_passes(capsys):
    code, out, _ = run(["validate", "--samples", "100000"], capsys)
    assert code == 0, out
    assert "FAIL" not in out
    assert "argument 2/rho" in out


def test_validate_strict_profile(capsys):
    checks = cli.closed_form_checks(cli.PROFILES["strict"], rho_grid=(0.0, 20.0), theta_grid=(0.01,))
    strong = [c for c in checks if "strong" in c.name]
    assert all(c.limit == 1e-8 and c.passed for c in strong)


def test_validate_detects_psi_sign_error(capsys, monkeypatch):
    original = QosDerived.from_configs.__func__

    def flipped(cls, qos, link):
        d = original(cls, qos, link)
        return cls(upsilon=d.upsilon, psi=-d.psi)

    monkeypatch.setattr(QosDerived, "from_configs", classmethod(flipped))
    code, out, _ = run(["validate", "--samples", "5000"], capsys)
    assert code == 1
    assert "FAIL closed_form vs quadrature noma_strong" in out
    assert "failed: closed_form vs quadrature noma_strong [rho_db=" in out


def test_console_script_usage_error():
    done = subprocess.run([sys.executable, "-m", "fblec.cli", "ec", "--epsilon", "1.5"], capture_output=True)
    assert done.returncode == 2
