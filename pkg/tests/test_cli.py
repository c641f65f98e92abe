import json

import pytest

from mkdvfd import cli

BASE = """# short coarse run
problem = two_soliton
scheme = EC10
lambda = 0.04
dx = 0.2
dt = 0.05
T = 0.5   # ten steps
snapshot_stride = 5
"""


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_parse_config_comments_and_defaults():
    cfg = cli.build_config(cli.parse_config_text(BASE))
    assert cfg.scheme.value == "EC10" and cfg.lam == 0.04
    assert (cfg.a, cfg.b, cfg.N) == (-20.0, 20.0, 10)
    assert cfg.newton.tol_residual == 1e-12


@pytest.mark.parametrize("extra,msg", [("colour = red", "unknown key"),
                                       ("scheme = EC8", "duplicate"),
                                       ("just words", "key = value"),
                                       ("newton_tol = tiny", "bad value")])
def test_config_errors(extra, msg):
    with pytest.raises(cli.ConfigError, match=msg):
        cli.build_config(cli.parse_config_text(BASE + extra + "\n"))


@pytest.mark.parametrize("line", ["dx = 0.3", "dt = -1", "scheme = RK4", "problem = kdv",
                                  "T = -1", "newton_max_iters = 0"])
def test_invalid_values_give_config_exit(tmp_path, line, capsys):
    text = "\n".join(l for l in BASE.splitlines() if not l.startswith(line.split()[0] + " "))
    assert cli.main(["run", "--config", write(tmp_path, text + "\n" + line + "\n")]) == 2
    assert "error" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert cli.main(["run", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_run_writes_outputs(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", "--config", write(tmp_path, BASE), "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    for key in ("sol_err", "err1", "err2", "err3", "err_phi1", "err_phi2", "err_phi",
                "preserved_laws", "fallback_used", "wall_time", "newton_iters_mean"):
        assert key in rep
    assert rep["N"] == 10 and rep["preserved_laws"] == [1, 3]
    inv = (out / "invariants.csv").read_text().splitlines()
    assert inv[0] == "step,t,mass_sum,momentum_sum,energy_sum,newton_iters"
    assert len(inv) == 12
    final = (out / "final.csv").read_text().splitlines()
    assert final[0] == "i,x,u,u_exact" and len(final) == 201
    steps = {line.split(",")[0] for line in (out / "snapshots.csv").read_text().splitlines()[1:]}
    assert steps == {"0", "5", "10"}


def test_run_is_deterministic(tmp_path):
    cfg = write(tmp_path, BASE)
    for name in ("a", "b"):
        assert cli.main(["run", "--config", cfg, "--out", str(tmp_path / name)]) == 0
    for f in ("invariants.csv", "final.csv", "snapshots.csv", "config.txt"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    ra = json.loads((tmp_path / "a" / "report.json").read_text())
    rb = json.loads((tmp_path / "b" / "report.json").read_text())
    ra.pop("wall_time"), rb.pop("wall_time")
    assert ra == rb


def test_report_floats_round_trip(tmp_path):
    out = tmp_path / "o"
    cli.main(["run", "--config", write(tmp_path, BASE), "--out", str(out)])
    text = (out / "report.json").read_text()
    rep = json.loads(text)
    assert cli.fmt(rep["sol_err"]) in text


def test_zero_length_run(tmp_path):
    out = tmp_path / "z"
    text = BASE.replace("T = 0.5", "T = 0")
    assert cli.main(["run", "--config", write(tmp_path, text), "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["sol_err"] == 0 and rep["N"] == 0


def test_non_convergence_exit(tmp_path, capsys):
    text = BASE + "newton_max_iters = 1\nnewton_tol = 1e-300\n"
    assert cli.main(["run", "--config", write(tmp_path, text), "--out", str(tmp_path)]) == 3
    assert "step 1" in capsys.readouterr().err


def test_io_error_exit(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert cli.main(["run", "--config", write(tmp_path, BASE), "--out", str(blocker / "x")]) == 4


def test_output_dir_from_config(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert cli.main(["run", "--config", write(tmp_path, BASE + "output_dir = here\n")]) == 0
    assert (tmp_path / "here" / "report.json").exists()


def fake_reports(root, table, skip=()):
    # synthetic reports, only to exercise table assembly
    for k, cfg in enumerate(cli.table_configs(table)):
        if cfg.spec.label() in skip:
            continue
        d = root / cfg.output_dir
        d.mkdir(parents=True)
        rep = {"problem": cfg.problem, "scheme": cfg.scheme.value, "lambda": cfg.lam,
               "label": cfg.spec.label(), "dx": cfg.dx, "dt": cfg.dt, "T": cfg.T,
               "sol_err": 0.01 * (k + 1), "err1": 1e-14, "err2": 0.5, "err3": 2e-13,
               "err_phi1": 0.1, "err_phi2": -0.2, "err_phi": 0.3}
        (d / "report.json").write_text(json.dumps(rep))


def test_table_layout(tmp_path, capsys):
    fake_reports(tmp_path, 2)
    assert cli.main(["table", "--config", str(tmp_path), "--table", "2"]) == 0
    md = (tmp_path / "table2.md").read_text().splitlines()
    assert md[0] == "| Method | Err1 | Err2 | Err3 | Sol. Err. | Errphi1 | Errphi2 | Errphi |"
    assert len(md) == 2 + 13
    assert md[2].startswith("| EC8(0) | 1.00e-14 | 0.5000 | 2.00e-13 | 0.0100 | 0.10 |")
    rows = (tmp_path / "table2.csv").read_text().splitlines()
    assert rows[0].startswith("Method,Err1") and len(rows) == 14
    assert "| Multisymplectic |" in capsys.readouterr().out


def test_breather_table_has_no_phase_columns(tmp_path):
    fake_reports(tmp_path, 3)
    assert cli.main(["table", "--config", str(tmp_path), "--table", "3"]) == 0
    assert "Errphi" not in (tmp_path / "table3.md").read_text()


def test_table_lists_missing_runs(tmp_path, capsys):
    fake_reports(tmp_path, 1, skip={"MC8(-0.077)", "NarrowBox"})
    assert cli.main(["table", "--config", str(tmp_path), "--table", "1"]) == 2
    err = capsys.readouterr().err
    assert "MC8(-0.077)" in err and "NarrowBox" in err and "EC8(1)" not in err


def test_unknown_table(tmp_path):
    assert cli.main(["table", "--config", str(tmp_path), "--table", "7"]) == 2


def test_sweep_needs_three_samples(capsys):
    assert cli.main(["sweep", "--family", "EC10", "--samples", "2"]) == 2
    assert "3 samples" in capsys.readouterr().err


def test_sweep_rejects_baseline():
    assert cli.main(["sweep", "--family", "NarrowBox"]) == 2


def test_verify_passes(capsys):
    assert cli.main(["verify", "--trials", "3"]) == 0
    assert "all checks passed" in capsys.readouterr().out


def test_usage_error():
    assert cli.main(["frobnicate"]) == 2
