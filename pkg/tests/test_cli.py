"""
Tests de la ligne de commande
"""
import pytest

from app.cli.commands import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_OK, run
from app.cli.dependencies import get_droop
from app.main import main
from app.storage import files

UNIT_DISK_CURVES = "[curve]\nvac_pu = 1.0\nvdc_pu = 1.0\ndisk = 0 0 1\n"


@pytest.fixture
def unit_disk_file(tmp_path):
    path = tmp_path / "disk.conf"
    path.write_text(UNIT_DISK_CURVES, encoding="utf-8")
    return path


@pytest.fixture
def trace_file(tmp_path):
    path = tmp_path / "trace.csv"
    assert run(["gen-trace", "--seed", "42", "--duration-s", "15", "--out", str(path)]) == EXIT_OK
    return path


def output_fields(capsys):
    return capsys.readouterr().out.strip().split(",")


def test_gen_trace(trace_file):
    trace = files.read_trace(trace_file)
    assert len(trace.samples) == 150
    assert trace.dt == 0.1


def test_project_onto_unit_disk(config_path, unit_disk_file, capsys):
    code = run([
        "project", "--config", str(config_path), "--curves", str(unit_disk_file),
        "--p0", "1.2", "--q0", "0", "--method", "opt",
    ])
    p, q, tight, status = output_fields(capsys)
    assert code == EXIT_OK
    assert float(p) == pytest.approx(1.0, abs=1e-9)
    assert float(q) == pytest.approx(0.0, abs=1e-9)
    assert (tight, status) == ("true", "feasible")


def test_project_with_shipped_curves(config_path, capsys):
    code = run(["project", "--config", str(config_path), "--p0", "1.2", "--q0", "0"])
    p, _, _, status = output_fields(capsys)
    assert code == EXIT_OK
    assert float(p) == pytest.approx(0.95, abs=1e-9)
    assert status == "feasible"


def test_fast_projection_passthrough(config_path, capsys):
    code = run(["project", "--config", str(config_path), "--p0", "0.3", "--q0", "0.2", "--method", "fast"])
    assert code == EXIT_OK
    assert output_fields(capsys) == ["0.3", "0.2", "true", "passthrough"]


def test_fast_projection_clips(config_path, unit_disk_file, capsys):
    code = run([
        "project", "--config", str(config_path), "--curves", str(unit_disk_file),
        "--p0", "-0.9", "--q0", "-0.9", "--method", "fast",
    ])
    p, q, _, status = output_fields(capsys)
    assert code == EXIT_OK
    assert float(p) == pytest.approx(-0.7071, abs=1e-4)
    assert float(q) == pytest.approx(-0.7071, abs=1e-4)
    assert status == "feasible"


def test_project_without_operating_point(config_path, unit_disk_file, tmp_path, capsys):
    # Tension à vide au-dessus de la borne haute : aucun point de fonctionnement
    text = config_path.read_text(encoding="utf-8").replace(
        "vdc_max_pu = 1.1428571428571428", "vdc_max_pu = 0.9"
    )
    narrow = tmp_path / "narrow.conf"
    narrow.write_text(text, encoding="utf-8")
    code = run(["project", "--config", str(narrow), "--curves", str(unit_disk_file), "--p0", "0.5", "--q0", "0"])
    assert code == EXIT_INFEASIBLE
    assert "infaisable" in capsys.readouterr().err


def test_missing_required_argument(capsys):
    assert run(["simulate"]) == EXIT_CONFIG
    assert "--trace" in capsys.readouterr().err


def test_unknown_command():
    assert run(["optimise"]) == EXIT_CONFIG


def test_missing_config_file(tmp_path, capsys):
    code = run(["project", "--config", str(tmp_path / "absent.conf"), "--p0", "0", "--q0", "0"])
    assert code == EXIT_CONFIG
    assert "erreur de configuration" in capsys.readouterr().err


def test_invalid_config_value(config_path, tmp_path, capsys):
    bad = tmp_path / "bad.conf"
    bad.write_text(config_path.read_text(encoding="utf-8").replace("eta = 0.95", "eta = 0"), encoding="utf-8")
    code = run(["project", "--config", str(bad), "--curves", str(config_path.parent / "curves.conf"),
                "--p0", "0", "--q0", "0"])
    assert code == EXIT_CONFIG
    assert "control.eta" in capsys.readouterr().err


def test_simulate_then_recompute_metrics(config_path, trace_file, tmp_path, capsys):
    log_path, metrics_path = tmp_path / "log.csv", tmp_path / "metrics.csv"
    code = run([
        "simulate", "--config", str(config_path), "--trace", str(trace_file),
        "--method", "fast", "--log", str(log_path), "--metrics", str(metrics_path),
    ])
    assert code == EXIT_OK
    capsys.readouterr()

    assert run(["metrics", "--config", str(config_path), "--log", str(log_path)]) == EXIT_OK
    printed = [float(x) for x in output_fields(capsys)]
    metrics = files.read_metrics(metrics_path)
    assert printed == [metrics.tde, metrics.tce, metrics.tse]


def test_alpha_override(config_path, trace_file, tmp_path):
    default_log, steep_log = tmp_path / "default.csv", tmp_path / "steep.csv"
    base = ["simulate", "--config", str(config_path), "--trace", str(trace_file), "--method", "baseline"]
    assert run(base + ["--log", str(default_log)]) == EXIT_OK
    assert run(base + ["--log", str(steep_log), "--alpha", "-11"]) == EXIT_OK
    default_p0 = files.read_tick_log(default_log)["p0_pu"]
    steep_p0 = files.read_tick_log(steep_log)["p0_pu"]
    for a, b in zip(default_p0, steep_p0):
        assert b == pytest.approx(a * 11.0 / 8.0, rel=1e-12, abs=1e-15)


def test_discretize(config_path, tmp_path):
    out = tmp_path / "table.csv"
    assert run(["discretize", "--config", str(config_path), "--soc", "0.5", "--out", str(out)]) == EXIT_OK
    table = files.read_table(out)
    assert len(table.smax) == 360
    assert table.entry(360.0) == pytest.approx(0.95, abs=1e-12)


def test_bench(config_path, trace_file, tmp_path):
    out = tmp_path / "bench"
    assert run(["bench", "--config", str(config_path), "--trace", str(trace_file), "--out", str(out)]) == EXIT_OK
    assert sorted(p.name for p in out.iterdir()) == ["latency_fast.csv", "latency_opt.csv", "latency_summary.csv"]


def test_main_entry_point(config_path, capsys):
    assert main(["project", "--config", str(config_path), "--p0", "0.3", "--q0", "0.2"]) == EXIT_OK
    assert output_fields(capsys)[-1] == "passthrough"


def test_droop_from_observed_limits(config_path, trace_file, tmp_path):
    # alpha = -0.72 MW / 0.125 Hz, beta = -720 kVar / 60 V
    default_log, derived_log = tmp_path / "default.csv", tmp_path / "derived.csv"
    base = ["simulate", "--config", str(config_path), "--trace", str(trace_file), "--method", "baseline"]
    assert run(base + ["--log", str(default_log)]) == EXIT_OK
    assert run(base + ["--log", str(derived_log), "--df-max", "0.125", "--dv-max", "60"]) == EXIT_OK
    default, derived = files.read_tick_log(default_log), files.read_tick_log(derived_log)
    for a, b in zip(default["p0_pu"], derived["p0_pu"]):
        assert b == pytest.approx(a * 5.76 / 8.0, rel=1e-12, abs=1e-15)
    for a, b in zip(default["q0_pu"], derived["q0_pu"]):
        assert b == pytest.approx(a * 12.0 / 8.39, rel=1e-12, abs=1e-15)


def test_alpha_takes_precedence_over_limits(config):
    tuned = get_droop(config, alpha=-11.0, df_max=0.125, dv_max=60.0)
    assert tuned.droop.alpha == -11.0
    assert tuned.droop.beta == pytest.approx(-12.0, rel=1e-12)
    assert config.droop.alpha == -8.0


def test_droop_limits_need_both_deviations(config_path, trace_file, capsys):
    code = run([
        "simulate", "--config", str(config_path), "--trace", str(trace_file),
        "--method", "baseline", "--df-max", "0.125",
    ])
    assert code == EXIT_CONFIG
    assert "--dv-max" in capsys.readouterr().err


def test_droop_limits_must_be_positive(config):
    with pytest.raises(ValueError):
        get_droop(config, df_max=0.0, dv_max=60.0)
