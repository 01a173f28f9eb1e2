import json
import re
import os

import numpy as np
import pytest
from hypothesis import given, strategies as st

import importlib

cli_main = importlib.import_module("becdephase.cli.main")
from becdephase.cli.config import (FIGURES, ConfigError, TimeGrid, build_config, figure_preset,
                                   parse_quantity, parse_text)
from becdephase.cli.experiments import onset_time
from becdephase.cli.output import read_csv
from becdephase.params import BOHR, standard_3d

FAST = ["--override", "n_log=5", "--override", "n_lin=12"]


def run(*args):
    return cli_main.main([str(a) for a in args])


# -- configuration ---------------------------------------------------------------

@pytest.mark.parametrize("text,value", [("55 a0", 55 * BOHR), ("0.5ms", 5e-4), ("2 us", 2e-6),
                                        ("300nm", 3e-7), ("10 nK", 1e-8), ("1e20", 1e20)])
def test_quantities(text, value):
    assert parse_quantity(text, "x") == pytest.approx(value, rel=1e-15)


def test_L_multiples_use_final_L():
    cfg = build_config({"kind": "gamma-pair", "L": "100nm", "D": "3L", "separations": "8L"})
    assert cfg.params.D == pytest.approx(3e-7) and cfg.separations == pytest.approx((8e-7,))


def test_config_file_format():
    raw = parse_text("# comment\nkind = delta   # trailing\n\nT = 20 nK\n")
    assert raw == {"kind": "delta", "T": "20 nK"}
    with pytest.raises(ConfigError, match="line 2"):
        parse_text("kind = delta\nno equals sign\n")


@pytest.mark.parametrize("name", sorted(FIGURES))
def test_presets_roundtrip_through_text(name):
    cfg = build_config({}, figure_preset(name))
    again = build_config(parse_text(cfg.to_text()))
    assert again == cfg


@pytest.mark.parametrize("raw,field", [
    ({"kind": "delta", "n_lin": "0"}, "n_lin"),
    ({"kind": "delta", "t_max": "0"}, "t_max"),
    ({"kind": "nonsense"}, "kind"),
    ({"kind": "delta", "bogus": "1"}, "bogus"),
    ({"kind": "delta", "a_AB": "5 furlongs"}, "a_AB"),
    ({"kind": "delta", "D": "0.5L"}, "D"),
    ({"kind": "delta", "n0": "-1"}, "n0"),
    ({"kind": "delta", "baths": "vacuum"}, "baths"),
    ({"kind": "delta", "preset": "standard-9d"}, "preset"),
])
def test_invalid_configs_name_the_field(raw, field):
    with pytest.raises(ConfigError) as err:
        build_config(raw)
    assert err.value.field == field


@given(st.floats(1e-7, 1e-2), st.integers(0, 30), st.integers(2, 300))
def test_time_grid_strictly_increasing(t_max, n_log, n_lin):
    if t_max <= 1e-6:
        with pytest.raises(ConfigError):
            TimeGrid(t_max=t_max, n_log=n_log, n_lin=n_lin).times()
        return
    grid = TimeGrid(t_max=t_max, n_log=n_log, n_lin=n_lin).times()
    assert grid[0] == 0.0 and grid[-1] == pytest.approx(t_max) and np.all(np.diff(grid) > 0)


def test_onset_time():
    t = np.array([0.0, 1.0, 2.0, 3.0])
    assert onset_time(t, [0, 0.01, 0.5, 1.0], [0, 1, 1, 1], 0.02) == 2.0
    assert onset_time(t, [0, 0, 0, 0], [0, 1, 1, 1], 0.02) is None


# -- run ---------------------------------------------------------------------------

def test_empty_time_grid_exits_2(tmp_path, capsys):
    assert run("run", "--preset", "fig2", "--out", tmp_path, "--override", "n_lin=0") == 2
    assert "n_lin" in capsys.readouterr().err


def test_missing_config_file_exits_2(tmp_path):
    assert run("run", "--config", tmp_path / "missing.cfg", "--out", tmp_path) == 2


def test_unwritable_output_exits_2(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run("run", "--preset", "fig2", "--out", blocker / "sub", *FAST) == 2


def test_numerical_failure_exits_3(tmp_path, capsys, monkeypatch):
    from becdephase.cli import experiments
    from becdephase.quadrature import QuadratureError

    def broken(*a, **k):
        raise QuadratureError("did not converge")

    monkeypatch.setattr(experiments, "pair_curves", broken)
    assert run("run", "--preset", "fig3", "--out", tmp_path, *FAST) == 3
    assert "pair_condensate" in capsys.readouterr().err


def test_run_writes_all_artifacts(tmp_path):
    assert run("run", "--preset", "fig3", "--out", tmp_path, *FAST) == 0
    names = sorted(p.name for p in (tmp_path / "curves").iterdir())
    assert names == sorted(f"{k}_{b}.csv" for k in ("Gamma1", "Gamma2", "2Gamma0", "delta")
                           for b in ("condensate", "free"))
    header, data = read_csv(tmp_path / "curves" / "Gamma1_condensate.csv")
    assert header == ["t_seconds", "value", "abs_error_estimate"]
    svg = (tmp_path / "fig3.svg").read_text()
    assert svg.startswith("<?xml") and "<image " not in svg
    # self-contained: no links to external resources (namespace URIs are fine)
    assert not re.search(r'(xlink:)?href="(?!#)', svg)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    for key in ("params_si", "params_reduced", "scales", "code_version", "curves", "wall_clock_seconds",
                "mean_field_shift_J", "config"):
        assert key in manifest
    results = json.loads((tmp_path / "results.json").read_text())
    assert np.allclose(results["curves"]["Gamma1_condensate"]["values"], data[:, 1], rtol=0, atol=0)


def test_csv_error_column_within_tolerance(tmp_path):
    assert run("run", "--preset", "fig3", "--out", tmp_path, *FAST) == 0
    for path in (tmp_path / "curves").glob("*Gamma*.csv"):
        _, data = read_csv(path)
        assert np.all(data[:, 2] <= 1e-9 * np.abs(data[:, 1])), path.name


def test_manifest_reproduces_run(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("run", "--preset", "fig2", "--out", a, *FAST, "--override", "T=5nK") == 0
    cfg = a / "config.txt"
    assert run("run", "--config", cfg, "--out", b) == 0
    for name in ("results.json", "fig2.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_threads_do_not_change_output(tmp_path, monkeypatch):
    assert run("run", "--preset", "fig4", "--out", tmp_path / "one", *FAST, "--threads", 1) == 0
    monkeypatch.setenv("BECDEPHASE_THREADS", "3")
    assert run("run", "--preset", "fig4", "--out", tmp_path / "env", *FAST) == 0
    for name in ("results.json", "fig4.svg"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "env" / name).read_bytes()


def test_fig5_distances_flag(tmp_path):
    assert run("run", "--preset", "fig5", "--distances", "8L,40L", "--out", tmp_path, *FAST,
               "--override", "baths=condensate") == 0
    names = {p.stem for p in (tmp_path / "curves").iterdir()}
    assert {"Gamma1_condensate_2D8L", "Gamma2_condensate_2D40L", "2Gamma0_condensate"} <= names


@pytest.mark.parametrize("preset", ["fig6", "spectral", "densmat"])
def test_other_presets_run(preset, tmp_path):
    assert run("run", "--preset", preset, "--out", tmp_path, "--override", "n_lin=6",
               "--override", "n_log=0" if preset != "spectral" else "n_omega=20") == 0
    assert (tmp_path / f"{preset}.svg").exists()


def test_log_x_plot(tmp_path):
    assert run("run", "--preset", "fig2", "--out", tmp_path, *FAST, "--log-x") == 0
    assert "log_x = true" in (tmp_path / "config.txt").read_text()


def test_presets_command(capsys):
    assert run("presets") == 0
    assert "fig5" in capsys.readouterr().out
    assert run("presets", "fig2") == 0
    assert "kind = gamma0-compare" in capsys.readouterr().out


# -- sweep -------------------------------------------------------------------------

def test_sweep_T_zero_matches_plain_run(tmp_path):
    assert run("run", "--preset", "fig2", "--out", tmp_path / "plain", *FAST) == 0
    assert run("sweep", "--preset", "fig2", "--axis", "T", "--values", "0", "--out", tmp_path / "sw", *FAST) == 0
    for name in ("results.json", "fig2.svg", "curves/Gamma0_free.csv"):
        assert (tmp_path / "plain" / name).read_bytes() == (tmp_path / "sw" / "point_00" / name).read_bytes()


def test_sweep_coupling_scales_plateau(tmp_path):
    assert run("sweep", "--preset", "fig2", "--axis", "a_AB", "--values", "27.5a0,55a0", "--out", tmp_path,
               *FAST, "--no-plots") == 0
    doc = json.loads((tmp_path / "summary.json").read_text())
    p0, p1 = (pt["summary"]["plateau"]["Gamma0_condensate"] for pt in doc["points"])
    assert p1 / p0 == pytest.approx(4.0, rel=1e-12)
    rows = (tmp_path / "summary.csv").read_text().splitlines()
    assert rows[0] == "point,a_AB,quantity,value" and len(rows) > 2


def test_sweep_onset_increases_with_distance(tmp_path):
    assert run("sweep", "--preset", "fig4", "--axis", "D", "--values", "2L,4L,8L", "--out", tmp_path,
               "--override", "baths=condensate", "--override", "n_lin=120", "--override", "n_log=0",
               "--no-plots") == 0
    doc = json.loads((tmp_path / "summary.json").read_text())
    onsets = [pt["summary"]["onset_seconds"]["condensate"] for pt in doc["points"]]
    assert all(o is not None for o in onsets) and onsets == sorted(onsets) and len(set(onsets)) == 3


def test_sweep_rejects_bad_axis_values(tmp_path):
    assert run("sweep", "--preset", "fig2", "--axis", "D", "--values", "0.1L", "--out", tmp_path) == 2
    assert run("sweep", "--preset", "fig2", "--axis", "D", "--values", " ", "--out", tmp_path) == 2
