import json
import math

import pytest

from risfso import cli
from risfso.cli import ConfigError, Output, SweepVariable


def write(tmp_path, tree, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(tree))
    return str(p)


BASE = {"system": {"K": 2, "N": 2, "gamma_rd_db": 25.0},
        "sweep": {"variable": "gamma_ur_db", "start_db": 0, "stop_db": 20, "step_db": 10}}


def test_db_conversion():
    assert cli.db_to_linear(30.0) == pytest.approx(1000.0)
    cfg = cli.sweep_from_dict(BASE)
    assert cfg.base.fso.gamma_bar_rd == pytest.approx(10 ** 2.5)
    assert cfg.points_db() == [0.0, 10.0, 20.0]


@pytest.mark.parametrize("tree, field", [
    ({"system": {"gamma_ur": 10}}, "system.gamma_ur"),
    ({"system": {"K": 0}}, "system"),
    ({"system": {"N": 1.5}}, "system.N"),
    ({"sweep": {"start_db": 10, "stop_db": 0, "step_db": 1}}, "sweep.start_db"),
    ({"sweep": {"start_db": 0, "stop_db": 10, "step_db": 0}}, "sweep.step_db"),
    ({"sweep": {"start_db": 0, "stop_db": 10}}, "sweep.step_db"),
    ({"sweep": {"variable": "x", "start_db": 0, "stop_db": 10, "step_db": 1}}, "sweep.variable"),
    ({"outputs": ["nope"]}, "outputs"),
    ({"mc": {"combiner": "avg"}}, "mc.combiner"),
    ({"mc": {"trials": 0}}, "mc.trials"),
    ({"extra": 1}, "config.extra"),
])
def test_config_errors_name_the_field(tree, field):
    with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
        cli.sweep_from_dict(tree)


def test_unit_hint_for_missing_suffix():
    with pytest.raises(ConfigError, match="gamma_rd_db"):
        cli.sweep_from_dict({"system": {"gamma_rd": 10}})


def test_three_point_sweep_monotone():
    rows = cli.run_sweep(cli.sweep_from_dict(BASE))
    assert len(rows) == 3
    out = [r["outage_analytic"] for r in rows]
    assert out[0] >= out[1] >= out[2]
    assert all(r["error"] == "" for r in rows)


def test_rows_ordered_under_parallel_evaluation():
    cfg = cli.sweep_from_dict({**BASE, "outputs": ["outage_analytic", "outage_mc"],
                               "mc": {"trials": 20000, "seed": 3}})
    serial = cli.run_sweep(cfg, workers=1)
    parallel = cli.run_sweep(cfg, workers=4)
    assert serial == parallel
    assert [r["snr_db"] for r in parallel] == [0.0, 10.0, 20.0]


def test_per_point_errors_recorded(monkeypatch):
    cfg = cli.sweep_from_dict(BASE)
    real = cli.analytics.outage

    def flaky(params):
        if params.rf.gamma_bar_ur > 5:
            raise ArithmeticError("boom")
        return real(params)

    monkeypatch.setattr(cli.analytics, "outage", flaky)
    rows = cli.run_sweep(cfg)
    assert rows[0]["error"] == ""
    assert rows[1]["error"].startswith("ArithmeticError")
    assert rows[1]["outage_analytic"] is None


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_round_trip(tmp_path, fmt):
    cfg = cli.sweep_from_dict({**BASE, "outputs": [o.value for o in Output],
                               "mc": {"trials": 20000, "seed": 8}})
    rows = cli.run_sweep(cfg)
    meta = cli.result_meta([cfg], cfg.mc.seed)
    path = str(tmp_path / f"out.{fmt}")
    cli.emit(rows, meta, path, fmt)
    meta2, rows2 = cli.read_results(path)
    assert rows2 == rows
    assert meta2["config_sha256"] == meta["config_sha256"]
    assert meta2["seed"] == 8


def test_csv_header_block(tmp_path):
    path = write(tmp_path, BASE)
    out = tmp_path / "o.csv"
    assert cli.main(["outage", "--config", path, "--out", str(out), "--seed", "17"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == f"# version: {cli.__version__}"
    assert lines[1].startswith("# config_sha256: ") and len(lines[1].split()[-1]) == 64
    assert lines[2] == "# seed: 17"


def test_config_hash_changes_with_config():
    a = cli.sweep_from_dict(BASE)
    b = cli.sweep_from_dict({**BASE, "system": {"K": 3}})
    assert cli.config_hash([a]) != cli.config_hash([b])
    assert cli.config_hash([a]) == cli.config_hash([cli.sweep_from_dict(BASE)])


def test_point_seeds_distinct_and_stable():
    s = {cli.point_seed(1, c, p) for c in range(3) for p in range(10)}
    assert len(s) == 30
    assert cli.point_seed(1, 0, 0) == cli.point_seed(1, 0, 0)


def test_main_exit_codes(tmp_path, capsys):
    bad = write(tmp_path, {"system": {"gamma_ur": 1}})
    assert cli.main(["outage", "--config", bad]) == 2
    assert "gamma_ur" in capsys.readouterr().err


def test_main_json_output(tmp_path):
    path = write(tmp_path, BASE)
    out = tmp_path / "o.json"
    assert cli.main(["asep", "--config", path, "--out", str(out), "--format", "json"]) == 0
    tree = json.loads(out.read_text())
    assert [r["snr_db"] for r in tree["rows"]] == [0.0, 10.0, 20.0]
    assert all(0 < r["asep_analytic"] <= 0.5 for r in tree["rows"])


def test_cli_flags_override_config(tmp_path):
    tree = {**BASE, "outputs": ["outage_mc"], "mc": {"trials": 1000, "seed": 1}}
    path = write(tmp_path, tree)
    out = tmp_path / "o.csv"
    cli.main(["outage", "--config", path, "--out", str(out), "--trials", "3000",
              "--seed", "9", "--combiner", "harmonic", "--workers", "2"])
    meta, rows = cli.read_results(str(out))
    assert meta["seed"] == 9
    assert all(r["outage_mc_trials"] == 3000 for r in rows)


def test_report_asymptote_examples(capsys):
    p = cli.system_from_dict({"K": 2, "N": 4, "alpha": 5, "beta": 3, "zeta2": 10, "r": 1})
    info = cli.report_asymptote(p, stream=None)
    assert info["diversity_order"] == 3 and info["dominant_hop"] == "FSO"
    big = {"alpha": 40, "beta": 40, "zeta2": 40}
    info = cli.report_asymptote(cli.system_from_dict({"K": 1, "N": 1, **big}))
    assert info["diversity_order"] == 1 and info["dominant_hop"] == "RF"
    g12 = cli.report_asymptote(cli.system_from_dict({"K": 1, "N": 2, **big}))["rf_coding_gain"]
    g21 = cli.report_asymptote(cli.system_from_dict({"K": 2, "N": 1, **big}))["rf_coding_gain"]
    assert g12 / g21 == pytest.approx((1 + math.pi / 4) * math.sqrt(2), rel=1e-12)
    tie = cli.system_from_dict({"K": 1, "N": 2, "alpha": 4, "beta": 4, "zeta2": 2})
    cli.report_asymptote(tie, stream=__import__("sys").stdout)
    assert "TIE" in capsys.readouterr().out


def test_asymptote_command(tmp_path, capsys):
    path = write(tmp_path, {"system": {"K": 2, "N": 4, "alpha": 5, "beta": 3, "zeta2": 10}})
    assert cli.main(["asymptote", "--config", path]) == 0
    out = capsys.readouterr().out
    assert "diversity order G_d   3" in out and "FSO" in out


def test_fig3_ordering():
    cfgs = [c for c in cli.figure_preset(3) if c.label in ("K=2,N=1", "K=1,N=2")]
    cfgs = [cli.replace(c, outputs=frozenset({Output.OUTAGE_ANALYTIC}), range_db=(5.0, 20.0, 5.0))
            for c in cfgs]
    rows = cli.run_curves(cfgs)
    by = {}
    for r in rows:
        by.setdefault(r["curve"], []).append(r["outage_analytic"])
    assert all(a < b for a, b in zip(by["K=1,N=2"], by["K=2,N=1"]))


def test_fig5_modulation_ordering():
    cfgs = [cli.replace(c, outputs=frozenset({Output.ASEP_ANALYTIC}), range_db=(0.0, 20.0, 10.0))
            for c in cli.figure_preset(5) if c.label.startswith("K=1")]
    rows = cli.run_curves(cfgs)
    b1 = [r["asep_analytic"] for r in rows if r["curve"].endswith("b=1.0")]
    b05 = [r["asep_analytic"] for r in rows if r["curve"].endswith("b=0.5")]
    # a smaller b scales the SNR down inside Q(.), so that column sits above
    assert len(b1) == len(b05) == 3
    assert all(x > y for x, y in zip(b05, b1))


def test_figure_presets_label_defaults():
    for n in range(1, 6):
        cfgs = cli.figure_preset(n)
        assert cfgs and all(c.label for c in cfgs)
        assert all(c.mc.adaptive for c in cfgs)
    assert cli.FIGURE_DEFAULTS == dict(alpha=4.2, beta=1.4, zeta2=1.1, r=1)
    with pytest.raises(ConfigError):
        cli.figure_preset(6)


def test_adaptive_trials_rule():
    mc = cli.McSettings(trials=1000, adaptive=True)
    assert cli._mc_trials(mc, 0.5) == 1000
    assert cli._mc_trials(mc, 1e-5) == 20_000_000
    assert cli._mc_trials(mc, 1e-6) is None
    assert cli._mc_trials(cli.McSettings(trials=7), 1e-9) == 7


def test_fig_command_without_mc(tmp_path):
    out = tmp_path / "f.csv"
    assert cli.main(["fig", "2", "--no-mc", "--out", str(out)]) == 0
    meta, rows = cli.read_results(str(out))
    assert {r["curve"] for r in rows} == {"K=1,N=1", "K=1,N=2", "K=1,N=3"}
    assert "outage_mc" not in rows[0]


def test_fig_rows_never_low_count(tmp_path):
    # adaptive budgets keep every emitted MC row above the event guard
    cfgs = [cli.replace(c, range_db=(10.0, 20.0, 10.0)) for c in cli.figure_preset(2)[:2]]
    rows = cli.run_curves(cfgs)
    assert all(r["outage_mc_low_count"] == 0 for r in rows if r["outage_mc"] is not None)


def test_validate_quick(tmp_path):
    out = tmp_path / "v.csv"
    assert cli.main(["validate", "--quick", "--out", str(out)]) == 0
    _, rows = cli.read_results(str(out))
    assert rows and all(r["passed"] == 1 for r in rows)


def test_sweep_variables():
    cfg = cli.sweep_from_dict({**BASE, "sweep": {"variable": "both_db", "start_db": 0,
                                                 "stop_db": 10, "step_db": 10}})
    assert cfg.sweep_variable is SweepVariable.BOTH_DB
    p = cfg.params_at(10.0)
    assert p.rf.gamma_bar_ur == pytest.approx(10.0) and p.fso.gamma_bar_rd == pytest.approx(10.0)
    cfg = cli.replace(cfg, sweep_variable=SweepVariable.GAMMA_RD_DB)
    p = cfg.params_at(10.0)
    assert p.fso.gamma_bar_rd == pytest.approx(10.0)
    assert p.rf.gamma_bar_ur == pytest.approx(cfg.base.rf.gamma_bar_ur)
