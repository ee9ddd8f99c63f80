import json
import xml.etree.ElementTree as ET

import pytest

from hsens.cli import compare_table, main
from hsens.dataio import ECOLOGY_TABLE, QuantileCovariates, save_csv, synthesize
from hsens.likelihood import ObservationModel
from hsens.models import ModelKind, ParamVector

SVG = "{http://www.w3.org/2000/svg}"
FAST = ["--iters", "1000", "--burnin", "500"]


@pytest.fixture(scope="module")
def eco_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "eco.csv"
    data = synthesize(ModelKind.GlanzelSchubert, ParamVector(1.77, c=0.7), ObservationModel.gaussian(12.0),
                      130, QuantileCovariates.from_table(ECOLOGY_TABLE), seed=1)
    save_csv(data, path)
    return path


@pytest.fixture(scope="module")
def gs_fit(eco_csv, tmp_path_factory):
    out = tmp_path_factory.mktemp("fit") / "gs"
    assert main(["fit", "--data", str(eco_csv), "--model", "gs", "--likelihood", "gaussian",
                 "--seed", "7", "--out", str(out), *FAST]) == 0
    return out


def test_fit_outputs(gs_fit, eco_csv):
    summary = json.loads((gs_fit / "summary.json").read_text())
    assert summary["model"] == "gs" and summary["likelihood"] == "gaussian"
    assert set(summary["params"]) == {"alpha", "c", "tau"}
    for s in summary["params"].values():
        assert set(s) == {"median", "ci_low", "ci_high", "ess", "geweke_z"}
        assert s["ci_low"] <= s["median"] <= s["ci_high"]
    assert {"model", "likelihood", "params", "mean_deviance", "config"} <= set(summary)
    manifest = json.loads((gs_fit / "manifest.json").read_text())
    assert manifest["command"] == "fit" and manifest["input"] == str(eco_csv)
    assert manifest["argv"][0] == "fit" and manifest["config"]["seed"] == 7
    header = (gs_fit / "chain.csv").read_text().splitlines()[0]
    assert header == "iter,alpha,c,tau,deviance"


def test_fit_is_byte_reproducible(gs_fit, eco_csv, tmp_path):
    out = tmp_path / "again"
    assert main(["fit", "--data", str(eco_csv), "--model", "gs", "--likelihood", "gaussian",
                 "--seed", "7", "--out", str(out), *FAST]) == 0
    assert (out / "chain.csv").read_bytes() == (gs_fit / "chain.csv").read_bytes()
    assert (out / "summary.json").read_bytes() == (gs_fit / "summary.json").read_bytes()


def test_fit_rejects_unlisted_combo(eco_csv, tmp_path, capsys):
    args = ["fit", "--data", str(eco_csv), "--model", "er", "--likelihood", "gaussian", "--out", str(tmp_path)]
    assert main(args) == 1
    assert "--allow-nonpaper" in capsys.readouterr().err
    assert main(args + ["--allow-nonpaper", *FAST]) == 0


def test_fit_missing_file(tmp_path):
    assert main(["fit", "--data", str(tmp_path / "nope.csv"), "--model", "gs", "--likelihood", "gaussian"]) == 1


def test_bad_flag_is_user_error():
    assert main(["fit", "--model", "zz"]) == 1


def test_fit_multiple_chains(eco_csv, tmp_path):
    out = tmp_path / "multi"
    assert main(["fit", "--data", str(eco_csv), "--model", "er", "--likelihood", "nb", "--chains", "2",
                 "--out", str(out), *FAST]) == 0
    assert (out / "chain_1.csv").exists() and (out / "chain_2.csv").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert "rhat" in summary["params"]["alpha"]


def _summary(tmp_path, name, model, dbar, sha="x"):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps({"model": model, "likelihood": "gaussian", "mean_deviance": dbar,
                                "data_sha256": sha, "params": {}}))
    return str(path)


def test_compare_orders_by_mean_deviance(tmp_path, capsys):
    a = _summary(tmp_path, "er", "er", 1044.0)
    b = _summary(tmp_path, "gs", "gs", 894.4)
    assert main(["compare", a, b]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1].split()[1] == "gs" and "best" in lines[1]


def test_compare_tie_and_single(tmp_path):
    rows = compare_table([{"model": "h", "likelihood": "nb", "mean_deviance": 5.0},
                          {"model": "er", "likelihood": "nb", "mean_deviance": 5.0}])
    assert [r["model"] for r in rows] == ["er", "h"]
    one = _summary(tmp_path, "one", "gs", 3.0)
    assert main(["compare", one]) == 1
    assert main(["compare", one, "--force"]) == 0


def test_compare_mixed_datasets(tmp_path):
    assert main(["compare", _summary(tmp_path, "a", "gs", 1.0, "aa"), _summary(tmp_path, "b", "er", 2.0, "bb")]) == 1


def test_compare_on_real_fits(gs_fit, eco_csv, tmp_path):
    out = tmp_path / "er"
    assert main(["fit", "--data", str(eco_csv), "--model", "er", "--likelihood", "nb", "--out", str(out), *FAST]) == 0
    csv_out = tmp_path / "cmp.csv"
    assert main(["compare", str(gs_fit / "summary.json"), str(out / "summary.json"), "--out", str(csv_out)]) == 0
    assert csv_out.read_text().splitlines()[0] == "rank,model,likelihood,mean_deviance,best"


def _svg_series(path):
    root = ET.parse(path).getroot()
    return [el for el in root.iter() if el.get("class") == "series"]


def test_sensitivity_local_and_global(gs_fit, eco_csv, tmp_path):
    out = tmp_path / "sens"
    chain = str(gs_fit / "chain.csv")
    assert main(["sensitivity", "--chain", chain, "--data", str(eco_csv), "--vary", "C", "--mode", "local",
                 "--out", str(out)]) == 0
    lines = (out / "curve_C_local.csv").read_text().splitlines()
    assert lines[0] == "grid_value,h_mean,h_q025,h_q50,h_q975"
    assert len(lines) == 14
    si = json.loads((out / "si_C_local.json").read_text())
    assert {"model", "likelihood", "varied", "mode", "si", "h_max", "h_min", "progressive"} <= set(si)
    assert len(si["progressive"]) == 13
    assert len(_svg_series(out / "curve_C_local.svg")) == 2
    assert len(_svg_series(out / "progressive_C_local.svg")) == 1

    assert main(["sensitivity", "--chain", chain, "--data", str(eco_csv), "--vary", "C", "--mode", "global",
                 "--out", str(out)]) == 0
    assert main(["sensitivity", "--chain", chain, "--data", str(eco_csv), "--vary", "P", "--mode", "global",
                 "--out", str(out)]) == 0
    si_c = json.loads((out / "si_C_global.json").read_text())["si"]
    si_p = json.loads((out / "si_P_global.json").read_text())["si"]
    assert si_c > si_p


def test_sensitivity_rejects_p_for_c_only_model(eco_csv, tmp_path):
    out = tmp_path / "er"
    assert main(["fit", "--data", str(eco_csv), "--model", "er", "--likelihood", "nb", "--out", str(out), *FAST]) == 0
    assert main(["sensitivity", "--chain", str(out / "chain.csv"), "--data", str(eco_csv), "--vary", "P",
                 "--mode", "global", "--out", str(tmp_path / "s")]) == 1


def test_summary_command(eco_csv, tmp_path, capsys):
    js = tmp_path / "summary.json"
    assert main(["summary", "--data", str(eco_csv), "--json", str(js)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 10
    assert [l.split()[0] for l in lines[1:]] == ["min", "5%", "10%", "25%", "median", "75%", "90%", "95%", "max"]
    assert set(json.loads(js.read_text())) == {"h", "P", "C"}


def test_summary_malformed(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("journal,h,P\nA,1,2\n")
    assert main(["summary", "--data", str(bad)]) == 1


def test_simulate_then_fit(tmp_path):
    out = tmp_path / "sim.csv"
    args = ["simulate", "--model", "gs", "--alpha", "1.77", "--c", "0.7", "--sigma", "12", "--n", "60",
            "--seed", "3", "--out", str(out)]
    assert main(args) == 0
    first = out.read_bytes()
    assert main(args) == 0
    assert out.read_bytes() == first
    assert (tmp_path / "sim.manifest.json").exists()
    assert main(["simulate", "--model", "gs", "--alpha", "1.77", "--sigma", "1", "--out", str(out)]) == 1
    assert main(["fit", "--data", str(out), "--model", "gs", "--likelihood", "gaussian",
                 "--out", str(tmp_path / "fit"), *FAST]) == 0


def test_plot_commands(gs_fit, tmp_path):
    trace = tmp_path / "trace.svg"
    assert main(["plot", "--trace", str(gs_fit / "chain.csv"), "--param", "alpha", "--out", str(trace)]) == 0
    series = _svg_series(trace)
    assert len(series) == 1 and series[0].tag == SVG + "polyline"
    assert len(series[0].get("points").split()) == 1000

    violin = tmp_path / "violin.svg"
    assert main(["plot", "--violin", str(gs_fit / "chain.csv"), str(gs_fit / "chain.csv"),
                 "--out", str(violin)]) == 0
    polys = _svg_series(violin)
    assert len(polys) == 2 and all(p.tag == SVG + "polygon" for p in polys)

    assert main(["plot", "--trace", str(gs_fit / "chain.csv"), "--param", "nope", "--out", str(trace)]) == 1
    assert main(["plot", "--out", str(trace)]) == 1
