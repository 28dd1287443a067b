import json
from datetime import date, timedelta

import numpy as np
import pytest

from lpplslik import cli
from lpplslik.series import load_csv

TC0 = date(1975, 2, 9)


def run(*argv):
    return cli.main(list(argv))


def synth(tmp_path, sigma=0.0, seed=0, **extra):
    out = tmp_path / f"synth_{sigma}_{seed}"
    args = ["synth", "--paper-defaults", "--sigma", str(sigma),
            "--seed", str(seed), "--out-dir", str(out)]
    for k, v in extra.items():
        args += [f"--{k.replace('_', '-')}", str(v)]
    assert run(*args) == 0
    return out / "series.csv"


def test_synth_deterministic_and_ingestible(tmp_path):
    a = synth(tmp_path / "a", sigma=0.03, seed=7)
    b = synth(tmp_path / "b", sigma=0.03, seed=7)
    assert a.read_bytes() == b.read_bytes()
    s = load_csv(a)
    assert len(s) > 500
    meta = json.loads((a.parent / "series.meta.json").read_text())
    gen = meta["generator"]
    assert gen["tc0"] == "1975-02-09"
    assert gen["m0"] == 0.8 and gen["omega0"] == 9.0
    assert gen["sigma0"] == 0.03 and gen["b0"] == -0.015
    assert gen["rng"] == "numpy.random.PCG64"
    assert "config" in meta


def test_fit_zero_noise_recovers_tc(tmp_path):
    csv = synth(tmp_path, sigma=0.0)
    out = tmp_path / "fit"
    t2 = TC0 - timedelta(days=39)
    code = run("fit", "--input", str(csv), "--t2", t2.isoformat(),
               "--window-days", "300", "--tc-min-offset", "9",
               "--tc-max-offset", "69", "--tc-step", "2",
               "--out-dir", str(out))
    assert code == 0
    report = json.loads((out / "fit.json").read_text())
    assert abs(report["tc_offset_days"] - 39.0) <= 1.0
    assert report["tc_date_nearest"] == "1975-02-09"
    assert report["m"] == pytest.approx(0.8, abs=1e-3)
    assert report["omega"] == pytest.approx(9.0, abs=1e-3)
    assert report["converged"] is True
    assert report["qualification"]["strict"]["passed"] is True
    assert report["config"]["window_days"] == 300
    # JSON round trip preserves every reported number exactly
    again = json.loads(json.dumps(report))
    assert again == report


def test_fit_outputs_are_deterministic(tmp_path):
    # identical config and input give byte-identical result files
    csv = synth(tmp_path, sigma=0.03, seed=2)
    out = tmp_path / "rerun"
    outs = []
    for _ in range(2):
        assert run("fit", "--input", str(csv), "--t2",
                   (TC0 - timedelta(days=39)).isoformat(),
                   "--window-days", "250", "--tc-min-offset", "19",
                   "--tc-max-offset", "59", "--tc-step", "4",
                   "--out-dir", str(out)) == 0
        outs.append((out / "fit.json").read_bytes())
    assert outs[0] == outs[1]


def test_fit_csv_format(tmp_path):
    csv = synth(tmp_path, sigma=0.0)
    out = tmp_path / "fitcsv"
    assert run("fit", "--input", str(csv), "--t2",
               (TC0 - timedelta(days=39)).isoformat(),
               "--window-days", "300", "--tc-min-offset", "29",
               "--tc-max-offset", "49", "--tc-step", "2",
               "--format", "csv", "--out-dir", str(out)) == 0
    lines = (out / "fit.csv").read_text().strip().split("\n")
    header = lines[0].split(",")
    values = dict(zip(header, (float(v) for v in lines[1].split(","))))
    report = json.loads((out / "fit.json").read_text())
    assert values["m"] == report["m"]
    assert values["sigma2_unbiased"] == report["sigma2_unbiased"]


def test_fit_missing_input_is_usage_error(tmp_path):
    code = run("fit", "--input", str(tmp_path / "nope.csv"), "--t2",
               "1975-01-01", "--window-days", "300",
               "--out-dir", str(tmp_path))
    assert code == 2


def test_fit_bad_data_is_data_error(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("date,close\n2015-01-05,10\n2015-01-06,-4\n")
    code = run("fit", "--input", str(bad), "--t2", "2015-01-06",
               "--window-days", "100", "--out-dir", str(tmp_path))
    assert code == 3


def test_fit_underfull_window_is_data_error(tmp_path):
    csv = synth(tmp_path, sigma=0.0)
    code = run("fit", "--input", str(csv), "--t2",
               (TC0 - timedelta(days=39)).isoformat(),
               "--window-days", "20", "--out-dir", str(tmp_path / "o"))
    assert code == 3


def test_bad_t2_is_usage_error(tmp_path):
    csv = synth(tmp_path, sigma=0.0)
    code = run("fit", "--input", str(csv), "--t2", "notadate",
               "--window-days", "300", "--out-dir", str(tmp_path / "o"))
    assert code == 2


def test_missing_subcommand_is_usage_error():
    assert run() == 2


def test_profile_outputs(tmp_path):
    csv = synth(tmp_path, sigma=0.0)
    out = tmp_path / "prof"
    t2 = TC0 - timedelta(days=39)
    code = run("profile", "--input", str(csv), "--t2", t2.isoformat(),
               "--window-days", "300", "--tc-min-offset", "9",
               "--tc-max-offset", "69", "--tc-step", "2",
               "--out-dir", str(out))
    assert code == 0
    for name in ("curve.csv", "tc_params.csv", "intervals_lp.json",
                 "intervals_lm.json", "run.json"):
        assert (out / name).exists()
    lm = json.loads((out / "intervals_lm.json").read_text())
    assert lm["intervals"][0]["cutoff"] == 0.05
    segs = lm["intervals"][0]["segments"]
    assert any(lo <= 39.0 <= hi for lo, hi in segs)
    lines = (out / "curve.csv").read_text().strip().split("\n")
    assert lines[0].startswith("# config ")
    assert lines[1] == "tc_offset_days,f2,log_lp,log_lm,rel_lp,rel_lm,flag"
    assert len(lines) == 2 + 31
    params = (out / "tc_params.csv").read_text().strip().split("\n")
    assert params[1] == "tc_offset_days,m_hat,dm,omega_hat,domega,d_hat,dd"
    assert len(params) == 2 + 31


def test_profile_bimodal_reports_two_segments(tmp_path):
    # this seed and window produce a multi-modal modified likelihood
    csv = synth(tmp_path, sigma=0.03, seed=3)
    out = tmp_path / "prof"
    t2 = TC0 - timedelta(days=100)
    code = run("profile", "--input", str(csv), "--t2", t2.isoformat(),
               "--window-days", "150", "--tc-step", "2",
               "--out-dir", str(out))
    assert code == 0
    lm = json.loads((out / "intervals_lm.json").read_text())
    segs = lm["intervals"][0]["segments"]
    assert len(segs) >= 2
    assert segs[0][1] < segs[1][0]  # disjoint and ordered


def test_multiscale_outputs(tmp_path):
    csv = synth(tmp_path, sigma=0.03, seed=1)
    out = tmp_path / "ms"
    t2 = TC0 - timedelta(days=39)
    code = run("multiscale", "--input", str(csv), "--t2", t2.isoformat(),
               "--dt-min", "200", "--dt-max", "300", "--dt-step", "100",
               "--tc-min-offset", "-10", "--tc-max-offset", "50",
               "--tc-step", "10", "--threads", "1", "--out-dir", str(out))
    assert code == 0
    surface = json.loads((out / "surface.json").read_text())
    assert surface["dt_values"] == [200, 300]
    assert len(surface["tc_offsets"]) == 7
    strict = np.array(surface["qualified_strict"], dtype=bool)
    conf = np.array(surface["qualified_confidence"], dtype=bool)
    assert not np.any(strict & ~conf)
    assert surface["config"]["dt_min"] == 200
    contours = json.loads((out / "contours.json").read_text())
    assert contours["cutoffs"] == [0.05, 0.5, 0.95]
    csv_lines = (out / "surface.csv").read_text().strip().split("\n")
    assert csv_lines[1] == "dt,tc_offset,rel_lm,strict,confidence,flag"


def test_gap_fill_report(tmp_path):
    src = synth(tmp_path, sigma=0.0)
    rows = src.read_text().strip().split("\n")
    # remove one business week to fabricate an exchange closure
    kept = [rows[0]] + [r for r in rows[1:]
                        if not ("1974-06-03" <= r[:10] <= "1974-06-07")]
    holey = tmp_path / "holey.csv"
    holey.write_text("\n".join(kept) + "\n")
    out = tmp_path / "fitgap"
    code = run("fit", "--input", str(holey), "--t2",
               (TC0 - timedelta(days=39)).isoformat(),
               "--window-days", "300", "--tc-min-offset", "19",
               "--tc-max-offset", "59", "--tc-step", "4",
               "--fill-gaps", "10", "--out-dir", str(out))
    assert code == 0
    gaps = json.loads((out / "gaps.json").read_text())["gaps"]
    assert gaps == [{"start": "1974-06-03", "end": "1974-06-07", "filled": True}]
