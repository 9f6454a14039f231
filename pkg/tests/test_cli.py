import json
import subprocess
import sys

import numpy as np
import pytest

from betageom.cli import IngestSpec, main, read_sample
from betageom.errors import ParseError


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# ---- fit


def test_fit_summary_explicit_prior(capsys):
    code, out, _ = run(capsys, "fit", "--n", "3767", "--sum-x", "78112", "--method", "bayes",
                       "--mu", "20.4669", "--nu", "403.663")
    assert code == 0
    report = json.loads(out)
    assert abs(report["estimates"]["bayes_explicit"]["theta_hat"] - 0.0460185) < 1e-7
    assert report["input"]["rows_read"] == report["input"]["rows_kept"] == 3767


def test_fit_summary_mme_is_data_error(capsys):
    code, _, err = run(capsys, "fit", "--n", "3767", "--sum-x", "78112", "--method", "mme")
    assert code == 3
    assert "MissingMomentsError" in err


def test_fit_summary_file(capsys, tmp_path):
    p = tmp_path / "nfhs.json"
    p.write_text(json.dumps({"n": 3767, "sum_x": 78112}))
    code, out, _ = run(capsys, "fit", str(p), "--method", "bayes", "--prior", "explicit",
                       "--mu", "20.94735", "--nu", "413.6093")
    assert code == 0
    assert json.loads(out)["estimates"]["bayes_explicit"]["theta_hat"] == pytest.approx(0.0460185, abs=1e-7)


def test_fit_all_on_synthetic_data(capsys, tmp_path):
    data = tmp_path / "delays.txt"
    assert run(capsys, "sample", "--alpha", "4", "--beta", "36", "--n", "1000", "--seed", "11",
               "--out", str(data))[0] == 0
    out_path = tmp_path / "report.json"
    code, _, _ = run(capsys, "fit", str(data), "--method", "all", "--bootstrap", "100", "--out", str(out_path))
    assert code == 0
    report = json.loads(out_path.read_text())
    est = report["estimates"]
    assert set(est) == {"geometric", "mme", "mle", "bayes_mme", "bayes_mle"}
    for name in ("mme", "mle", "bayes_mme", "bayes_mle"):
        assert abs(est[name]["theta_hat"] - 0.1) < 0.05
    assert est["mle"]["diagnostics"]["converged"] is True
    assert report["errors"] == {}


def test_fit_csv_with_header_and_filter(capsys, tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("id,delay\n1,3\n2,200\n3,0\n4,7\n5,181\n6,12\n")
    code, out, _ = run(capsys, "fit", str(p), "--column", "delay", "--max-delay", "180", "--method", "bayes",
                       "--mu", "1", "--nu", "1")
    assert code == 0
    audit = json.loads(out)["input"]
    assert (audit["rows_read"], audit["rows_kept"], audit["rows_dropped"]) == (6, 4, 2)
    assert audit["rows_read"] == audit["rows_kept"] + audit["rows_dropped"]
    assert audit["sum_x"] == 22


def test_parse_error_carries_line(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("3\n4\nfive\n")
    with pytest.raises(ParseError) as info:
        read_sample(IngestSpec(str(p)))
    assert info.value.line == 3


def test_parse_error_exit_code(capsys, tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("3\n-4\n")
    code, _, err = run(capsys, "fit", str(p))
    assert code == 3 and "line 2" in err


def test_whitespace_columns_and_comments(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("# two columns\n1 5\n2 6  # trailing\n\n3 7\n")
    sample, audit = read_sample(IngestSpec(str(p), column="1"))
    assert sample.delays.tolist() == [5, 6, 7]
    assert audit["rows_dropped"] == 0


def test_estimation_failure_exit_code(capsys, tmp_path):
    p = tmp_path / "zeros.txt"
    p.write_text("0\n0\n0\n")
    code, _, err = run(capsys, "fit", str(p), "--method", "mle")
    assert code == 3  # all-zero delays are a data problem
    p.write_text("1\n1\n1\n1\n")
    code, out, err = run(capsys, "fit", str(p), "--method", "all", "--bootstrap", "0")
    assert code in (3, 4)
    assert "mme" in json.loads(out)["errors"]


@pytest.mark.parametrize(
    "argv",
    [
        ["fit"],
        ["fit", "--n", "10"],
        ["fit", "--n", "10", "--sum-x", "5", "--mu", "1"],
        ["fit", "--n", "10", "--sum-x", "5", "--gamma", "1.5"],
        ["fit", "--n", "10", "--sum-x", "5", "--max-delay", "180"],
        ["sample", "--alpha", "4", "--beta", "4", "--n", "0"],
        ["sample", "--alpha", "-1", "--beta", "4", "--n", "3"],
        ["describe", "--alpha", "2", "--beta", "3", "--x-max", "-1"],
        ["bogus"],
    ],
)
def test_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


# ---- sample


def test_sample_mean_and_determinism(capsys, tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    code, _, err = run(capsys, "sample", "--alpha", "4", "--beta", "4", "--n", "100000", "--seed", "5",
                       "--out", str(a))
    assert code == 0
    moments = json.loads(err)
    assert moments["mean_delay"] == pytest.approx(4 / 3)
    x = np.loadtxt(a, dtype=np.int64)
    assert abs(x.mean() - 4 / 3) < 0.02
    run(capsys, "sample", "--alpha", "4", "--beta", "4", "--n", "100000", "--seed", "5", "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_sample_undefined_moments(capsys):
    code, out, err = run(capsys, "sample", "--alpha", "0.5", "--beta", "1", "--n", "3")
    assert code == 0 and len(out.split()) == 3
    assert json.loads(err)["mean_delay"].startswith("undefined")


@pytest.mark.parametrize("law", [(4, 36), (4, 12), (4, 4), (4, 2)])
def test_sample_fit_round_trip(capsys, tmp_path, law):
    data = tmp_path / "d.txt"
    run(capsys, "sample", "--alpha", str(law[0]), "--beta", str(law[1]), "--n", "1000", "--seed", "2024",
        "--out", str(data))
    code, out, _ = run(capsys, "fit", str(data), "--method", "mle")
    assert code == 0
    mle = json.loads(out)["estimates"]["mle"]
    assert abs(mle["theta_hat"] - law[0] / sum(law)) < 3 * mle["theta_se"]


# ---- describe


def test_describe_small_table(capsys):
    code, out, _ = run(capsys, "describe", "--alpha", "2", "--beta", "3", "--x-max", "1")
    assert code == 0
    doc = json.loads(out)
    assert [r["pmf"] for r in doc["rows"]] == pytest.approx([0.4, 0.2], rel=1e-13)
    assert [r["cdf"] for r in doc["rows"]] == pytest.approx([0.4, 0.6], rel=1e-13)


def test_describe_survey_law(capsys):
    doc = json.loads(run(capsys, "describe", "--alpha", "20.4669", "--beta", "403.663", "--x-max", "0")[1])
    assert doc["mean_delay"] == pytest.approx(20.7358, abs=1e-4)
    assert doc["wg"]["pi"] == pytest.approx(0.048256, abs=1e-6)


def test_describe_undefined_moments(capsys):
    doc = json.loads(run(capsys, "describe", "--alpha", "0.5", "--beta", "1")[1])
    assert doc["mean_delay"] == "undefined, alpha <= 1"
    assert doc["variance"] == "undefined, alpha <= 2"


def test_describe_tsv(capsys):
    out = run(capsys, "describe", "--alpha", "2", "--beta", "3", "--x-max", "2", "--format", "tsv")[1]
    lines = out.splitlines()
    assert lines[0] == "x\tpmf\tcdf" and len(lines) == 4


# ---- simulate


def test_simulate_small_config(capsys, tmp_path):
    cfg = tmp_path / "study.json"
    cfg.write_text(json.dumps({"laws": [[4, 12], [4, 2]], "sizes": [50, 100], "replications": 20, "seed": 8}))
    out = tmp_path / "out"
    code, _, _ = run(capsys, "simulate", str(cfg), "--out-dir", str(out))
    assert code == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == sorted(
        [f"{kind}_{label}.{ext}" for label in ("alpha4_beta12", "alpha4_beta2")
         for kind, ext in (("table", "tsv"), ("table", "json"), ("mse", "svg"))]
        + ["study.json", "metadata.json"]
    )
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["seed"] == 8 and "per-replicate" in meta["bayes_protocol"]
    assert set(meta["versions"]) >= {"betageom", "numpy", "scipy"}

    again = tmp_path / "again"
    run(capsys, "simulate", str(cfg), "--out-dir", str(again), "--workers", "2")
    for name in names:
        if name.startswith("table_"):
            assert (out / name).read_bytes() == (again / name).read_bytes()


def test_simulate_config_error(capsys, tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"sizes": [100, 10]}))
    code, _, err = run(capsys, "simulate", str(cfg), "--out-dir", str(tmp_path / "o"))
    assert code == 2 and "sizes" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "betageom", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("betageom ")
