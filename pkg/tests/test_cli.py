import io
import json

import numpy as np
import pytest
from scipy import stats

from signcov.cli import DataError, main, read_pairs, write_pairs
from signcov.estimator import PairedSample
from signcov.nulldist import NullDistribution
from signcov.spectrum import spectrum_continuous


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, out=out, err=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def monotone_csv(tmp_path):
    p = tmp_path / "mono.csv"
    p.write_text("x,y\n" + "".join(f"{i},{3 * i + 1}\n" for i in range(100)))
    return p


def test_test_command_monotone(monotone_csv):
    code, out, _ = run(["test", str(monotone_csv)])
    doc = json.loads(out)
    assert code == 0
    assert doc["schema"] == 1 and doc["version"]
    assert doc["t_star"] == pytest.approx(2 / 3) and doc["p_value"] < 1e-6
    assert doc["config"]["marginals"] == "auto" and doc["config"]["seed"] == 0 and "seed" in doc
    assert doc["tail_bound"] > 0


def test_test_command_permutation_plain(monotone_csv):
    code, out, _ = run(["test", str(monotone_csv), "--method", "permutation", "--permutations", "199",
                        "--format", "plain"])
    assert code == 0 and "p_value: 0.005" in out


def test_bad_cell_names_line(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x,y\n1,2\n3,4\n5,oops\n")
    code, _, err = run(["test", str(p)])
    assert code == 3 and "line 4" in err


def test_small_and_missing_inputs(tmp_path):
    p = tmp_path / "small.csv"
    p.write_text("1,2\n2,3\n3,1\n")
    assert run(["test", str(p)])[0] == 3
    assert run(["test", str(tmp_path / "nope.csv")])[0] == 3


def test_usage_errors():
    assert run(["test"])[0] == 2
    assert run(["bogus"])[0] == 2


def test_csv_round_trip():
    rng = np.random.default_rng(0)
    s = PairedSample(rng.standard_normal(50), rng.random(50) * 1e-7)
    buf = io.StringIO()
    write_pairs(s, buf)
    back = read_pairs(io.StringIO(buf.getvalue()))
    assert np.array_equal(back.xs, s.xs) and np.array_equal(back.ys, s.ys)


def test_header_detection():
    assert read_pairs(io.StringIO("1,2\n3,4\n")).n == 2
    assert read_pairs(io.StringIO("a,b\n3,4\n")).n == 1
    with pytest.raises(DataError):
        read_pairs(io.StringIO("1,2,3\n"))


def test_nulldist_cdf_matches_library():
    code, out, _ = run(["nulldist", "--marginals", "cc", "--eval", "cdf", "--at", "0"])
    doc = json.loads(out)
    assert code == 0
    assert abs(doc["value"] - NullDistribution(spectrum_continuous()).cdf(0.0)) < 1e-9
    assert len(doc["spectrum"]["top_weights"]) == 5 and "tail_bound" in doc


def test_nulldist_bernoulli_quantile():
    code, out, _ = run(["nulldist", "--marginals", "dd", "--pmf-x", ".5,.5", "--pmf-y", ".5,.5",
                        "--eval", "quantile", "--at", ".95"])
    assert code == 0
    assert json.loads(out)["value"] == pytest.approx(0.25 * (stats.chi2.ppf(0.95, 1) - 1), abs=1e-5)


def test_nulldist_invalid_pmf():
    code, _, err = run(["nulldist", "--marginals", "dd", "--pmf-x", "0.7,0.4", "--pmf-y", ".5,.5", "--at", "1"])
    assert code == 2 and "pmf-x" in err


def test_power_command():
    def n_for(*extra):
        code, out, _ = run(["power", "--tau-star", "0.05", *extra])
        assert code == 0
        return json.loads(out)["sample_size"]

    assert n_for("--sigma1sq-bound", "0.25") >= n_for("--sigma1sq-bound", "0.00875")
    assert n_for("--beta", "0.99") > n_for("--beta", "0.5")
    assert run(["power", "--tau-star", "0.7"])[0] == 2
    assert run(["power", "--tau-star", "-0.1"])[0] == 2
    code, out, _ = run(["power", "--tau-star", "0.1", "--n", "200"])
    assert 0 <= json.loads(out)["power_bound"] <= 1


def test_simulate_curve_csv_is_deterministic(tmp_path):
    args = ["simulate", "--study", "curve", "--n", "30", "--reps", "10", "--seed", "4"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(args + ["--out", str(a)])[0] == 0
    assert run(args + ["--out", str(b)])[0] == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    meta = json.loads(lines[0][2:])
    assert meta["seed"] == 4 and "version" in meta and "tail_bound" in meta
    assert len(lines) == 2 + 11


def test_simulate_convergence_json():
    code, out, _ = run(["simulate", "--study", "convergence", "--sizes", "10,20", "--reps", "200",
                        "--format", "json"])
    doc = json.loads(out)
    assert code == 0 and [r["n"] for r in doc["rows"]] == [10, 20] and doc["tail_bound"] > 0
