import csv
import json

import numpy as np
import pytest

from minimal_class.cli import IO_EXIT, main, read_config_file
from minimal_class.errors import BadInput, InvalidConfig
from minimal_class.files import read_pool, write_pool


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def manifest(out):
    with open(out / "manifest.json") as fh:
        text = fh.read()
    assert text.count("\n") == 1
    return json.loads(text)


def data_args(toy_csv):
    return ["--input", str(toy_csv), "--response", "target"]


def test_fit_fixed_lambda(toy_csv, tmp_path):
    assert main(["fit", *data_args(toy_csv), "--lambda", "0.1", "--out", str(tmp_path)]) == 0
    coef = rows(tmp_path / "coefficients.csv")
    assert len(coef) == 10
    assert [r["predictor"] for r in coef] == [f"v{j}" for j in range(1, 11)]
    assert not (tmp_path / "cv_curve.csv").exists()


def test_fit_cv_records_lambda(toy_csv, tmp_path):
    args = ["fit", *data_args(toy_csv), "--cv-folds", "10", "--alpha", "0.4", "--seed", "3",
            "--out", str(tmp_path)]
    assert main(args) == 0
    m = manifest(tmp_path)
    lam = m["derived"]["selected_lambda"]
    assert lam > 0
    assert m["alpha"] == 0.4 and m["seed"] == 3
    lambdas = [float(r["lambda"]) for r in rows(tmp_path / "cv_curve.csv")]
    assert lam in lambdas


def test_missing_response_column(toy_csv, tmp_path, capsys):
    code = main(["fit", "--input", str(toy_csv), "--response", "nope", "--out", str(tmp_path)])
    assert code == BadInput.exit_code
    assert "nope" in capsys.readouterr().err


def test_missing_file(tmp_path):
    code = main(["fit", "--input", str(tmp_path / "absent.csv"), "--response", "y",
                 "--out", str(tmp_path)])
    assert code == IO_EXIT


def test_bad_config_key(tmp_path, toy_csv):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("search.bogus=1\n")
    code = main(["search", *data_args(toy_csv), "--config", str(cfg), "--out", str(tmp_path)])
    assert code == InvalidConfig.exit_code


def test_config_file_and_flag_precedence(toy_csv, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nsolver.alpha = 0.5\nsolver.lambda=0.2\nrun.seed=9\n")
    assert read_config_file(cfg) == {"alpha": "0.5", "lam": "0.2", "seed": "9"}
    out = tmp_path / "a"
    assert main(["fit", *data_args(toy_csv), "--config", str(cfg), "--lambda", "0.05",
                 "--out", str(out)]) == 0
    m = manifest(out)
    assert (m["alpha"], m["lam"], m["seed"]) == (0.5, 0.05, 9)


def test_seed_drawn_and_recorded(toy_csv, tmp_path):
    assert main(["fit", *data_args(toy_csv), "--lambda", "0.1", "--out", str(tmp_path)]) == 0
    seed = manifest(tmp_path)["seed"]
    assert isinstance(seed, int) and 0 <= seed < 2 ** 32


def search_args(toy_csv, out, gamma):
    return ["search", *data_args(toy_csv), "--gamma-file", str(gamma), "--kappa", "2,3",
            "--starts", "2", "--iters", "20", "--seed", "5", "--out", str(out)]


def test_search_report_round_trip(toy_csv, tmp_path):
    assert main(["score", *data_args(toy_csv), "--seed", "1", "--cv-folds", "5",
                 "--out", str(tmp_path / "s")]) == 0
    gamma = tmp_path / "s" / "gamma.csv"
    assert len(rows(gamma)) == 10
    assert main(search_args(toy_csv, tmp_path / "q", gamma)) == 0
    pool_csv = tmp_path / "q" / "pool.csv"
    pool, labels = read_pool(pool_csv)
    again = tmp_path / "again.csv"
    write_pool(again, pool, [labels.get(j, "") for j in range(10)])
    assert again.read_bytes() == pool_csv.read_bytes()
    assert main(["report", "--pool", str(pool_csv), "--eta", "0.05",
                 "--out", str(tmp_path / "r")]) == 0
    listing = rows(tmp_path / "r" / "minimal_class.csv")
    assert {r["size"] for r in listing} == {"2", "3"}
    best2 = min((e.mse, m) for m, e in pool.entries.items() if len(m) == 2)
    first = [r for r in listing if r["size"] == "2"][0]
    assert float(first["mse"]) == best2[0]
    counts = rows(tmp_path / "r" / "unique_counts.csv")
    assert sum(int(r["unique_models"]) for r in counts) == len(pool)


def test_report_needs_eta_or_data(tmp_path, toy_csv):
    pool_csv = tmp_path / "pool.csv"
    pool_csv.write_text("model,mse\n0;1,0.5\n")
    assert main(["report", "--pool", str(pool_csv), "--out", str(tmp_path)]) == BadInput.exit_code
    assert main(["report", "--pool", str(pool_csv), *data_args(toy_csv),
                 "--out", str(tmp_path / "b")]) == 0
    assert manifest(tmp_path / "b")["derived"]["sigma2"] == pytest.approx(40 / 38 * 0.5)


def wide_csv(path, p=15, n=60):
    r = np.random.default_rng(8)
    x = r.uniform(0.5, 3.0, (n, p))
    y = x[:, 0] - x[:, 1] * x[:, 2] + r.normal(0, 0.3, n)
    with open(path, "w") as fh:
        fh.write(",".join([f"c{j}" for j in range(p)] + ["resp"]) + "\n")
        for i in range(n):
            fh.write(",".join(f"{v:.6f}" for v in [*x[i], y[i]]) + "\n")
    return path


def test_pipeline_expansion(tmp_path):
    src = wide_csv(tmp_path / "wide.csv")
    out = tmp_path / "pipe"
    code = main(["pipeline", "--input", str(src), "--response", "resp",
                 "--expand", "log,sqrt,square,interactions", "--kappa", "1..2", "--starts", "1",
                 "--iters", "10", "--cv-folds", "5", "--seed", "2", "--out", str(out)])
    assert code == 0
    m = manifest(out)
    assert m["derived"]["p"] == 165 and m["derived"]["skipped_transforms"] == []
    assert len(rows(out / "gamma.csv")) == 165
    for name in ("pool.csv", "minimal_class.csv", "unique_counts.csv"):
        assert (out / name).exists()


def csv_bytes(out):
    return {f.name: f.read_bytes() for f in sorted(out.glob("*.csv"))}


def replay(first, args, tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main([*args, "--out", str(out_a)]) == 0
    assert main([first, "--manifest", str(out_a / "manifest.json"), "--out", str(out_b)]) == 0
    a, b = csv_bytes(out_a), csv_bytes(out_b)
    assert a and a == b
    return out_a


def test_replay_fit(toy_csv, tmp_path):
    replay("fit", ["fit", *data_args(toy_csv), "--alpha", "0.4", "--cv-folds", "5"], tmp_path)


def test_replay_score(toy_csv, tmp_path):
    replay("score", ["score", *data_args(toy_csv), "--cv-folds", "5"], tmp_path)


def test_replay_search_and_report(toy_csv, tmp_path):
    assert main(["score", *data_args(toy_csv), "--cv-folds", "5", "--seed", "4",
                 "--out", str(tmp_path / "s")]) == 0
    gamma = tmp_path / "s" / "gamma.csv"
    args = ["search", *data_args(toy_csv), "--gamma-file", str(gamma), "--kappa", "2,3",
            "--starts", "2", "--iters", "20"]
    out = replay("search", args, tmp_path / "search")
    replay("report", ["report", "--pool", str(out / "pool.csv"), *data_args(toy_csv)],
           tmp_path / "report")


def test_replay_pipeline(toy_csv, tmp_path):
    out = replay("pipeline", ["pipeline", *data_args(toy_csv), "--kappa", "1..4", "--starts", "2",
                              "--iters", "20", "--cv-folds", "5"], tmp_path)
    counts = rows(out / "unique_counts.csv")
    assert [int(r["size"]) for r in counts] == [1, 2, 3, 4]
    assert all(1 <= int(r["unique_models"]) <= 10 for r in counts)


def test_replay_simulate(tmp_path):
    out = replay("simulate", ["simulate", "--p", "20", "--snr", "2,12", "--n", "60",
                              "--replicates", "2", "--iters", "10"], tmp_path)
    table = rows(out / "table.csv")
    assert len(table) == 8
    assert (out / "table.txt").read_text().count("(II)") == 2
