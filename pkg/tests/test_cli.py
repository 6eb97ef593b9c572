import csv
import io
import json

import numpy as np
import pytest

from aivat.cli import EXIT_CHECK, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, main
from aivat.corpus import read_corpus, read_header, simulate_corpus, write_corpus
from aivat.estimators import monte_carlo_summary
from aivat.evaluation import GameData, HeuristicSpec, estimate_player, summarize
from aivat.exceptions import InsufficientDataError, InvalidDataError, ParseError


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture(scope="module")
def leduc_corpus(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus") / "leduc.jsonl"
    assert main(["simulate", "--game", "leduc", "--hands", "400", "--seed", "3", "--output", str(path)]) == 0
    return path


class TestCorpus:
    def test_simulate_deterministic(self, tmp_path, capsys):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        for p in (a, b):
            assert run(capsys, "simulate", "--game", "kuhn", "--hands", 1000, "--seed", 7, "--output", p)[0] == 0
        assert a.read_bytes() == b.read_bytes()

    def test_empty_corpus(self, tmp_path, capsys):
        path = tmp_path / "empty.jsonl"
        assert run(capsys, "simulate", "--game", "kuhn", "--hands", 0, "--output", path)[0] == 0
        assert read_header(path)["hands"] == 0 and len(read_corpus(path)) == 0
        code, _, err = run(capsys, "eval", "--input", path, "--scheme", "raw")
        assert code == EXIT_VALIDATION and "at least 2" in err

    def test_round_trip(self, tmp_path):
        corpus = simulate_corpus("leduc", 50, 1, "random:4")
        write_corpus(tmp_path / "c.jsonl", corpus)
        back = read_corpus(tmp_path / "c.jsonl")
        assert back.histories == corpus.histories and np.array_equal(back.payoffs, corpus.payoffs)
        assert back.profile() == corpus.profile()

    def test_rejects_bad_payoffs(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('# {"game": "kuhn"}\n{"id": "x", "history": "0.1.0.0", "payoffs": [5, -5]}\n')
        with pytest.raises(InvalidDataError):
            read_corpus(path)

    def test_rejects_missing_header(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "x", "history": "0.1.0.0", "payoffs": [-1, 1]}\n')
        with pytest.raises(ParseError):
            read_corpus(path)


class TestEvaluation:
    def test_raw_matches_monte_carlo_summary(self):
        data = GameData(simulate_corpus("kuhn", 300, 2))
        est = estimate_player(data, 0, "raw")
        row = summarize(est, "raw", "none", "uniform")[0]
        mc = monte_carlo_summary(data.payoffs(0))
        assert row["win_rate_mbb"] == pytest.approx(mc.mean) and row["se_mbb"] == pytest.approx(mc.se)

    def test_mivat_zero_heuristic_is_raw(self):
        data = GameData(simulate_corpus("leduc", 200, 3))
        raw = estimate_player(data, 1, "raw")
        mivat = estimate_player(data, 1, "mivat", spec=HeuristicSpec("zero"))
        np.testing.assert_allclose(mivat.values, raw.values)

    def test_kfold_bayes_ivw_beats_uniform(self):
        data = GameData(simulate_corpus("leduc", 1000, 11))
        est = estimate_player(data, 0, "mivat", spec=HeuristicSpec("bayes-linear"), kfold=10, seed=0)
        uniform, ivw = summarize(est, "mivat", "bayes-linear", "ivw")
        assert ivw["se_mbb"] < uniform["se_mbb"]

    def test_too_few_hands(self):
        data = GameData(simulate_corpus("kuhn", 1, 0))
        with pytest.raises(InsufficientDataError):
            summarize(estimate_player(data, 0, "raw"), "raw", "none", "uniform")


class TestEval:
    def test_raw(self, leduc_corpus, capsys):
        code, out, _ = run(capsys, "eval", "--input", leduc_corpus, "--scheme", "raw")
        assert code == EXIT_OK
        table = rows(out)
        assert [r["player"] for r in table] == ["0", "1"]
        assert float(table[0]["win_rate_mbb"]) == pytest.approx(-float(table[1]["win_rate_mbb"]))

    def test_refuses_in_sample_training(self, leduc_corpus, capsys):
        code, _, err = run(capsys, "eval", "--input", leduc_corpus, "--heuristic", "bayes-linear")
        assert code == EXIT_VALIDATION and "fixed before the evaluation data" in err
        code, _, _ = run(capsys, "eval", "--input", leduc_corpus, "--heuristic", "bayes-linear", "--allow-insample",
                         "--player", 0)
        assert code == EXIT_OK

    def test_kfold_and_outputs(self, leduc_corpus, tmp_path, capsys):
        per_hand, summary = tmp_path / "hands.csv", tmp_path / "summary.csv"
        code, out, _ = run(capsys, "eval", "--input", leduc_corpus, "--heuristic", "bayes-linear", "--kfold", 5,
                           "--weighting", "ivw", "--player", 0, "--output", per_hand, "--summary", summary)
        assert code == EXIT_OK and out == ""
        table = rows(summary.read_text())
        assert [r["weighting"] for r in table] == ["uniform", "ivw"]
        assert len(rows(per_hand.read_text())) == 400

    def test_pretty(self, leduc_corpus, capsys):
        code, out, _ = run(capsys, "eval", "--input", leduc_corpus, "--scheme", "raw", "--pretty")
        assert code == EXIT_OK and out.splitlines()[1].startswith("-")

    def test_explain_goes_to_stderr(self, leduc_corpus, capsys):
        code, out, err = run(capsys, "eval", "--input", leduc_corpus, "--scheme", "raw", "--explain")
        assert code == EXIT_OK and "Reference magnitudes" in err and "Reference" not in out

    def test_missing_file(self, tmp_path, capsys):
        assert run(capsys, "eval", "--input", tmp_path / "nope.jsonl")[0] == EXIT_VALIDATION

    def test_usage_errors(self, leduc_corpus, capsys):
        assert run(capsys, "eval")[0] == EXIT_USAGE
        assert run(capsys, "eval", "--input", leduc_corpus, "--scheme", "bogus")[0] == EXIT_USAGE
        assert run(capsys, "frobnicate")[0] == EXIT_USAGE


class TestCommitment:
    def test_train_then_eval_elsewhere(self, leduc_corpus, tmp_path, capsys):
        heur = tmp_path / "h.json"
        code, out, _ = run(capsys, "train", "--input", leduc_corpus, "--output", heur, "--player", 0)
        assert code == EXIT_OK and "sha256=" in out
        commit = json.loads((tmp_path / "h.json.commit").read_text())
        assert commit["heuristic_hash"] in out

        code, _, err = run(capsys, "eval", "--input", leduc_corpus, "--heuristic-file", heur)
        assert code == EXIT_VALIDATION and "fixed before the evaluation data" in err

        other = tmp_path / "other.jsonl"
        run(capsys, "simulate", "--game", "leduc", "--hands", 200, "--seed", 99, "--output", other)
        code, out, _ = run(capsys, "eval", "--input", other, "--heuristic-file", heur)
        assert code == EXIT_OK and rows(out)[0]["heuristic"] == "bayes-linear"

    def test_tampered_heuristic(self, leduc_corpus, tmp_path, capsys):
        heur = tmp_path / "h.json"
        run(capsys, "train", "--input", leduc_corpus, "--output", heur, "--heuristic", "tabular")
        heur.write_text(heur.read_text().replace('"default":', '"default": 1.0, "x":'))
        other = tmp_path / "other.jsonl"
        run(capsys, "simulate", "--game", "leduc", "--hands", 50, "--seed", 5, "--output", other)
        code, _, err = run(capsys, "eval", "--input", other, "--heuristic-file", heur)
        assert code == EXIT_VALIDATION and "changed after it was committed" in err


class TestPathology:
    def test_variance_attack(self, leduc_corpus, tmp_path, capsys):
        trace = tmp_path / "trace.csv"
        code, out, _ = run(capsys, "pathology", "--input", leduc_corpus, "--scheme", "aivat", "--player", 0,
                           "--output", trace)
        assert code == EXIT_OK
        report = rows(out)[0]
        assert float(report["ratio"]) < 0.01
        assert len(rows(trace.read_text())) == 251

    def test_tstat_attack(self, leduc_corpus, capsys):
        code, out, _ = run(capsys, "pathology", "--input", leduc_corpus, "--scheme", "aivat", "--player", 0,
                           "--objective", "tstat")
        assert code == EXIT_OK
        lo, hi = rows(out)
        assert float(lo["t"]) < 0 < float(hi["t"])

    def test_raw_scheme_rejected(self, leduc_corpus, capsys):
        assert run(capsys, "pathology", "--input", leduc_corpus, "--scheme", "raw")[0] == EXIT_USAGE


class TestConfig:
    def test_config_supplies_flags(self, leduc_corpus, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"# evaluation settings\ninput = {leduc_corpus}\nscheme = raw\npretty = false\n")
        code, out, _ = run(capsys, "eval", "--config", cfg)
        direct = run(capsys, "eval", "--input", leduc_corpus, "--scheme", "raw")[1]
        assert code == EXIT_OK and out == direct

    def test_command_line_wins(self, leduc_corpus, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"input = {leduc_corpus}\nscheme = mivat\n")
        code, out, _ = run(capsys, "eval", "--config", cfg, "--scheme", "raw")
        assert code == EXIT_OK and rows(out)[0]["scheme"] == "raw"

    def test_unknown_key(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("colour = blue\n")
        assert run(capsys, "check", "--config", cfg)[0] == EXIT_USAGE


class TestCheck:
    def test_passes(self, capsys):
        code, out, _ = run(capsys, "check", "--only", "group-zero-sum,closed-form,t-pvalue")
        assert code == EXIT_OK and out.count("PASS") == 3

    def test_corrupt_hook_fails(self, capsys):
        code, out, err = run(capsys, "check", "--only", "group-zero-sum", "--corrupt-coefficient")
        assert code == EXIT_CHECK and "FAIL group-zero-sum" in out and "group-zero-sum" in err

    def test_unknown_check(self, capsys):
        assert run(capsys, "check", "--only", "nonsense")[0] == EXIT_USAGE


def test_holdem_pipeline(tmp_path, capsys):
    path = tmp_path / "holdem.jsonl"
    assert run(capsys, "simulate", "--game", "holdem", "--hands", 30, "--seed", 1, "--output", path)[0] == 0
    code, out, _ = run(capsys, "eval", "--input", path, "--scheme", "mivat", "--hs-samples", 50,
                       "--heuristic", "bayes-linear", "--kfold", 3, "--player", 0)
    assert code == EXIT_OK and rows(out)[0]["n"] == "30"
