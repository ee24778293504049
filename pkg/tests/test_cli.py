import pytest

from cbdetect.cli import main, parse_settings
from cbdetect.corpus import load_dataset, save_dataset
from cbdetect.errors import DataError
from synth import synthetic_videos


@pytest.fixture(scope="module")
def data_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "videos.jsonl"
    save_dataset(synthetic_videos(30, seed=60), path)
    return str(path)


def fast_config(tmp_path, extra=""):
    text = (
        "word2vec.dim = 8\n"
        "word2vec.epochs = 2\n"
        "word2vec.window = 2\n"
        "forest.n_estimators = 5\n"
        "mlp.hidden_layers = (4,)\n"
        "mlp.epochs = 3\n"
        "logreg_epochs = 40\n" + extra
    )
    path = tmp_path / "fast.cfg"
    path.write_text(text)
    return str(path)


class TestParseSettings:
    def test_literals_and_raw_strings(self):
        s = parse_settings("a = 5\nb = 0.5\nc = title,likes\nd = (4, 2)\n")
        assert s == {"a": 5, "b": 0.5, "c": "title,likes", "d": (4, 2)}

    def test_comments_and_blanks(self):
        assert parse_settings("# top\n\nx = 1  # inline\n") == {"x": 1}

    def test_duplicate_key_rejected(self):
        with pytest.raises(DataError):
            parse_settings("x = 1\nx = 2\n")

    def test_missing_equals_rejected(self):
        with pytest.raises(DataError, match="line 1"):
            parse_settings("just words\n")


class TestExitCodes:
    def test_help_is_zero(self, capsys):
        assert main(["--help"]) == 0
        capsys.readouterr()

    def test_unknown_subcommand_is_usage_error(self, capsys):
        assert main(["frobnicate"]) == 1
        capsys.readouterr()

    def test_missing_required_flag_is_usage_error(self, capsys):
        assert main(["train", "--data", "x.jsonl"]) == 1
        capsys.readouterr()

    def test_missing_file_is_data_error(self, capsys):
        assert main(["ingest", "/nonexistent/videos.jsonl"]) == 2
        capsys.readouterr()

    def test_malformed_data_is_data_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"video_id": "v", "title": 3}\n')
        assert main(["ingest", str(bad)]) == 2
        capsys.readouterr()

    def test_numeric_blowup_is_exit_three(self, data_file, tmp_path, capsys):
        cfg = fast_config(tmp_path, extra="logreg_learning_rate = 1e200\n")
        code = main(
            ["train", "--data", data_file, "--config", cfg,
             "--out", str(tmp_path / "m.cbd")]
        )
        assert code == 3
        capsys.readouterr()


class TestIngestStats:
    def test_ingest_counts(self, data_file, capsys):
        assert main(["ingest", data_file]) == 0
        out = capsys.readouterr().out
        assert "records: 30" in out
        assert "clickbait: 15" in out
        assert "non-clickbait: 15" in out

    def test_stats_table_lists_every_item(self, data_file, capsys):
        assert main(["stats", data_file]) == 0
        out = capsys.readouterr().out
        for label in (
            "Title length",
            "Description length",
            "View count",
            "Comment count",
            "Like count",
            "Subscriber count",
            "Dislike count",
        ):
            assert label in out
        assert "Min" in out and "Mean" in out and "Max" in out


class TestSplit:
    def test_split_writes_partition(self, data_file, tmp_path, capsys):
        train_out = tmp_path / "tr.jsonl"
        test_out = tmp_path / "te.jsonl"
        code = main(
            ["split", data_file, "--test-fraction", "0.2", "--stratified",
             "--train-out", str(train_out), "--test-out", str(test_out)]
        )
        assert code == 0
        capsys.readouterr()
        train = load_dataset(train_out)
        test = load_dataset(test_out)
        assert len(train) == 24 and len(test) == 6
        all_ids = {r.video_id for r in load_dataset(data_file).records}
        assert {r.video_id for r in train.records} | {r.video_id for r in test.records} == all_ids

    def test_split_is_deterministic(self, data_file, tmp_path, capsys):
        outs = []
        for tag in ("a", "b"):
            tr = tmp_path / f"{tag}.tr.jsonl"
            te = tmp_path / f"{tag}.te.jsonl"
            assert main(
                ["split", data_file, "--test-fraction", "0.3", "--seed", "5",
                 "--train-out", str(tr), "--test-out", str(te)]
            ) == 0
            outs.append((tr.read_bytes(), te.read_bytes()))
        capsys.readouterr()
        assert outs[0] == outs[1]


@pytest.fixture(scope="module")
def model_file(data_file, tmp_path_factory):
    tmp = tmp_path_factory.mktemp("model")
    cfg = fast_config(tmp)
    out = tmp / "model.cbd"
    code = main(["train", "--data", data_file, "--config", cfg, "--out", str(out)])
    assert code == 0
    return str(out)


class TestTrainEvalPredict:
    def test_train_announces_output(self, data_file, tmp_path, capsys):
        cfg = fast_config(tmp_path)
        out = tmp_path / "m.cbd"
        assert main(["train", "--data", data_file, "--config", cfg, "--out", str(out)]) == 0
        printed = capsys.readouterr().out
        assert str(out) in printed
        assert out.exists()

    def test_eval_prints_report_and_auc(self, model_file, data_file, tmp_path, capsys):
        roc_out = tmp_path / "roc.csv"
        code = main(
            ["eval", "--model", model_file, "--data", data_file, "--roc-out", str(roc_out)]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "non-clickbait (0)" in out
        assert "clickbait (1)" in out
        assert "macro avg" in out and "weighted avg" in out
        assert "AUC:" in out
        assert roc_out.read_text().startswith("fpr,tpr")

    def test_predict_lines_are_tab_separated_and_deterministic(
        self, model_file, data_file, capsys
    ):
        assert main(["predict", "--model", model_file, "--data", data_file]) == 0
        first = capsys.readouterr().out
        assert main(["predict", "--model", model_file, "--data", data_file]) == 0
        second = capsys.readouterr().out
        assert first == second
        lines = first.strip().splitlines()
        assert len(lines) == 30
        vid, prob, label = lines[0].split("\t")
        assert vid.startswith("syn")
        assert 0.0 <= float(prob) <= 1.0
        assert label in ("0", "1")

    def test_same_seed_same_model_bytes(self, data_file, tmp_path, capsys):
        cfg = fast_config(tmp_path)
        a, b = tmp_path / "a.cbd", tmp_path / "b.cbd"
        for out in (a, b):
            assert main(
                ["train", "--data", data_file, "--config", cfg,
                 "--model", "rf", "--seed", "3", "--out", str(out)]
            ) == 0
        capsys.readouterr()
        assert a.read_bytes() == b.read_bytes()


class TestGridSearch:
    def test_end_to_end(self, data_file, tmp_path, capsys):
        grid = tmp_path / "grid.txt"
        grid.write_text("logreg_epochs = [5, 20]\n")
        cfg = fast_config(tmp_path)
        trials_out = tmp_path / "trials.csv"
        code = main(
            ["gridsearch", "--grid", str(grid), "--data", data_file,
             "--config", cfg, "--trials-out", str(trials_out)]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "best logreg_epochs" in out
        assert "validation accuracy:" in out
        lines = trials_out.read_text().strip().splitlines()
        assert lines[0] == "trial,logreg_epochs,accuracy,wall_time,seed"
        assert len(lines) == 3

    def test_bad_grid_file_is_data_error(self, data_file, tmp_path, capsys):
        grid = tmp_path / "grid.txt"
        grid.write_text("nonsense without equals\n")
        assert main(["gridsearch", "--grid", str(grid), "--data", data_file]) == 2
        capsys.readouterr()
