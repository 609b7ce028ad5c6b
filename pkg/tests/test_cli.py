import json

import pytest

from logbench.cli import main
from logbench.synth import generate_dataset, write_dataset


@pytest.fixture()
def dataset(tmp_path):
    ds = generate_dataset(n_templates=5, n_lines=200, seed=60)
    write_dataset(ds, tmp_path / "data")
    return ds, tmp_path / "data" / f"{ds.name}.yaml", tmp_path


class TestParseCommand:
    def test_writes_csv(self, dataset, capsys):
        ds, manifest, base = dataset
        out = base / "parsed.csv"
        code = main(
            ["parse", "--parser", "drain", "--dataset", str(manifest),
             "--out", str(out)]
        )
        assert code == 0
        assert out.exists()
        header = out.read_text(encoding="utf-8").splitlines()[0]
        assert header == "LineId,EventTemplate"

    def test_parser_params(self, dataset):
        ds, manifest, base = dataset
        out = base / "parsed.csv"
        code = main(
            ["parse", "--parser", "drain", "--dataset", str(manifest),
             "--out", str(out), "--param", "depth=5",
             "--param", "similarity_threshold=0.5"]
        )
        assert code == 0

    def test_bad_param_is_error(self, dataset):
        ds, manifest, base = dataset
        code = main(
            ["parse", "--parser", "drain", "--dataset", str(manifest),
             "--out", str(base / "x.csv"), "--param", "nope=1"]
        )
        assert code == 2


class TestMetricsCommand:
    def test_report_with_strata(self, dataset, capsys):
        ds, manifest, base = dataset
        parsed = base / "parsed.csv"
        main(["parse", "--parser", "drain", "--dataset", str(manifest),
              "--out", str(parsed)])
        capsys.readouterr()
        truth = base / "data" / f"{ds.name}_truth.csv"
        report_path = base / "report.json"
        code = main(
            ["metrics", "--parsed", str(parsed), "--truth", str(truth),
             "--stratify", "k=20", "--param-buckets",
             "--out", str(report_path)]
        )
        assert code == 0
        payload = json.loads(report_path.read_text(encoding="utf-8"))
        assert payload["ga"] == 1.0
        kinds = {s["kind"] for s in payload["strata"]}
        assert kinds == {"frequency-top", "frequency-bottom", "param-bucket"}
        printed = capsys.readouterr().out
        assert '"fga": 1.0' in printed


class TestRunCommand:
    def test_matrix_and_exit_code(self, dataset, capsys):
        ds, manifest, base = dataset
        spec = base / "spec.yaml"
        spec.write_text(
            f"datasets: ['{manifest}']\n"
            "parsers: [drain, lfa]\n"
            f"output_dir: {base / 'out'}\n",
            encoding="utf-8",
        )
        code = main(["run", "--spec", str(spec)])
        assert code == 0
        assert (base / "out" / "aggregate.csv").exists()
        out = capsys.readouterr().out
        assert "drain x" in out

    def test_nonzero_exit_on_failure(self, dataset, capsys):
        ds, manifest, base = dataset
        spec = base / "spec.yaml"
        spec.write_text(
            f"datasets: ['{manifest}']\n"
            "parsers:\n"
            "  - name: external\n"
            "    parameters: {command: 'false {input} {output}'}\n"
            f"output_dir: {base / 'out'}\n",
            encoding="utf-8",
        )
        code = main(["run", "--spec", str(spec)])
        assert code == 1


class TestGroupsCommand:
    def test_dump(self, dataset, capsys):
        ds, manifest, base = dataset
        code = main(["groups", "--dataset", str(manifest), "--out", str(base / "g")])
        assert code == 0
        assert (base / "g" / "index.json").exists()


class TestSynthCommand:
    def test_generates_loadable_dataset(self, tmp_path, capsys):
        code = main(
            ["synth", "--out", str(tmp_path / "demo"), "--templates", "4",
             "--lines", "50", "--seed", "3", "--name", "demo"]
        )
        assert code == 0
        assert (tmp_path / "demo" / "demo.yaml").exists()
        assert (tmp_path / "demo" / "demo.log").exists()
        assert (tmp_path / "demo" / "demo_truth.csv").exists()
