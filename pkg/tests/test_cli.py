import json
import shutil
import subprocess
import warnings
from pathlib import Path

import pytest

from netmed import cli
from netmed.sampler import ChainDraws, ChainConfig, NumericalError
from netmed.simstudy import SimCondition, grid_csv, run_condition

FAST = ["--iters", "400", "--burnin", "200"]


def run(*argv):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return cli.main([str(a) for a in argv])


def read_outputs(directory: Path) -> dict:
    """File bytes under ``directory``, with the manifest's timing field removed."""
    out = {}
    for p in sorted(directory.rglob("*")):
        if p.is_file():
            data = p.read_bytes()
            if p.name == "manifest.json":
                doc = json.loads(data)
                doc.pop("wall_clock_seconds")
                data = json.dumps(doc, sort_keys=True).encode()
            out[str(p.relative_to(directory))] = data
    return out


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    d = tmp_path_factory.mktemp("gen")
    assert run("generate", "--dim", 2, "--n", 60, "--med", ".1521", "--cprime", ".14",
               "--seed", 1, "--out", d, "--quiet") == 0
    return d


def test_generate_writes_files_and_manifest(dataset):
    names = sorted(p.name for p in dataset.iterdir())
    assert names == ["actors.csv", "manifest.json", "net.csv", "truth.json"]
    truth = json.loads((dataset / "truth.json").read_text())
    assert truth["med"] == pytest.approx(0.1521)
    assert truth["schema_version"] == 1
    man = json.loads((dataset / "manifest.json").read_text())
    assert {"command", "config", "seed", "inputs", "tool_version", "wall_clock_seconds"} <= set(man)


def test_generate_is_byte_identical(dataset, tmp_path):
    assert run("generate", "--dim", 2, "--n", 60, "--med", ".1521", "--cprime", ".14",
               "--seed", 1, "--out", tmp_path, "--quiet") == 0
    assert read_outputs(tmp_path) == read_outputs(dataset)


def test_generate_infeasible_condition(tmp_path, capsys):
    code = run("generate", "--dim", 2, "--n", 50, "--med", ".5", "--cprime", ".9", "--out", tmp_path)
    assert code == cli.EXIT_VALIDATION
    assert "not positive" in capsys.readouterr().err


def test_fit_reports_effect_table(dataset, tmp_path):
    out = tmp_path / "fit.json"
    code = run("fit", "--network", dataset / "net.csv", "--actors", dataset / "actors.csv",
               "--dim", 2, *FAST, "--out", out, "--draws", tmp_path / "draws.csv", "--quiet")
    assert code == 0
    doc = json.loads(out.read_text())
    for key in ("c_prime", "med", "tot"):
        assert set(doc[key]) == {"mean", "ci_lower", "ci_upper"}
        assert doc[key]["ci_lower"] <= doc[key]["ci_upper"]
    assert [r["effect"] for r in doc["effects_table"]] == ["c_prime", "med", "tot"]
    assert set(doc["effects_table"][0]) == {"effect", "est", "2.5%", "97.5%"}
    assert doc["diagnostics"]["n_retained"] == 200
    assert "z" in doc["acceptance"] and "alpha" in doc["acceptance"]
    assert (tmp_path / "manifest.json").exists()

    text = (tmp_path / "draws.csv").read_text()
    assert text.startswith("# netmed schema_version=1\n")
    draws = ChainDraws.from_csv(tmp_path / "draws.csv")
    assert len(draws) == 200 and "med" in draws

    summ = tmp_path / "s" / "summary.json"
    assert run("summarize", "--draws", tmp_path / "draws.csv", "--out", summ, "--quiet") == 0
    again = json.loads(summ.read_text())
    assert again["med"]["mean"] == pytest.approx(doc["med"]["mean"], abs=1e-12)
    assert again["tot"]["ci_upper"] == pytest.approx(doc["tot"]["ci_upper"], abs=1e-12)


def test_fit_binary_outcome(tmp_path):
    gen = tmp_path / "rep"
    assert run("generate", "--replica", "--n", 40, "--dim", 2, "--seed", 2, "--out", gen,
               "--quiet") == 0
    out = tmp_path / "fit" / "fit.json"
    assert run("fit", "--network", gen / "net.csv", "--actors", gen / "actors.csv", "--dim", 2,
               "--outcome", "binary", *FAST, "--out", out, "--quiet") == 0
    doc = json.loads(out.read_text())
    assert doc["parameters"]["sigma2_sq"]["mean"] == 1.0
    assert doc["model"]["outcome"] == "binary"


def test_fit_rejects_large_dimension(dataset, tmp_path, capsys):
    code = run("fit", "--network", dataset / "net.csv", "--actors", dataset / "actors.csv",
               "--dim", 200, *FAST, "--out", tmp_path / "f.json")
    assert code == cli.EXIT_VALIDATION
    assert "--dim 200" in capsys.readouterr().err


def test_fit_binary_requires_binary_outcome(dataset, tmp_path):
    code = run("fit", "--network", dataset / "net.csv", "--actors", dataset / "actors.csv",
               "--dim", 2, "--outcome", "binary", *FAST, "--out", tmp_path / "f.json")
    assert code == cli.EXIT_VALIDATION


def test_missing_input_file(tmp_path):
    code = run("fit", "--network", tmp_path / "none.csv", "--actors", tmp_path / "none.csv",
               "--dim", 2, "--out", tmp_path / "f.json")
    assert code == cli.EXIT_VALIDATION


def test_numerical_failure_exit_code(dataset, tmp_path, monkeypatch):
    def boom(*a, **k):
        raise NumericalError("non-finite state at iteration 3")

    monkeypatch.setattr(cli, "run_chain", boom)
    code = run("fit", "--network", dataset / "net.csv", "--actors", dataset / "actors.csv",
               "--dim", 2, "--out", tmp_path / "f.json")
    assert code == cli.EXIT_NUMERICAL


def test_select_dim_table(dataset, tmp_path, capsys):
    out = tmp_path / "sel"
    assert run("select-dim", "--network", dataset / "net.csv", "--dims", "1-3", *FAST,
               "--out", out) == 0
    lines = (out / "dims.csv").read_text().splitlines()
    assert lines[0].startswith("# netmed schema_version")
    assert lines[1] == "D,fpr,fnr,correct,bic"
    assert [ln.split(",")[0] for ln in lines[2:]] == ["1", "2", "3"]
    best = json.loads((out / "best_d.json").read_text())["best_d"]
    assert best in (1, 2, 3)
    assert f"best_d={best}" in capsys.readouterr().out


def test_select_dim_single_candidate(dataset, tmp_path):
    out = tmp_path / "sel"
    assert run("select-dim", "--network", dataset / "net.csv", "--dims", "2", *FAST,
               "--out", out, "--quiet") == 0
    assert json.loads((out / "best_d.json").read_text())["best_d"] == 2


def test_parse_dims():
    assert cli._parse_dims("1-3,5") == [1, 2, 3, 5]


def test_check_invariance_passes(tmp_path, capsys):
    code = run("check-invariance", "--k", 100, "--instances", 5, "--out", tmp_path)
    assert code == 0
    assert "PASS" in capsys.readouterr().out
    doc = json.loads((tmp_path / "invariance.json").read_text())
    assert doc["pass"] and doc["max_delta_med"] <= 1e-9


def test_check_invariance_threshold_exit(monkeypatch):
    monkeypatch.setattr(cli, "invariance_suite",
                        lambda *a: {"max_delta_med": 1e-3, "max_delta_direct": 0.0})
    assert run("check-invariance", "--k", 1) == cli.EXIT_THRESHOLD


def test_simulate_singleton_matches_run_condition(tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps([{"D": 2, "n": 40, "med": 0.1521, "c_prime": 0.14}]))
    out = tmp_path / "sim"
    assert run("simulate", "--grid", grid, "--reps", 2, "--seed", 5, *FAST, "--plot-data",
               "--out", out, "--quiet") == 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = run_condition(SimCondition(2, 40, 0.1521, 0.14, n_reps=2, base_seed=5),
                            ChainConfig(400, 200, seed=5))
    body = (out / "aggregate.csv").read_text().split("\n", 1)[1]
    assert body == grid_csv([rep])
    assert (out / "plot_data.csv").read_text().split("\n", 1)[1] == grid_csv([rep], clip=True)
    agg = json.loads((out / "aggregate.json").read_text())
    assert agg["conditions"][0]["n_failed"] == 0


def test_simulate_bad_grid(tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps([{"D": 2}]))
    assert run("simulate", "--grid", grid, "--out", tmp_path / "o", "--quiet") == cli.EXIT_VALIDATION


@pytest.mark.skipif(shutil.which("netmed") is None, reason="console script not installed")
def test_console_script_version():
    res = subprocess.run(["netmed", "--version"], capture_output=True, text=True, check=True)
    assert res.stdout.strip() == cli.__version__


def test_summarize_separates_orientation_dependent_columns(dataset, tmp_path):
    assert run("fit", "--network", dataset / "net.csv", "--actors", dataset / "actors.csv",
               "--dim", 2, *FAST, "--out", tmp_path / "f.json", "--draws", tmp_path / "d.csv",
               "--quiet") == 0
    assert run("summarize", "--draws", tmp_path / "d.csv", "--out", tmp_path / "s.json",
               "--quiet") == 0
    doc = json.loads((tmp_path / "s.json").read_text())
    assert {"med", "tot", "c_prime", "alpha", "sigma2_sq"} <= set(doc["parameters"])
    assert "a_1" not in doc["parameters"] and "a_1" in doc["orientation_dependent"]
