"""Larger-scale checks: sampled exactness beyond exhaustive domains,
concurrency determinism, and CLI/file-path parity with in-process runs."""

import json
import random
from concurrent.futures import ThreadPoolExecutor

from click.testing import CliRunner

from tablewright.cli import main
from tablewright.ir import Simulator
from tablewright.mappings import map_dt_eb
from tablewright.model_spec import model_to_dict
from tablewright.reference import reference_predict
from tablewright.synth import random_dt, uniform_inputs


def test_eb_exactness_sampled_on_large_domain():
    # 2 features x 12 bits (2^24 points) is past the exhaustive cutoff, so
    # exactness is checked on 10^5 sampled inputs instead.
    rng = random.Random(31)
    spec = random_dt(rng, [12, 12], depth=5, n_classes=3)
    sim = Simulator(map_dt_eb(spec))
    for x in uniform_inputs(rng, [12, 12], 100_000):
        assert sim.run(x) == reference_predict(spec, x)


def test_simulator_deterministic_across_thread_counts():
    rng = random.Random(5)
    spec = random_dt(rng, [8, 8], depth=4, n_classes=3)
    sim = Simulator(map_dt_eb(spec))
    inputs = uniform_inputs(rng, [8, 8], 2000)
    serial = [sim.run(x) for x in inputs]
    for workers in (2, 8):
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parallel = list(pool.map(sim.run, inputs))
        assert parallel == serial


def test_cli_simulate_matches_in_process_on_10k_rows(tmp_path):
    rng = random.Random(11)
    spec = random_dt(rng, [6, 6], depth=4, n_classes=2)
    (tmp_path / "model.json").write_text(json.dumps(model_to_dict(spec)))
    inputs = uniform_inputs(rng, [6, 6], 10_000)
    rows = ["f0,f1"] + [f"{a},{b}" for a, b in inputs]
    (tmp_path / "data.csv").write_text("\n".join(rows) + "\n")

    runner = CliRunner()
    out = tmp_path / "out"
    assert runner.invoke(main, ["convert", "--model", str(tmp_path / "model.json"),
                                "--variant", "eb", "--out", str(out)]).exit_code == 0
    assert runner.invoke(main, ["simulate", "--program", str(out / "program.json"),
                                "--dataset", str(tmp_path / "data.csv"),
                                "--out", str(tmp_path / "preds.csv")]).exit_code == 0

    got = [int(l) for l in
           (tmp_path / "preds.csv").read_text().strip().splitlines()[1:]]
    sim = Simulator(map_dt_eb(spec))
    assert got == [sim.run(x) for x in inputs]
