import csv
import io
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cqa import harness
from cqa.cli import main
from cqa.dynamics import Schedule
from cqa.graph import Graph, parse_edge_list, random_regular
from cqa.harness import ExperimentConfig, realization_seed, run_sweep


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestSeeds:
    def test_split_is_counter_based(self):
        ref = int(np.random.SeedSequence(5, spawn_key=(3,)).generate_state(1)[0])
        assert realization_seed(5, 3) == ref

    @given(st.integers(0, 2**31), st.integers(0, 500))
    def test_seed_isolation(self, master, i):
        cfg = ExperimentConfig(realizations=i + 1, master_seed=master)
        assert cfg.seeds()[i] == realization_seed(master, i)
        assert ExperimentConfig(realizations=i + 3, master_seed=master).seeds()[: i + 1] == cfg.seeds()


class TestConfig:
    def test_tau_grid_default(self):
        grid = harness.default_tau_grid("linear")
        assert grid[0] == pytest.approx(0.5) and grid[-1] == pytest.approx(200)
        assert len(grid) == round(16 * math.log10(400)) + 1
        ex = harness.default_tau_grid("exp")
        assert ex[0] == pytest.approx(0.05) and ex[-1] == pytest.approx(20)

    @pytest.mark.parametrize("taus", [(), (2.0, 1.0), (0.0, 1.0), (1.0, 1.0)])
    def test_bad_tau_grid(self, taus):
        with pytest.raises(ValueError):
            ExperimentConfig(taus=taus)

    def test_bad_realizations(self):
        with pytest.raises(ValueError):
            ExperimentConfig(realizations=0)

    def test_worker_env(self, monkeypatch):
        monkeypatch.setenv("CQA_THREADS", "3")
        assert harness.worker_count() == 3
        monkeypatch.setenv("CQA_THREADS", "zero")
        with pytest.raises(ValueError):
            harness.worker_count()


SMALL = dict(realizations=3, taus=(0.5, 1.0), dt=0.01, sample_count=4)


class TestSweep:
    def test_single_cell_aggregate(self):
        cfg = ExperimentConfig(realizations=1, taus=(0.7,), drivers=("fc",), dt=0.01, sample_count=4)
        res = run_sweep(cfg, workers=1)
        assert len(res.cells) == 1 and len(res.aggregate) == 1
        cell, agg = res.cells[0], res.aggregate[0]
        assert agg.mean_residual_energy == cell.outcome.residual_energy
        assert agg.mean_success_probability == cell.outcome.success_probability
        g = random_regular(6, 3, cell.seed)
        direct = harness.anneal(g, 4, "fc", "linear", 0.7, 0.01, 4)
        assert direct.residual_energy == cell.outcome.residual_energy

    def test_byte_identical_across_workers(self, tmp_path):
        a = run_sweep(ExperimentConfig(**SMALL, output=str(tmp_path / "a.csv")), workers=1)
        b = run_sweep(ExperimentConfig(**SMALL, output=str(tmp_path / "b.csv")), workers=2)
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert harness.aggregate_csv(a.aggregate) == harness.aggregate_csv(b.aggregate)

    def test_aggregate_is_mean_of_rows(self):
        res = run_sweep(ExperimentConfig(**SMALL), workers=1)
        table = rows(harness.sweep_csv(res.cells))
        assert list(table[0]) == list(harness.SWEEP_HEADER)
        for agg in res.aggregate:
            sel = [r for r in table if r["driver"] == agg.driver and float(r["tau"]) == agg.tau]
            assert len(sel) == 3
            assert np.mean([float(r["E_res"]) for r in sel]) == pytest.approx(agg.mean_residual_energy, rel=1e-15)
            assert np.mean([float(r["P_suc"]) for r in sel]) == pytest.approx(agg.mean_success_probability, rel=1e-15)

    def test_failed_cells_reported(self):
        # dt far too large for the spectrum: every cell trips the norm-drift check
        cfg = ExperimentConfig(realizations=2, taus=(2.0,), drivers=("fc",), dt=0.3, sample_count=2)
        res = run_sweep(cfg, workers=1)
        assert len(res.failures) == 2
        assert all("NormDriftError" in c.error for c in res.failures)
        table = rows(harness.sweep_csv(res.cells))
        assert all(r["E_res"] == "" and r["P_suc"] == "" for r in table)
        assert res.aggregate[0].n_failed == 2 and math.isnan(res.aggregate[0].mean_residual_energy)

    def test_uncolorable_flagged(self):
        # q = 3 cannot color K4, which is the only 3-regular graph on 4 nodes
        cfg = ExperimentConfig(n_nodes=4, q=3, realizations=1, taus=(1.0,), drivers=("nn",), dt=0.01, sample_count=2)
        res = run_sweep(cfg, workers=1)
        assert rows(harness.sweep_csv(res.cells))[0]["colorable"] == "false"
        assert res.cells[0].outcome.residual_energy >= 0


class TestTrajectory:
    def test_empty_graph(self):
        traj, tables = harness.run_trajectory(Graph(3), 3, "nn", Schedule("linear", 1.0), 0.01, 5)
        table = rows(harness.trajectory_csv(traj))
        assert list(table[0]) == list(harness.TRAJECTORY_HEADER)
        assert all(float(r["E_ir"]) == 0.0 for r in table)
        assert tables == {}

    def test_snapshots_and_determinism(self):
        g = random_regular(6, 3, 0)
        outs = []
        for _ in range(2):
            traj, tables = harness.run_trajectory(g, 4, "fc", Schedule("linear", 2.0), 0.01, 4, (0.8, 0.9, 1.0), 4)
            outs.append(harness.trajectory_csv(traj) + harness.populations_csv(tables))
        assert outs[0] == outs[1]
        assert sorted(tables) == [0.8, 0.9, 1.0]
        pop = rows(harness.populations_csv(tables))
        assert list(pop[0]) == list(harness.POPULATION_HEADER)
        assert {float(r["s"]) for r in pop} == {0.8, 0.9, 1.0}


def run_cli(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "cqa", *args], capture_output=True, text=True, cwd=cwd)


class TestCli:
    def test_gen_graph_then_oracle(self, tmp_path):
        assert main(["gen-graph", "-n", "6", "-c", "3", "--seed", "7", "-o", str(tmp_path / "g.txt")]) == 0
        g = parse_edge_list((tmp_path / "g.txt").read_text())
        assert g.degrees() == [3] * 6
        out = run_cli("oracle", str(tmp_path / "g.txt"), "-q", "4")
        assert out.returncode == 0
        fields = dict(line.split() for line in out.stdout.splitlines())
        assert int(fields["proper_colorings"]) % 24 == 0 and int(fields["proper_colorings"]) > 0
        assert fields["E0"] == "0"

    def test_anneal_adiabatic(self, tmp_path):
        main(["gen-graph", "-n", "6", "-c", "3", "--seed", "7", "-o", str(tmp_path / "g.txt")])
        out = run_cli("anneal", str(tmp_path / "g.txt"), "-q", "4", "--driver", "fc", "--schedule", "linear",
                      "--tau", "100", "--dt", "0.01")
        assert out.returncode == 0, out.stderr
        fields = dict(line.split() for line in out.stdout.splitlines())
        assert float(fields["P_suc"]) > 0.99

    def test_help(self):
        for cmd in ("sweep", "gen-graph", "oracle", "anneal", "gap", "trajectory", "populations"):
            out = run_cli(cmd, "--help")
            assert out.returncode == 0 and "usage" in out.stdout

    def test_usage_error(self):
        assert run_cli("sweep", "--bogus").returncode == 2
        assert run_cli("sweep", "--driver", "xy").returncode == 2
        assert run_cli().returncode == 2

    def test_data_error(self, tmp_path):
        (tmp_path / "bad.txt").write_text("3\n0 0\n")
        out = run_cli("oracle", str(tmp_path / "bad.txt"))
        assert out.returncode == 1 and "self-loop" in out.stderr
        assert run_cli("oracle", str(tmp_path / "missing.txt")).returncode == 1

    def test_sweep_failure_exit(self, tmp_path):
        out = run_cli("sweep", "--realizations", "1", "--tau-grid", "2", "--driver", "fc", "--dt", "0.3",
                      "--samples", "2", "-o", str(tmp_path / "s.csv"))
        assert out.returncode == 1 and "NormDriftError" in out.stderr

    def test_sweep_csv(self, tmp_path):
        args = ["sweep", "--realizations", "2", "--tau-grid", "0.5,1", "--dt", "0.01", "--samples", "2"]
        assert main([*args, "-o", str(tmp_path / "s.csv"), "--aggregate", str(tmp_path / "a.csv")]) == 0
        table = rows((tmp_path / "s.csv").read_text())
        assert len(table) == 2 * 2 * 2
        assert list(table[0]) == list(harness.SWEEP_HEADER)
        assert rows((tmp_path / "a.csv").read_text())[0]["n_ok"] == "2"

    def test_tau_grid_range(self, tmp_path):
        assert main(["sweep", "--realizations", "1", "--tau-grid", "0.5:1:3", "--driver", "fc", "--dt", "0.01",
                     "--samples", "2", "-o", str(tmp_path / "s.csv")]) == 0
        taus = [float(r["tau"]) for r in rows((tmp_path / "s.csv").read_text())]
        assert len(taus) == 2 and taus[0] == 0.5 and taus[-1] == pytest.approx(1.0)

    def test_gap_and_populations(self, tmp_path):
        assert main(["gap", "fig5b", "--driver", "fc", "--points", "3", "-o", str(tmp_path / "gap.csv")]) == 0
        gap = rows((tmp_path / "gap.csv").read_text())
        assert list(gap[0]) == list(harness.GAP_HEADER) and len(gap) == 3
        assert float(gap[-1]["gap"]) == 0.0
        assert main(["populations", "fig5b", "--driver", "fc", "--tau", "1", "--dt", "0.01", "--samples", "4",
                     "--snapshots", "0.5,1.0", "--levels", "3", "-o", str(tmp_path / "p.csv")]) == 0
        pops = rows((tmp_path / "p.csv").read_text())
        assert {r["s"] for r in pops} == {"0.5", "1.0"}
        assert main(["trajectory", "fig5b", "--driver", "fc", "--tau", "1", "--dt", "0.01", "--samples", "4",
                     "-o", str(tmp_path / "t.csv")]) == 0
        traj = rows((tmp_path / "t.csv").read_text())
        assert len(traj) == 5 and all(r["f_g"] != "" for r in traj)
