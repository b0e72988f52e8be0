import csv
import io
import json

import pytest

from fluxmem.cli import main
from fluxmem.fmts import read_all
from fluxmem.synth import SceneSpec, scene_text


def write_scene(tmp_path, spec, name="scene.txt"):
    path = tmp_path / name
    path.write_text(scene_text(spec))
    return path


def read_csv_rows(path):
    with open(path, newline="") as fh:
        text = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("".join(text))))


STATIC = SceneSpec("static", 4, 4, 8, 20, seed=1)
CUTS = SceneSpec("scene_cuts", 4, 5, 16, 16, cut_period=5, cut_fraction=0.8, seed=3)


class TestGen:
    def test_gen_writes_valid_stream(self, tmp_path, capsys):
        scene = write_scene(tmp_path, STATIC)
        out = tmp_path / "stream.fmts"
        assert main(["gen", "--spec", str(scene), "--out", str(out)]) == 0
        with open(out, "rb") as fh:
            grids = read_all(fh)
        assert len(grids) == 20
        assert "20 frames" in capsys.readouterr().out

    def test_gen_bad_spec_exits_nonzero(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("kind = wormhole\nheight = 4\nwidth = 4\ndim = 8\nnum_frames = 2\n")
        assert main(["gen", "--spec", str(bad), "--out", str(tmp_path / "x.fmts")]) == 2
        assert "error:" in capsys.readouterr().err


class TestRun:
    def test_run_from_spec_writes_reports(self, tmp_path):
        scene = write_scene(tmp_path, STATIC)
        out = tmp_path / "out"
        rc = main(
            ["run", "--spec", str(scene), "--out", str(out), "--cs", "2", "--cm", "256",
             "--cl", "256", "--no-plot"]
        )
        assert rc == 0
        rows = read_csv_rows(out / "run_frames.csv")
        assert len(rows) == 20
        summary = json.loads((out / "run_summary.json").read_text())
        # static closed form: held = c_s*HW + HW (frame 0 entry still in mid)
        hw = 16
        expected = 1.0 - (2 * hw + hw) / (20 * hw)
        assert summary["aggregates"]["final_drop_ratio"] == pytest.approx(expected)
        assert summary["config"]["c_s"] == 2

    def test_run_from_fmts_input(self, tmp_path):
        scene = write_scene(tmp_path, STATIC)
        stream = tmp_path / "s.fmts"
        main(["gen", "--spec", str(scene), "--out", str(stream)])
        out = tmp_path / "out"
        rc = main(["run", "--input", str(stream), "--out", str(out), "--no-plot"])
        assert rc == 0
        assert (out / "run_frames.csv").exists()

    def test_no_timing_gives_byte_identical_csv(self, tmp_path):
        scene = write_scene(tmp_path, CUTS)
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            rc = main(
                ["run", "--spec", str(scene), "--out", str(out), "--cs", "2",
                 "--no-timing", "--no-plot"]
            )
            assert rc == 0
            outs.append((out / "run_frames.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_gamma_one_never_triggers(self, tmp_path):
        scene = write_scene(tmp_path, CUTS)
        events = tmp_path / "events.jsonl"
        events.write_text('{"frame": 0, "event": "query"}\n')
        out = tmp_path / "out"
        rc = main(
            ["run", "--spec", str(scene), "--events", str(events), "--gamma", "1.0",
             "--out", str(out), "--cs", "2", "--no-plot"]
        )
        assert rc == 0
        rows = read_csv_rows(out / "run_frames.csv")
        assert all(r["trigger_fired"] == "0" for r in rows)
        assert rows[0]["query"] == "1"

    def test_trigger_fires_with_query_events(self, tmp_path):
        scene = write_scene(tmp_path, CUTS)
        events = tmp_path / "events.jsonl"
        events.write_text('{"frame": 0, "event": "query"}\n')
        out = tmp_path / "out"
        main(
            ["run", "--spec", str(scene), "--events", str(events), "--gamma", "0.4",
             "--out", str(out), "--cs", "2", "--no-plot"]
        )
        rows = read_csv_rows(out / "run_frames.csv")
        fired = [int(r["frame"]) for r in rows if r["trigger_fired"] == "1"]
        assert fired == [5, 10, 15]

    def test_config_validation_error_exit_code(self, tmp_path, capsys):
        scene = write_scene(tmp_path, STATIC)
        rc = main(["run", "--spec", str(scene), "--out", str(tmp_path / "o"), "--cs", "1"])
        assert rc == 2
        assert "c_s" in capsys.readouterr().err

    def test_plots_written_by_default(self, tmp_path):
        scene = write_scene(tmp_path, SceneSpec("static", 4, 4, 8, 6, seed=1))
        out = tmp_path / "out"
        rc = main(["run", "--spec", str(scene), "--out", str(out), "--cs", "2"])
        assert rc == 0
        assert (out / "run_overview.png").exists()

    def test_events_with_unknown_kind_rejected(self, tmp_path, capsys):
        scene = write_scene(tmp_path, STATIC)
        events = tmp_path / "events.jsonl"
        events.write_text('{"frame": 1, "event": "dance"}\n')
        rc = main(
            ["run", "--spec", str(scene), "--events", str(events), "--out", str(tmp_path / "o"),
             "--no-plot"]
        )
        assert rc == 2


class TestBench:
    def test_uniform_kept_counts_exact(self, tmp_path):
        scene = write_scene(tmp_path, SceneSpec("noise", 4, 4, 8, 6, seed=2))
        out = tmp_path / "out"
        rc = main(
            ["bench", "--spec", str(scene), "--policy", "uniform",
             "--ratios", "0,0.25,0.5,0.75", "--out", str(out), "--no-plot"]
        )
        assert rc == 0
        rows = read_csv_rows(out / "bench.csv")
        n = 6 * 16
        kept = {float(r["param"]): int(r["tokens_kept"]) for r in rows}
        assert kept == {0.0: n, 0.25: int(0.75 * n), 0.5: int(0.5 * n), 0.75: int(0.25 * n)}

    def test_fluxmem_reports_self_determined_ratio(self, tmp_path):
        scene = write_scene(tmp_path, SceneSpec("noise", 4, 4, 8, 6, seed=2))
        out = tmp_path / "out"
        rc = main(["bench", "--spec", str(scene), "--policy", "fluxmem", "--out", str(out), "--no-plot"])
        assert rc == 0
        rows = read_csv_rows(out / "bench.csv")
        assert len(rows) == 1
        assert rows[0]["param_kind"] == "adaptive"
        assert rows[0]["param"] == "nan"
        assert 0.0 <= float(rows[0]["drop_ratio"]) <= 1.0

    def test_fixed_threshold_sweep_monotone(self, tmp_path):
        scene = write_scene(tmp_path, SceneSpec("noise", 4, 4, 8, 6, seed=2))
        out = tmp_path / "out"
        rc = main(
            ["bench", "--spec", str(scene), "--policy", "fixed_threshold",
             "--thetas", "0,0.5,1.0,1.5,2.0", "--out", str(out), "--no-plot"]
        )
        assert rc == 0
        rows = read_csv_rows(out / "bench.csv")
        kept = [int(r["tokens_kept"]) for r in rows]
        assert all(a >= b for a, b in zip(kept, kept[1:]))

    def test_unknown_policy_rejected(self, tmp_path, capsys):
        scene = write_scene(tmp_path, SceneSpec("noise", 4, 4, 8, 4, seed=2))
        rc = main(
            ["bench", "--spec", str(scene), "--policy", "telepathy", "--out", str(tmp_path / "o"),
             "--no-plot"]
        )
        assert rc == 2
        assert "unknown policy" in capsys.readouterr().err

    def test_proxy_fidelity_labeled_in_header(self, tmp_path):
        scene = write_scene(tmp_path, SceneSpec("noise", 4, 4, 8, 4, seed=2))
        out = tmp_path / "out"
        main(["bench", "--spec", str(scene), "--policy", "uniform", "--ratios", "0.5",
              "--out", str(out), "--no-plot"])
        text = (out / "bench.csv").read_text()
        assert text.startswith("# proxy_fidelity")
        assert "invented diagnostic" in text

    def test_bench_figures_written_by_default(self, tmp_path):
        scene = write_scene(tmp_path, SceneSpec("noise", 4, 4, 8, 4, seed=2))
        out = tmp_path / "out"
        rc = main(["bench", "--spec", str(scene), "--policy", "uniform,fifo",
                   "--ratios", "0,0.5", "--out", str(out)])
        assert rc == 0
        assert (out / "bench_kept.png").exists()
        assert (out / "bench_fidelity.png").exists()


class TestOracle:
    def test_oracle_passes_quickly(self, capsys):
        rc = main(
            ["oracle", "--otsu-trials", "40", "--tas-trials", "6", "--sdc-trials", "10",
             "--pair-trials", "10"]
        )
        out = capsys.readouterr().out
        assert rc == 0
        assert out.count("[PASS]") == 4

    def test_oracle_reports_mismatch_coordinates(self, monkeypatch, capsys):
        # an injected off-by-one in the fast neighborhood must be caught and
        # located by coordinate
        import numpy as np

        import fluxmem.scoring as scoring
        from fluxmem.oracles import check_tas

        real = scoring.backward_scores

        def shifted(current, previous):
            return np.roll(real(current, previous), 1, axis=1)

        monkeypatch.setattr(scoring, "backward_scores", shifted)
        res = check_tas(trials=3)
        assert not res.ok
        assert "first mismatch at (h=" in res.detail
