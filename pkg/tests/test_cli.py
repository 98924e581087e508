import json
import os

import pytest

from hilayout.cli import main
from hilayout.hierarchy_io import load_layout, save, serialize
from hilayout.llm_client import default_fixtures_dir


def run(*argv):
    return main(list(argv))


def test_synth_fixture_bedroom(tmp_path, capsys):
    out = tmp_path / "bedroom.hilayout"
    plot = tmp_path / "bedroom.svg"
    code = run(
        "synth", "--requirement", "bedroom", "--room", "4.0x4.6",
        "--rule-fallback", "--seed", "7", "--out", str(out), "--plot", str(plot),
    )
    assert code == 0
    assert "feasible=True" in capsys.readouterr().out
    layout, _ = load_layout(out)
    assert len(layout.object_poses) == 6
    assert layout.report.feasible
    svg = plot.read_text()
    assert svg.startswith("<svg") and "bed_1" in svg


def test_synth_reproducible_bytes(tmp_path):
    a, b = tmp_path / "a.hilayout", tmp_path / "b.hilayout"
    pa, pb = tmp_path / "a.svg", tmp_path / "b.svg"
    for out, plot in ((a, pa), (b, pb)):
        assert run(
            "synth", "--requirement", "bedroom", "--room", "4.0x4.6",
            "--rule-fallback", "--seed", "11", "--out", str(out), "--plot", str(plot),
        ) == 0
    assert a.read_bytes() == b.read_bytes()
    assert pa.read_bytes() == pb.read_bytes()


def test_synth_provider_failure_exit_3(tmp_path):
    code = run(
        "synth", "--requirement", "an underwater observatory", "--room", "5x5",
        "--rule-fallback", "--out", str(tmp_path / "x.hilayout"),
    )
    assert code == 3


def test_synth_remote_unreachable_exit_3(tmp_path):
    code = run(
        "synth", "--requirement", "bedroom", "--room", "4x4",
        "--provider", "remote-chat-api", "--endpoint", "http://127.0.0.1:9/v1",
        "--rule-fallback", "--out", str(tmp_path / "x.hilayout"),
    )
    assert code == 3


def test_synth_unrepairable_exit_2(tmp_path):
    # A fixture whose only area cannot fit the room budget.
    fdir = tmp_path / "fixtures"
    (fdir / "scenes").mkdir(parents=True)
    (fdir / "scenes" / "impossible_room.hi").write_text(
        "format: hilayout/1\n"
        "scene:\n  text: impossible room\n  size: 3.0 3.0\n"
        "area big_area:\n  text: oversized\n  size: 6.0 6.0\n  anchor: bed_1\n"
        "  object bed_1:\n    text: bed\n    category: bed\n    size: 1.5 2.0 0.5\n"
    )
    code = run(
        "synth", "--requirement", "impossible room", "--room", "3x3",
        "--fixtures-dir", str(fdir), "--rule-fallback",
        "--out", str(tmp_path / "x.hilayout"),
    )
    assert code == 2


def test_edit_remove_desk_regression(tmp_path, capsys):
    out = tmp_path / "scene.hilayout"
    assert run(
        "synth", "--requirement", "bedroom", "--room", "4.0x4.6",
        "--rule-fallback", "--seed", "7", "--out", str(out),
    ) == 0
    before, _ = load_layout(out)

    edited_path = tmp_path / "edited.hilayout"
    code = run(
        "edit", "--layout", str(out), "--instruction", "remove the desk",
        "--rule-fallback", "--seed", "7", "--out", str(edited_path),
    )
    assert code == 0
    captured = capsys.readouterr().out
    assert "desk_1: removed" in captured

    after, _ = load_layout(edited_path)
    assert "desk_1" not in after.object_poses
    for oid, pose in after.object_poses.items():
        old = before.object_poses[oid]
        assert max(abs(pose.center[0] - old.center[0]), abs(pose.center[1] - old.center[1])) < 0.01


def test_edit_noop_transcript_is_byte_identical(tmp_path):
    out = tmp_path / "scene.hilayout"
    assert run(
        "synth", "--requirement", "bedroom", "--room", "4.0x4.6",
        "--rule-fallback", "--seed", "7", "--out", str(out),
    ) == 0
    original = out.read_bytes()

    # A no-op edit: fixture returning exactly the current hierarchy.
    fdir = tmp_path / "fixtures"
    (fdir / "edits").mkdir(parents=True)
    layout, _ = load_layout(out)
    from hilayout.corpus import strip_ground_truth

    (fdir / "edits" / "keep_everything_as_is.hi").write_text(
        serialize(strip_ground_truth(layout.hierarchy)).text
    )
    edited = tmp_path / "edited.hilayout"
    code = run(
        "edit", "--layout", str(out), "--instruction", "keep everything as-is",
        "--fixtures-dir", str(fdir), "--rule-fallback", "--seed", "7", "--out", str(edited),
    )
    assert code == 0
    assert edited.read_bytes() == original


def test_edit_unrepairable_exit_2(tmp_path):
    out = tmp_path / "scene.hilayout"
    assert run(
        "synth", "--requirement", "bedroom", "--room", "4.0x4.6",
        "--rule-fallback", "--seed", "7", "--out", str(out),
    ) == 0
    code = run(
        "edit", "--layout", str(out), "--instruction", "make everything huge",
        "--rule-fallback", "--seed", "7",
    )
    assert code == 2


def test_eval_self_comparison(tmp_path, capsys):
    gen_dir = tmp_path / "gen"
    gen_dir.mkdir()
    from hilayout.corpus import generate, reference_layout

    for i, scene in enumerate(generate(80, seed=91)):
        save(gen_dir / f"scene_{i:03d}.hilayout", reference_layout(scene))

    report_path = tmp_path / "report.txt"
    code = run(
        "eval", "--generated", str(gen_dir), "--reference", str(gen_dir),
        "--out", str(report_path),
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "oob_rate          0.00" in out
    assert "overlap_rate      0.00" in out
    assert "kl_div            0.0000" in out
    assert report_path.read_text().startswith("format: hilayout-metrics/1")


def test_eval_missing_reference_dir(tmp_path):
    gen = tmp_path / "gen"
    gen.mkdir()
    code = run("eval", "--generated", str(gen), "--reference", str(tmp_path / "missing"))
    assert code == 1


def test_train_smoke_and_zero_scene_error(tmp_path):
    ckpt = tmp_path / "tiny.npz"
    code = run(
        "train", "--scenes", "8", "--epochs", "2", "--out", str(ckpt),
        "--corpus-seed", "5", "--seed", "5",
    )
    assert code == 0 and ckpt.exists()
    code = run("train", "--scenes", "0", "--out", str(tmp_path / "x.npz"))
    assert code == 1


def test_synth_with_tiny_checkpoint(tmp_path):
    ckpt = tmp_path / "tiny.npz"
    assert run(
        "train", "--scenes", "8", "--epochs", "2", "--out", str(ckpt),
        "--corpus-seed", "5", "--seed", "5",
    ) == 0
    out = tmp_path / "scene.hilayout"
    code = run(
        "synth", "--requirement", "bedroom", "--room", "4.0x4.6",
        "--checkpoint", str(ckpt), "--seed", "3", "--out", str(out),
    )
    assert code == 0
    layout, _ = load_layout(out)
    assert layout.report.feasible
