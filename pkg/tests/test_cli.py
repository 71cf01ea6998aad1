import json
import socket
import subprocess
import sys
import time

import numpy as np
import pytest

from voxcache.cli import main
from voxcache.render.image_io import PNG_SIGNATURE


@pytest.fixture
def tiny_volume(tmp_path):
    rng = np.random.default_rng(0)
    lattice = rng.random((16, 16, 16)).astype("<f4")
    vol = tmp_path / "vol.bin"
    lattice.tofile(vol)
    desc = tmp_path / "vol.json"
    desc.write_text(json.dumps({"dims": [16, 16, 16], "type": "f32", "vmin": 0.0, "vmax": 1.0}))
    return vol, desc


def test_train_render_roundtrip(tmp_path, tiny_volume, capsys):
    vol, desc = tiny_volume
    model_path = tmp_path / "m.cinr"
    rc = main(
        [
            "train",
            "--input", str(vol),
            "--descriptor", str(desc),
            "--out", str(model_path),
            "--steps", "30",
            "--batch-size", "1024",
            "--levels", "4",
            "--log2-table-size", "12",
            "--width", "16",
            "--layers", "1",
            "--macro-cell", "8",
        ]
    )
    assert rc == 0
    assert model_path.exists()
    out = capsys.readouterr().out
    assert "PSNR" in out

    cam = tmp_path / "cam.json"
    cam.write_text(json.dumps({"position": [0.5, 0.5, -1.8], "target": [0.5, 0.5, 0.5], "width": 32, "height": 32}))
    tf = tmp_path / "tf.json"
    tf.write_text(json.dumps([{"x": 0.0, "rgb": [0, 0, 0], "a": 0.0}, {"x": 1.0, "rgb": [1, 1, 1], "a": 0.8}]))
    img_path = tmp_path / "out.png"
    rc = main(
        ["render", "--model", str(model_path), "--tf", str(tf), "--camera", str(cam), "--out", str(img_path), "--cached", "--frames", "3"]
    )
    assert rc == 0
    assert img_path.read_bytes()[:8] == PNG_SIGNATURE

    raw_path = tmp_path / "out.rgba"
    rc = main(["render", "--model", str(model_path), "--tf", str(tf), "--camera", str(cam), "--out", str(raw_path)])
    assert rc == 0
    data = np.frombuffer(raw_path.read_bytes(), dtype="<f4")
    assert data.size == 32 * 32 * 4


def test_bench_writes_csv(tmp_path):
    scene = {
        "field": {"kind": "procedural", "name": "sphere", "dims": [64, 64, 64]},
        "tf": {"preset": "warm_body", "threshold": 0.4},
        "orbit": {"radius": 2.0},
        "film": [32, 32],
        "frames": 5,
        "cache": {"brick_size": 40, "pool_dims": [2, 2, 2]},
        "policy": {"lod_scale": 0.5, "preload_frames": 2},
        "render": {"base_step_scale": 1.5},
        "loader": "inline",
        "summary_window": 3,
    }
    scene_path = tmp_path / "scene.json"
    scene_path.write_text(json.dumps(scene))
    out = tmp_path / "report.csv"
    rc = main(["bench", "--scene", str(scene_path), "--mode", "cached_raymarch", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 6  # header + 5 frames
    assert lines[0].startswith("frame,wall_ms,fps")


def test_bench_uncached_mode(tmp_path):
    scene = {
        "field": {"kind": "procedural", "name": "sphere", "dims": [32, 32, 32]},
        "film": [24, 24],
        "frames": 3,
        "render": {"base_step_scale": 2.0},
        "summary_window": 2,
    }
    scene_path = tmp_path / "scene.json"
    scene_path.write_text(json.dumps(scene))
    out = tmp_path / "u.csv"
    rc = main(["bench", "--scene", str(scene_path), "--mode", "uncached_raymarch", "--out", str(out)])
    assert rc == 0
    rows = out.read_text().strip().splitlines()[1:]
    assert all(row.split(",")[7] == "0.000000" for row in rows)  # occupancy column


def test_serve_subprocess_streams_frames():
    proc = subprocess.Popen(
        [
            sys.executable, "-m", "voxcache.cli", "serve",
            "--procedural", "sphere", "--dims", "32",
            "--port", "0", "--width", "32", "--height", "32",
        ],
        stdout=subprocess.PIPE,
        stderr=subprocess.STDOUT,
        text=True,
    )
    try:
        line = proc.stdout.readline()
        assert "listening on" in line, line
        port = int(line.strip().rsplit(":", 1)[1])
        sock = socket.create_connection(("127.0.0.1", port), timeout=10.0)
        from voxcache.service import protocol

        reader = protocol.MessageReader()
        got = {"hello": False, "frame": False}
        deadline = time.time() + 10.0
        while time.time() < deadline and not all(got.values()):
            sock.settimeout(2.0)
            try:
                chunk = sock.recv(65536)
            except socket.timeout:
                continue
            if not chunk:
                break
            reader.feed(chunk)
            for kind, payload in reader:
                if kind == protocol.KIND_HELLO:
                    got["hello"] = True
                if kind == protocol.KIND_FRAME:
                    got["frame"] = True
        sock.close()
        assert all(got.values())
    finally:
        proc.terminate()
        proc.wait(timeout=5)


def test_cli_error_reporting(tmp_path, capsys):
    rc = main(["render", "--model", str(tmp_path / "missing.cinr"), "--camera", "x.json", "--out", "y.png"])
    assert rc == 1 or rc != 0
