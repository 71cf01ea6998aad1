"""Drive a live render session over the wire protocol, no browser required.

Run:  python demos/06_interactive_viewer.py

For the full browser viewer, run `voxcache serve --procedural shells --dims 96`
and open the frontend (see frontend/README notes in the main README).
"""

import json
import socket
import time

from voxcache import CacheConfig, make_procedural
from voxcache.render import Camera, RenderSettings, warm_body
from voxcache.sampler import LodPolicy
from voxcache.service import ViewerServer, protocol
from voxcache.session import RenderSession, SessionConfig


def factory():
    field = make_procedural("shells", (64, 64, 64))
    camera = Camera(position=(0.5, 0.5, -2.0), target=(0.5, 0.5, 0.5), width=96, height=96)
    config = SessionConfig(
        cached=True,
        loader="thread",
        cache=CacheConfig(brick_size=40, pool_dims=(3, 3, 3)),
        policy=LodPolicy(lod_scale=0.8, preload_frames=30),
        settings=RenderSettings(base_step_scale=1.0),
    )
    return RenderSession(field, warm_body(0.3), camera, config)


server = ViewerServer(factory, port=0).start()
print(f"server on port {server.port}")

sock = socket.create_connection(("127.0.0.1", server.port))
reader = protocol.MessageReader()


def pump(seconds):
    frames, stats = 0, []
    deadline = time.time() + seconds
    while time.time() < deadline:
        sock.settimeout(0.5)
        try:
            reader.feed(sock.recv(65536))
        except socket.timeout:
            continue
        for kind, payload in reader:
            if kind == protocol.KIND_FRAME:
                frames += 1
            elif kind == protocol.KIND_STATS:
                stats.append(json.loads(payload))
            elif kind == protocol.KIND_HELLO:
                print("hello:", json.loads(payload))
    return frames, stats


frames, stats = pump(1.5)
print(f"received {frames} frames; occupancy now {stats[-1]['cache_occupancy']:.2f}")

print("\nswinging the camera...")
sock.sendall(protocol.encode_json(protocol.KIND_CONTROL, {
    "type": "camera", "position": [1.9, 1.2, 0.5], "target": [0.5, 0.5, 0.5],
}))
frames, stats = pump(1.0)
print(f"{frames} more frames; true-miss rate {stats[-1]['true_miss_rate']:.3f}")

print("\nfading the volume out with a transparent transfer function...")
sock.sendall(protocol.encode_json(protocol.KIND_CONTROL, {
    "type": "tf",
    "points": [{"x": 0.0, "rgb": [0, 0, 0], "a": 0.0}, {"x": 1.0, "rgb": [1, 1, 1], "a": 0.0}],
}))
pump(0.7)
print("done; background frames only now.")
sock.close()
server.stop()
