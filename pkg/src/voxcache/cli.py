"""Command line entry points: train, render, bench, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import macrocell
from .cache import CacheConfig
from .errors import ConfigError, VoxcacheError
from .fields import CostModel, load_raw_with_descriptor, make_procedural, wrap_delayed
from .harness import OrbitTrajectory, bench_run
from .inr import HashGridConfig, InrModel, MLPConfig, load_weights, psnr_on_lattice, save_weights, train
from .render import Camera, RenderSettings, TransferFunction, grayscale_ramp, warm_body, write_png, write_raw_rgba
from .sampler import LodPolicy
from .scheduler import SchedulerConfig
from .service import ViewerServer, protocol
from .session import RenderSession, SessionConfig


def _load_tf(spec) -> TransferFunction:
    if spec is None:
        return warm_body()
    if isinstance(spec, str):
        return TransferFunction.load(spec)
    if isinstance(spec, dict):
        if "preset" in spec:
            preset = spec["preset"]
            if preset == "warm_body":
                return warm_body(spec.get("threshold", 0.35), spec.get("max_opacity", 0.9))
            if preset == "grayscale":
                return grayscale_ramp(spec.get("max_opacity", 1.0))
            raise ConfigError(f"unknown tf preset {preset!r}")
        return TransferFunction.from_json(spec["points"])
    raise ConfigError("tf must be a path or an object")


def _load_field(spec, macro_hint=None):
    kind = spec.get("kind", "procedural")
    macro = macro_hint
    if kind == "procedural":
        field = make_procedural(spec.get("name", "sphere"), spec.get("dims", [128, 128, 128]))
    elif kind == "raw":
        field = load_raw_with_descriptor(spec["path"], spec["descriptor"])
    elif kind == "inr":
        model, macro = load_weights(spec["model"])
        field = model.as_field()
    else:
        raise ConfigError(f"unknown field kind {kind!r}")
    cost = spec.get("cost_model")
    if cost:
        field = wrap_delayed(
            field,
            CostModel(cost.get("fixed_per_batch_ms", 0.0) / 1e3, cost.get("per_sample_us", 0.0) / 1e6),
        )
    return field, macro


def _session_config(scene: dict, cached: bool, mode: str, ranking=None, preload=None) -> SessionConfig:
    cache_cfg = scene.get("cache", {})
    sched_cfg = scene.get("scheduler", {})
    policy_cfg = scene.get("policy", {})
    render_cfg = scene.get("render", {})
    preload_frames = policy_cfg.get("preload_frames", 120)
    if preload is False:
        preload_frames = 0
    return SessionConfig(
        cached=cached,
        mode=mode,
        loader=scene.get("loader", "thread"),
        cache=CacheConfig(
            brick_size=cache_cfg.get("brick_size", 40),
            pool_dims=tuple(cache_cfg.get("pool_dims", (8, 8, 8))),
            direct_table_threshold=cache_cfg.get("virtualization_threshold", 1 << 18),
        ),
        scheduler=SchedulerConfig(
            max_requests=sched_cfg.get("max_requests", 40),
            ranking_enabled=sched_cfg.get("ranking", True) if ranking is None else ranking,
        ),
        policy=LodPolicy(
            lod_scale=policy_cfg.get("lod_scale", 1.0),
            preload_frames=preload_frames,
            mode=policy_cfg.get("stochastic_mode", "corrected"),
        ),
        settings=RenderSettings(
            base_step_scale=render_cfg.get("base_step_scale", 0.5),
            mu_floor=render_cfg.get("mu_floor", 1.0 / 16.0),
            early_termination=render_cfg.get("early_termination", 0.01),
            background=tuple(render_cfg.get("background", (0.0, 0.0, 0.0))),
            skip_empty=render_cfg.get("skip_empty", True),
            adaptive_step=render_cfg.get("adaptive", True),
            pt_density=render_cfg.get("pt_density", 60.0),
        ),
        samples_per_pixel=render_cfg.get("spp", 1),
        macro_cell_size=scene.get("macro_cell_size", 16),
        seed=scene.get("seed", 0),
    )


# -- subcommands ----------------------------------------------------------------


def cmd_train(args):
    field = load_raw_with_descriptor(args.input, args.descriptor)
    grid = HashGridConfig(
        levels=args.levels,
        features_per_entry=args.features,
        base_resolution=args.base_resolution,
        growth_factor=args.growth,
        table_size=1 << args.log2_table_size,
    )
    mlp = MLPConfig(hidden_width=args.width, hidden_layers=args.layers)
    model = InrModel(grid, mlp, field.domain, seed=args.seed)
    print(f"training on {field.domain.dims} volume: {args.steps} steps, batch {args.batch_size}, lr {args.lr}")
    result = train(
        model,
        field,
        steps=args.steps,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        optimizer=args.optimizer,
        seed=args.seed,
    )
    psnr = psnr_on_lattice(model, field)
    print(f"final loss {result.final_loss:.3e}, lattice PSNR {psnr:.2f} dB")
    macro = macrocell.build(model.as_field(), field.domain.dims, args.macro_cell)
    save_weights(model, args.out, macro=macro)
    print(f"wrote {args.out} ({Path(args.out).stat().st_size} bytes, macro cells {macro.grid_dims})")


def cmd_render(args):
    model, macro = load_weights(args.model)
    field = model.as_field()
    tf = _load_tf(args.tf)
    camera = Camera.load(args.camera)
    scene_cfg = json.loads(Path(args.scene).read_text()) if args.scene else {}
    config = _session_config(scene_cfg, cached=args.cached, mode=args.mode)
    if args.lod_scale is not None:
        config.policy.lod_scale = args.lod_scale
    if macro is not None:
        macrocell.update_majorants(macro, tf)
    with RenderSession(field, tf, camera, config, macro=macro) as session:
        img = None
        for _ in range(args.frames):
            img, record = session.render_frame()
        print(f"frame {record.frame}: {record.wall_s * 1e3:.1f} ms, misses {record.true_misses}, occupancy {record.occupancy:.3f}")
    out = Path(args.out)
    if out.suffix == ".png":
        write_png(out, img)
    else:
        write_raw_rgba(out, img)
    print(f"wrote {out}")


def cmd_bench(args):
    scene = json.loads(Path(args.scene).read_text())
    field, macro = _load_field(scene["field"])
    tf = _load_tf(scene.get("tf"))
    cached = args.mode.startswith("cached")
    mode = "pathtrace" if args.mode.endswith("pathtrace") else "raymarch"
    config = _session_config(scene, cached=cached, mode=mode, ranking=args.ranking, preload=args.preload)
    orbit = scene.get("orbit", {})
    film = scene.get("film", [256, 256])
    frames = args.frames or scene.get("frames", 600)
    trajectory = OrbitTrajectory(
        tuple(orbit.get("center", (0.5, 0.5, 0.5))),
        orbit.get("radius", 2.2),
        frames,
        elevation_deg=orbit.get("elevation", 20.0),
        width=film[0],
        height=film[1],
        fov=orbit.get("fov", 45.0),
    )
    report = bench_run(
        field,
        tf,
        trajectory,
        config,
        frames=frames,
        summary_window=scene.get("summary_window", 100),
        macro=macro,
    )
    report.write_csv(args.out)
    status = "ABORTED" if report.aborted else "ok"
    print(f"{args.mode}: {len(report.records)} frames, mean fps (last {report.summary_window}) = {report.mean_fps:.2f} [{status}]")
    print(f"wrote {args.out}")


def cmd_serve(args):
    if args.model:
        model, macro = load_weights(args.model)
        field = model.as_field()
    else:
        field = make_procedural(args.procedural, (args.dims, args.dims, args.dims))
        macro = None
    tf = _load_tf(args.tf)
    scene_cfg = json.loads(Path(args.scene).read_text()) if args.scene else {}
    config = _session_config(scene_cfg, cached=not args.uncached, mode=args.mode)
    camera = Camera(
        position=(0.5, 0.5, -2.2),
        target=(0.5, 0.5, 0.5),
        width=args.width,
        height=args.height,
    )
    if macro is not None:
        macrocell.update_majorants(macro, tf)
    shared_macro = macro if macro is not None else macrocell.build(field, field.domain.dims, config.macro_cell_size)

    def factory():
        import copy

        cfg = _session_config(scene_cfg, cached=not args.uncached, mode=args.mode)
        return RenderSession(field, tf, camera, cfg, macro=copy.deepcopy(shared_macro))

    fmt = protocol.FORMAT_PNG if args.png else protocol.FORMAT_RGBA8
    server = ViewerServer(factory, host=args.host, port=args.port, frame_format=fmt)
    print(f"listening on {server.host}:{server.port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.stop()


def build_parser():
    parser = argparse.ArgumentParser(prog="voxcache", description="Brick-cached volume rendering toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a neural field to a raw volume")
    p.add_argument("--input", required=True)
    p.add_argument("--descriptor", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--lr", type=float, default=1e-2)
    p.add_argument("--batch-size", type=int, default=65536)
    p.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    p.add_argument("--levels", type=int, default=8)
    p.add_argument("--features", type=int, default=2)
    p.add_argument("--base-resolution", type=int, default=4)
    p.add_argument("--growth", type=float, default=1.5)
    p.add_argument("--log2-table-size", type=int, default=16)
    p.add_argument("--width", type=int, default=32)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--macro-cell", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("render", help="render one image from a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--tf")
    p.add_argument("--camera", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scene", help="optional scene JSON for cache/render settings")
    p.add_argument("--cached", action="store_true")
    p.add_argument("--lod-scale", type=float)
    p.add_argument("--mode", choices=("raymarch", "pathtrace"), default="raymarch")
    p.add_argument("--frames", type=int, default=1, help="warm the cache for N frames, save the last")
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("bench", help="run a benchmark scene and write per-frame CSV")
    p.add_argument("--scene", required=True)
    p.add_argument(
        "--mode",
        choices=("cached_raymarch", "uncached_raymarch", "cached_pathtrace", "uncached_pathtrace"),
        default="cached_raymarch",
    )
    p.add_argument("--frames", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--no-ranking", dest="ranking", action="store_false", default=None)
    p.add_argument("--no-preload", dest="preload", action="store_false", default=None)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("serve", help="run the interactive viewer server")
    p.add_argument("--model")
    p.add_argument("--procedural", default="sphere", help="procedural field when no model is given")
    p.add_argument("--dims", type=int, default=64)
    p.add_argument("--tf")
    p.add_argument("--scene")
    p.add_argument("--mode", choices=("raymarch", "pathtrace"), default="raymarch")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=9420)
    p.add_argument("--width", type=int, default=192)
    p.add_argument("--height", type=int, default=192)
    p.add_argument("--png", action="store_true", help="send PNG frames instead of raw RGBA8")
    p.add_argument("--uncached", action="store_true")
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.fn(args)
    except (VoxcacheError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
