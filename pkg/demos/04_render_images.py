"""Ray march and path trace the same scene through the same sampler.

Run:  python demos/04_render_images.py        (writes demos/out/*.png)
"""

import time
from pathlib import Path

from voxcache import macrocell, make_procedural
from voxcache.render import Camera, RenderSettings, Scene, pathtrace_frame, raymarch_frame, warm_body, write_png
from voxcache.sampler import VolumeSampler

out_dir = Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)

field = make_procedural("marschner_lobb_like", (96, 96, 96))
tf = warm_body(threshold=0.55, max_opacity=0.9)
macro = macrocell.build(field, field.domain.dims, 16)
macrocell.update_majorants(macro, tf)
skippable = float((macro.majorant == 0).mean())
print(f"macro cells with zero majorant (skippable): {skippable * 100:.0f}%")

camera = Camera(position=(1.6, 1.1, -0.9), target=(0.5, 0.5, 0.5), width=320, height=320)
scene = Scene(VolumeSampler(field, field.domain.dims), macro, tf, camera,
              RenderSettings(background=(0.07, 0.08, 0.10)))

t0 = time.perf_counter()
img = raymarch_frame(scene)
print(f"ray march: {time.perf_counter() - t0:.2f}s")
write_png(out_dir / "raymarch.png", img)

t0 = time.perf_counter()
img = pathtrace_frame(scene, samples_per_pixel=16, seed=7)
print(f"path trace (16 spp): {time.perf_counter() - t0:.2f}s")
write_png(out_dir / "pathtrace.png", img)
print(f"wrote {out_dir}/raymarch.png and {out_dir}/pathtrace.png")
