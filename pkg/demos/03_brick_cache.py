"""Brick coordinates, residency, LoD fallback, and LRU eviction, step by step.

Run:  python demos/03_brick_cache.py
"""

import numpy as np

from voxcache import BrickKey, CacheConfig, Mrpd, make_procedural
from voxcache.scheduler import fulfill, generate_brick_coords

field = make_procedural("shells", (128, 128, 128))
cache = Mrpd((128, 128, 128), CacheConfig(brick_size=40, pool_dims=(2, 2, 2)))
print(f"volume 128^3, brick 40^3 -> LoD grids {cache.layout.grids} (max LoD {cache.max_lod})")

# Each brick knows exactly which native coordinates it samples.
key = BrickKey(1, (0, 1, 1))
native, normalized = generate_brick_coords(key, cache.layout)
print(f"\nbrick {key.index} at LoD {key.lod}: origin {tuple(int(v) for v in native[0])}, stride {int(native[1][0] - native[0][0])}")

# A cold cache misses; a coarse brick serves everything as fallback.
probe = np.array([[20.0, 30.0, 40.0]])
print("\ncold lookup:", "miss" if cache.lookup(probe, 0).miss_mask[0] else "hit")
top = fulfill([BrickKey(cache.max_lod, (0, 0, 0))], cache.layout, field)[0]
cache.insert(top.key, top.samples)
cache.tick_frame()
res = cache.lookup(probe, 0)
print(f"after loading the top brick: served at LoD {res.served_lod[0]} (requested 0)")
print(f"miss reports pending for the scheduler: {list(cache.drain_miss_reports())}")

# The pool holds 8 slots here; the least-recently-used one gets evicted.
for i, k in enumerate(cache.layout.keys_at(0)):
    brick = fulfill([k], cache.layout, field)[0]
    cache.insert(brick.key, brick.samples)
    cache.tick_frame()
print(f"\nafter streaming all {cache.layout.brick_count(0)} LoD-0 bricks through 8 slots:")
print(f"occupancy {cache.occupancy():.2f}, top brick still mapped: {cache.is_mapped(top.key)}")
residents = sorted((k.lod, k.index) for k in cache.mapped_keys())
print("resident bricks:", residents)
