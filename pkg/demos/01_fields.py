"""Tour of the scalar field sources: analytic, lattice-backed, and latency-wrapped.

Run:  python demos/01_fields.py
"""

import time

import numpy as np

from voxcache import CostModel, FieldDomain, RawLatticeField, make_procedural, wrap_delayed

rng = np.random.default_rng(0)

# Analytic fields are infinitely sampleable; dims only declare a nominal lattice.
for kind in ("sphere", "shells", "marschner_lobb_like"):
    field = make_procedural(kind, (64, 64, 64))
    values = field.sample_batch(rng.random((5, 3)))
    print(f"{kind:22s} five random samples -> {np.round(values, 3)}")

# A lattice field interpolates stored voxels; lattice points sit at voxel centers.
lattice = rng.random((16, 16, 16)).astype(np.float32)
field = RawLatticeField(lattice, FieldDomain((16, 16, 16)))
exact = field.sample_batch([[(7 + 0.5) / 16, (3 + 0.5) / 16, (9 + 0.5) / 16]])[0]
print(f"\nlattice point (7,3,9): stored {lattice[9, 3, 7]:.6f}, sampled {exact:.6f}")

# wrap_delayed makes any field cost what a slow source (like a neural net) would.
slow = wrap_delayed(field, CostModel(fixed_per_batch=0.001, per_sample=2e-6))
batch = rng.random((10_000, 3))
t0 = time.perf_counter()
slow_values = slow.sample_batch(batch)
elapsed = time.perf_counter() - t0
print(f"\n10k samples through the delayed wrapper: {elapsed * 1e3:.1f} ms (floor = 21.0 ms)")
print("values identical to the wrapped field:", bool(np.array_equal(slow_values, field.sample_batch(batch))))
