import time

import numpy as np
import pytest

from voxcache.errors import ConfigError, DomainError, IngestionError
from voxcache.fields import (
    SHELL_PERIOD,
    CostModel,
    FieldDomain,
    RawLatticeField,
    load_raw,
    load_raw_with_descriptor,
    make_procedural,
    wrap_delayed,
)


def test_sphere_center_is_one():
    field = make_procedural("sphere", (64, 64, 64))
    assert field.sample_batch([[0.5, 0.5, 0.5]])[0] == pytest.approx(1.0)


def test_determinism_same_query_twice(rng):
    field = make_procedural("sphere", (64, 64, 64))
    pos = rng.random((100, 3))
    a = field.sample_batch(pos)
    b = field.sample_batch(pos)
    np.testing.assert_array_equal(a, b)


def test_unknown_procedural_kind_rejected():
    with pytest.raises(ConfigError):
        make_procedural("smoke", (8, 8, 8))


def test_shells_periodic_along_radius():
    field = make_procedural("shells", (32, 32, 32))
    # two points on the +x axis, one radial period apart
    r0, r1 = 0.1, 0.1 + SHELL_PERIOD
    a = field.sample_batch([[0.5 + r0, 0.5, 0.5]])[0]
    b = field.sample_batch([[0.5 + r1, 0.5, 0.5]])[0]
    assert a == pytest.approx(b, abs=1e-6)


def test_procedural_is_pure_function_of_config():
    a = make_procedural("shells", (16, 16, 16))
    b = make_procedural("shells", (16, 16, 16))
    pos = np.random.default_rng(7).random((50, 3))
    np.testing.assert_array_equal(a.sample_batch(pos), b.sample_batch(pos))


def test_out_of_domain_rejected():
    field = make_procedural("sphere", (8, 8, 8))
    with pytest.raises(DomainError):
        field.sample_batch([[1.0, 0.5, 0.5]])
    with pytest.raises(DomainError):
        field.sample_batch([[-0.01, 0.5, 0.5]])


def test_lattice_2x2x2_corner_and_center():
    # corners 0..7 scaled to [0,1], x-fastest
    corners = np.arange(8, dtype=np.float32).reshape(2, 2, 2) / 7.0
    field = RawLatticeField(corners, FieldDomain((2, 2, 2)))
    # lattice point (0,0,0) sits at normalized (0.25, 0.25, 0.25)
    assert field.sample_batch([[0.25, 0.25, 0.25]])[0] == pytest.approx(0.0)
    assert field.sample_batch([[0.75, 0.25, 0.25]])[0] == pytest.approx(1.0 / 7.0)
    # cell center: mean of all 8 corners
    assert field.sample_batch([[0.5, 0.5, 0.5]])[0] == pytest.approx(corners.mean(), abs=1e-6)


def test_lattice_ramp_interpolation():
    # 4^3 ramp along x: value = x index / 3
    ramp = np.broadcast_to(np.arange(4, dtype=np.float32) / 3.0, (4, 4, 4)).copy()
    field = RawLatticeField(ramp, FieldDomain((4, 4, 4)))
    # halfway between lattice x=1 and x=2: (1/3 + 2/3)/2 = 0.5
    q = (1.5 + 0.5) / 4.0
    assert field.sample_batch([[q, 0.5, 0.5]])[0] == pytest.approx(0.5, abs=1e-6)


def test_load_raw_constant_f32(tmp_path):
    path = tmp_path / "v.bin"
    np.full(8, 0.5, dtype="<f4").tofile(path)
    field = load_raw(path, (2, 2, 2), "f32", (0.0, 1.0))
    pos = np.random.default_rng(3).random((64, 3))
    np.testing.assert_allclose(field.sample_batch(pos), 0.5, atol=1e-7)


def test_load_raw_u8_normalization(tmp_path):
    path = tmp_path / "v.bin"
    np.full(8, 255, dtype=np.uint8).tofile(path)
    field = load_raw(path, (2, 2, 2), "u8", (0.0, 255.0))
    assert field.sample_batch([[0.5, 0.5, 0.5]])[0] == pytest.approx(1.0)


def test_load_raw_size_mismatch(tmp_path):
    path = tmp_path / "v.bin"
    np.zeros(7, dtype="<f4").tofile(path)
    with pytest.raises(IngestionError):
        load_raw(path, (2, 2, 2), "f32", (0.0, 1.0))


def test_load_raw_nan_rejected(tmp_path):
    path = tmp_path / "v.bin"
    data = np.zeros(8, dtype="<f4")
    data[3] = np.nan
    data.tofile(path)
    with pytest.raises(IngestionError):
        load_raw(path, (2, 2, 2), "f32", (0.0, 1.0))


def test_descriptor_loading(tmp_path):
    vol = tmp_path / "v.bin"
    np.linspace(0, 100, 27, dtype="<f4").tofile(vol)
    desc = tmp_path / "v.json"
    desc.write_text('{"dims": [3, 3, 3], "type": "f32", "vmin": 0.0, "vmax": 100.0}')
    field = load_raw_with_descriptor(vol, desc)
    assert field.domain.dims == (3, 3, 3)
    assert field.sample_batch([[0.5, 0.5, 0.5]])[0] == pytest.approx(0.5, abs=1e-3)


def test_degenerate_value_range_maps_to_zero(tmp_path):
    path = tmp_path / "v.bin"
    np.full(8, 42.0, dtype="<f4").tofile(path)
    field = load_raw(path, (2, 2, 2), "f32", (42.0, 42.0))
    assert field.sample_batch([[0.5, 0.5, 0.5]])[0] == 0.0


def test_delayed_field_timing_floor():
    field = make_procedural("sphere", (16, 16, 16))
    slow = wrap_delayed(field, CostModel(fixed_per_batch=0.001, per_sample=1e-6))
    pos = np.random.default_rng(0).random((1000, 3))
    t0 = time.perf_counter()
    slow.sample_batch(pos)
    assert time.perf_counter() - t0 >= 0.002


def test_delayed_field_empty_batch():
    field = make_procedural("sphere", (16, 16, 16))
    slow = wrap_delayed(field, CostModel(fixed_per_batch=0.002, per_sample=0.0))
    t0 = time.perf_counter()
    out = slow.sample_batch(np.zeros((0, 3)))
    assert time.perf_counter() - t0 >= 0.002
    assert out.size == 0


def test_delayed_field_values_passthrough(rng):
    field = make_procedural("shells", (16, 16, 16))
    slow = wrap_delayed(field, CostModel(0.0, 0.0))
    pos = rng.random((256, 3))
    np.testing.assert_array_equal(slow.sample_batch(pos), field.sample_batch(pos))


@pytest.mark.parametrize("kind", ["sphere", "shells", "marschner_lobb_like"])
def test_outputs_normalized_fuzz(kind):
    field = make_procedural(kind, (32, 32, 32))
    pos = np.random.default_rng(99).random((100_000, 3))
    vals = field.sample_batch(pos)
    assert (vals >= 0.0).all() and (vals <= 1.0).all()


def test_lattice_outputs_normalized_fuzz():
    from conftest import random_lattice_field

    field = random_lattice_field((16, 16, 16), seed=5)
    pos = np.random.default_rng(42).random((100_000, 3))
    vals = field.sample_batch(pos)
    assert (vals >= 0.0).all() and (vals <= 1.0).all()


def test_domain_validation():
    with pytest.raises(ConfigError):
        FieldDomain((0, 4, 4))
    with pytest.raises(ConfigError):
        FieldDomain((4, 4, 4), (2.0, 1.0))
