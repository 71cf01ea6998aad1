import numpy as np
import pytest

from voxcache.errors import ConfigError, TrainingDivergedError, WeightFormatError
from voxcache.fields import FieldDomain, make_procedural
from voxcache.inr import (
    HashGridConfig,
    InrModel,
    MLPConfig,
    load_weights,
    loss_and_grads,
    psnr_on_lattice,
    save_weights,
    train,
)
from voxcache.inr import encoding
from voxcache.macrocell import build as build_macro

TINY_GRID = HashGridConfig(levels=2, features_per_entry=2, base_resolution=4, growth_factor=1.5, table_size=16)
TINY_MLP = MLPConfig(hidden_width=8, hidden_layers=1)


def tiny_model(dtype=np.float32, seed=3):
    return InrModel(TINY_GRID, TINY_MLP, FieldDomain((8, 8, 8)), seed=seed, dtype=dtype)


def randomized(model, seed=42):
    # a generic parameter point: the near-zero init parks every relu at its kink
    r = np.random.default_rng(seed)
    model.set_parameters([r.uniform(-0.7, 0.7, size=p.shape).astype(model.dtype) for p in model.parameters()])
    return model


# -- encoder -----------------------------------------------------------------


def test_encode_output_length():
    model = tiny_model()
    out = model.encode(np.array([[0.3, 0.4, 0.5]]))
    assert out.shape == (1, 4)  # m=2 levels x n=2 features


def test_encode_vertex_is_exact_table_entry():
    model = randomized(tiny_model())
    level = 0
    r = TINY_GRID.resolution(level)
    vertex = np.array([[2 / r, 1 / r, 3 / r]])
    idx = encoding.vertex_indices(TINY_GRID, level, np.array([[2, 1, 3]]))
    out = model.encode(vertex)
    np.testing.assert_allclose(out[0, :2], model.tables[level][idx[0]], atol=1e-6)


def test_encode_edge_midpoint_averages_endpoints():
    model = randomized(tiny_model())
    level = 0
    r = TINY_GRID.resolution(level)
    # midpoint of the x-edge between vertices (1,2,0) and (2,2,0)
    pos = np.array([[1.5 / r, 2 / r, 0.0]])
    ia = encoding.vertex_indices(TINY_GRID, level, np.array([[1, 2, 0]]))[0]
    ib = encoding.vertex_indices(TINY_GRID, level, np.array([[2, 2, 0]]))[0]
    expected = 0.5 * (model.tables[level][ia] + model.tables[level][ib])
    np.testing.assert_allclose(model.encode(pos)[0, :2], expected, atol=1e-6)


def test_encode_continuous_across_cell_boundaries():
    model = randomized(tiny_model(dtype=np.float64))
    eps = 1e-6
    r0 = TINY_GRID.resolution(1)
    jumps = []
    for k in range(1, r0):
        x = k / r0
        lo = model.encode(np.array([[x - eps, 0.37, 0.61]]))
        hi = model.encode(np.array([[x + eps, 0.37, 0.61]]))
        jumps.append(np.abs(hi - lo).max())
    assert max(jumps) < 1e-3


def test_hash_determinism():
    v = np.array([[5, 9, 2], [5, 9, 2], [7, 1, 1]])
    idx = encoding.vertex_indices(TINY_GRID, 1, v)
    assert idx[0] == idx[1]
    idx2 = encoding.vertex_indices(TINY_GRID, 1, v)
    np.testing.assert_array_equal(idx, idx2)


def test_dense_levels_skip_hashing():
    cfg = HashGridConfig(levels=2, features_per_entry=1, base_resolution=2, growth_factor=2.0, table_size=1 << 10)
    assert cfg.level_is_dense(0)  # (2+1)^3 = 27 <= 1024
    assert cfg.level_entries(0) == 27
    # dense indexing is collision-free
    r = cfg.resolution(0)
    verts = np.array([[x, y, z] for x in range(r + 1) for y in range(r + 1) for z in range(r + 1)])
    idx = encoding.vertex_indices(cfg, 0, verts)
    assert len(np.unique(idx)) == len(verts)


def test_config_validation():
    with pytest.raises(ConfigError):
        HashGridConfig(table_size=100)  # not a power of two
    with pytest.raises(ConfigError):
        HashGridConfig(growth_factor=1.0)
    with pytest.raises(ConfigError):
        MLPConfig(hidden_layers=0)


# -- inference ---------------------------------------------------------------


def test_infer_equals_encode_then_mlp():
    from voxcache.inr import mlp

    model = randomized(tiny_model())
    pos = np.random.default_rng(0).random((32, 3))
    feat = model.encode(pos)
    direct = mlp.forward(model.mlp_config, model.weights, model.biases, feat)
    np.testing.assert_allclose(model.infer_batch(pos), direct, atol=1e-6)


def test_duplicate_positions_duplicate_outputs():
    model = randomized(tiny_model())
    pos = np.array([[0.2, 0.3, 0.4], [0.2, 0.3, 0.4]])
    out = model.infer_batch(pos)
    assert out[0] == out[1]


def test_zero_output_layer_sigmoid_gives_half():
    model = tiny_model()
    params = model.parameters()
    params[-3][:] = 0.0  # output weight matrix
    params[-1][:] = 0.0  # output bias
    model.set_parameters(params)
    out = model.infer_batch(np.random.default_rng(1).random((16, 3)))
    np.testing.assert_allclose(out, 0.5, atol=1e-6)


# -- gradients ---------------------------------------------------------------


def _gradcheck(dtype, eps, tol):
    model = randomized(tiny_model(dtype=dtype))
    rng = np.random.default_rng(0)
    pos = rng.random((8, 3))
    targets = rng.random(8)
    _, grads = loss_and_grads(model, pos, targets)
    params = model.parameters()
    worst = 0.0
    for p, g in zip(params, grads):
        flat = p.ravel()
        fg = np.asarray(g, dtype=np.float64).ravel()
        fd = np.zeros_like(fg)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            lp, _ = loss_and_grads(model, pos, targets)
            flat[i] = orig - eps
            lm, _ = loss_and_grads(model, pos, targets)
            flat[i] = orig
            fd[i] = (lp - lm) / (2 * eps)
        scale = max(np.abs(fd).max(), np.abs(fg).max(), 1e-8)
        worst = max(worst, np.abs(fd - fg).max() / scale)
    assert worst <= tol, f"gradient mismatch {worst:.3e} > {tol}"


def test_gradients_match_finite_differences_f64():
    _gradcheck(np.float64, eps=1e-6, tol=1e-6)


def test_gradients_match_finite_differences_f32():
    # eps balances truncation against f32 rounding noise in the loss
    _gradcheck(np.float32, eps=3e-3, tol=1e-3)


# -- training ----------------------------------------------------------------


def test_zero_learning_rate_leaves_parameters_unchanged(sphere32):
    model = tiny_model()
    before = [p.copy() for p in model.parameters()]
    train(model, sphere32, steps=5, batch_size=128, learning_rate=0.0, seed=0)
    for b, a in zip(before, model.parameters()):
        np.testing.assert_array_equal(b, a)


def test_constant_field_converges():
    class Const:
        domain = FieldDomain((8, 8, 8))

        def sample_batch(self, pos):
            return np.full(len(pos), 0.5, dtype=np.float32)

    model = tiny_model()
    res = train(model, Const(), steps=300, batch_size=256, learning_rate=1e-2, seed=0)
    assert res.loss_trace[-1] < 1e-4


def test_step_zero_loss_is_untrained_mse():
    field = make_procedural("sphere", (16, 16, 16))
    model = tiny_model()
    res = train(model, field, steps=1, batch_size=512, learning_rate=1e-2, seed=9)
    # recompute the first batch with the same seed against the untrained model
    model2 = tiny_model()
    pos = np.random.default_rng(9).random((512, 3))
    loss0, _ = loss_and_grads(model2, pos, field.sample_batch(pos))
    assert res.loss_trace[0] == pytest.approx(loss0, rel=1e-6)


def test_divergence_reports_last_finite_step(sphere32):
    model = tiny_model()
    params = model.parameters()
    params[0][0, 0] = np.inf
    model.set_parameters(params)
    with pytest.raises(TrainingDivergedError) as err:
        train(model, sphere32, steps=5, batch_size=64, learning_rate=1e-2, seed=0)
    assert err.value.last_finite_step is None


def test_desk_scale_training_quality(sphere32):
    model = InrModel(HashGridConfig(), MLPConfig(), sphere32.domain, seed=0)
    train(model, sphere32, steps=150, batch_size=8192, learning_rate=1e-2, optimizer="adam", seed=1)
    assert psnr_on_lattice(model, sphere32) >= 30.0


# -- serialization -----------------------------------------------------------


def test_weight_roundtrip_bit_identical(tmp_path):
    model = randomized(tiny_model())
    path = tmp_path / "m.cinr"
    save_weights(model, path)
    loaded, macro = load_weights(path)
    assert macro is None
    pos = np.random.default_rng(5).random((1000, 3))
    np.testing.assert_array_equal(model.infer_batch(pos), loaded.infer_batch(pos))
    for a, b in zip(model.parameters(), loaded.parameters()):
        np.testing.assert_array_equal(a, b)


def test_truncated_file_rejected(tmp_path):
    model = tiny_model()
    path = tmp_path / "m.cinr"
    save_weights(model, path)
    data = path.read_bytes()
    path.write_bytes(data[: len(data) - 7])
    with pytest.raises(WeightFormatError):
        load_weights(path)


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "m.cinr"
    path.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(WeightFormatError):
        load_weights(path)


def test_macrocell_block_roundtrip(tmp_path, sphere32):
    model = InrModel(TINY_GRID, TINY_MLP, sphere32.domain, seed=0)
    train(model, sphere32, steps=1, batch_size=256, learning_rate=1e-2, seed=0)
    macro = build_macro(model.as_field(), sphere32.domain.dims, 16)
    path = tmp_path / "m.cinr"
    save_weights(model, path, macro=macro)
    loaded, macro2 = load_weights(path)
    assert macro2 is not None
    assert macro2.grid_dims == macro.grid_dims
    assert macro2.cell_size == macro.cell_size
    np.testing.assert_array_equal(macro2.value_min, macro.value_min.astype(np.float32))
    np.testing.assert_array_equal(macro2.value_max, macro.value_max.astype(np.float32))
    pos = np.random.default_rng(5).random((100, 3))
    np.testing.assert_array_equal(model.infer_batch(pos), loaded.infer_batch(pos))
