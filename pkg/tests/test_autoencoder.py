import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aefault.autoencoder import (
    AEConfig,
    EarlyStopping,
    forward,
    init,
    load,
    loss,
    loss_and_gradients,
    parameter_count,
    random_search,
    reconstruct,
    rmsprop_step,
    save,
    train,
)
from aefault.autoencoder.network import _backward, _forward
from aefault.autoencoder.persistence import VERSION, dumps, loads, loads_meta
from aefault.errors import ConfigError, DimensionError, IntegrityError, UnsupportedVersionError
from aefault.timeseries import flatten
from oracles import finite_difference_check

TINY = dict(n_signals=2, window=2, encoder_widths=(4, 2))


# configuration -----------------------------------------------------------------


def test_default_widths_follow_input_size():
    cfg = AEConfig()
    assert cfg.encoder_layers == (370, 185) and cfg.decoder_layers == (185, 370)
    assert AEConfig(n_signals=15).encoder_layers == (150, 75)


def test_config_validation():
    with pytest.raises(ConfigError):
        AEConfig(dropout_rate=1.0)
    with pytest.raises(ConfigError):
        AEConfig(cell="gru")
    with pytest.raises(ConfigError):
        AEConfig(encoder_widths=())
    with pytest.raises(ConfigError):
        AEConfig.from_dict({"widths": [1]})


def test_config_dict_round_trip():
    cfg = AEConfig(n_signals=3, window=4, encoder_widths=(6, 3), cell="dense")
    assert AEConfig.from_dict(cfg.to_dict()) == cfg


def test_with_layers_halves():
    assert AEConfig(n_signals=4, window=10).with_layers(3).encoder_layers == (40, 20, 10)


# initialization --------------------------------------------------------------------


@pytest.mark.parametrize("cell", ["lstm", "dense"])
def test_init_deterministic_per_seed(cell):
    cfg = AEConfig(**TINY, cell=cell)
    a, b, c = init(cfg, 1), init(cfg, 1), init(cfg, 2)
    for k in a.params:
        np.testing.assert_array_equal(a.params[k], b.params[k])
    assert any(not np.array_equal(a.params[k], c.params[k]) for k in a.params if k.endswith("W"))


def test_default_parameter_count_closed_form():
    cfg = AEConfig()
    # LSTM layer: 4h(d + h + 1); output: n(h_last + 1)
    layers = [(37, 370), (370, 185), (185, 185), (185, 370)]
    expected = sum(4 * h * (d + h + 1) for d, h in layers) + 37 * (370 + 1)
    assert parameter_count(cfg) == expected == 2_126_427
    dense = AEConfig(cell="dense")
    layers = [(370, 370), (370, 185), (185, 185), (185, 370)]
    assert parameter_count(dense) == sum(h * (d + 1) for d, h in layers) + 370 * 371


@pytest.mark.parametrize("cell", ["lstm", "dense"])
def test_init_matches_parameter_count(cell):
    cfg = AEConfig(n_signals=3, window=4, cell=cell)
    assert init(cfg).n_params == parameter_count(cfg)


def test_glorot_bounds_and_forget_bias():
    cfg = AEConfig(**TINY)
    m = init(cfg)
    W = m.params["enc0.W"]
    assert np.abs(W).max() <= np.sqrt(6.0 / (2 + 16))
    b = m.params["enc0.b"]
    assert b[4:8].tolist() == [1.0] * 4 and not b[:4].any() and not b[8:].any()


# forward and loss --------------------------------------------------------------------


@pytest.mark.parametrize("cell", ["lstm", "dense"])
def test_zero_model_outputs_zero(cell):
    m = init(AEConfig(**TINY, cell=cell))
    for p in m.params.values():
        p[...] = 0.0
    X = np.random.default_rng(0).normal(size=(3, 4))
    assert not forward(m, X).any()


def test_default_output_length():
    m = init(AEConfig())
    fw = flatten(np.random.default_rng(0).random((10, 37)))
    assert forward(m, fw).shape == (1, 370)


@pytest.mark.parametrize("cell", ["lstm", "dense"])
def test_eval_forward_pure_and_batch_invariant(cell):
    m = init(AEConfig(n_signals=3, window=4, encoder_widths=(8, 4), cell=cell))
    X = np.random.default_rng(0).normal(size=(5, 12))
    before = {k: v.copy() for k, v in m.params.items()}
    a, b = forward(m, X), forward(m, X)
    np.testing.assert_array_equal(a, b)
    per = np.vstack([forward(m, X[i]) for i in range(5)])
    np.testing.assert_allclose(a, per, rtol=0, atol=1e-13)
    for k in before:
        np.testing.assert_array_equal(before[k], m.params[k])


def test_train_mode_dropout_is_seeded():
    m = init(AEConfig(**TINY))
    X = np.ones((2, 4))
    np.testing.assert_array_equal(forward(m, X, True, 5), forward(m, X, True, 5))
    assert not np.array_equal(forward(m, X, True, 5), forward(m, X, True, 6))


def test_forward_rejects_wrong_width():
    with pytest.raises(DimensionError):
        forward(init(AEConfig(**TINY)), np.zeros((1, 5)))


def test_loss_examples():
    X = np.ones((1, 370))
    assert loss(X, X) == 0.0
    assert loss(X, np.zeros_like(X)) == 1.0
    rng = np.random.default_rng(2)
    A, B = rng.normal(size=(4, 6)), rng.normal(size=(4, 6))
    brute = sum((a - b) ** 2 for ra, rb in zip(A, B) for a, b in zip(ra, rb)) / 24
    assert loss(A, B) == pytest.approx(brute, rel=1e-12)


# gradients -----------------------------------------------------------------------------


@pytest.mark.parametrize("cell", ["lstm", "dense"])
def test_gradients_match_finite_differences(cell):
    assert finite_difference_check(cell) < 1e-4


@pytest.mark.parametrize("cell", ["lstm", "dense"])
def test_gradients_scale_linearly(cell):
    m = init(AEConfig(**TINY, cell=cell))
    X = np.random.default_rng(1).normal(size=(2, 4))
    Y, cache = _forward(m, X, False, None)
    g1 = _backward(m, cache, Y - X)
    g3 = _backward(m, cache, 3.0 * (Y - X))
    for k in g1:
        np.testing.assert_allclose(g3[k], 3.0 * g1[k], rtol=1e-12, atol=1e-15)


def test_zero_gradient_at_optimum():
    # a one-layer dense net whose output weights/bias already reproduce a constant input
    cfg = AEConfig(n_signals=1, window=1, encoder_widths=(1,), decoder_widths=(1,), cell="dense", dropout_rate=0.0)
    m = init(cfg)
    for p in m.params.values():
        p[...] = 0.0
    m.params["out.b"][...] = 0.5
    _, grads = loss_and_gradients(m, np.full((4, 1), 0.5))
    assert all(not g.any() for g in grads.values())


# optimiser ---------------------------------------------------------------------------------


def test_rmsprop_zero_gradient_keeps_parameters():
    m = init(AEConfig(**TINY))
    before = {k: v.copy() for k, v in m.params.items()}
    rmsprop_step(m, {k: np.zeros_like(v) for k, v in m.params.items()})
    for k in before:
        np.testing.assert_array_equal(before[k], m.params[k])


def test_rmsprop_first_step_closed_form():
    m = init(AEConfig(**TINY))
    p0 = m.params["out.b"].copy()
    rmsprop_step(m, {"out.b": np.ones_like(p0)}, learning_rate=0.001)
    np.testing.assert_allclose(m.params["out.b"] - p0, -0.001 / np.sqrt(0.1 + 1e-8), rtol=1e-12)
    assert (m.params["out.b"] - p0)[0] == pytest.approx(-0.0031623, abs=1e-7)


def test_rmsprop_second_identical_step_is_smaller():
    m = init(AEConfig(**TINY))
    g = {"out.b": np.ones(2)}
    p0 = m.params["out.b"].copy()
    rmsprop_step(m, g)
    p1 = m.params["out.b"].copy()
    rmsprop_step(m, g)
    assert np.all(np.abs(m.params["out.b"] - p1) < np.abs(p1 - p0))


def test_rmsprop_shape_check():
    m = init(AEConfig(**TINY))
    with pytest.raises(DimensionError):
        rmsprop_step(m, {"out.b": np.ones(3)})


def test_early_stopping_contract():
    es = EarlyStopping(2)
    assert not es.update(1, 1.0)
    assert not es.update(2, 0.5)
    assert not es.update(3, 0.7)
    assert es.update(4, 0.6)
    assert es.best_epoch == 2


# training ----------------------------------------------------------------------------------------


def sine_windows(n_windows=120, w=10, n=3, seed=0):
    t = np.arange(n_windows * w)
    rng = np.random.default_rng(seed)
    cols = [0.5 + 0.4 * np.sin(2 * np.pi * t / p + rng.uniform(0, 6)) for p in (37, 53, 71)[:n]]
    M = np.column_stack(cols)
    return M.reshape(n_windows, w, n).transpose(0, 2, 1).reshape(n_windows, -1)


def test_train_zero_epochs_returns_initial_state():
    cfg = AEConfig(n_signals=3, window=10, encoder_widths=(20, 10), max_epochs=0)
    model, hist = train(cfg, sine_windows(20))
    ref = init(cfg)
    assert hist.epochs == 0
    for k in ref.params:
        np.testing.assert_array_equal(ref.params[k], model.params[k])


def test_train_converges_on_sine_waves():
    cfg = AEConfig(n_signals=3, window=10, encoder_widths=(20, 10), max_epochs=30, early_stop_patience=30)
    X = sine_windows()
    initial = loss(X, reconstruct(init(cfg), X))
    model, hist = train(cfg, X)
    assert loss(X, reconstruct(model, X)) < 0.1 * initial
    assert hist.best_epoch == int(np.argmin(hist.val_loss)) + 1
    assert model.best_val_loss == pytest.approx(min(hist.val_loss))


def test_train_is_deterministic():
    cfg = AEConfig(n_signals=3, window=10, encoder_widths=(8, 4), max_epochs=3, rng_seed=4)
    X = sine_windows(40)
    a, ha = train(cfg, X)
    b, hb = train(cfg, X)
    assert ha.train_loss == hb.train_loss
    for k in a.params:
        np.testing.assert_array_equal(a.params[k], b.params[k])


def test_train_stops_after_patience():
    # a huge learning rate makes the validation loss blow up after the first epoch
    cfg = AEConfig(n_signals=3, window=10, encoder_widths=(8, 4), max_epochs=20,
                   early_stop_patience=1, learning_rate=5.0, cell="dense")
    _, hist = train(cfg, sine_windows(40))
    assert hist.stopped_epoch == hist.best_epoch + 1 < 20


def test_train_with_fewer_windows_than_batch():
    cfg = AEConfig(n_signals=3, window=10, encoder_widths=(8, 4), max_epochs=2, batch_size=64)
    _, hist = train(cfg, sine_windows(5))
    assert hist.epochs == 2


# search ------------------------------------------------------------------------------------------


def test_random_search_budget_one_and_determinism():
    X = sine_windows(40)
    base = AEConfig(n_signals=3, window=10, cell="dense")
    space = {"dropout_rate": [0.0, 0.2], "learning_rate": [1e-3, 3e-3]}
    a = random_search(space, 1, X, seed=3, base=base, epochs=2)
    assert len(a.trials) == 1 and a.best == a.trials[0][0].__class__(**{**a.trials[0][0].to_dict(), "max_epochs": base.max_epochs})
    b = random_search(space, 3, X, seed=3, base=base, epochs=2)
    c = random_search(space, 3, X, seed=3, base=base, epochs=2)
    assert [t[1] for t in b.trials] == [t[1] for t in c.trials]


def test_random_search_prefers_tuned_learning_rate():
    X = sine_windows(60)
    base = AEConfig(n_signals=3, window=10, encoder_widths=(20, 10), dropout_rate=0.2, batch_size=16)
    space = {"learning_rate": [1e-3, 1e-6, 1e-7]}
    result = random_search(space, 3, X, seed=0, base=base, epochs=5)
    assert result.best.learning_rate == 1e-3


def test_random_search_rejects_empty_space():
    with pytest.raises(ConfigError):
        random_search({}, 1, sine_windows(10))
    with pytest.raises(ConfigError):
        random_search({"colour": [1]}, 1, sine_windows(10))


# persistence -------------------------------------------------------------------------------------


@pytest.mark.parametrize("cell", ["lstm", "dense"])
def test_save_load_bit_exact(tmp_path, cell):
    cfg = AEConfig(n_signals=3, window=10, encoder_widths=(8, 4), max_epochs=2, cell=cell)
    model, _ = train(cfg, sine_windows(20))
    save(model, tmp_path / "m.aefm", meta={"config_hash": "x"})
    back = load(tmp_path / "m.aefm")
    assert back.config == model.config and back.epoch == model.epoch
    for k in model.params:
        assert back.params[k].tobytes() == model.params[k].tobytes()
        assert back.accum[k].tobytes() == model.accum[k].tobytes()
    X = sine_windows(4)
    assert forward(back, X).tobytes() == forward(model, X).tobytes()
    assert loads_meta((tmp_path / "m.aefm").read_bytes()) == {"config_hash": "x"}


def test_load_rejects_truncated_and_corrupt():
    blob = dumps(init(AEConfig(**TINY)))
    with pytest.raises(IntegrityError):
        loads(blob[:-10])
    with pytest.raises(IntegrityError):
        loads(blob[:3])
    flipped = bytearray(blob)
    flipped[len(blob) // 2] ^= 0xFF
    with pytest.raises(IntegrityError):
        loads(bytes(flipped))


def test_load_rejects_other_version():
    blob = bytearray(dumps(init(AEConfig(**TINY))))
    blob[4:6] = (VERSION + 1).to_bytes(2, "little")
    with pytest.raises(UnsupportedVersionError):
        loads(bytes(blob))
