import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gcdm import rng
from gcdm.engine import (
    Tensor,
    attention,
    avg_pool2x,
    concat,
    conv2d,
    gather_rows,
    gradients,
    group_norm,
    repeat_axis,
    set_check_finite,
    silu,
    softmax,
    tile_axis,
    upsample_nearest2x,
    using_dtype,
)
from gcdm.engine import nn
from gcdm.engine.optim import AdamW, OptimizerState, adamw_step

from oracles import finite_difference_gradients, relative_error


# -- backward basics -----------------------------------------------------------------


def test_square_gradient():
    x = Tensor(3.0, requires_grad=True)
    (x * x).backward()
    assert x.grad == pytest.approx(6.0)


def test_dead_relu_gradient():
    from gcdm.engine.tensor import relu

    x = Tensor(np.array([-1.0, -2.0, -0.5]), requires_grad=True)
    relu(x).sum().backward()
    assert (x.grad == 0).all()


def test_backward_requires_scalar():
    x = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(ValueError):
        (x * x).backward()


def test_unreachable_parameter_gets_zero_gradient():
    x = Tensor(2.0, requires_grad=True)
    unused = Tensor(np.ones((2, 2)), requires_grad=True)
    grads = gradients(x * x, {"x": x, "unused": unused})
    assert grads["x"] == pytest.approx(4.0)
    assert (grads["unused"] == 0).all()


def test_mlp_matches_finite_differences_float64():
    with using_dtype(np.float64):
        g = rng.stream(0, "mlp-fd")
        params = {
            "w1": Tensor(g.normal(size=(6, 8)) * 0.5, requires_grad=True),
            "w2": Tensor(g.normal(size=(8, 8)) * 0.5, requires_grad=True),
            "w3": Tensor(g.normal(size=(8, 3)) * 0.5, requires_grad=True),
        }
        x = Tensor(g.normal(size=(4, 6)))
        target = g.normal(size=(4, 3))

        def loss_fn():
            from gcdm.engine.tensor import matmul, tanh

            h = tanh(matmul(x, params["w1"]))
            h = tanh(matmul(h, params["w2"]))
            out = matmul(h, params["w3"])
            diff = out - Tensor(target)
            return (diff * diff).mean()

        analytic = gradients(loss_fn(), params)
        numeric = finite_difference_gradients(loss_fn, params, h=1e-6)
        for name in params:
            assert relative_error(analytic[name], numeric[name]) < 1e-6


def test_mlp_matches_finite_differences_float32():
    g = rng.stream(1, "mlp-fd32")
    params = {
        "w1": Tensor(g.normal(size=(5, 7)) * 0.5, requires_grad=True),
        "w2": Tensor(g.normal(size=(7, 2)) * 0.5, requires_grad=True),
    }
    x = Tensor(g.normal(size=(3, 5)))

    def loss_fn():
        from gcdm.engine.tensor import matmul, tanh

        return (tanh(matmul(tanh(matmul(x, params["w1"])), params["w2"]))).mean()

    analytic = gradients(loss_fn(), params)
    numeric = finite_difference_gradients(loss_fn, params, h=5e-3)
    for name in params:
        assert relative_error(analytic[name], numeric[name]) < 1e-4


# -- conv ------------------------------------------------------------------------------


def test_conv_identity_kernel():
    x = Tensor(np.random.rand(1, 1, 5, 5).astype(np.float32))
    w = Tensor(np.ones((1, 1, 1, 1), np.float32))
    out = conv2d(x, w)
    np.testing.assert_allclose(out.data, x.data)


def test_conv_ones_kernel_constant_image():
    x = Tensor(np.full((1, 1, 6, 6), 2.0))
    w = Tensor(np.ones((1, 1, 3, 3)))
    out = conv2d(x, w)  # valid convolution, interior equals 9 * c
    assert out.shape == (1, 1, 4, 4)
    np.testing.assert_allclose(out.data, 18.0)


def test_conv_matches_loop_oracle():
    with using_dtype(np.float64):
        g = rng.stream(2, "conv-oracle")
        x = g.normal(size=(1, 2, 5, 5))
        w = g.normal(size=(3, 2, 3, 3))
        out = conv2d(Tensor(x), Tensor(w)).data
        expected = np.zeros((1, 3, 3, 3))
        for o in range(3):
            for i in range(3):
                for j in range(3):
                    expected[0, o, i, j] = (x[0, :, i : i + 3, j : j + 3] * w[o]).sum()
        np.testing.assert_allclose(out, expected, atol=1e-6)


def test_conv_shape_mismatch_raises():
    with pytest.raises(ValueError):
        conv2d(Tensor(np.zeros((1, 2, 4, 4))), Tensor(np.zeros((1, 3, 3, 3))))
    with pytest.raises(ValueError):
        conv2d(Tensor(np.zeros((1, 1, 2, 2))), Tensor(np.zeros((1, 1, 5, 5))))


# -- attention / softmax ---------------------------------------------------------------


def test_attention_single_key_returns_value():
    q = Tensor(np.random.rand(4, 3))
    k = Tensor(np.random.rand(1, 3))
    v = Tensor(np.random.rand(1, 5))
    out = attention(q, k, v)
    np.testing.assert_allclose(out.data, np.tile(v.data, (4, 1)), rtol=1e-6)


def test_attention_identical_keys_average_values():
    q = Tensor(np.random.rand(2, 3))
    k = Tensor(np.tile(np.random.rand(1, 3), (4, 1)))
    v = Tensor(np.random.rand(4, 5))
    out = attention(q, k, v)
    np.testing.assert_allclose(out.data, np.tile(v.data.mean(0), (2, 1)), rtol=1e-5)


def test_attention_matches_two_loop_oracle():
    with using_dtype(np.float64):
        g = rng.stream(3, "attn-oracle")
        q, k, v = g.normal(size=(2, 4)), g.normal(size=(3, 4)), g.normal(size=(3, 2))
        out = attention(Tensor(q), Tensor(k), Tensor(v)).data
        expected = np.zeros((2, 2))
        for row in range(2):
            logits = [q[row] @ k[j] / np.sqrt(4.0) for j in range(3)]
            exp = np.exp(logits - max(logits))
            weights = exp / exp.sum()
            for j in range(3):
                expected[row] += weights[j] * v[j]
        np.testing.assert_allclose(out, expected, atol=1e-6)


@given(st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_softmax_rows_sum_to_one(seed):
    g = rng.stream(seed, "softmax-prop")
    x = Tensor(g.normal(size=(3, 7)) * 10)
    rows = softmax(x, axis=-1).data.sum(axis=-1)
    np.testing.assert_allclose(rows, 1.0, atol=1e-6)


# -- adamw ------------------------------------------------------------------------------


def test_adamw_zero_gradient_no_decay_keeps_params():
    p = {"w": Tensor(np.array([1.0, -2.0]), requires_grad=True)}
    before = p["w"].data.copy()
    adamw_step(p, {"w": np.zeros(2)}, OptimizerState(lr=0.1, weight_decay=0.0))
    np.testing.assert_array_equal(p["w"].data, before)


def test_adamw_first_step_closed_form():
    p = {"w": Tensor(np.array([0.5]), requires_grad=True)}
    state = OptimizerState(lr=0.1, weight_decay=0.0)
    adamw_step(p, {"w": np.array([1.0])}, state)
    # bias correction makes step one exactly lr * g / (|g| + eps)
    assert p["w"].data[0] == pytest.approx(0.5 - 0.1 * 1.0 / (1.0 + state.eps), abs=1e-7)
    assert state.step_count == 1


def test_adamw_descends_quadratic():
    p = {"w": Tensor(np.array([0.0]), requires_grad=True)}
    opt = AdamW(p, lr=0.05)
    for _ in range(100):
        grad = 2.0 * (p["w"].data - 2.0)
        opt.step({"w": grad})
    assert abs(p["w"].data[0] - 2.0) < 2.0


def test_adamw_rejects_nonfinite_gradients():
    p = {"w": Tensor(np.array([1.0]), requires_grad=True)}
    with pytest.raises(FloatingPointError):
        adamw_step(p, {"w": np.array([np.nan])}, OptimizerState())


def test_adamw_moment_shapes_match_parameters():
    p = {"w": Tensor(np.zeros((3, 2)), requires_grad=True)}
    state = OptimizerState()
    adamw_step(p, {"w": np.ones((3, 2))}, state)
    assert state.m["w"].shape == p["w"].data.shape
    assert state.v["w"].shape == p["w"].data.shape


# -- layer gradient checks ---------------------------------------------------------------


def _check_op_gradients(build_loss, params, tolerance=1e-6, h=1e-6):
    analytic = gradients(build_loss(), params)
    numeric = finite_difference_gradients(build_loss, params, h=h)
    for name in params:
        assert relative_error(analytic[name], numeric[name]) < tolerance, name


def test_layer_gradients_float64():
    with using_dtype(np.float64):
        g = rng.stream(4, "layer-fd")

        x = Tensor(g.normal(size=(2, 4, 6, 6)), requires_grad=True)
        w = Tensor(g.normal(size=(3, 4, 3, 3)) * 0.4, requires_grad=True)
        c = Tensor(g.normal(size=(2, 3, 6, 6)))
        _check_op_gradients(lambda: (conv2d(x, w, pad=1) * c).sum(), {"x": x, "w": w})

        gamma = Tensor(1.0 + 0.3 * g.normal(size=(1, 4, 1, 1)), requires_grad=True)
        beta = Tensor(0.1 * g.normal(size=(1, 4, 1, 1)), requires_grad=True)
        cg = Tensor(g.normal(size=(2, 4, 6, 6)))
        _check_op_gradients(
            lambda: (group_norm(x, gamma, beta, 2, 1e-5) * cg).sum(),
            {"x": x, "gamma": gamma, "beta": beta},
        )

        xs = Tensor(g.normal(size=(3, 5)), requires_grad=True)
        _check_op_gradients(lambda: (silu(xs) * Tensor(np.ones((3, 5)))).sum(), {"xs": xs})

        q = Tensor(g.normal(size=(2, 3, 4)), requires_grad=True)
        k = Tensor(g.normal(size=(2, 5, 4)), requires_grad=True)
        v = Tensor(g.normal(size=(2, 5, 3)), requires_grad=True)
        cv = Tensor(g.normal(size=(2, 3, 3)))
        _check_op_gradients(
            lambda: (attention(q, k, v) * cv).sum(), {"q": q, "k": k, "v": v}
        )

        xp = Tensor(g.normal(size=(1, 2, 4, 4)), requires_grad=True)
        c_up = Tensor(g.normal(size=(1, 2, 8, 8)))
        c_pool = Tensor(np.ones((1, 2, 2, 2)))
        _check_op_gradients(
            lambda: (upsample_nearest2x(xp) * c_up).sum() + (avg_pool2x(xp) * c_pool).sum(),
            {"xp": xp},
        )

        xr = Tensor(g.normal(size=(2, 3, 4)), requires_grad=True)
        cr = Tensor(g.normal(size=(2, 6, 4)))
        _check_op_gradients(lambda: (repeat_axis(xr, 2, 1) * cr).sum(), {"xr": xr})
        _check_op_gradients(lambda: (tile_axis(xr, 2, 1) * cr).sum(), {"xr": xr})

        xg = Tensor(g.normal(size=(6, 3)), requires_grad=True)
        idx = np.array([0, 2, 2, 5])
        cgr = Tensor(g.normal(size=(4, 3)))
        _check_op_gradients(lambda: (gather_rows(xg, idx) * cgr).sum(), {"xg": xg})


# -- misc engine behavior ----------------------------------------------------------------


def test_forward_determinism_bitwise():
    def run():
        g = rng.stream(9, "determinism")
        x = Tensor(g.normal(size=(2, 4, 8, 8)).astype(np.float32))
        w = Tensor(g.normal(size=(4, 4, 3, 3)).astype(np.float32))
        return conv2d(silu(x), w, pad=1).data.tobytes()

    assert run() == run()


def test_check_finite_flag_raises_on_overflow():
    set_check_finite(True)
    try:
        x = Tensor(np.array([1e30], dtype=np.float32))
        with pytest.raises(FloatingPointError):
            x * x
    finally:
        set_check_finite(False)


def test_concat_roundtrip_gradients():
    a = Tensor(np.ones((2, 3)), requires_grad=True)
    b = Tensor(np.ones((2, 2)), requires_grad=True)
    out = concat([a, b], axis=1)
    (out * out).sum().backward()
    assert a.grad.shape == (2, 3)
    assert b.grad.shape == (2, 2)


def test_module_parameters_and_loading():
    g = rng.stream(5, "module")
    layer = nn.Linear(4, 3, g)
    params = layer.parameters("lin.")
    assert set(params) == {"lin.weight", "lin.bias"}
    snapshot = {k: v.data.copy() for k, v in params.items()}
    layer.weight.data[:] = 0
    layer.load_parameters(snapshot, prefix="lin.")
    np.testing.assert_array_equal(layer.weight.data, snapshot["lin.weight"])
    with pytest.raises(ValueError):
        layer.load_parameters({"lin.weight": np.zeros((9, 9)), "lin.bias": snapshot["lin.bias"]}, prefix="lin.")
