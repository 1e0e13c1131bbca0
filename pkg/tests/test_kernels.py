"""Backend parity: the compiled core must agree with the numpy reference."""

import numpy as np
import pytest

from loadcast._kernels import available_backends, get_backend

np_backend = get_backend("numpy")

needs_compiled = pytest.mark.skipif(
    "compiled" not in available_backends(), reason="compiled core not built"
)


def pair(rng, rows, cols, lo=-3.0, hi=3.0):
    return rng.uniform(lo, hi, size=(rows, cols))


@needs_compiled
def test_forward_kernels_match():
    cc = get_backend("compiled")
    rng = np.random.default_rng(0)
    a = pair(rng, 7, 5)
    b = pair(rng, 7, 5)
    m = pair(rng, 7, 4)
    w = pair(rng, 4, 6)
    pos = pair(rng, 7, 5, lo=0.05, hi=4.0)

    np.testing.assert_allclose(cc.matmul(m, w), np_backend.matmul(m, w), rtol=1e-12)
    np.testing.assert_array_equal(cc.add(a, b), np_backend.add(a, b))
    np.testing.assert_array_equal(cc.subtract(a, b), np_backend.subtract(a, b))
    np.testing.assert_array_equal(cc.multiply(a, b), np_backend.multiply(a, b))
    np.testing.assert_array_equal(cc.scalar_mul(a, 2.5), np_backend.scalar_mul(a, 2.5))
    np.testing.assert_allclose(cc.sigmoid(a), np_backend.sigmoid(a), rtol=1e-12)
    np.testing.assert_allclose(cc.tanh(a), np_backend.tanh(a), rtol=1e-12)
    np.testing.assert_allclose(cc.exp(a), np_backend.exp(a), rtol=1e-12)
    np.testing.assert_allclose(cc.log(pos), np_backend.log(pos), rtol=1e-12)
    assert abs(cc.array_sum(a) - np_backend.array_sum(a)) < 1e-10
    assert cc.array_min(a) == np_backend.array_min(a)


@needs_compiled
def test_finite_detection_matches():
    cc = get_backend("compiled")
    ok = np.ones((3, 3))
    assert cc.all_finite(ok) and np_backend.all_finite(ok)
    for bad_value in (np.nan, np.inf, -np.inf):
        bad = ok.copy()
        bad[1, 2] = bad_value
        assert not cc.all_finite(bad)
        assert not np_backend.all_finite(bad)


@needs_compiled
def test_backward_kernels_match():
    cc = get_backend("compiled")
    rng = np.random.default_rng(1)
    g = pair(rng, 5, 4)
    y = pair(rng, 5, 4, lo=-0.95, hi=0.95)
    x = pair(rng, 5, 4, lo=0.1, hi=3.0)

    for name, args in [
        ("acc", (g,)),
        ("acc_neg", (g,)),
        ("acc_prod", (g, y)),
        ("acc_scaled", (g, 0.3)),
        ("sigmoid_acc", (g, np_backend.sigmoid(y))),
        ("tanh_acc", (g, y)),
        ("exp_acc", (g, np_backend.exp(y))),
        ("log_acc", (g, x)),
    ]:
        out_c = rng.uniform(size=(5, 4))
        out_n = out_c.copy()
        getattr(cc, name)(out_c, *args)
        getattr(np_backend, name)(out_n, *args)
        np.testing.assert_allclose(out_c, out_n, rtol=1e-12, err_msg=name)

    out_c = np.zeros((5, 4))
    out_n = np.zeros((5, 4))
    cc.acc_fill(out_c, 0.7)
    np_backend.acc_fill(out_n, 0.7)
    np.testing.assert_array_equal(out_c, out_n)

    a = pair(rng, 5, 3)
    b = pair(rng, 3, 4)
    gg = pair(rng, 5, 4)
    out_c = np.zeros((5, 3))
    out_n = np.zeros((5, 3))
    cc.matmul_acc_a(out_c, gg, b)
    np_backend.matmul_acc_a(out_n, gg, b)
    np.testing.assert_allclose(out_c, out_n, rtol=1e-12)

    out_c = np.zeros((3, 4))
    out_n = np.zeros((3, 4))
    cc.matmul_acc_b(out_c, gg, a)
    np_backend.matmul_acc_b(out_n, gg, a)
    np.testing.assert_allclose(out_c, out_n, rtol=1e-12)


@needs_compiled
def test_row_slice_views_accumulate_in_place():
    cc = get_backend("compiled")
    out = np.zeros((6, 3))
    g = np.ones((2, 3))
    cc.acc(out[2:4], g)
    assert out[2:4].sum() == 6.0 and out.sum() == 6.0
