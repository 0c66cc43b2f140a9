import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maskwfs.dataset import forward_pattern
from maskwfs.loss import LossBreakdown, batch_loss_and_grad, loss_eq1
from maskwfs.optics import ComplexField, Grid, MaskModel

from .oracles import central_difference

G = Grid(16, 16, 1e-6, 1e-6, 13.5e-9)


def small_mask(seed=0):
    t = (np.random.default_rng(seed).random(G.shape) < 0.3).astype(np.uint8)
    return MaskModel(G, t)


def _obj(rng, shape=G.shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_identical_objects_give_zero():
    rng = np.random.default_rng(0)
    a = _obj(rng)
    b = loss_eq1(a, a, small_mask())
    assert b.as_tuple() == (0.0, 0.0, 0.0, 0.0)


@pytest.mark.parametrize("delta", [0.1, -0.5, 2.0])
def test_constant_real_offset(delta):
    rng = np.random.default_rng(1)
    a = _obj(rng)
    b = loss_eq1(a + delta, a, None)
    assert b.real_term == pytest.approx(delta ** 2, rel=1e-12)
    assert b.imag_term == 0


def test_global_phase_only_moves_label_terms():
    rng = np.random.default_rng(2)
    a = _obj(rng)
    b = loss_eq1(a * np.exp(0.8j), a, small_mask())
    assert b.pattern_term < 1e-28
    assert b.real_term > 0 and b.imag_term > 0


def test_pattern_term_uses_unit_max_patterns():
    rng = np.random.default_rng(3)
    mask = small_mask()
    a, c = _obj(rng), _obj(rng)
    pa = forward_pattern(ComplexField(G, a), mask)
    pc = forward_pattern(ComplexField(G, c), mask)
    want = np.mean((pa / pa.max() - pc / pc.max()) ** 2)
    assert loss_eq1(a, c, mask).pattern_term == pytest.approx(want, rel=1e-12)
    # scaling the retrieved object leaves the normalized pattern term alone
    assert loss_eq1(5 * a, c, mask).pattern_term == pytest.approx(want, rel=1e-12)


def test_non_finite_rejected():
    a = np.zeros(G.shape, complex)
    b = a.copy()
    b[0, 0] = np.nan
    with pytest.raises(FloatingPointError):
        loss_eq1(b, a, None)
    with pytest.raises(FloatingPointError, match="sample 1"):
        batch_loss_and_grad(np.stack([a, b]), np.stack([a, a]), None)


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        batch_loss_and_grad(np.zeros((1, 4, 4), complex), np.zeros((1, 4, 8), complex), None)


def test_breakdown_total_and_arithmetic():
    b = LossBreakdown(1.0, 2.0, 3.5)
    assert b.total == 6.5
    assert (b + b).as_tuple() == (2.0, 4.0, 7.0, 13.0)
    assert b.scaled(0.5).total == 3.25


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_loss_non_negative_and_flattening_order_free(seed):
    rng = np.random.default_rng(seed)
    mask = small_mask()
    a, c = _obj(rng), _obj(rng)
    b = loss_eq1(a, c, mask)
    assert min(b.as_tuple()) >= 0
    # transposing every array only reorders the summed pixels
    mask_t = MaskModel(G, mask.transmission.T.copy())
    bt = loss_eq1(a.T, c.T, mask_t)
    np.testing.assert_allclose(bt.as_tuple(), b.as_tuple(), rtol=1e-12)


def test_batch_is_mean_of_samples():
    rng = np.random.default_rng(4)
    mask = small_mask()
    U, V = _obj(rng, (3, 16, 16)), _obj(rng, (3, 16, 16))
    b, _ = batch_loss_and_grad(U, V, mask)
    each = [loss_eq1(U[i], V[i], mask).as_tuple() for i in range(3)]
    np.testing.assert_allclose(b.as_tuple(), np.mean(each, axis=0), rtol=1e-12)


@pytest.mark.parametrize("with_mask", [False, True])
def test_gradient_matches_central_differences(with_mask):
    rng = np.random.default_rng(5)
    mask = small_mask() if with_mask else None
    U, V = _obj(rng, (2, 16, 16)), _obj(rng, (2, 16, 16))
    _, g = batch_loss_and_grad(U, V, mask)
    parts = {"re": U.real.copy(), "im": U.imag.copy()}

    def total():
        return batch_loss_and_grad(parts["re"] + 1j * parts["im"], V, mask, with_grad=False)[0].total

    fd = central_difference(total, parts)
    for name, an in (("re", g.real), ("im", g.imag)):
        rel = np.linalg.norm(fd[name] - an) / np.linalg.norm(fd[name])
        assert rel < 1e-6, (name, rel)
