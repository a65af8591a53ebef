import numpy as np
import pytest

from tmgnn import autodiff as ad
from tmgnn.autodiff import Tape, Tensor
from tmgnn.errors import ConfigurationError, ContractError, ShapeError
from tmgnn.rng import Rng

from _fd import max_grad_error, rel_error


def test_matmul_identity():
    out = ad.matmul(Tensor(np.eye(2)), Tensor([[1.0, 2.0], [3.0, 4.0]]))
    assert np.array_equal(out.data, [[1.0, 2.0], [3.0, 4.0]])


def test_matmul_by_hand():
    a = Tensor([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    b = Tensor([[2.0], [3.0]])
    assert np.array_equal(ad.matmul(a, b).data, [[2.0], [3.0], [5.0]])


def test_matmul_shape_error_names_both_shapes():
    with pytest.raises(ShapeError) as exc:
        ad.matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((4, 5))))
    assert "(2, 3)" in str(exc.value) and "(4, 5)" in str(exc.value)


def test_activation_values():
    assert ad.activation(Tensor([0.0]), "sigmoid").data[0] == 0.5
    assert ad.activation(Tensor([0.0]), "tanh").data[0] == 0.0
    assert np.array_equal(ad.activation(Tensor([-1.0, 2.0]), "relu").data, [0.0, 2.0])
    assert np.array_equal(ad.activation(Tensor([-1.5, 2.0]), "identity").data, [-1.5, 2.0])


def test_activation_unknown_kind():
    with pytest.raises(ConfigurationError):
        ad.activation(Tensor([0.0]), "swish")


def test_softmax_rows_examples():
    assert np.allclose(ad.softmax_rows(Tensor([[0.0, 0.0]])).data, [[0.5, 0.5]])
    out = ad.softmax_rows(Tensor([[np.log(2.0), 0.0]])).data
    assert np.allclose(out, [[2.0 / 3.0, 1.0 / 3.0]], atol=1e-12)


def test_softmax_rows_overflow_safe():
    out = ad.softmax_rows(Tensor([[1000.0, 0.0]])).data
    assert np.all(np.isfinite(out))
    assert out[0, 0] > 1.0 - 1e-12 and out[0, 1] < 1e-12


def test_softmax_rows_sum_and_shift_invariance(gen):
    for _ in range(20):
        x = gen.standard_normal((5, 7))
        y = ad.softmax_rows(Tensor(x)).data
        assert np.all(np.abs(y.sum(axis=1) - 1.0) < 1e-12)
        shifted = ad.softmax_rows(Tensor(x + gen.standard_normal((5, 1)))).data
        assert np.allclose(y, shifted, atol=1e-12)


def test_backward_sum_gives_ones():
    x = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
    with Tape() as tape:
        tape.backward(x.sum())
    assert np.array_equal(x.grad, np.ones((2, 3)))


def test_backward_chain_rule_by_hand():
    w = Tensor([1.0], requires_grad=True)
    with Tape() as tape:
        y = ad.sub(ad.scale(w, 3.0), Tensor([6.0]))
        loss = ad.mul(y, y).sum()
        tape.backward(loss)
    assert np.allclose(w.grad, [-18.0])


def test_backward_requires_scalar_loss():
    x = Tensor(np.ones(3), requires_grad=True)
    with Tape() as tape:
        y = ad.scale(x, 2.0)
        with pytest.raises(ContractError):
            tape.backward(y)


def test_backward_unreachable_parameter_gets_zero_grad():
    x = Tensor(np.ones(3), requires_grad=True)
    unused = Tensor(np.ones(2), requires_grad=True)
    with Tape() as tape:
        loss = x.sum()
        _ = ad.scale(unused, 2.0)  # on the tape, not feeding the loss
        tape.backward(loss)
    assert np.array_equal(unused.grad, np.zeros(2))


def test_grad_accumulates_over_reuse():
    x = Tensor([2.0], requires_grad=True)
    with Tape() as tape:
        loss = ad.mul(x, x).sum()  # x reused by one op twice
        tape.backward(loss)
    assert np.allclose(x.grad, [4.0])


def test_concat_mean_transpose_examples():
    assert np.array_equal(ad.concat([Tensor([1.0, 2.0]), Tensor([3.0])]).data, [1.0, 2.0, 3.0])
    assert ad.tensor_mean(Tensor([2.0, 4.0])).data == 3.0
    a = np.arange(6.0).reshape(2, 3)
    assert np.array_equal(ad.transpose(ad.transpose(Tensor(a))).data, a)


def test_ops_outside_tape_do_not_record():
    x = Tensor(np.ones((2, 2)), requires_grad=True)
    y = ad.mul(x, x)
    assert y.tape_id is None


@pytest.mark.parametrize("trial", range(20))
def test_finite_difference_smooth_ops(trial):
    gen = np.random.default_rng(1000 + trial)
    a = Tensor(gen.standard_normal((3, 4)), requires_grad=True)
    b = Tensor(gen.standard_normal((3, 4)), requires_grad=True)
    m = Tensor(gen.standard_normal((4, 2)), requires_grad=True)
    bias = Tensor(gen.standard_normal(2), requires_grad=True)
    row = Tensor(gen.standard_normal((3, 1)), requires_grad=True)
    kind = ("sigmoid", "tanh", "identity")[trial % 3]
    # fixed weighting so the softmax output is not reduced along full rows
    # (full-row sums are constant 1 and would zero out every gradient)
    c = Tensor(gen.standard_normal((3, 2)))

    def f():
        h = ad.matmul(ad.add(a, b), m)
        h = ad.add(h, bias)
        h = ad.activation(h, kind)
        h = ad.mul(h, ad.concat([row, row], axis=1))
        h = ad.mul(ad.softmax_rows(h), c)
        h = ad.sub(ad.scale(h, 1.7), ad.neg(h))
        part = ad.reshape(ad.transpose(h), (-1, 3))
        return ad.add(part.mean(axis=0).sum(), h.sum(axis=1).mean())

    err = max_grad_error(f, [a, b, m, bias, row])
    assert err < 1e-5


@pytest.mark.parametrize("trial", range(20))
def test_finite_difference_kinked_ops(trial):
    # relu and abs are checked away from their kinks, where central
    # differences are valid.
    gen = np.random.default_rng(2000 + trial)
    sign = gen.choice([-1.0, 1.0], size=(4, 3))
    x = Tensor(sign * gen.uniform(0.5, 2.0, (4, 3)), requires_grad=True)

    def f():
        return ad.add(ad.activation(x, "relu").sum(), ad.absolute(x).mean())

    err = max_grad_error(f, [x], h=1e-6)
    assert err < 1e-5


def test_gumbel_hard_rows_one_hot():
    rng = Rng(7)
    out = ad.gumbel_softmax(Tensor(np.zeros((50, 4))), 1.0, hard=True, rng=rng).data
    assert np.all(out.sum(axis=1) == 1.0)
    assert np.all((out == 0.0) | (out == 1.0))


def test_gumbel_uniform_logits_frequencies():
    rng = Rng(11)
    counts = np.zeros(4)
    out = ad.gumbel_softmax(Tensor(np.zeros((20000, 4))), 1.0, hard=True, rng=rng).data
    counts = out.sum(axis=0)
    freqs = counts / 20000.0
    assert np.all(np.abs(freqs - 0.25) < 0.02)


def test_gumbel_soft_large_temperature_uniform():
    rng = Rng(3)
    out = ad.gumbel_softmax(Tensor(np.zeros((10, 5))), 1e6, hard=False, rng=rng).data
    assert np.allclose(out, 0.2, atol=1e-4)


def test_gumbel_soft_rows_sum_to_one():
    rng = Rng(5)
    out = ad.gumbel_softmax(Tensor(np.random.default_rng(0).standard_normal((8, 3))),
                            0.7, hard=False, rng=rng).data
    assert np.allclose(out.sum(axis=1), 1.0, atol=1e-12)


def test_gumbel_zero_noise_matches_softmax():
    logits = Tensor(np.array([[np.log(2.0), 0.0]]))
    out = ad.gumbel_softmax(logits, 1.0, hard=False, noise=0.0).data
    assert np.allclose(out, [[2.0 / 3.0, 1.0 / 3.0]], atol=1e-9)


def test_gumbel_temperature_must_be_positive():
    with pytest.raises(ConfigurationError):
        ad.gumbel_softmax(Tensor(np.zeros((1, 3))), 0.0, rng=Rng(0))


def test_gumbel_straight_through_gradient_matches_soft_path():
    gen = np.random.default_rng(42)
    logits = Tensor(gen.standard_normal((4, 3)), requires_grad=True)
    noise = Rng(8).gumbel((4, 3))
    weights = Tensor(gen.standard_normal((3, 2)))

    def run(hard):
        logits.grad = None
        with Tape() as tape:
            y = ad.gumbel_softmax(logits, 0.9, hard=hard, noise=noise)
            tape.backward(ad.matmul(y, weights).sum())
        return logits.grad.copy()

    hard_grad = run(True)
    soft_grad = run(False)
    assert np.array_equal(hard_grad, soft_grad)

    def soft_loss():
        y = ad.gumbel_softmax(logits, 0.9, hard=False, noise=noise)
        return ad.matmul(y, weights).sum()

    from _fd import fd_grads

    fd = fd_grads(soft_loss, [logits])[0]
    assert rel_error(soft_grad, fd) < 1e-5


def test_training_trajectory_bitwise_deterministic():
    def run():
        rng = Rng(21)
        w = Tensor(rng.uniform(-0.5, 0.5, (3, 3)), requires_grad=True)
        from tmgnn.optim import Adam

        opt = Adam([w], learning_rate=1e-2)
        losses = []
        for _ in range(5):
            with Tape() as tape:
                noise = Tensor(rng.gumbel((3, 3)))
                loss = ad.mul(ad.add(w, noise), ad.add(w, noise)).mean()
                tape.backward(loss)
            losses.append(float(loss.data))
            opt.step()
            opt.zero_grad()
        return losses, w.data.copy()

    l1, w1 = run()
    l2, w2 = run()
    assert l1 == l2
    assert np.array_equal(w1, w2)
