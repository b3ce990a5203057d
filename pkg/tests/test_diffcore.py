import numpy as np
import pytest

from typedesc import diffcore as dc
from typedesc.errors import CheckpointError, ShapeMismatch, TypedescError


def param(rng, *shape, scale=0.5):
    return dc.Tensor(rng.normal(0.0, scale, size=shape), requires_grad=True)


class TestForwardValues:
    def test_softmax_symmetry(self):
        out = dc.softmax(dc.Tensor([0.0, 0.0]))
        np.testing.assert_allclose(out.data, [0.5, 0.5], atol=1e-12)

    def test_softmax_normalized(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            out = dc.softmax(dc.Tensor(rng.normal(size=7) * 10))
            assert abs(out.data.sum() - 1.0) < 1e-9
            assert np.all(out.data >= 0)

    def test_matmul_identity(self):
        m = dc.Tensor([[1.0, 2.0], [3.0, 4.0]])
        out = dc.matmul(dc.Tensor(np.eye(2)), m)
        np.testing.assert_allclose(out.data, m.data)

    def test_sigmoid_zero(self):
        assert dc.sigmoid(dc.Tensor(np.zeros(3))).data[0] == 0.5

    def test_shape_mismatch_names_shapes(self):
        a = dc.Tensor(np.zeros((2, 3)))
        b = dc.Tensor(np.zeros((2, 3)))
        with pytest.raises(ShapeMismatch, match=r"\(2, 3\).*\(2, 3\)"):
            dc.matmul(a, b)

    def test_backward_needs_scalar(self):
        t = dc.Tensor(np.zeros(3), requires_grad=True)
        with pytest.raises(TypedescError):
            (t * 2.0).backward()


class TestGRUCell:
    def zero_weights(self, d_in, d_h):
        p = {}
        dc.init_gru(p, "g", d_in, d_h, np.random.default_rng(0))
        for t in p.values():
            t.data[:] = 0.0
        return dc.gru_weights(p, "g"), p

    def test_zero_params_zero_state(self):
        w, _ = self.zero_weights(3, 4)
        x = dc.Tensor([1.0, -2.0, 3.0])
        h = dc.zeros(4)
        out = dc.gru_cell(x, h, w)
        np.testing.assert_allclose(out.data, np.zeros(4), atol=1e-15)

    def test_update_gate_saturation(self):
        # huge update-gate bias forces z ~ 1, so h' ~ hbar
        w, p = self.zero_weights(3, 4)
        p["g.bz"].data[:] = 50.0
        p["g.bh"].data[:] = 0.7
        x = dc.Tensor([0.0, 0.0, 0.0])
        h = dc.Tensor([5.0, -5.0, 2.0, 1.0])
        out = dc.gru_cell(x, h, w)
        np.testing.assert_allclose(out.data, np.tanh(0.7) * np.ones(4), atol=1e-9)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        p = {}
        dc.init_gru(p, "g", 3, 4, rng)
        for t in p.values():
            t.data = rng.normal(0.0, 0.5, size=t.data.shape)
        x = param(rng, 3)
        h = param(rng, 4)
        probe = dc.Tensor(rng.normal(size=4))
        w = dc.gru_weights(p, "g")
        err = dc.grad_check(lambda: (dc.gru_cell(x, h, w) * probe).sum(),
                            [x, h] + list(p.values()), epsilon=1e-5)
        assert err < 1e-4


class TestGradCheck:
    def test_sum_gradient_is_ones(self):
        x = dc.Tensor(np.arange(5.0), requires_grad=True)
        err = dc.grad_check(lambda: x.sum(), [x])
        assert err < 1e-10
        x.grad = None
        loss = x.sum()
        loss.backward()
        np.testing.assert_allclose(x.grad, np.ones(5))

    def test_constant_function(self):
        x = dc.Tensor(np.ones(3), requires_grad=True)
        c = dc.Tensor(np.ones(()))
        err = dc.grad_check(lambda: c * 1.0, [x])
        assert err == 0.0

    def test_each_op(self):
        rng = np.random.default_rng(7)
        a, b = param(rng, 3, 4), param(rng, 4, 2)
        m = dc.Tensor(rng.normal(size=(3, 2)))
        assert dc.grad_check(lambda: (dc.matmul(a, b) * m).sum(), [a, b]) < 1e-6

        w, x = param(rng, 3, 4), param(rng, 4)
        v = dc.Tensor(rng.normal(size=3))
        assert dc.grad_check(lambda: (dc.matmul(w, x) * v).sum(), [w, x]) < 1e-6

        t = param(rng, 6)
        probe = dc.Tensor(rng.normal(size=6))
        assert dc.grad_check(lambda: (dc.softmax(t) * probe).sum(), [t]) < 1e-6
        assert dc.grad_check(lambda: (dc.sigmoid(t) * probe).sum(), [t]) < 1e-6
        assert dc.grad_check(lambda: (dc.tanh(t) * probe).sum(), [t]) < 1e-6
        assert dc.grad_check(lambda: dc.cross_entropy(t, 2), [t]) < 1e-6

        pr = dc.Tensor(np.abs(rng.normal(size=4)) + 0.5, requires_grad=True)
        assert dc.grad_check(lambda: dc.cross_entropy(pr, 1, from_logits=False), [pr]) < 1e-6

        c1, c2 = param(rng, 3), param(rng, 4)
        probe7 = dc.Tensor(rng.normal(size=7))
        assert dc.grad_check(lambda: (dc.concat([c1, c2]) * probe7).sum(), [c1, c2]) < 1e-6

        tab = param(rng, 5, 3)
        probe3 = dc.Tensor(rng.normal(size=(2, 3)))
        assert dc.grad_check(
            lambda: (dc.embedding_lookup(tab, [1, 1]) * probe3).sum(), [tab]) < 1e-6

        s = param(rng, 5)
        probe4 = dc.Tensor(rng.normal(size=4))
        idx = np.array([0, 1, 1, 2, 0])
        assert dc.grad_check(
            lambda: (dc.scatter_add(s, idx, 4) * probe4).sum(), [s]) < 1e-6

    def test_non_finite_loss_rejected(self):
        x = dc.Tensor(np.array([1.0]), requires_grad=True)
        with pytest.raises(TypedescError):
            dc.grad_check(lambda: dc.log(x * 0.0).sum(), [x])


class TestBackwardLinearity:
    def test_sum_of_losses_equals_sum_of_backwards(self):
        rng = np.random.default_rng(2)
        w = param(rng, 4, 4)
        x1 = dc.Tensor(rng.normal(size=4))
        x2 = dc.Tensor(rng.normal(size=4))

        def loss(x):
            return (dc.tanh(dc.matmul(w, x)) * dc.Tensor(np.ones(4))).sum()

        w.grad = None
        dc.add_n([loss(x1), loss(x2)]).backward()
        joint = w.grad.copy()

        w.grad = None
        loss(x1).backward()
        g1 = w.grad.copy()
        w.grad = None
        loss(x2).backward()
        g2 = w.grad.copy()
        np.testing.assert_allclose(joint, g1 + g2, atol=1e-12)


class TestAdam:
    def test_zero_gradient_leaves_parameters(self):
        p = dc.Tensor(np.array([1.0, 2.0]), requires_grad=True)
        opt = dc.Adam({"p": p}, lr=0.1)
        for _ in range(5):
            p.grad = np.zeros(2)
            opt.step()
        np.testing.assert_allclose(p.data, [1.0, 2.0])

    def test_first_step_hand_value(self):
        # m_hat = g, v_hat = g^2 after bias correction: step = -lr * 1/(1 + eps)
        p = dc.Tensor(np.array([0.0]), requires_grad=True)
        opt = dc.Adam({"p": p}, lr=0.001)
        p.grad = np.array([1.0])
        opt.step()
        assert abs(p.data[0] + 0.001) < 1e-9

    def test_constant_gradient_step_magnitude_is_lr(self):
        p = dc.Tensor(np.array([0.0]), requires_grad=True)
        opt = dc.Adam({"p": p}, lr=0.01)
        prev = p.data[0]
        for _ in range(50):
            p.grad = np.array([2.5])
            opt.step()
            assert abs(abs(p.data[0] - prev) - 0.01) < 1e-6
            prev = p.data[0]

    def test_non_finite_gradient_rejected(self):
        p = dc.Tensor(np.array([0.0]), requires_grad=True)
        opt = dc.Adam({"p": p})
        p.grad = np.array([np.nan])
        with pytest.raises(TypedescError, match="p"):
            opt.step()


class TestClip:
    def test_scales_to_max_norm(self):
        a = dc.Tensor(np.zeros(3), requires_grad=True)
        a.grad = np.array([3.0, 4.0, 0.0])
        norm = dc.clip_gradients({"a": a}, 1.0)
        assert abs(norm - 5.0) < 1e-12
        np.testing.assert_allclose(a.grad, [0.6, 0.8, 0.0])

    def test_below_threshold_untouched(self):
        a = dc.Tensor(np.zeros(2), requires_grad=True)
        a.grad = np.array([0.3, 0.4])
        dc.clip_gradients({"a": a}, 1.0)
        np.testing.assert_allclose(a.grad, [0.3, 0.4])


class TestNoGrad:
    def test_inference_builds_no_graph(self):
        w = dc.Tensor(np.ones((2, 2)), requires_grad=True)
        with dc.no_grad():
            out = dc.matmul(w, dc.Tensor(np.ones(2)))
        assert out._parents == ()
        assert not out.requires_grad


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(4)
        params = {"layer.w": param(rng, 3, 2), "layer.b": param(rng, 2)}
        path = tmp_path / "model.bin"
        dc.save_checkpoint(path, params)
        loaded = dc.load_checkpoint(path)
        assert set(loaded) == set(params)
        for name in params:
            np.testing.assert_array_equal(loaded[name].data, params[name].data)
            assert loaded[name].requires_grad

    def test_version_mismatch_names_versions(self, tmp_path):
        path = tmp_path / "model.bin"
        dc.save_checkpoint(path, {"w": dc.Tensor(np.zeros(2), requires_grad=True)})
        raw = bytearray(path.read_bytes())
        raw[4] = 99  # bump the little-endian version field
        path.write_bytes(bytes(raw))
        with pytest.raises(CheckpointError, match="99"):
            dc.load_checkpoint(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "model.bin"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(CheckpointError):
            dc.load_checkpoint(path)
