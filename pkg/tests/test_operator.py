"""Spectral layers against the dense-kernel oracle and the Fourier reference."""

import numpy as np
import pytest

from able import operator as op
from able import reference
from able import tensor as T
from able.errors import ContractError
from able.frame import DensityField, DensityNetConfig, Grid, uniform_density


def rng(seed):
    return np.random.default_rng(seed)


def make_layer(cin=2, cout=2, k_max=4, ndim=1, slices=2, kind="diagonal",
               temperature=0.8, arch="mlp2", activation=None, per_channel=False,
               seed=0):
    cfg = DensityNetConfig(slices=slices, arch=arch, hidden=8,
                           temperature=temperature, per_channel=per_channel)
    return op.AbleLayer(cin, cout, k_max, ndim, density=cfg, kind=kind,
                        activation=activation, rng=rng(seed))


def layer_with_zero_pointwise(**kw):
    layer = make_layer(**kw)
    layer.pointwise.data[...] = 0.0
    layer.bias.data[...] = 0.0
    return layer


# ---- mode truncation ---------------------------------------------------------

def test_mode_indices_corner_layout():
    assert np.array_equal(op.mode_indices(2, 8), [0, 1, 6, 7])
    assert np.array_equal(op.mode_indices(4, 8), np.arange(8))


def test_mode_indices_rejects_oversized():
    with pytest.raises(ContractError):
        op.mode_indices(5, 8)


def test_layer_rejects_kmax_exceeding_grid():
    layer = make_layer(k_max=8)
    with pytest.raises(ContractError):
        layer(T.tensor(rng(0).standard_normal((1, 2, 8))))


# ---- FNO reduction -------------------------------------------------------------

@pytest.mark.parametrize("ndim,n", [(1, 16), (2, 8)])
def test_m1_layer_matches_reference_fno(ndim, n):
    for draw in range(10):
        layer = make_layer(cin=2, cout=3, k_max=3, ndim=ndim, slices=1, seed=draw)
        shape = (2, 2) + (n,) * ndim
        f = rng(100 + draw).standard_normal(shape)
        got = layer(T.tensor(f)).data
        want = reference.fno_layer(
            f, layer.multiplier.weights.data[..., 0],
            layer.pointwise.data, layer.bias.data, k_max=3)
        assert np.max(np.abs(got - want)) < 1e-12


def test_resolution_of_identity():
    # identity multiplier on the full spectrum + any density acts as identity
    n, m, c = 16, 3, 2
    layer = layer_with_zero_pointwise(cin=c, cout=c, k_max=n // 2, slices=m, seed=3)
    w = np.zeros((c, c, n, m), dtype=np.complex128)
    for i in range(c):
        w[i, i, :, :] = 1.0
    layer.multiplier.weights.data[...] = w
    f = rng(4).standard_normal((2, c, n))
    out = layer(T.tensor(f)).data
    assert np.max(np.abs(out - f)) < 1e-10


@pytest.mark.parametrize("kind", ["diagonal", "cross"])
def test_zero_spectral_weights_identity_pointwise(kind):
    layer = make_layer(cin=2, cout=2, k_max=4, ndim=1, slices=2, kind=kind, seed=5)
    layer.multiplier.weights.data[...] = 0.0
    layer.pointwise.data[...] = np.eye(2)
    layer.bias.data[...] = 0.0
    f = rng(6).standard_normal((1, 2, 16))
    assert np.max(np.abs(layer(T.tensor(f)).data - f)) < 1e-14


# ---- dense kernel oracle ---------------------------------------------------------

def dense_path(layer, f):
    kernel = op.materialize_kernel(layer, T.tensor(f))
    out = np.stack([op.apply_dense_kernel(kernel[b:b + 1], f[b:b + 1])[0]
                    for b in range(f.shape[0])]).reshape(f.shape[:1] + (layer.out_channels,) + f.shape[2:])
    sp = "xy"[: f.ndim - 2]
    local = np.einsum(f"bi{sp},io->bo{sp}", f, layer.pointwise.data)
    return out + local + layer.bias.data.reshape((1, -1) + (1,) * (f.ndim - 2))


@pytest.mark.parametrize("kind", ["diagonal", "cross"])
@pytest.mark.parametrize("m", [1, 2, 3])
@pytest.mark.parametrize("n", [8, 16])
def test_layer_matches_dense_oracle_1d(kind, m, n):
    layer = make_layer(cin=2, cout=2, k_max=2, ndim=1, slices=m, kind=kind,
                       seed=10 * m + n)
    f = rng(7 * m + n).standard_normal((2, 2, n))
    got = layer(T.tensor(f)).data
    want = dense_path(layer, f)
    assert np.max(np.abs(got - want)) / np.max(np.abs(want)) < 1e-8


@pytest.mark.parametrize("kind", ["diagonal", "cross"])
@pytest.mark.parametrize("m", [1, 2, 3])
def test_layer_matches_dense_oracle_2d(kind, m):
    layer = make_layer(cin=2, cout=2, k_max=2, ndim=2, slices=m, kind=kind, seed=m)
    f = rng(40 + m).standard_normal((1, 2, 8, 8))
    got = layer(T.tensor(f)).data
    want = dense_path(layer, f)
    assert np.max(np.abs(got - want)) / np.max(np.abs(want)) < 1e-8


def test_per_channel_layer_matches_dense_oracle():
    layer = make_layer(cin=2, cout=2, k_max=2, ndim=1, slices=2, per_channel=True, seed=77)
    f = rng(78).standard_normal((1, 2, 16))
    got = layer(T.tensor(f)).data
    want = dense_path(layer, f)
    assert np.max(np.abs(got - want)) / np.max(np.abs(want)) < 1e-8


def test_cross_with_diagonal_blocks_equals_diagonal():
    diag = make_layer(cin=2, cout=2, k_max=3, ndim=1, slices=2, kind="diagonal", seed=20)
    cross = make_layer(cin=2, cout=2, k_max=3, ndim=1, slices=2, kind="cross", seed=20)
    cross.multiplier.weights.data[...] = 0.0
    for m in range(2):
        cross.multiplier.weights.data[..., m, m] = diag.multiplier.weights.data[..., m]
    cross.pointwise.data[...] = diag.pointwise.data
    cross.bias.data[...] = diag.bias.data
    # same rng stream -> same density nets; force identical weights anyway
    for wd, wc in zip(diag.density_net.weights, cross.density_net.weights):
        wc.data[...] = wd.data
    for bd, bc in zip(diag.density_net.biases, cross.density_net.biases):
        bc.data[...] = bd.data
    f = rng(21).standard_normal((2, 2, 16))
    assert np.max(np.abs(diag(T.tensor(f)).data - cross(T.tensor(f)).data)) < 1e-13


def test_kernel_refuses_oversized_grid():
    layer = make_layer(k_max=4, ndim=1, slices=1)
    big = T.tensor(np.zeros((1, 2, 8192)))
    with pytest.raises(ContractError):
        op.materialize_kernel(layer, big)


def test_per_channel_requires_matching_widths():
    cfg = DensityNetConfig(slices=2, arch="mlp2", hidden=8, per_channel=True)
    with pytest.raises(ContractError):
        op.AbleLayer(2, 3, 2, 1, density=cfg, rng=rng(0))


# ---- translation invariance ---------------------------------------------------------

def test_m1_kernel_is_circulant():
    layer = layer_with_zero_pointwise(cin=1, cout=1, k_max=3, ndim=1, slices=1, seed=30)
    f = rng(31).standard_normal((1, 1, 16))
    kernel = op.materialize_kernel(layer, T.tensor(f))[0, 0, 0]
    diags = op.kernel_diagonals(kernel, (16,))
    spread = np.abs(diags - diags[:, :1]).max()
    assert spread < 1e-12


def test_m2_nonconstant_density_breaks_translation_invariance():
    layer = layer_with_zero_pointwise(cin=1, cout=1, k_max=3, ndim=1, slices=2,
                                      temperature=0.3, seed=32)
    # drive the density away from uniform with a structured input
    f = (3.0 * np.sin(2 * np.pi * np.arange(16) / 16)).reshape(1, 1, 16)
    p = layer.density(T.tensor(f))
    assert np.max(np.abs(p.values.data - 0.5)) > 1e-3, "density stayed uniform"
    kernel = op.materialize_kernel(layer, T.tensor(f))[0, 0, 0]
    diags = op.kernel_diagonals(kernel, (16,))
    witness = (np.abs(diags).max(axis=1) - np.abs(diags).min(axis=1)).max()
    assert witness > 1e-3


def test_one_hot_partition_kernel_vanishes_across_cells():
    n = 16
    layer = layer_with_zero_pointwise(cin=1, cout=1, k_max=4, ndim=1, slices=2, seed=33)
    pv = np.zeros((1, n, 2))
    pv[0, : n // 2, 0] = 1.0
    pv[0, n // 2:, 1] = 1.0
    # bypass the density net: materialize with an explicit one-hot field
    field = DensityField(T.tensor(pv), Grid((n,)))
    layer.density = lambda f, _field=field: _field
    f = rng(34).standard_normal((1, 1, n))
    kernel = op.materialize_kernel(layer, T.tensor(f))[0, 0, 0]
    cross_block = np.abs(kernel[: n // 2, n // 2:])
    assert cross_block.max() < 1e-14
    assert np.abs(kernel[: n // 2, : n // 2]).max() > 1e-6


# ---- temperature limits ----------------------------------------------------------------

def test_high_temperature_layer_is_mean_of_fno_branches():
    n, m, c = 16, 3, 2
    layer = layer_with_zero_pointwise(cin=c, cout=c, k_max=3, ndim=1, slices=m,
                                      temperature=1e6, seed=40)
    f = rng(41).standard_normal((2, c, n))
    got = layer(T.tensor(f)).data
    zero_w = np.zeros((c, c))
    zero_b = np.zeros(c)
    branches = [
        reference.fno_layer(f, layer.multiplier.weights.data[..., mi], zero_w, zero_b, 3)
        for mi in range(m)
    ]
    want = sum(branches) / m
    assert np.max(np.abs(got - want)) / np.max(np.abs(want)) < 1e-6


# ---- network ----------------------------------------------------------------------------

def small_model(**kw):
    defaults = dict(ndim=1, in_channels=1, out_channels=1, width=4, n_layers=2,
                    k_max=4, slices=2, kind="diagonal", density_arch="mlp2",
                    density_hidden=8, coord_features=True, proj_hidden=8,
                    activation="gelu")
    defaults.update(kw)
    return op.ModelConfig(**defaults)


def test_network_shapes_and_composition():
    net = op.build_network(small_model(n_layers=1), seed=1)
    f = rng(50).standard_normal((3, 1, 16))
    out = net(T.tensor(f))
    assert out.shape == (3, 1, 16)
    # manual composition: lift -> single layer -> projection
    x = np.concatenate([f, np.broadcast_to(np.arange(16) / 16, (3, 1, 16))], axis=1)
    lifted = np.einsum("bix,io->box", x, net.lift_w.data) + net.lift_b.data.reshape(1, -1, 1)
    mid = net.layers[0](T.tensor(lifted)).data
    h = np.einsum("bix,io->box", mid, net.proj1_w.data) + net.proj1_b.data.reshape(1, -1, 1)
    h = T.gelu(T.tensor(h)).data
    want = np.einsum("bix,io->box", h, net.proj2_w.data) + net.proj2_b.data.reshape(1, -1, 1)
    assert np.max(np.abs(out.data - want)) < 1e-13


def test_network_zero_spectral_weights_is_pointwise_composition():
    net = op.build_network(small_model(n_layers=2, coord_features=False), seed=2)
    for layer in net.layers:
        layer.multiplier.weights.data[...] = 0.0
        for w in layer.density_net.weights:
            w.data[...] = 0.0
    f = rng(51).standard_normal((2, 1, 16))
    got = net(T.tensor(f)).data

    def pw(x, w, b):
        return np.einsum("bix,io->box", x, w) + b.reshape(1, -1, 1)

    x = pw(f, net.lift_w.data, net.lift_b.data)
    for layer in net.layers:
        x = pw(x, layer.pointwise.data, layer.bias.data)
        if layer.activation:
            x = T.gelu(T.tensor(x)).data
    x = T.gelu(T.tensor(pw(x, net.proj1_w.data, net.proj1_b.data))).data
    want = pw(x, net.proj2_w.data, net.proj2_b.data)
    assert np.max(np.abs(got - want)) < 1e-13


def test_network_gradients_match_finite_differences():
    net = op.build_network(small_model(n_layers=2, slices=2, width=3, k_max=3), seed=3)
    f = rng(52).standard_normal((1, 1, 16))
    target = rng(53).standard_normal((1, 1, 16))

    def loss_value():
        out = net(T.tensor(f))
        return T.tsum(T.abs2(T.sub(out, T.tensor(target))))

    loss = loss_value()
    T.tape_backward(loss)
    params = net.named_parameters()
    picks = [
        ("layers.0.spectral.weights", 0), ("layers.0.density.mlp.0.weight", 1),
        ("layers.1.density.mlp.1.weight", 0), ("layers.0.pointwise.weight", 2),
        ("lift.weight", 0), ("proj2.weight", 0), ("layers.1.spectral.weights", 5),
    ]
    h = 1e-6
    for name, flat_idx in picks:
        p = params[name]
        grad = p.grad
        assert grad is not None, name
        comps = [(1.0, np.real)] + ([(1j, np.imag)] if p.is_complex else [])
        for direction, proj in comps:
            base = p.data.ravel()[flat_idx]
            p.data.ravel()[flat_idx] = base + h * direction
            fp = loss_value().item()
            p.data.ravel()[flat_idx] = base - h * direction
            fm = loss_value().item()
            p.data.ravel()[flat_idx] = base
            fd = (fp - fm) / (2 * h)
            ad = proj(grad.ravel()[flat_idx])
            assert abs(ad - fd) / max(abs(fd), abs(ad), 1e-8) < 1e-4, (name, direction)


def test_parameter_names_are_stable():
    net = op.build_network(small_model(slices=2, learn_temperature=True), seed=4)
    names = set(net.named_parameters())
    assert {"lift.weight", "proj2.bias", "layers.0.spectral.weights",
            "layers.1.density.mlp.0.weight", "layers.0.density.log_temperature"} <= names


def test_learnable_temperature_stays_positive_and_gets_gradient():
    net = op.build_network(small_model(slices=2, learn_temperature=True, n_layers=1),
                           seed=6)
    f = rng(60).standard_normal((1, 1, 16))
    out = net(T.tensor(f))
    T.tape_backward(T.tsum(T.abs2(out)))
    log_t = net.named_parameters()["layers.0.density.log_temperature"]
    assert log_t.grad is not None
    # even a hostile update cannot make the effective temperature nonpositive
    log_t.data[...] = -50.0
    with T.no_grad():
        lifted = net._pointwise(net._coords(T.tensor(f)), net.lift_w, net.lift_b)
        p = net.layers[0].density(lifted)
    p.validate()


# ---- flop accounting ---------------------------------------------------------------------

def test_flops_spectral_linear_in_slices():
    g = Grid((64,))
    f1 = op.count_flops(op.build_network(small_model(slices=1), seed=0), g)
    f2 = op.count_flops(op.build_network(small_model(slices=2), seed=0), g)
    assert f2["spectral"] / f1["spectral"] == pytest.approx(2.0)


def test_flops_cross_mixing_ratio():
    g = Grid((64,))
    diag = op.count_flops(op.build_network(small_model(slices=3), seed=0), g)
    cross = op.count_flops(op.build_network(small_model(slices=3, kind="cross"), seed=0), g)
    assert cross["mixing"] / diag["mixing"] == pytest.approx(3.0)


def test_flops_fft_nlogn_law():
    net = op.build_network(small_model(), seed=0)
    a = op.count_flops(net, Grid((256,)))
    b = op.count_flops(net, Grid((512,)))
    assert b["fft"] / a["fft"] == pytest.approx(2 * np.log2(512) / np.log2(256))


def test_flops_monotone_in_slices():
    g = Grid((64,))
    totals = [op.count_flops(op.build_network(small_model(slices=m), seed=0), g)["total"]
              for m in (1, 2, 4, 8)]
    assert totals == sorted(totals)
