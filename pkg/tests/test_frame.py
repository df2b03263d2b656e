"""Density fields and the lifted transform: normalization, isometry, inverses."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from able import fft, frame
from able import tensor as T
from able.errors import ContractError, DomainError, UnsupportedSizeError

from oracles import grid_norm_sq, parseval_direct, stencil_periodic


def rng(seed):
    return np.random.default_rng(seed)


def random_density(grid, m, batch=1, seed=0, channels=None):
    shape = (batch,) + ((channels,) if channels else ()) + grid.extents + (m,)
    e = rng(seed).standard_normal(shape) * 2.0
    p = T.softmax(T.tensor(e), axis=-1)
    return frame.DensityField(p, grid, per_channel=channels is not None)


# ---- grid / density types -----------------------------------------------------

def test_grid_rejects_non_power_of_two():
    with pytest.raises(UnsupportedSizeError):
        frame.Grid((12,))


def test_grid_properties():
    g = frame.Grid((8, 16))
    assert g.dims == 2 and g.points == 128 and g.spacing == (0.125, 0.0625)


def test_density_validate_rejects_bad_rows():
    g = frame.Grid((8,))
    bad = frame.DensityField(T.tensor(np.full((1, 8, 2), 0.45)), g)
    with pytest.raises(ContractError):
        bad.validate()


def test_density_from_energies_rejects_nonpositive_temperature():
    with pytest.raises(DomainError):
        frame.density_from_energies(T.tensor(np.zeros((1, 8, 2))), 0.0)


# ---- softmax density examples ---------------------------------------------------

def test_equal_energies_give_uniform():
    p = frame.density_from_energies(T.tensor(np.zeros((1, 4, 2))), 1.0)
    assert np.allclose(p.values.data, 0.5, atol=1e-15)


def test_low_temperature_one_hot():
    e = np.zeros((1, 4, 2))
    e[..., 0] = 1.0
    p = frame.density_from_energies(T.tensor(e), 1e-4)
    assert np.all(np.abs(p.values.data[..., 0] - 1.0) < 1e-10)
    assert np.all(p.values.data[..., 1] < 1e-10)


def test_high_temperature_uniform():
    e = np.zeros((1, 4, 3))
    e[..., 0], e[..., 1], e[..., 2] = 3.0, 1.0, -2.0
    p = frame.density_from_energies(T.tensor(e), 1e6)
    assert np.max(np.abs(p.values.data - 1.0 / 3.0)) < 1e-6


def test_entropy_monotone_in_temperature():
    e = rng(5).standard_normal((1, 16, 4)) * 2
    entropies = [
        frame.density_entropy(frame.density_from_energies(T.tensor(e), t).values.data)
        for t in (0.01, 0.1, 1.0, 10.0, 100.0)
    ]
    assert all(b >= a - 1e-12 for a, b in zip(entropies, entropies[1:]))


def test_low_temperature_limit_max_entry():
    e = rng(6).standard_normal((1, 32, 4))
    p = frame.density_from_energies(T.tensor(e), 1e-6)
    assert np.all(p.values.data.max(axis=-1) >= 1.0 - 1e-6)


# ---- stencil features ------------------------------------------------------------

def test_first_difference_stencil_against_direct_convolution():
    f = np.array([1.0, 2.0, 3.0, 4.0])
    got = frame._stencil_conv(T.tensor(f.reshape(1, 1, 4)), frame.FIRST_DIFF_STENCIL)
    want = stencil_periodic(f, frame.FIRST_DIFF_STENCIL)
    assert np.allclose(got.data[0, 0], want)
    assert got.data[0, 0, 1] == pytest.approx(1.0)


def test_second_difference_annihilates_constants():
    f = np.full((1, 1, 8), 3.7)
    got = frame._stencil_conv(T.tensor(f), frame.SECOND_DIFF_STENCIL)
    assert np.max(np.abs(got.data)) < 1e-14


def test_random_stencil_matches_oracle():
    f = rng(9).standard_normal(16)
    for kernel in (frame.FIRST_DIFF_STENCIL, frame.SECOND_DIFF_STENCIL):
        got = frame._stencil_conv(T.tensor(f.reshape(1, 1, 16)), kernel).data[0, 0]
        assert np.allclose(got, stencil_periodic(f, kernel), atol=1e-14)


# ---- density network --------------------------------------------------------------

def test_zero_network_zero_energies():
    cfg = frame.DensityNetConfig(slices=3, arch="mlp2", hidden=8)
    net = frame.DensityNetwork(cfg, in_channels=2, ndim=1, rng=rng(0))
    for w in net.weights:
        w.data[...] = 0.0
    e = net.energies(T.tensor(np.zeros((2, 2, 8))))
    assert np.array_equal(e.data, np.zeros((2, 8, 3)))


def test_fd4_network_shapes_and_channel_check():
    cfg = frame.DensityNetConfig(slices=2, arch="fd4", hidden=16)
    net = frame.DensityNetwork(cfg, in_channels=3, ndim=1, rng=rng(1))
    out = net.energies(T.tensor(rng(2).standard_normal((4, 3, 16))))
    assert out.shape == (4, 16, 2)
    with pytest.raises(ContractError):
        net.energies(T.tensor(np.zeros((4, 5, 16))))


def test_fd4_rejected_in_2d():
    cfg = frame.DensityNetConfig(slices=2, arch="fd4")
    with pytest.raises(ContractError):
        frame.DensityNetwork(cfg, in_channels=1, ndim=2, rng=rng(0))


def test_per_channel_network_output_layout():
    cfg = frame.DensityNetConfig(slices=4, arch="mlp2", hidden=8, per_channel=True)
    net = frame.DensityNetwork(cfg, in_channels=3, ndim=2, rng=rng(3))
    out = net.energies(T.tensor(rng(4).standard_normal((2, 3, 8, 8))))
    assert out.shape == (2, 3, 8, 8, 4)


def test_density_network_initial_density_near_uniform():
    cfg = frame.DensityNetConfig(slices=4, arch="mlp2", hidden=16)
    net = frame.DensityNetwork(cfg, in_channels=2, ndim=1, rng=rng(7))
    e = net.energies(T.tensor(rng(8).standard_normal((2, 2, 32))))
    p = frame.density_from_energies(e, cfg.temperature)
    assert np.max(np.abs(p.values.data - 0.25)) < 0.2


# ---- transform: Parseval / roundtrip ------------------------------------------------

def randc(shape, seed):
    r = rng(seed)
    return r.standard_normal(shape) + 1j * r.standard_normal(shape)


def test_m1_uniform_density_reduces_to_plain_fft_bitwise():
    g = frame.Grid((32,))
    f = T.tensor(randc((2, 3, 32), seed=10))
    p = frame.uniform_density(g, 1, batch=2)
    lifted = frame.able_forward(f, p)
    plain = fft.fft_unitary(f.data, axes=(2,))
    assert np.max(np.abs(lifted.values.data[..., 0] - plain)) <= 1e-14
    back = frame.able_inverse(lifted, p)
    plain_back = fft.ifft_unitary(lifted.values.data[..., 0], axes=(2,))
    assert np.max(np.abs(back.data - plain_back)) <= 1e-14


def test_zero_field_zero_coefficients():
    g = frame.Grid((16,))
    p = random_density(g, 3, seed=11)
    out = frame.able_forward(T.tensor(np.zeros((1, 1, 16))), p)
    assert np.all(out.values.data == 0)


def test_parseval_against_direct_sum():
    g = frame.Grid((64,))
    f = randc((1, 1, 64), seed=12)
    p = random_density(g, 4, seed=13)
    lifted = frame.able_forward(T.tensor(f), p)
    lhs = parseval_direct(lifted.values.data)
    rhs = grid_norm_sq(f)
    assert abs(lhs - rhs) / rhs < 1e-10


@pytest.mark.parametrize("n", [8, 32, 64])
@pytest.mark.parametrize("m", [1, 2, 4, 8])
def test_isometry_and_left_inverse_1d(n, m):
    g = frame.Grid((n,))
    f = randc((2, 2, n), seed=n * 10 + m)
    p = random_density(g, m, batch=2, seed=n + m)
    lifted = frame.able_forward(T.tensor(f), p)
    norm_ratio = np.sum(np.abs(lifted.values.data) ** 2) / np.sum(np.abs(f) ** 2)
    assert abs(norm_ratio - 1.0) < 1e-10
    back = frame.able_inverse(lifted, p)
    assert np.max(np.abs(back.data - f)) / np.max(np.abs(f)) < 1e-10


@pytest.mark.parametrize("m", [1, 2, 4])
def test_isometry_and_left_inverse_2d(m):
    g = frame.Grid((8, 16))
    f = randc((1, 2, 8, 16), seed=50 + m)
    p = random_density(g, m, seed=60 + m)
    lifted = frame.able_forward(T.tensor(f), p)
    assert abs(np.sum(np.abs(lifted.values.data) ** 2) / np.sum(np.abs(f) ** 2) - 1.0) < 1e-10
    back = frame.able_inverse(lifted, p)
    assert np.max(np.abs(back.data - f)) / np.max(np.abs(f)) < 1e-10


def test_per_channel_roundtrip():
    g = frame.Grid((16,))
    f = randc((2, 3, 16), seed=70)
    p = random_density(g, 2, batch=2, seed=71, channels=3)
    back = frame.able_inverse(frame.able_forward(T.tensor(f), p), p)
    assert np.max(np.abs(back.data - f)) / np.max(np.abs(f)) < 1e-10


def test_one_hot_partition_step_roundtrip_exact():
    # indicator densities: sqrt is the indicator itself, so the roundtrip is
    # sum_m 1_m * ifft(fft(1_m * f)) = sum_m 1_m * f = f
    n = 16
    g = frame.Grid((n,))
    pv = np.zeros((1, n, 2))
    pv[0, : n // 2, 0] = 1.0
    pv[0, n // 2:, 1] = 1.0
    p = frame.DensityField(T.tensor(pv), g)
    f = np.where(np.arange(n) < n // 2, 1.0, -2.0).reshape(1, 1, n)
    back = frame.able_inverse(frame.able_forward(T.tensor(f), p), p)
    direct = sum(
        fft.ifft_unitary(fft.fft_unitary((pv[0, :, m] * f[0, 0]).astype(complex), (0,)), (0,))
        * pv[0, :, m]
        for m in range(2)
    )
    assert np.max(np.abs(back.data[0, 0] - f[0, 0])) < 1e-12
    assert np.max(np.abs(back.data[0, 0] - direct)) < 1e-12


def test_forward_rejects_invalid_density():
    g = frame.Grid((8,))
    bad = frame.DensityField(T.tensor(np.full((1, 8, 2), 0.4)), g)
    with pytest.raises(ContractError):
        frame.able_forward(T.tensor(np.zeros((1, 1, 8))), bad)


def test_forward_rejects_grid_mismatch():
    g = frame.Grid((8,))
    p = random_density(g, 2, seed=80)
    with pytest.raises(ContractError):
        frame.able_forward(T.tensor(np.zeros((1, 1, 16))), p)


def test_gradient_flows_through_density_path():
    g = frame.Grid((16,))
    cfg = frame.DensityNetConfig(slices=2, arch="mlp2", hidden=8)
    net = frame.DensityNetwork(cfg, in_channels=1, ndim=1, rng=rng(90))
    f = T.tensor(rng(91).standard_normal((1, 1, 16)))
    p = frame.density_from_energies(net.energies(f), cfg.temperature)
    lifted = frame.able_forward(f, p)
    target = T.tensor(randc((1, 1, 16, 2), seed=92))
    loss = T.tsum(T.abs2(T.sub(lifted.values, target)))
    T.tape_backward(loss)
    grads = [w.grad for w in net.weights]
    assert all(g is not None for g in grads)
    assert any(np.max(np.abs(g)) > 1e-12 for g in grads)


@settings(max_examples=20, deadline=None)
@given(
    exp=st.integers(min_value=2, max_value=6),
    m=st.integers(min_value=1, max_value=6),
    seed=st.integers(0, 9999),
)
def test_isometry_property(exp, m, seed):
    n = 2**exp
    g = frame.Grid((n,))
    f = randc((1, 1, n), seed=seed)
    p = random_density(g, m, seed=seed + 1)
    lifted = frame.able_forward(T.tensor(f), p)
    assert abs(np.sum(np.abs(lifted.values.data) ** 2) / np.sum(np.abs(f) ** 2) - 1.0) < 1e-10


@settings(max_examples=20, deadline=None)
@given(
    t=st.floats(min_value=1e-3, max_value=1e3),
    seed=st.integers(0, 9999),
)
def test_density_normalization_property(t, seed):
    e = rng(seed).standard_normal((2, 8, 5)) * 4
    p = frame.density_from_energies(T.tensor(e), t)
    assert np.max(np.abs(p.values.data.sum(axis=-1) - 1.0)) < 1e-10
    p.validate()
