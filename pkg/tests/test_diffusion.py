"""Diffusion stack: schedules, the forward process, embeddings, condition
encoders, node-graph affinity, the denoiser, samplers, and losses.

Schedule expectations are frozen values computed independently from the
squared-cosine definition, not read back from the implementation.
"""

from __future__ import annotations

import numpy as np
import pytest
import torch

from dlostate.diffusion import (
    AttentionEncoder,
    DenoiserNet,
    DenoiserParams,
    FusionConditioner,
    build_affinity,
    build_fusion_condition,
    coordinate_embedding,
    ddim_step_indices,
    denoise,
    diffusion_loss,
    diffusion_loss_given,
    forward_sample,
    make_schedule,
    sample,
    timestep_embedding,
)
from dlostate.errors import ConfigError


# ----------------------------------------------------------------- schedules


def test_cosine_schedule_frozen_oracle():
    sched = make_schedule(10, "cosine")
    assert sched.betas[0] == 0.0
    assert sched.alpha_bars[0] == 1.0
    assert sched.betas[1] == pytest.approx(0.02790726288603096, rel=1e-12)
    assert sched.betas[5] == pytest.approx(0.23728153019052467, rel=1e-12)
    assert sched.betas[10] == pytest.approx(0.999, abs=1e-15)
    assert sched.alpha_bars[1] == pytest.approx(0.972092737113969, rel=1e-12)
    assert sched.alpha_bars[5] == pytest.approx(0.4938435904406378, rel=1e-12)
    assert sched.alpha_bars[10] == pytest.approx(2.4091724140085884e-05, rel=1e-9)


def test_cosine_posterior_variance_frozen_oracle():
    sched = make_schedule(10, "cosine")
    assert sched.posterior_variance(5) == pytest.approx(0.16525901461462866, rel=1e-12)


def test_linear_schedule_endpoints():
    sched = make_schedule(10, "linear")
    assert sched.betas[1] == pytest.approx(1e-4, rel=1e-12)
    assert sched.betas[10] == pytest.approx(0.02, rel=1e-12)


def test_schedule_shapes_and_monotonicity():
    for kind in ("cosine", "linear"):
        sched = make_schedule(50, kind)
        assert sched.betas.shape == (51,)
        assert sched.alpha_bars.shape == (51,)
        assert (np.diff(sched.alpha_bars) < 0).all()
        assert (sched.betas[1:] > 0).all() and (sched.betas[1:] <= 0.999).all()


def test_schedule_rejects_bad_arguments():
    with pytest.raises(ConfigError):
        make_schedule(0, "cosine")
    with pytest.raises(ConfigError):
        make_schedule(10, "quadratic")


# ----------------------------------------------------------- forward process


def test_forward_sample_formula_with_explicit_noise():
    sched = make_schedule(10, "cosine")
    y0 = np.ones((4, 3))
    noise = np.full((4, 3), 2.0)
    y_k, used = forward_sample(y0, 5, sched, noise=noise)
    abar = sched.alpha_bars[5]
    np.testing.assert_allclose(
        y_k, np.sqrt(abar) * 1.0 + np.sqrt(1 - abar) * 2.0, atol=1e-14
    )
    np.testing.assert_array_equal(used, noise)


def test_forward_sample_moments():
    sched = make_schedule(20, "cosine")
    rng = np.random.default_rng(17)
    y0 = np.array([[0.5, -0.2, 0.1]])
    k = 12
    draws = np.stack([forward_sample(y0, k, sched, rng=rng)[0] for _ in range(4000)])
    abar = sched.alpha_bars[k]
    se_mean = np.sqrt(1 - abar) / np.sqrt(4000)
    assert np.abs(draws.mean(axis=0) - np.sqrt(abar) * y0).max() < 4 * se_mean
    var = draws.var(axis=0)
    se_var = (1 - abar) * np.sqrt(2.0 / 4000)
    assert np.abs(var - (1 - abar)).max() < 4 * se_var


def test_forward_sample_bounds_and_errors():
    sched = make_schedule(10, "cosine")
    with pytest.raises(ConfigError):
        forward_sample(np.zeros((2, 3)), 0, sched, rng=np.random.default_rng(0))
    with pytest.raises(ConfigError):
        forward_sample(np.zeros((2, 3)), 11, sched, rng=np.random.default_rng(0))
    with pytest.raises(ConfigError):
        forward_sample(np.zeros((2, 3)), 5, sched)


# ---------------------------------------------------------------- embeddings


def test_timestep_embedding_structure():
    emb = timestep_embedding(torch.tensor([0]), 16)
    assert emb.shape == (1, 16)
    # at k = 0 all sine components vanish and all cosine components are one
    half = 8
    np.testing.assert_allclose(emb[0, :half].numpy(), 0.0, atol=1e-12)
    np.testing.assert_allclose(emb[0, half:].numpy(), 1.0, atol=1e-12)


def test_timestep_embedding_distinguishes_steps():
    a = timestep_embedding(torch.tensor([3]), 32)
    b = timestep_embedding(torch.tensor([4]), 32)
    assert (a - b).abs().max() > 1e-3


def test_coordinate_embedding_shape_and_content():
    x = torch.tensor([[0.5]])
    emb = coordinate_embedding(x, 9)
    assert emb.shape == (1, 9)
    # raw coordinate rides along in the embedding
    assert (emb == 0.5).any()


# ----------------------------------------------------------------- condition


def test_attention_encoder_shapes():
    torch.manual_seed(0)
    enc = AttentionEncoder(in_dim=6, d_model=16, num_heads=4)
    out = enc(torch.randn(2, 10, 6))
    assert out.shape == (2, 10, 16)


def test_fusion_conditioner_concatenates_branches():
    torch.manual_seed(1)
    cond = FusionConditioner(embed_dim=16, d_model=16, num_heads=4)
    reg = torch.randn(2, 12, 3)
    vote = torch.randn(2, 12, 3)
    out = cond(reg, vote)
    assert out.shape == (2, 12, cond.out_dim)
    # two d_model attention blocks plus the raw coordinates of both chains
    assert cond.out_dim == 2 * 16 + 6
    # the passthrough block carries the branch coordinates verbatim
    assert torch.equal(out[..., -6:-3], reg)
    assert torch.equal(out[..., -3:], vote)


def test_build_fusion_condition_wrapper():
    torch.manual_seed(2)
    cond = FusionConditioner(embed_dim=16, d_model=16, num_heads=4)
    reg = np.random.default_rng(0).normal(size=(12, 3))
    vote = np.random.default_rng(1).normal(size=(12, 3))
    feats = build_fusion_condition(reg, vote, cond)
    assert feats.features.shape == (12, 38)


# ------------------------------------------------------------------ affinity


def test_affinity_chain_hand_oracle():
    nodes = np.array([[0.0, 0, 0], [1.0, 0, 0], [2.0, 0, 0]])
    aff = build_affinity(nodes)
    # chain edges only (distance 2 exceeds the 1.5 x spacing threshold)
    expected_adj = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=bool)
    np.testing.assert_array_equal(aff.adjacency, expected_adj)
    # symmetric normalization of A + I with degrees (2, 3, 2)
    assert aff.matrix[0, 0] == pytest.approx(0.5, abs=1e-12)
    assert aff.matrix[1, 1] == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert aff.matrix[0, 1] == pytest.approx(1.0 / np.sqrt(6.0), abs=1e-12)
    assert aff.matrix[0, 2] == 0.0
    np.testing.assert_allclose(aff.matrix, aff.matrix.T, atol=1e-15)


def test_affinity_proximity_edges_join_loops():
    # a chain bent so its two ends nearly touch gains a proximity edge
    nodes = np.array([[0.0, 0, 0], [1.0, 0, 0], [1.0, 1.0, 0], [0.0, 1.0, 0],
                      [0.0, 0.1, 0]])
    aff = build_affinity(nodes)
    assert aff.adjacency[0, 4]
    assert aff.adjacency[4, 0]


def test_affinity_explicit_threshold():
    nodes = np.array([[0.0, 0, 0], [1.0, 0, 0], [2.0, 0, 0]])
    aff = build_affinity(nodes, threshold=2.5)
    assert aff.adjacency[0, 2]
    np.testing.assert_allclose(aff.matrix, 1.0 / 3.0, atol=1e-12)


# ------------------------------------------------------------------ denoiser


def _tiny_setup(m=8, c=16, seed=0):
    torch.manual_seed(seed)
    model = DenoiserNet(DenoiserParams(cond_dim=c, width=32, pe_dim=16, gcn_layers=2))
    nodes = np.cumsum(np.random.default_rng(seed).normal(size=(m, 3)) * 0.1, axis=0)
    aff = build_affinity(nodes)
    return model, aff


def test_denoiser_forward_shape():
    model, aff = _tiny_setup()
    y = torch.randn(2, 8, 3)
    cond = torch.randn(2, 8, 16)
    a_hat = torch.as_tensor(aff.matrix, dtype=torch.float32).expand(2, -1, -1)
    out = model(y, torch.tensor([3, 7]), cond, a_hat)
    assert out.shape == (2, 8, 3)
    assert torch.isfinite(out).all()


def test_denoiser_depends_on_condition_and_step():
    model, aff = _tiny_setup(seed=1)
    model.eval()
    y = torch.randn(1, 8, 3)
    cond = torch.randn(1, 8, 16)
    a_hat = torch.as_tensor(aff.matrix, dtype=torch.float32).unsqueeze(0)
    with torch.no_grad():
        base = model(y, torch.tensor([3]), cond, a_hat)
        other_k = model(y, torch.tensor([7]), cond, a_hat)
        other_c = model(y, torch.tensor([3]), cond + 1.0, a_hat)
    assert (base - other_k).abs().max() > 1e-6
    assert (base - other_c).abs().max() > 1e-6


def test_denoise_wrapper_is_deterministic():
    model, aff = _tiny_setup(seed=2)
    y = np.random.default_rng(3).normal(size=(8, 3))
    cond = np.random.default_rng(4).normal(size=(8, 16))
    a = denoise(y, 5, cond, aff, model)
    b = denoise(y, 5, cond, aff, model)
    np.testing.assert_array_equal(a, b)
    assert a.shape == (8, 3)


# ------------------------------------------------------------------ sampling


def test_ddim_step_indices_oracles():
    assert ddim_step_indices(100, 10) == [100, 90, 80, 70, 60, 50, 40, 30, 20, 10]
    assert ddim_step_indices(10, 3) == [10, 7, 3]
    assert ddim_step_indices(5, 5) == [5, 4, 3, 2, 1]
    assert ddim_step_indices(7, 1) == [7]
    with pytest.raises(ConfigError):
        ddim_step_indices(10, 0)
    with pytest.raises(ConfigError):
        ddim_step_indices(10, 11)


def test_ddim_sampling_is_bitwise_deterministic():
    model, aff = _tiny_setup(seed=5)
    sched = make_schedule(40, "cosine")
    cond = np.random.default_rng(6).normal(size=(8, 16))
    outs = [
        sample(cond, aff, model, sched, np.random.default_rng(77),
               m_nodes=8, method="ddim", ddim_steps=8)
        for _ in range(5)
    ]
    for o in outs[1:]:
        np.testing.assert_array_equal(outs[0], o)


def test_ddpm_sampling_seed_behavior():
    model, aff = _tiny_setup(seed=7)
    sched = make_schedule(15, "cosine")
    cond = np.random.default_rng(8).normal(size=(8, 16))
    a = sample(cond, aff, model, sched, np.random.default_rng(1), 8, method="ddpm")
    b = sample(cond, aff, model, sched, np.random.default_rng(1), 8, method="ddpm")
    c = sample(cond, aff, model, sched, np.random.default_rng(2), 8, method="ddpm")
    np.testing.assert_array_equal(a, b)
    assert np.abs(a - c).max() > 1e-9


def test_sample_rejects_unknown_method():
    model, aff = _tiny_setup(seed=9)
    sched = make_schedule(10, "cosine")
    with pytest.raises(ConfigError):
        sample(np.zeros((8, 16)), aff, model, sched,
               np.random.default_rng(0), 8, method="euler")


# -------------------------------------------------------------------- losses


def test_diffusion_loss_given_zero_for_perfect_model():
    class Oracle(torch.nn.Module):
        def forward(self, y_k, k, cond, a_hat):
            return cond[..., :3]

    sched = make_schedule(10, "cosine")
    y0 = torch.randn(2, 6, 3, dtype=torch.float64)
    cond = torch.cat([y0, torch.zeros(2, 6, 5, dtype=torch.float64)], dim=-1)
    k = torch.tensor([3, 8])
    noise = torch.randn(2, 6, 3, dtype=torch.float64)
    a_hat = torch.eye(6, dtype=torch.float64).expand(2, -1, -1)
    loss = diffusion_loss_given(Oracle(), y0, k, noise, cond, a_hat, sched)
    assert loss.item() == pytest.approx(0.0, abs=1e-15)


def test_diffusion_loss_draws_from_generator():
    model, aff = _tiny_setup(seed=10)
    sched = make_schedule(20, "cosine")
    y0 = torch.randn(3, 8, 3)
    cond = torch.randn(3, 8, 16)
    a_hat = torch.as_tensor(aff.matrix, dtype=torch.float32).expand(3, -1, -1)
    l1 = diffusion_loss(model, y0, cond, a_hat, sched, np.random.default_rng(5))
    l2 = diffusion_loss(model, y0, cond, a_hat, sched, np.random.default_rng(5))
    l3 = diffusion_loss(model, y0, cond, a_hat, sched, np.random.default_rng(6))
    assert l1.item() == l2.item()
    assert l1.item() != l3.item()
    assert torch.isfinite(l1)


def test_diffusion_loss_backpropagates():
    model, aff = _tiny_setup(seed=11)
    sched = make_schedule(20, "cosine")
    y0 = torch.randn(2, 8, 3)
    cond = torch.randn(2, 8, 16)
    a_hat = torch.as_tensor(aff.matrix, dtype=torch.float32).expand(2, -1, -1)
    loss = diffusion_loss(model, y0, cond, a_hat, sched, np.random.default_rng(0))
    loss.backward()
    grads = [p.grad for p in model.parameters() if p.grad is not None]
    assert grads and all(torch.isfinite(g).all() for g in grads)
