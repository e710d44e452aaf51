"""Training objectives: reconstruction cross entropy and the WGAN-GP
critic/generator pair applied to latent codes.

Sign conventions are the usual minimization forms: the critic minimizes
mean d(fake) - mean d(real) + lambda * penalty, the generator minimizes
-mean d(fake).
"""

from __future__ import annotations

import torch
import torch.nn.functional as F


def reconstruction_loss(logits: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    """Mean token cross entropy over batch, timesteps, and tracks.

    logits: (batch, timesteps, tracks, tokens); targets: integer grid of
    shape (batch, timesteps, tracks). Computed on logits via log-sum-exp,
    so probabilities never underflow.
    """
    num_tokens = logits.shape[-1]
    return F.cross_entropy(logits.reshape(-1, num_tokens), targets.reshape(-1).long())


def reconstruction_accuracy(logits: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    """Fraction of cells where the argmax token matches the target."""
    return (logits.argmax(dim=-1) == targets.long()).double().mean()


def gradient_penalty(
    critic,
    real_z: torch.Tensor,
    fake_z: torch.Tensor,
    generator: torch.Generator | None = None,
) -> torch.Tensor:
    """Mean squared deviation of the critic's gradient norm from 1 on
    random interpolates between fake and real codes (penalty weight is
    applied by the caller)."""
    if real_z.shape != fake_z.shape:
        raise ValueError(f"batch shapes differ: {tuple(real_z.shape)} vs {tuple(fake_z.shape)}")
    alpha = torch.rand(
        (real_z.shape[0], 1), generator=generator, dtype=real_z.dtype, device=real_z.device
    )
    mixed = alpha * fake_z + (1.0 - alpha) * real_z
    mixed = mixed.detach().requires_grad_(True)
    scores = critic(mixed)
    grads = torch.autograd.grad(scores.sum(), mixed, create_graph=True)[0]
    norms = grads.norm(2, dim=1)
    return ((norms - 1.0) ** 2).mean()


def critic_loss(
    critic,
    real_z: torch.Tensor,
    fake_z: torch.Tensor,
    gp_lambda: float = 10.0,
    generator: torch.Generator | None = None,
) -> torch.Tensor:
    penalty = gradient_penalty(critic, real_z, fake_z, generator=generator)
    return critic(fake_z).mean() - critic(real_z).mean() + gp_lambda * penalty


def generator_loss(critic, fake_z: torch.Tensor) -> torch.Tensor:
    return -critic(fake_z).mean()
