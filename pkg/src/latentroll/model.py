"""Model components: bidirectional recurrent encoder, per-track recurrent
decoders, and the latent-space critic.

The encoder consumes each timestep as the concatenation of four one-hot
token vectors, summarizes the sequence through a bidirectional LSTM stack,
and maps the summary to (mu, sigma) heads. Each track has its own decoder
LSTM whose first-layer initial hidden state is a learned map of z and
whose input at every timestep is z itself (non-autoregressive: generated
tokens are never fed back). The critic is a tanh MLP with a linear scalar
head, unbounded as a Wasserstein critic requires.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import NamedTuple

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .tokens import NUM_TOKENS, NUM_TRACKS, TRACK_NAMES


@dataclass(frozen=True)
class ModelConfig:
    latent_dim: int = 512
    hidden_size: int = 1024
    num_layers: int = 3
    timesteps: int = 32
    num_tracks: int = NUM_TRACKS
    num_tokens: int = NUM_TOKENS
    # "double_exp" reads the sigma head literally as std = exp(2*pre);
    # "exp" is the log-variance reading, std = exp(pre)
    sigma_rule: str = "double_exp"

    def __post_init__(self):
        if min(self.latent_dim, self.hidden_size, self.num_layers, self.timesteps) < 1:
            raise ValueError("model dimensions must be positive")
        if self.sigma_rule not in ("double_exp", "exp"):
            raise ValueError(f"unknown sigma_rule {self.sigma_rule!r}")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "ModelConfig":
        return cls(**data)


# small configuration for tests and quick experiments
DESK_PROFILE = ModelConfig(latent_dim=32, hidden_size=128, num_layers=1)


class EncoderOutput(NamedTuple):
    mu: torch.Tensor
    sigma: torch.Tensor
    z: torch.Tensor


class PhraseEncoder(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.lstm = nn.LSTM(
            input_size=config.num_tracks * config.num_tokens,
            hidden_size=config.hidden_size,
            num_layers=config.num_layers,
            batch_first=True,
            bidirectional=True,
        )
        # both directions' final states -> one summary vector
        self.summary = nn.Linear(2 * config.hidden_size, config.hidden_size)
        self.mu_head = nn.Linear(config.hidden_size, config.latent_dim)
        self.sigma_head = nn.Linear(config.hidden_size, config.latent_dim)

    def forward(self, one_hot: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        _, (h_n, _) = self.lstm(one_hot)
        h = self.summary(torch.cat([h_n[-2], h_n[-1]], dim=1))
        mu = self.mu_head(h)
        sigma_pre = self.sigma_head(h)
        if self.config.sigma_rule == "double_exp":
            sigma = torch.exp(2.0 * sigma_pre)
        else:
            sigma = torch.exp(sigma_pre)
        return mu, sigma


class TrackDecoder(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.init_map = nn.Linear(config.latent_dim, config.hidden_size)
        self.lstm = nn.LSTM(
            input_size=config.latent_dim,
            hidden_size=config.hidden_size,
            num_layers=config.num_layers,
            batch_first=True,
        )
        self.head = nn.Linear(config.hidden_size, config.num_tokens)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        batch = z.shape[0]
        steps = self.config.timesteps
        inputs = z.unsqueeze(1).expand(batch, steps, z.shape[1])
        # z initializes layer 1's hidden state; deeper layers and all cell
        # states start at zero
        h0 = z.new_zeros(self.config.num_layers, batch, self.config.hidden_size)
        h0[0] = self.init_map(z)
        c0 = torch.zeros_like(h0)
        out, _ = self.lstm(inputs, (h0, c0))
        return self.head(out)


class LatentCritic(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(config.latent_dim, config.hidden_size),
            nn.Tanh(),
            nn.Linear(config.hidden_size, config.hidden_size),
            nn.Tanh(),
            nn.Linear(config.hidden_size, 1),
        )

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        return self.net(z).squeeze(-1)


class AdversarialAutoencoder(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.encoder = PhraseEncoder(config)
        self.decoders = nn.ModuleDict({name: TrackDecoder(config) for name in TRACK_NAMES[: config.num_tracks]})
        self.critic = LatentCritic(config)

    @property
    def dtype(self) -> torch.dtype:
        return next(self.parameters()).dtype

    def one_hot(self, tokens: torch.Tensor) -> torch.Tensor:
        flat = F.one_hot(tokens.long(), num_classes=self.config.num_tokens)
        return flat.reshape(tokens.shape[0], tokens.shape[1], -1).to(self.dtype)

    def encode(
        self,
        tokens: torch.Tensor,
        stochastic: bool = True,
        generator: torch.Generator | None = None,
    ) -> EncoderOutput:
        """tokens: (batch, timesteps, tracks) integer grid."""
        mu, sigma = self.encoder(self.one_hot(tokens))
        if stochastic:
            eps = torch.randn(mu.shape, generator=generator, dtype=mu.dtype, device=mu.device)
            z = mu + sigma * eps
        else:
            z = mu
        return EncoderOutput(mu=mu, sigma=sigma, z=z)

    def decode(self, z: torch.Tensor) -> torch.Tensor:
        """Per-track token logits, shape (batch, timesteps, tracks, tokens)."""
        logits = [self.decoders[name](z) for name in TRACK_NAMES[: self.config.num_tracks]]
        return torch.stack(logits, dim=2)

    def decode_tokens(self, z: torch.Tensor) -> torch.Tensor:
        return self.decode(z).argmax(dim=-1).to(torch.uint8)

    def discriminate(self, z: torch.Tensor) -> torch.Tensor:
        return self.critic(z)

    def reconstruct(self, tokens: torch.Tensor) -> torch.Tensor:
        """Deterministic round trip: encode with z = mu, decode by argmax."""
        with torch.no_grad():
            return self.decode_tokens(self.encode(tokens, stochastic=False).z)

    def encoder_decoder_parameters(self):
        yield from self.encoder.parameters()
        for name in TRACK_NAMES[: self.config.num_tracks]:
            yield from self.decoders[name].parameters()

    def critic_parameters(self):
        yield from self.critic.parameters()


def _set_forget_gate_bias(lstm: nn.LSTM) -> None:
    hidden = lstm.hidden_size
    with torch.no_grad():
        for name, param in lstm.named_parameters():
            if name.startswith("bias_ih"):
                param[hidden : 2 * hidden].fill_(1.0)
            elif name.startswith("bias_hh"):
                param[hidden : 2 * hidden].fill_(0.0)


def build_model(config: ModelConfig, seed: int = 0) -> AdversarialAutoencoder:
    """Construct a model with the default fan-in-scaled torch init, forget
    gate biases at 1, deterministically from `seed`.

    The sigma head's bias starts low so initial posteriors are narrow;
    with a unit-scale start the sampled codes are pure noise and early
    reconstruction learning stalls."""
    torch.manual_seed(seed)
    model = AdversarialAutoencoder(config)
    _set_forget_gate_bias(model.encoder.lstm)
    for decoder in model.decoders.values():
        _set_forget_gate_bias(decoder.lstm)
    with torch.no_grad():
        model.encoder.sigma_head.bias.fill_(-2.0)
    return model


def tokens_to_tensor(tokens: np.ndarray) -> torch.Tensor:
    """(T, tracks) or (batch, T, tracks) uint8 grid -> long tensor with batch dim."""
    array = np.asarray(tokens)
    if array.ndim == 2:
        array = array[None]
    return torch.from_numpy(np.ascontiguousarray(array)).long()
