"""Two-phase adversarial-autoencoder optimization.

Each update runs `n_critic` critic steps (fresh prior draws against fresh
encoder outputs, WGAN-GP objective) followed by one joint encoder+decoder
step minimizing reconstruction cross entropy plus beta times the
adversarial generator term. Beta is annealed stepwise; the learning rate
decays after every update.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
import yaml

from .checkpoint import Checkpoint, extra_tensors, load_checkpoint, model_from_checkpoint, save_checkpoint
from .losses import critic_loss, generator_loss, reconstruction_accuracy, reconstruction_loss
from .model import AdversarialAutoencoder, ModelConfig, build_model
from .pipeline import Dataset, DatasetSplit, GenreVocabulary
from .prior import GenreRingPrior, IsotropicGaussianPrior, Prior

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    prior: str = "isotropic"  # or "ring"
    radial_variance: float = 0.1
    tangential_variance: float = 0.001
    batch_size: int = 256
    lr0: float = 1e-4
    lr_decay: float = 1e-4
    lr_schedule: str = "exponential"  # or "inverse_time"
    beta_step: float = 0.1
    beta_interval: int = 10_000
    gp_lambda: float = 10.0
    n_critic: int = 5
    max_grad_norm: float | None = 5.0
    max_updates: int = 100_000
    seed: int = 0
    log_interval: int = 100
    checkpoint_interval: int = 5_000
    val_batch_cap: int = 512

    def __post_init__(self):
        if self.prior not in ("isotropic", "ring"):
            raise ValueError(f"unknown prior {self.prior!r}")
        if self.lr_schedule not in ("exponential", "inverse_time"):
            raise ValueError(f"unknown lr_schedule {self.lr_schedule!r}")
        for name in ("batch_size", "lr0", "beta_interval", "gp_lambda", "n_critic", "max_updates"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def to_json(self) -> dict:
        data = asdict(self)
        data["model"] = self.model.to_json()
        return data

    @classmethod
    def from_json(cls, data: dict) -> "TrainConfig":
        data = dict(data)
        model = ModelConfig.from_json(data.pop("model", {}))
        return cls(model=model, **data)


def load_train_config(path: str | Path) -> TrainConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    return TrainConfig.from_json(data)


def anneal_beta(step: int, beta_step: float = 0.1, interval: int = 10_000) -> float:
    """Stepwise schedule: 0 at the start, +beta_step every `interval`
    updates, capped at 1."""
    if step < 0:
        raise ValueError("step must be non-negative")
    if beta_step <= 0:
        return 0.0
    return min(1.0, beta_step * (step // interval))


def decay_lr(step: int, lr0: float = 1e-4, rate: float = 1e-4, schedule: str = "exponential") -> float:
    if step < 0:
        raise ValueError("step must be non-negative")
    if schedule == "exponential":
        return lr0 * (1.0 - rate) ** step
    if schedule == "inverse_time":
        return lr0 / (1.0 + rate * step)
    raise ValueError(f"unknown schedule {schedule!r}")


class TrainingDiverged(RuntimeError):
    def __init__(self, message: str, batch: np.ndarray):
        super().__init__(message)
        self.batch = batch


def build_prior(config: TrainConfig, vocab: GenreVocabulary | None) -> Prior:
    if config.prior == "isotropic":
        return IsotropicGaussianPrior(latent_dim=config.model.latent_dim)
    if vocab is None:
        raise ValueError("ring prior requires a genre vocabulary")
    return GenreRingPrior(
        latent_dim=config.model.latent_dim,
        num_components=len(vocab),
        radial_variance=config.radial_variance,
        tangential_variance=config.tangential_variance,
        component_of_genre=tuple(vocab.component_of),
    )


@dataclass
class TrainState:
    config: TrainConfig
    model: AdversarialAutoencoder
    prior: Prior
    opt_autoencoder: torch.optim.Adam
    opt_critic: torch.optim.Adam
    torch_gen: torch.Generator
    prior_rng: np.random.Generator
    step: int = 0
    epoch: int = 0
    offset: int = 0

    @property
    def beta(self) -> float:
        return anneal_beta(self.step, self.config.beta_step, self.config.beta_interval)

    @property
    def lr(self) -> float:
        return decay_lr(self.step, self.config.lr0, self.config.lr_decay, self.config.lr_schedule)


def init_train_state(config: TrainConfig, vocab: GenreVocabulary | None = None) -> TrainState:
    model = build_model(config.model, seed=config.seed)
    prior = build_prior(config, vocab)
    torch_gen = torch.Generator()
    torch_gen.manual_seed(config.seed)
    return TrainState(
        config=config,
        model=model,
        prior=prior,
        opt_autoencoder=torch.optim.Adam(list(model.encoder_decoder_parameters()), lr=config.lr0),
        opt_critic=torch.optim.Adam(list(model.critic_parameters()), lr=config.lr0),
        torch_gen=torch_gen,
        prior_rng=np.random.default_rng([config.seed, 1]),
    )


def train_step(state: TrainState, tokens: torch.Tensor, genre_ids: Sequence[Sequence[int]]) -> dict:
    """One optimization update over a batch; advances step, beta, and lr."""
    config = state.config
    model = state.model
    beta = state.beta
    lr = state.lr
    for opt in (state.opt_autoencoder, state.opt_critic):
        for group in opt.param_groups:
            group["lr"] = lr

    critic_value = float("nan")
    for _ in range(config.n_critic):
        real = torch.from_numpy(state.prior.sample_for(genre_ids, state.prior_rng)).to(model.dtype)
        with torch.no_grad():
            fake = model.encode(tokens, stochastic=True, generator=state.torch_gen).z
        loss_c = critic_loss(model.critic, real, fake, config.gp_lambda, generator=state.torch_gen)
        state.opt_critic.zero_grad()
        loss_c.backward()
        if config.max_grad_norm is not None:
            torch.nn.utils.clip_grad_norm_(model.critic_parameters(), config.max_grad_norm)
        state.opt_critic.step()
        critic_value = float(loss_c.detach())

    encoded = model.encode(tokens, stochastic=True, generator=state.torch_gen)
    logits = model.decode(encoded.z)
    rec = reconstruction_loss(logits, tokens)
    gen = generator_loss(model.critic, encoded.z)
    total = rec + beta * gen
    state.opt_autoencoder.zero_grad()
    total.backward()
    if config.max_grad_norm is not None:
        torch.nn.utils.clip_grad_norm_(model.encoder_decoder_parameters(), config.max_grad_norm)
    state.opt_autoencoder.step()

    record = {
        "step": state.step,
        "beta": beta,
        "lr": lr,
        "reconstruction_loss": float(rec.detach()),
        "generator_loss": float(gen.detach()),
        "critic_loss": critic_value,
        "total_loss": float(total.detach()),
    }
    if not all(math.isfinite(v) for v in record.values()):
        raise TrainingDiverged(
            f"non-finite loss at step {state.step}: {record}", tokens.cpu().numpy()
        )
    state.step += 1
    return record


def evaluate_reconstruction(
    model: AdversarialAutoencoder, tokens: np.ndarray, batch_size: int = 64
) -> tuple[float, float]:
    """(cross entropy, token accuracy) with deterministic encoding (z = mu)."""
    losses = []
    correct = 0
    total = 0
    with torch.no_grad():
        for start in range(0, tokens.shape[0], batch_size):
            batch = torch.from_numpy(tokens[start : start + batch_size]).long()
            logits = model.decode(model.encode(batch, stochastic=False).z)
            losses.append(float(reconstruction_loss(logits, batch)) * batch.numel())
            correct += float(reconstruction_accuracy(logits, batch)) * batch.numel()
            total += batch.numel()
    return sum(losses) / total, correct / total


def _epoch_permutation(seed: int, epoch: int, count: int) -> np.ndarray:
    return np.random.default_rng([seed, 2, epoch]).permutation(count)


class _BatchCursor:
    """Deterministic shuffled batches; (epoch, offset) is the whole state,
    so a resumed run continues exactly where the original stopped."""

    def __init__(self, seed: int, count: int, batch_size: int, epoch: int = 0, offset: int = 0):
        self.seed = seed
        self.count = count
        self.batch_size = batch_size
        self.epoch = epoch
        self.offset = offset
        self._perm_epoch = -1
        self._perm: np.ndarray | None = None

    def _permutation(self) -> np.ndarray:
        if self._perm_epoch != self.epoch:
            self._perm = _epoch_permutation(self.seed, self.epoch, self.count)
            self._perm_epoch = self.epoch
        return self._perm

    def next_indices(self) -> np.ndarray:
        taken: list[np.ndarray] = []
        need = self.batch_size
        while need > 0:
            perm = self._permutation()
            chunk = perm[self.offset : self.offset + need]
            taken.append(chunk)
            self.offset += len(chunk)
            need -= len(chunk)
            if self.offset >= self.count:
                self.epoch += 1
                self.offset = 0
        return np.concatenate(taken)


def _training_split(dataset: Dataset, config: TrainConfig) -> DatasetSplit:
    split = dataset.train
    if config.prior != "ring":
        return split
    tagged = [i for i, ids in enumerate(split.genre_ids) if len(ids) > 0]
    if not tagged:
        raise ValueError("ring prior training requires segments with genre tags")
    if len(tagged) < len(split):
        log.warning(
            "ring prior: dropping %d/%d untagged training segments",
            len(split) - len(tagged), len(split),
        )
        return DatasetSplit(
            tokens=split.tokens[tagged],
            song_ids=[split.song_ids[i] for i in tagged],
            genre_ids=[split.genre_ids[i] for i in tagged],
        )
    return split


def _train_meta(state: TrainState) -> dict:
    return {
        "step": state.step,
        "beta": state.beta,
        "lr": state.lr,
        "cursor": {"epoch": state.epoch, "offset": state.offset},
        "numpy_rng": state.prior_rng.bit_generator.state,
        "config": state.config.to_json(),
        "opt_param_groups": {
            "autoencoder": _groups_meta(state.opt_autoencoder),
            "critic": _groups_meta(state.opt_critic),
        },
    }


def _groups_meta(opt: torch.optim.Adam) -> list[dict]:
    groups = []
    for group in opt.param_groups:
        meta = {k: v for k, v in group.items() if k != "params"}
        meta["n_params"] = len(group["params"])
        groups.append(meta)
    return groups


def _optimizer_tensors(name: str, opt: torch.optim.Adam) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    state_dict = opt.state_dict()
    for idx, entry in state_dict["state"].items():
        for key, value in entry.items():
            tensor = value if isinstance(value, torch.Tensor) else torch.tensor(value)
            out[f"opt_{name}/{idx}/{key}"] = tensor.detach().cpu().numpy()
    return out


def _restore_optimizer(name: str, opt: torch.optim.Adam, tensors: dict[str, np.ndarray], meta: dict) -> None:
    state_dict = opt.state_dict()
    prefix = f"opt_{name}/"
    state: dict[int, dict] = {}
    for key, array in tensors.items():
        if not key.startswith(prefix):
            continue
        _, idx, field_name = key.split("/", 2)
        state.setdefault(int(idx), {})[field_name] = torch.from_numpy(array.copy())
    for group, group_meta in zip(state_dict["param_groups"], meta["opt_param_groups"][name]):
        for k, v in group_meta.items():
            if k != "n_params":
                group[k] = v
    state_dict["state"] = state
    opt.load_state_dict(state_dict)


def save_train_checkpoint(path: str | Path, state: TrainState, vocab: GenreVocabulary | None) -> None:
    extra = _optimizer_tensors("autoencoder", state.opt_autoencoder)
    extra.update(_optimizer_tensors("critic", state.opt_critic))
    extra["rng/torch"] = state.torch_gen.get_state().numpy()
    save_checkpoint(
        path,
        state.model,
        prior=state.prior,
        vocab=vocab,
        train_meta=_train_meta(state),
        extra_tensors=extra,
    )


def restore_train_state(ckpt: Checkpoint, config: TrainConfig | None = None) -> TrainState:
    meta = ckpt.train_meta
    if meta is None:
        raise ValueError("checkpoint has no training state")
    if config is None:
        config = TrainConfig.from_json(meta["config"])
    model = model_from_checkpoint(ckpt)
    prior = ckpt.prior if ckpt.prior is not None else build_prior(config, ckpt.vocab)
    state = TrainState(
        config=config,
        model=model,
        prior=prior,
        opt_autoencoder=torch.optim.Adam(list(model.encoder_decoder_parameters()), lr=config.lr0),
        opt_critic=torch.optim.Adam(list(model.critic_parameters()), lr=config.lr0),
        torch_gen=torch.Generator(),
        prior_rng=np.random.default_rng(),
        step=meta["step"],
        epoch=meta["cursor"]["epoch"],
        offset=meta["cursor"]["offset"],
    )
    extras = extra_tensors(ckpt)
    state.torch_gen.set_state(torch.from_numpy(extras["rng/torch"].copy()))
    rng_state = meta["numpy_rng"]
    state.prior_rng.bit_generator.state = rng_state
    _restore_optimizer("autoencoder", state.opt_autoencoder, extras, meta)
    _restore_optimizer("critic", state.opt_critic, extras, meta)
    return state


def train(
    config: TrainConfig,
    dataset: Dataset,
    out_dir: str | Path,
    resume: str | Path | None = None,
) -> Path:
    """Run the optimization loop; returns the path of the final checkpoint.

    Writes metrics.jsonl (one record per log interval) and periodic
    checkpoint files under out_dir.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    vocab = dataset.vocab

    if resume is not None:
        state = restore_train_state(load_checkpoint(resume), config)
    else:
        state = init_train_state(config, vocab)

    split = _training_split(dataset, config)
    validation = dataset.validation
    cursor = _BatchCursor(
        config.seed, len(split), config.batch_size, epoch=state.epoch, offset=state.offset
    )
    metrics_path = out_dir / "metrics.jsonl"
    final_path = out_dir / "checkpoint_final.ckpt"

    log.info("training on %d segments (%d validation), %d updates", len(split), len(validation), config.max_updates)
    with open(metrics_path, "a", encoding="utf-8") as metrics:
        while state.step < config.max_updates:
            indices = cursor.next_indices()
            state.epoch, state.offset = cursor.epoch, cursor.offset
            tokens = torch.from_numpy(split.tokens[indices]).long()
            genres = [split.genre_ids[i] for i in indices]
            try:
                record = train_step(state, tokens, genres)
            except TrainingDiverged as err:
                dump = out_dir / "diverged_batch.npy"
                np.save(dump, err.batch)
                log.error("aborting: %s (batch dumped to %s)", err, dump)
                raise
            if state.step % config.log_interval == 0 or state.step == config.max_updates:
                val_tokens = validation.tokens[: config.val_batch_cap]
                if len(val_tokens):
                    val_loss, val_acc = evaluate_reconstruction(state.model, val_tokens)
                    record["val_reconstruction_loss"] = val_loss
                    record["val_accuracy"] = val_acc
                metrics.write(json.dumps(record) + "\n")
                metrics.flush()
                log.info(
                    "step %d: rec %.4f critic %.4f beta %.2f lr %.3g",
                    record["step"], record["reconstruction_loss"], record["critic_loss"],
                    record["beta"], record["lr"],
                )
            if state.step % config.checkpoint_interval == 0:
                save_train_checkpoint(out_dir / f"checkpoint_{state.step:08d}.ckpt", state, vocab)
    save_train_checkpoint(final_path, state, vocab)
    return final_path
