"""Latent priors: isotropic Gaussian and the genre-conditioned ring mixture.

The ring prior is a mixture of `num_components` Gaussians whose means sit
on the unit circle spanned by the first two latent dimensions. Each
component is elongated along its radial direction (variance a1) and thin
everywhere else (variance a2); its covariance is the axis-aligned diagonal
S = diag(a1, a2, ..., a2) conjugated by the in-plane rotation that points
dimension 0 at the component's mean.

Covariances are kept in factored form (angle + two variances); dense
matrices are only materialized for verification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class IsotropicGaussianPrior:
    latent_dim: int

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return rng.standard_normal((count, self.latent_dim))

    def sample_for(self, genre_ids: Sequence[Sequence[int]], rng: np.random.Generator) -> np.ndarray:
        return self.sample(len(genre_ids), rng)

    def to_json(self) -> dict:
        return {"kind": "isotropic", "latent_dim": self.latent_dim}


@dataclass(frozen=True)
class GenreRingPrior:
    latent_dim: int = 512
    num_components: int = 32
    radial_variance: float = 0.1
    tangential_variance: float = 0.001
    # genre id -> component index; identity when omitted
    component_of_genre: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.latent_dim < 2:
            raise ValueError("latent_dim must be at least 2")
        if self.radial_variance <= 0 or self.tangential_variance <= 0:
            raise ValueError("variances must be positive")
        if self.component_of_genre is not None and any(
            not 0 <= c < self.num_components for c in self.component_of_genre
        ):
            raise ValueError("component map entries outside [0, num_components)")

    def _check_component(self, i: int) -> None:
        if not 0 <= i < self.num_components:
            raise ValueError(f"component {i} outside [0, {self.num_components})")

    def component_angle(self, i: int) -> float:
        self._check_component(i)
        return 2.0 * math.pi * i / self.num_components

    def component_mean(self, i: int) -> np.ndarray:
        angle = self.component_angle(i)
        mean = np.zeros(self.latent_dim)
        mean[0] = math.cos(angle)
        mean[1] = math.sin(angle)
        return mean

    def component_for_genre(self, genre_id: int) -> int:
        if self.component_of_genre is None:
            component = genre_id
        else:
            if not 0 <= genre_id < len(self.component_of_genre):
                raise ValueError(f"unknown genre id {genre_id}")
            component = self.component_of_genre[genre_id]
        self._check_component(component)
        return component

    def dense_rotation(self, i: int) -> np.ndarray:
        """The orthogonal map aligning dimension 0 with component i's mean."""
        angle = self.component_angle(i)
        rotation = np.eye(self.latent_dim)
        c, s = math.cos(angle), math.sin(angle)
        rotation[:2, :2] = [[c, -s], [s, c]]
        return rotation

    def dense_covariance(self, i: int) -> np.ndarray:
        """Full covariance matrix of component i (verification only)."""
        rotation = self.dense_rotation(i)
        variances = np.full(self.latent_dim, self.tangential_variance)
        variances[0] = self.radial_variance
        return rotation @ np.diag(variances) @ rotation.T

    def sample_component(self, i: int, count: int, rng: np.random.Generator) -> np.ndarray:
        """Draw from component i via the factored form: scale a standard
        normal by sqrt(S), rotate the leading plane, then shift by the mean."""
        if count < 1:
            raise ValueError("count must be at least 1")
        angle = self.component_angle(i)
        draws = rng.standard_normal((count, self.latent_dim))
        draws[:, 0] *= math.sqrt(self.radial_variance)
        draws[:, 1:] *= math.sqrt(self.tangential_variance)
        c, s = math.cos(angle), math.sin(angle)
        x, y = draws[:, 0].copy(), draws[:, 1].copy()
        draws[:, 0] = c * x - s * y
        draws[:, 1] = s * x + c * y
        draws[:, 0] += c
        draws[:, 1] += s
        return draws

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Unconditioned mixture draw: components weighted uniformly."""
        components = rng.integers(0, self.num_components, size=count)
        out = np.empty((count, self.latent_dim))
        for i in range(count):
            out[i] = self.sample_component(int(components[i]), 1, rng)[0]
        return out

    def sample_for(self, genre_ids: Sequence[Sequence[int]], rng: np.random.Generator) -> np.ndarray:
        """One draw per sample: pick one of the sample's genres uniformly
        (re-drawn on every call), then draw from that genre's component."""
        out = np.empty((len(genre_ids), self.latent_dim))
        for row, ids in enumerate(genre_ids):
            if len(ids) == 0:
                raise ValueError(f"sample {row} has no genre ids; the ring prior needs at least one")
            choice = int(ids[int(rng.integers(0, len(ids)))])
            component = self.component_for_genre(choice)
            out[row] = self.sample_component(component, 1, rng)[0]
        return out

    def to_json(self) -> dict:
        return {
            "kind": "ring",
            "latent_dim": self.latent_dim,
            "num_components": self.num_components,
            "radial_variance": self.radial_variance,
            "tangential_variance": self.tangential_variance,
            "component_of_genre": None
            if self.component_of_genre is None
            else list(self.component_of_genre),
        }


Prior = IsotropicGaussianPrior | GenreRingPrior


def prior_from_json(data: dict) -> Prior:
    kind = data.get("kind")
    if kind == "isotropic":
        return IsotropicGaussianPrior(latent_dim=data["latent_dim"])
    if kind == "ring":
        component_map = data.get("component_of_genre")
        return GenreRingPrior(
            latent_dim=data["latent_dim"],
            num_components=data["num_components"],
            radial_variance=data["radial_variance"],
            tangential_variance=data["tangential_variance"],
            component_of_genre=None if component_map is None else tuple(component_map),
        )
    raise ValueError(f"unknown prior kind {kind!r}")
