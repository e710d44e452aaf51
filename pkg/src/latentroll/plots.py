"""Rendered figures for evaluation reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import GenreProfile, PcaProjection


def plot_interpolation_curve(curve: dict, path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(curve["alphas"], curve["mean_hamming"], marker="o", label="latent interpolation")
    if "bernoulli_mean_hamming" in curve:
        ax.plot(
            curve["alphas"], curve["bernoulli_mean_hamming"],
            marker="x", linestyle="--", label="Bernoulli baseline",
        )
    ax.set_xlabel("alpha")
    ax.set_ylabel("mean hamming distance to first endpoint")
    ax.set_title(f"interpolation over {curve['pairs']} pairs")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_genre_profile(profile: GenreProfile, path: str | Path, component_tags: list[str] | None = None) -> None:
    matrix = profile.relative_change.T  # metrics on rows, components on columns
    fig, ax = plt.subplots(figsize=(12, 4))
    limit = np.nanmax(np.abs(matrix)) if np.isfinite(matrix).any() else 1.0
    image = ax.imshow(matrix, aspect="auto", cmap="RdBu_r", vmin=-limit, vmax=limit)
    ax.set_yticks(range(len(profile.metric_names)), profile.metric_names)
    if component_tags:
        ax.set_xticks(range(len(component_tags)), component_tags, rotation=90, fontsize=6)
    ax.set_xlabel("mixture component (circular)")
    fig.colorbar(image, ax=ax, label="relative change vs global mean")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_pca_projection(projection: PcaProjection, path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(5, 5))
    labels = np.array(projection.labels)
    for tag, marker in zip(dict.fromkeys(projection.labels), ("o", "x")):
        mask = labels == tag
        ax.scatter(projection.points[mask, 0], projection.points[mask, 1], marker=marker, s=14, label=tag)
    ax.set_xlabel("PC1")
    ax.set_ylabel("PC2")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
