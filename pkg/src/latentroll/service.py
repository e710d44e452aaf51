"""HTTP facade over a loaded checkpoint: encode, decode, interpolate,
prior sampling, exemplars, and MIDI export.

All pianorolls cross the wire as integer token grids. Model state is
immutable after load, so concurrent requests are safe; stochastic
endpoints accept an optional seed for reproducibility.
"""

from __future__ import annotations

import hashlib
import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from .checkpoint import load_checkpoint, model_from_checkpoint
from .model import AdversarialAutoencoder
from .pipeline import GenreVocabulary, export_midi, load_dataset
from .prior import GenreRingPrior, IsotropicGaussianPrior, Prior
from .tokens import NUM_TOKENS, NUM_TRACKS

log = logging.getLogger(__name__)

DEFAULT_PORT = 8040
PORT_ENV_VAR = "LATENTROLL_PORT"


@dataclass
class Exemplar:
    segment_id: str
    song_id: str
    tokens: np.ndarray


@dataclass
class ApiSession:
    checkpoint_id: str
    model: AdversarialAutoencoder
    prior: Prior
    vocab: GenreVocabulary | None
    exemplars: list[Exemplar]

    @property
    def latent_dim(self) -> int:
        return self.model.config.latent_dim

    @property
    def timesteps(self) -> int:
        return self.model.config.timesteps


def load_session(
    checkpoint_path: str | Path,
    data_dir: str | Path | None = None,
    exemplar_limit: int = 256,
) -> ApiSession:
    ckpt = load_checkpoint(checkpoint_path)
    model = model_from_checkpoint(ckpt)
    model.eval()
    prior = ckpt.prior or IsotropicGaussianPrior(latent_dim=ckpt.model_config.latent_dim)
    exemplars: list[Exemplar] = []
    if data_dir is not None:
        dataset = load_dataset(data_dir)
        for split_name in ("validation", "train"):
            split = dataset.split(split_name)
            for i in range(len(split)):
                if len(exemplars) >= exemplar_limit:
                    break
                exemplars.append(
                    Exemplar(
                        segment_id=f"{split_name}-{i:06d}",
                        song_id=split.song_ids[i],
                        tokens=split.tokens[i],
                    )
                )
    digest = hashlib.sha256(Path(checkpoint_path).read_bytes()).hexdigest()[:16]
    return ApiSession(
        checkpoint_id=digest,
        model=model,
        prior=ckpt.prior if ckpt.prior is not None else prior,
        vocab=ckpt.vocab,
        exemplars=exemplars,
    )


class EncodeRequest(BaseModel):
    tokens: list[list[int]]
    seed: int | None = None


class DecodeRequest(BaseModel):
    z: list[float]


class InterpolateRequest(BaseModel):
    z1: list[float]
    z2: list[float]
    alphas: list[float]


class SampleRequest(BaseModel):
    genre_id: int | None = None
    count: int = 1
    seed: int | None = None


class ExportRequest(BaseModel):
    tokens: list[list[int]]
    tempo_bpm: float = 120.0


def _bad_request(field: str, message: str) -> HTTPException:
    return HTTPException(status_code=400, detail=[{"loc": ["body", field], "msg": message}])


def _parse_grid(tokens: list[list[int]], timesteps: int) -> np.ndarray:
    grid = np.asarray(tokens)
    if grid.ndim != 2 or grid.shape != (timesteps, NUM_TRACKS):
        raise _bad_request("tokens", f"expected a {timesteps}x{NUM_TRACKS} grid, got shape {grid.shape}")
    if grid.min() < 0 or grid.max() >= NUM_TOKENS:
        raise _bad_request("tokens", f"token values must lie in [0, {NUM_TOKENS - 1}]")
    return grid.astype(np.uint8)


def _parse_z(values: list[float], latent_dim: int, field: str = "z") -> torch.Tensor:
    array = np.asarray(values, dtype=np.float64)
    if array.ndim != 1 or array.shape[0] != latent_dim:
        raise HTTPException(
            status_code=422,
            detail=[{"loc": ["body", field], "msg": f"expected {latent_dim} latent values, got {array.shape}"}],
        )
    if not np.all(np.isfinite(array)):
        raise _bad_request(field, "latent values must be finite")
    return torch.from_numpy(array)


def _generator(seed: int | None) -> torch.Generator | None:
    if seed is None:
        return None
    gen = torch.Generator()
    gen.manual_seed(seed)
    return gen


def create_app(
    checkpoint_path: str | Path,
    data_dir: str | Path | None = None,
    exemplar_limit: int = 256,
    cors_origins: tuple[str, ...] = ("*",),
) -> FastAPI:
    session = load_session(checkpoint_path, data_dir, exemplar_limit)
    app = FastAPI(title="latentroll", version="0.1.0")
    app.state.session = session
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        detail = [
            {"loc": [str(p) for p in err.get("loc", [])], "msg": err.get("msg", "invalid")}
            for err in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"detail": detail})

    model = session.model
    dtype = model.dtype

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "checkpoint": session.checkpoint_id,
            "latent_dim": session.latent_dim,
            "timesteps": session.timesteps,
            "prior": session.prior.to_json()["kind"],
            "exemplars": len(session.exemplars),
        }

    @app.post("/encode")
    def encode(body: EncodeRequest):
        grid = _parse_grid(body.tokens, session.timesteps)
        batch = torch.from_numpy(grid[None]).long()
        with torch.no_grad():
            out = model.encode(batch, stochastic=True, generator=_generator(body.seed))
        # mu, sigma, and one sampled z; deterministic clients decode mu
        return {
            "mu": out.mu[0].tolist(),
            "sigma": out.sigma[0].tolist(),
            "z": out.z[0].tolist(),
        }

    @app.post("/decode")
    def decode(body: DecodeRequest):
        z = _parse_z(body.z, session.latent_dim).to(dtype)
        with torch.no_grad():
            tokens = model.decode_tokens(z[None])[0]
        return {"tokens": tokens.numpy().astype(int).tolist()}

    @app.post("/interpolate")
    def interpolate(body: InterpolateRequest):
        z1 = _parse_z(body.z1, session.latent_dim, "z1").to(dtype)
        z2 = _parse_z(body.z2, session.latent_dim, "z2").to(dtype)
        for alpha in body.alphas:
            if not 0.0 <= alpha <= 1.0:
                raise _bad_request("alphas", f"alpha {alpha} outside [0, 1]")
        grids = []
        with torch.no_grad():
            for alpha in body.alphas:
                mixed = (1.0 - alpha) * z1 + alpha * z2
                grids.append(model.decode_tokens(mixed[None])[0].numpy().astype(int).tolist())
        return {"tokens": grids}

    @app.post("/sample")
    def sample(body: SampleRequest):
        if body.count < 1 or body.count > 256:
            raise _bad_request("count", "count must be in [1, 256]")
        rng = np.random.default_rng(body.seed)
        prior = session.prior
        if body.genre_id is not None:
            if not isinstance(prior, GenreRingPrior) or session.vocab is None:
                raise HTTPException(status_code=404, detail="model has no genre components")
            if not 0 <= body.genre_id < len(session.vocab):
                raise HTTPException(status_code=404, detail=f"unknown genre id {body.genre_id}")
            component = prior.component_for_genre(body.genre_id)
            z = prior.sample_component(component, body.count, rng)
        else:
            z = prior.sample(body.count, rng)
        with torch.no_grad():
            tokens = model.decode_tokens(torch.from_numpy(z).to(dtype)).numpy()
        return {"z": z.tolist(), "tokens": tokens.astype(int).tolist()}

    @app.get("/genres")
    def genres():
        if session.vocab is None:
            return {"tags": [], "component_of": [], "latent_dim": session.latent_dim, "timesteps": session.timesteps}
        return {
            "tags": session.vocab.tags,
            "component_of": session.vocab.component_of,
            "latent_dim": session.latent_dim,
            "timesteps": session.timesteps,
        }

    @app.get("/exemplars")
    def exemplars(limit: int = 16):
        subset = session.exemplars[: max(0, limit)]
        return {
            "exemplars": [
                {
                    "id": ex.segment_id,
                    "song_id": ex.song_id,
                    "tokens": ex.tokens.astype(int).tolist(),
                }
                for ex in subset
            ]
        }

    @app.post("/export")
    def export(body: ExportRequest):
        grid = _parse_grid(body.tokens, session.timesteps)
        if body.tempo_bpm <= 0:
            raise _bad_request("tempo_bpm", "tempo must be positive")
        data = export_midi(grid, tempo_bpm=body.tempo_bpm)
        return Response(
            content=data,
            media_type="audio/midi",
            headers={"Content-Disposition": "attachment; filename=segment.mid"},
        )

    return app


def serve(
    checkpoint_path: str | Path,
    data_dir: str | Path | None = None,
    port: int | None = None,
    host: str = "127.0.0.1",
) -> None:
    import uvicorn

    if port is None:
        port = int(os.environ.get(PORT_ENV_VAR, DEFAULT_PORT))
    app = create_app(checkpoint_path, data_dir)
    uvicorn.run(app, host=host, port=port)
