"""Self-describing checkpoint container.

Layout: 8-byte magic, little-endian uint64 manifest length, manifest JSON,
then raw tensor bytes. The manifest records the format version, model
configuration, prior and genre vocabulary, optional training state, and a
table of (name, shape, dtype, offset) entries for the payload. Model
weights are stored as little-endian float32; auxiliary tensors (optimizer
moments, step counters) keep their native dtype.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .model import AdversarialAutoencoder, ModelConfig
from .pipeline import GenreVocabulary
from .prior import Prior, prior_from_json

MAGIC = b"LROLLCK1"
FORMAT_VERSION = 1

_DTYPE_STR = {
    np.dtype(np.float32): "<f4",
    np.dtype(np.float64): "<f8",
    np.dtype(np.int32): "<i4",
    np.dtype(np.int64): "<i8",
    np.dtype(np.uint8): "|u1",
}


@dataclass
class Checkpoint:
    model_config: ModelConfig
    tensors: dict[str, np.ndarray]
    prior: Prior | None = None
    vocab: GenreVocabulary | None = None
    train_meta: dict | None = None


def save_checkpoint(
    path: str | Path,
    model: AdversarialAutoencoder,
    prior: Prior | None = None,
    vocab: GenreVocabulary | None = None,
    train_meta: dict | None = None,
    extra_tensors: dict[str, np.ndarray] | None = None,
) -> None:
    tensors: dict[str, np.ndarray] = {}
    for name, tensor in model.state_dict().items():
        tensors[f"model/{name}"] = tensor.detach().cpu().numpy().astype("<f4")
    for name, array in (extra_tensors or {}).items():
        tensors[f"extra/{name}"] = np.asarray(array)

    table = []
    payload = bytearray()
    for name, array in tensors.items():
        dtype = _DTYPE_STR.get(array.dtype.newbyteorder("="))
        if dtype is None:
            raise ValueError(f"unsupported tensor dtype {array.dtype} for {name}")
        raw = np.ascontiguousarray(array.astype(dtype)).tobytes()
        table.append(
            {
                "name": name,
                "shape": list(array.shape),
                "dtype": dtype,
                "offset": len(payload),
                "nbytes": len(raw),
            }
        )
        payload += raw

    manifest = {
        "format_version": FORMAT_VERSION,
        "model_config": model.config.to_json(),
        "prior": prior.to_json() if prior is not None else None,
        "vocab": vocab.to_json() if vocab is not None else None,
        "train": train_meta,
        "tensors": table,
    }
    manifest_bytes = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(len(manifest_bytes).to_bytes(8, "little"))
        fh.write(manifest_bytes)
        fh.write(payload)


def load_checkpoint(path: str | Path) -> Checkpoint:
    blob = Path(path).read_bytes()
    if blob[:8] != MAGIC:
        raise ValueError(f"{path}: not a checkpoint file")
    manifest_len = int.from_bytes(blob[8:16], "little")
    manifest = json.loads(blob[16 : 16 + manifest_len].decode("utf-8"))
    if manifest["format_version"] != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format version {manifest['format_version']}")
    payload = blob[16 + manifest_len :]

    tensors: dict[str, np.ndarray] = {}
    for entry in manifest["tensors"]:
        raw = payload[entry["offset"] : entry["offset"] + entry["nbytes"]]
        array = np.frombuffer(raw, dtype=np.dtype(entry["dtype"])).reshape(entry["shape"])
        tensors[entry["name"]] = array.copy()

    prior = prior_from_json(manifest["prior"]) if manifest["prior"] else None
    vocab = GenreVocabulary.from_json(manifest["vocab"]) if manifest["vocab"] else None
    return Checkpoint(
        model_config=ModelConfig.from_json(manifest["model_config"]),
        tensors=tensors,
        prior=prior,
        vocab=vocab,
        train_meta=manifest["train"],
    )


def model_from_checkpoint(ckpt: Checkpoint) -> AdversarialAutoencoder:
    model = AdversarialAutoencoder(ckpt.model_config)
    state = {
        name[len("model/") :]: torch.from_numpy(array)
        for name, array in ckpt.tensors.items()
        if name.startswith("model/")
    }
    model.load_state_dict(state)
    return model


def extra_tensors(ckpt: Checkpoint) -> dict[str, np.ndarray]:
    return {
        name[len("extra/") :]: array
        for name, array in ckpt.tensors.items()
        if name.startswith("extra/")
    }
