"""Versioned flat-text model artifacts.

key=value lines followed by named numeric blocks; everything a prediction
needs travels with the model: hyperparameters, site parameters, the
standardized training inputs, and the standardization statistics.  Numbers
are written with 17 significant digits, so save/load round-trips float64
exactly and the files diff cleanly.
"""

from dataclasses import dataclass

import numpy as np

from .kernel import Hyperparams
from .posterior import Sites

FORMAT_NAME = "probitgp-model"
FORMAT_VERSION = 1

_BLOCKS = ("feature_mean", "feature_scale", "lambda1", "lambda2", "features")


@dataclass(frozen=True)
class ModelArtifact:
    name: str
    objective: str
    seed: int
    jitter: float | None
    theta: Hyperparams
    sites: Sites
    feature_mean: np.ndarray
    feature_scale: np.ndarray
    features: np.ndarray  # standardized training inputs, (n, d)

    def __post_init__(self):
        feats = np.array(self.features, dtype=float)
        mean = np.array(self.feature_mean, dtype=float)
        scale = np.array(self.feature_scale, dtype=float)
        if feats.ndim != 2 or feats.shape[0] != self.sites.n:
            raise ValueError("features must be (n_sites, d)")
        if mean.shape != (feats.shape[1],) or scale.shape != mean.shape:
            raise ValueError("standardization stats must match feature columns")
        for arr in (feats, mean, scale):
            arr.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "feature_mean", mean)
        object.__setattr__(self, "feature_scale", scale)


def _fmt(x):
    return "%.17g" % float(x)


def _write_block(handle, label, values):
    handle.write(f"{label}:\n")
    flat = np.asarray(values, dtype=float).ravel()
    for start in range(0, flat.size, 6):
        handle.write(" ".join(_fmt(v) for v in flat[start:start + 6]) + "\n")


def save_model(path, artifact):
    with open(path, "w") as handle:
        handle.write(f"format={FORMAT_NAME}\n")
        handle.write(f"version={FORMAT_VERSION}\n")
        handle.write(f"name={artifact.name}\n")
        handle.write(f"objective={artifact.objective}\n")
        handle.write(f"seed={artifact.seed}\n")
        jit = "none" if artifact.jitter is None else _fmt(artifact.jitter)
        handle.write(f"jitter={jit}\n")
        handle.write(f"log_lengthscale={_fmt(artifact.theta.log_lengthscale)}\n")
        handle.write(f"log_magnitude={_fmt(artifact.theta.log_magnitude)}\n")
        handle.write(f"n={artifact.features.shape[0]}\n")
        handle.write(f"d={artifact.features.shape[1]}\n")
        _write_block(handle, "feature_mean", artifact.feature_mean)
        _write_block(handle, "feature_scale", artifact.feature_scale)
        _write_block(handle, "lambda1", artifact.sites.lam1)
        _write_block(handle, "lambda2", artifact.sites.lam2)
        _write_block(handle, "features", artifact.features)


def load_model(path):
    keys = {}
    blocks = {}
    with open(path) as handle:
        lines = [line.rstrip("\n") for line in handle]
    pos = 0
    while pos < len(lines) and "=" in lines[pos]:
        key, _, value = lines[pos].partition("=")
        keys[key.strip()] = value.strip()
        pos += 1
    if keys.get("format") != FORMAT_NAME:
        raise ValueError(f"{path}: not a {FORMAT_NAME} file")
    if int(keys.get("version", "-1")) != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported version {keys.get('version')}")
    n, d = int(keys["n"]), int(keys["d"])
    sizes = {
        "feature_mean": d, "feature_scale": d,
        "lambda1": n, "lambda2": n, "features": n * d,
    }
    while pos < len(lines):
        line = lines[pos].strip()
        pos += 1
        if not line:
            continue
        if not line.endswith(":"):
            raise ValueError(f"{path}: expected a block label, got {line!r}")
        label = line[:-1]
        if label not in sizes:
            raise ValueError(f"{path}: unknown block {label!r}")
        want = sizes[label]
        values = []
        while len(values) < want:
            if pos >= len(lines):
                raise ValueError(f"{path}: block {label!r} truncated")
            values.extend(float(tok) for tok in lines[pos].split())
            pos += 1
        if len(values) != want:
            raise ValueError(f"{path}: block {label!r} has extra values")
        blocks[label] = np.array(values)
    missing = [b for b in _BLOCKS if b not in blocks]
    if missing:
        raise ValueError(f"{path}: missing blocks {missing}")
    jitter = None if keys["jitter"] == "none" else float(keys["jitter"])
    return ModelArtifact(
        name=keys["name"],
        objective=keys["objective"],
        seed=int(keys["seed"]),
        jitter=jitter,
        theta=Hyperparams(float(keys["log_lengthscale"]), float(keys["log_magnitude"])),
        sites=Sites(blocks["lambda1"], blocks["lambda2"]),
        feature_mean=blocks["feature_mean"],
        feature_scale=blocks["feature_scale"],
        features=blocks["features"].reshape(n, d),
    )
