"""Datasets: a seeded synthetic blob generator, an IDX (MNIST container)
reader, and uniform partitioning into user shards plus a root set."""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_IDX_TYPES = {0x08: np.uint8, 0x09: np.int8, 0x0B: ">i2", 0x0C: ">i4", 0x0D: ">f4", 0x0E: ">f8"}


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    partition: list  # per-user index arrays into features
    root: np.ndarray  # indices of the federator's root set
    test_features: np.ndarray
    test_labels: np.ndarray
    num_classes: int

    def user(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        idx = self.partition[i]
        return self.features[idx], self.labels[idx]

    def root_data(self) -> tuple[np.ndarray, np.ndarray]:
        return self.features[self.root], self.labels[self.root]


def synthetic_blobs(n_samples: int, dim: int, rng: np.random.Generator, classes: int = 2,
                    separation: float = 1.5, noise: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian class clusters with random unit-direction centres scaled by ``separation``."""
    centres = rng.normal(size=(classes, dim))
    centres *= separation / np.linalg.norm(centres, axis=1, keepdims=True)
    y = rng.integers(0, classes, size=n_samples)
    X = centres[y] + noise * rng.normal(size=(n_samples, dim))
    return X, y


def read_idx(path: str | Path) -> np.ndarray:
    path = Path(path)
    raw = path.read_bytes()
    if path.suffix == ".gz":
        raw = gzip.decompress(raw)
    if len(raw) < 4 or raw[0] != 0 or raw[1] != 0:
        raise ValueError("bad IDX magic number")
    dtype, ndim = raw[2], raw[3]
    if dtype not in _IDX_TYPES:
        raise ValueError(f"unknown IDX element type 0x{dtype:02x}")
    dims = struct.unpack(f">{ndim}I", raw[4 : 4 + 4 * ndim])
    data = np.frombuffer(raw, dtype=_IDX_TYPES[dtype], offset=4 + 4 * ndim)
    if data.size != int(np.prod(dims)):
        raise ValueError("IDX payload size does not match its header")
    return data.reshape(dims)


def write_idx(path: str | Path, arr: np.ndarray):
    code = {np.dtype(np.uint8): 0x08, np.dtype(np.int8): 0x09}.get(arr.dtype)
    if code is None:
        raise ValueError("only uint8/int8 arrays are written")
    head = bytes([0, 0, code, arr.ndim]) + struct.pack(f">{arr.ndim}I", *arr.shape)
    Path(path).write_bytes(head + arr.tobytes())


def load_idx_pair(images: str | Path, labels: str | Path, limit: int | None = None,
                  offset: int = 0) -> tuple[np.ndarray, np.ndarray]:
    X = read_idx(images).astype(float)
    y = read_idx(labels).astype(int)
    if len(X) != len(y):
        raise ValueError("image and label counts differ")
    stop = None if limit is None else offset + limit
    X, y = X[offset:stop], y[offset:stop]
    return X.reshape(len(X), -1) / 255.0, y


def partition(X: np.ndarray, y: np.ndarray, n_users: int, root_size: int, test_size: int,
              rng: np.random.Generator, num_classes: int | None = None) -> Dataset:
    """Shuffle, carve out test and root sets, then split the rest uniformly among users."""
    perm = rng.permutation(len(X))
    test, root, rest = perm[:test_size], perm[test_size : test_size + root_size], perm[test_size + root_size :]
    if len(rest) < n_users:
        raise ValueError("not enough samples for every user")
    parts = [np.sort(p) for p in np.array_split(rest, n_users)]
    C = num_classes if num_classes is not None else int(y.max()) + 1
    return Dataset(X, y, parts, np.sort(root), X[test], y[test], C)


def make_dataset(kind: str, n_users: int, rng: np.random.Generator, *, samples: int = 4000, dim: int = 5,
                 classes: int = 2, root_size: int = 100, test_size: int = 1000, separation: float = 1.5,
                 noise: float = 1.0, images: str | None = None, labels: str | None = None) -> Dataset:
    if kind == "blobs":
        X, y = synthetic_blobs(samples + root_size + test_size, dim, rng, classes, separation, noise)
        return partition(X, y, n_users, root_size, test_size, rng, classes)
    if kind == "idx":
        if not images or not labels:
            raise ValueError("idx datasets need image and label paths")
        X, y = load_idx_pair(images, labels, limit=samples + root_size + test_size)
        return partition(X, y, n_users, root_size, test_size, rng, 10)
    raise ValueError(f"unknown dataset {kind!r}")
