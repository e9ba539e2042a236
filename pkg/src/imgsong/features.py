"""CNN-based image representations: file store plus a colour-histogram stand-in.

Real deployments drop in 4096-dimensional vectors from a pretrained network's
penultimate layer; tests use ``histogram_extract`` instead.
"""
from __future__ import annotations

from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import DuplicateKeyError, InvalidInputError, ParseError

DEFAULT_DIM = 4096


class FeatureStore:
    """Image id -> feature vector, all of one dimension."""

    def __init__(self, dim: int = DEFAULT_DIM, items: Mapping[str, Iterable[float]] | None = None):
        if dim < 1:
            raise InvalidInputError(f"feature dimension must be >= 1, got {dim}")
        self.dim = dim
        self._ids: list[str] = []
        self._rows: list[np.ndarray] = []
        self._pos: dict[str, int] = {}
        self._matrix: np.ndarray | None = None
        for image_id, vector in (items or {}).items():
            self.add(image_id, vector)

    def add(self, image_id: str, vector) -> None:
        if not image_id or any(c.isspace() for c in image_id):
            raise InvalidInputError(f"invalid image id {image_id!r}")
        if image_id in self._pos:
            raise DuplicateKeyError(f"duplicate image id {image_id!r}")
        v = np.asarray(vector, dtype=np.float64).ravel()
        if v.size != self.dim:
            raise InvalidInputError(f"{image_id}: expected {self.dim} values, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise InvalidInputError(f"{image_id}: non-finite feature value")
        self._pos[image_id] = len(self._ids)
        self._ids.append(image_id)
        self._rows.append(v)
        self._matrix = None

    def __len__(self):
        return len(self._ids)

    def __contains__(self, image_id):
        return image_id in self._pos

    def __getitem__(self, image_id) -> np.ndarray:
        try:
            return self._rows[self._pos[image_id]]
        except KeyError:
            raise KeyError(f"no features for image {image_id!r}") from None

    def __iter__(self) -> Iterator[str]:
        return iter(self._ids)

    def items(self):
        return zip(self._ids, self._rows)

    @property
    def ids(self) -> list[str]:
        return list(self._ids)

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = (
                np.vstack(self._rows) if self._rows else np.zeros((0, self.dim))
            )
        return self._matrix


def load_features(path) -> FeatureStore:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        try:
            n, dim = (int(x) for x in header.split())
        except ValueError:
            raise ParseError("header must be 'N D'", 1, path) from None
        if n < 0 or dim < 1:
            raise ParseError(f"bad header values N={n} D={dim}", 1, path)
        store = FeatureStore(dim)
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != dim + 1:
                raise ParseError(f"expected id + {dim} values, got {len(fields) - 1} values", lineno, path)
            try:
                values = [float(x) for x in fields[1:]]
            except ValueError:
                raise ParseError("non-numeric feature value", lineno, path) from None
            if fields[0] in store:
                raise DuplicateKeyError(f"{path}:{lineno}: duplicate image id {fields[0]!r}")
            try:
                store.add(fields[0], values)
            except InvalidInputError as exc:
                raise ParseError(str(exc), lineno, path) from None
    if len(store) != n:
        raise ParseError(f"header declares {n} vectors, found {len(store)}", None, path)
    return store


def save_features(store: FeatureStore, path) -> None:
    """Rows sorted by image id, values with 17 significant digits."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(store)} {store.dim}\n")
        for image_id in sorted(store):
            fh.write(image_id + " " + " ".join("%.16e" % x for x in store[image_id]) + "\n")


def histogram_extract(pixels, bins_per_channel: int = 16) -> np.ndarray:
    """Per-channel colour histograms of an H x W x 3 uint8 image, each
    normalised to sum 1, concatenated (R, G, B)."""
    if bins_per_channel < 1:
        raise InvalidInputError("bins_per_channel must be >= 1")
    px = np.asarray(pixels)
    if px.ndim != 3 or px.shape[2] != 3:
        raise InvalidInputError(f"expected an H x W x 3 array, got shape {px.shape}")
    if px.shape[0] * px.shape[1] == 0:
        raise InvalidInputError("image is empty")
    flat = px.reshape(-1, 3).astype(np.int64)
    if flat.min() < 0 or flat.max() > 255:
        raise InvalidInputError("pixel values must lie in [0, 255]")
    idx = flat * bins_per_channel // 256
    out = np.empty(3 * bins_per_channel)
    for c in range(3):
        counts = np.bincount(idx[:, c], minlength=bins_per_channel)
        out[c * bins_per_channel:(c + 1) * bins_per_channel] = counts / flat.shape[0]
    return out


def _ppm_tokens(data: bytes):
    """Header tokens of a netpbm file, skipping comments; yields (token, end)."""
    pos = 0
    while pos < len(data):
        c = data[pos:pos + 1]
        if c == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
                pos += 1
            yield data[start:pos], pos


def read_ppm(path) -> np.ndarray:
    """Minimal P3/P6 reader returning an H x W x 3 uint8 array."""
    data = Path(path).read_bytes()
    tokens = _ppm_tokens(data)
    try:
        magic, _ = next(tokens)
        header = [int(next(tokens)[0]) for _ in range(2)]
        maxval_tok, end = next(tokens)
        maxval = int(maxval_tok)
    except (StopIteration, ValueError):
        raise InvalidInputError(f"{path}: not a PPM file") from None
    width, height = header
    if magic not in (b"P3", b"P6") or width < 1 or height < 1 or not 0 < maxval < 65536:
        raise InvalidInputError(f"{path}: unsupported PPM header")
    count = width * height * 3
    if magic == b"P6":
        dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
        try:
            raw = np.frombuffer(data, dtype=dtype, count=count, offset=end + 1)
        except ValueError:
            raise InvalidInputError(f"{path}: truncated pixel data") from None
    else:
        raw = np.array([int(t) for t, _ in tokens][:count])
        if raw.size != count:
            raise InvalidInputError(f"{path}: truncated pixel data")
    if maxval != 255:
        raw = np.round(raw.astype(np.float64) * 255.0 / maxval)
    return raw.astype(np.uint8).reshape(height, width, 3)


def write_ppm(pixels, path) -> None:
    px = np.asarray(pixels, dtype=np.uint8)
    h, w, _ = px.shape
    Path(path).write_bytes(f"P6\n{w} {h}\n255\n".encode("ascii") + px.tobytes())


def extract_directory(directory, bins_per_channel: int = 16) -> FeatureStore:
    """Histogram features for every ``*.ppm`` under ``directory``; the image id
    is the file stem."""
    store = FeatureStore(3 * bins_per_channel)
    for p in sorted(Path(directory).rglob("*.ppm")):
        store.add(p.stem, histogram_extract(read_ppm(p), bins_per_channel))
    return store
