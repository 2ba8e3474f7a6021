"""Binary gender scoring models.

Two families cover the window classifier:

* ``tpcnn`` - convolutional blocks (valid kernels, batch norm, ReLU) with
  optional inter-block max pooling, a temporal max pool that collapses the
  remaining time axis, dense layers, and a sigmoid unit. Input is a
  150x24 log-Mel patch. Built, scored, and serialized here; weights are
  expected to come from an external training run.
* ``mlp`` - fully-connected net over either 2N pooled patch statistics
  (per-band mean and population std, N=24 -> 48 dims) or external
  256-dimensional speaker embeddings. Trainable in-process (see
  ``training``).

Model bundle file layout: magic ``VFEM``, little-endian uint32 header
length, UTF-8 JSON header (version, arch, feature_config, metadata and a
tensor manifest with shapes), then the raw float32 tensors in manifest
order.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadDimension,
    CorruptWeights,
    DimensionMismatch,
    DuplicateId,
    ShapeUnderflow,
    VersionMismatch,
)
from .features import MelPatch, PATCH_FRAMES
from . import nn

BUNDLE_MAGIC = b"VFEM"
BUNDLE_VERSION = 1
ALLOWED_WIDTHS = (32, 64, 128, 256, 512)
ALLOWED_KERNELS = (3, 5, 7, 9)
POOLING_KINDS = {"freq": (1, 2), "time": (2, 1), "timefreq": (2, 2)}
EMBEDDING_DIM = 256
P_EPS = 1e-12  # keeps scores inside the open interval (0, 1)


@dataclass(frozen=True)
class GenderScore:
    """Female probability for one analysis window."""

    p_female: float
    t_start: float

    def __post_init__(self):
        if not 0.0 < self.p_female < 1.0:
            raise ValueError(f"p_female must be in (0,1), got {self.p_female}")


@dataclass(frozen=True)
class TpCnnSpec:
    """Temporal-pooling CNN hyperparameters."""

    n_conv: int
    n_dense: int
    n_filters: int
    n_neurons: int
    k1: int
    k2: int
    pooling: tuple[str, ...]  # one slot between consecutive conv blocks
    input_frames: int = PATCH_FRAMES
    n_bands: int = 24

    kind = "tpcnn"

    def __post_init__(self):
        if not 2 <= self.n_conv <= 5:
            raise ValueError(f"n_conv must be in [2,5], got {self.n_conv}")
        if not 0 <= self.n_dense <= 4:
            raise ValueError(f"n_dense must be in [0,4], got {self.n_dense}")
        if self.n_filters not in ALLOWED_WIDTHS:
            raise ValueError(f"n_filters must be one of {ALLOWED_WIDTHS}")
        if self.n_dense > 0 and self.n_neurons not in ALLOWED_WIDTHS:
            raise ValueError(f"n_neurons must be one of {ALLOWED_WIDTHS}")
        if self.k1 not in ALLOWED_KERNELS or self.k2 not in ALLOWED_KERNELS:
            raise ValueError(f"kernel dims must be in {ALLOWED_KERNELS}")
        pooling = tuple(self.pooling)
        if len(pooling) != self.n_conv - 1:
            raise ValueError(f"need {self.n_conv - 1} pooling slots, got {len(pooling)}")
        for p in pooling:
            if p not in POOLING_KINDS:
                raise ValueError(f"unknown pooling kind {p!r}")
        object.__setattr__(self, "pooling", pooling)

    def shape_walk(self) -> list[tuple[int, int, int]]:
        """(time, freq, channels) after each block; raises ShapeUnderflow."""
        t, f, c = self.input_frames, self.n_bands, 1
        stages = []
        for i in range(self.n_conv):
            if t < self.k1 or f < self.k2:
                raise ShapeUnderflow(f"conv block {i}: input {t}x{f} < kernel {self.k1}x{self.k2}")
            t, f, c = t - self.k1 + 1, f - self.k2 + 1, self.n_filters
            if i < self.n_conv - 1:
                pt, pf = POOLING_KINDS[self.pooling[i]]
                t, f = t // pt, f // pf
                if t < 1 or f < 1:
                    raise ShapeUnderflow(f"pooling after block {i} empties a dimension")
            stages.append((t, f, c))
        return stages

    def parameter_count(self) -> int:
        """Learnable parameters: conv w/b, batchnorm gamma/beta, dense w/b."""
        total = 0
        c_in = 1
        for _ in range(self.n_conv):
            total += self.k1 * self.k2 * c_in * self.n_filters + self.n_filters  # w + b
            total += 2 * self.n_filters  # gamma, beta
            c_in = self.n_filters
        _, f, c = self.shape_walk()[-1]
        width = f * c  # temporal pooling collapses the time axis
        for _ in range(self.n_dense):
            total += width * self.n_neurons + self.n_neurons
            width = self.n_neurons
        return total + width * 1 + 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind
        d["pooling"] = list(self.pooling)
        return d


@dataclass(frozen=True)
class MlpSpec:
    """Fully-connected classifier hyperparameters."""

    layer_sizes: tuple[int, ...]
    input_dim: int

    kind = "mlp"

    def __post_init__(self):
        sizes = tuple(self.layer_sizes)
        if not 1 <= len(sizes) <= 4:
            raise ValueError(f"need 1-4 hidden layers, got {len(sizes)}")
        for s in sizes:
            if s not in ALLOWED_WIDTHS:
                raise ValueError(f"hidden sizes must be in {ALLOWED_WIDTHS}, got {s}")
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        object.__setattr__(self, "layer_sizes", sizes)

    def parameter_count(self) -> int:
        dims = [self.input_dim, *self.layer_sizes, 1]
        return sum(d_in * d_out + d_out for d_in, d_out in zip(dims[:-1], dims[1:]))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "layer_sizes": list(self.layer_sizes), "input_dim": self.input_dim}


ArchSpec = TpCnnSpec | MlpSpec


def arch_from_dict(d: dict) -> ArchSpec:
    kind = d.get("kind")
    if kind == "tpcnn":
        return TpCnnSpec(
            n_conv=d["n_conv"], n_dense=d["n_dense"], n_filters=d["n_filters"],
            n_neurons=d["n_neurons"], k1=d["k1"], k2=d["k2"],
            pooling=tuple(d["pooling"]),
            input_frames=d.get("input_frames", PATCH_FRAMES),
            n_bands=d.get("n_bands", 24),
        )
    if kind == "mlp":
        return MlpSpec(layer_sizes=tuple(d["layer_sizes"]), input_dim=d["input_dim"])
    raise ValueError(f"unknown architecture kind {kind!r}")


@dataclass(frozen=True)
class FeatureConfig:
    """What the model expects at its input."""

    n_bands: int = 24
    normalization: str = "none"  # "none" | "zscore" (stats stored as feat_mu/feat_sd)
    frame_len: float = 0.025
    frame_hop: float = 0.010

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureConfig":
        return cls(**d)


@dataclass
class ModelBundle:
    """Architecture + named weight tensors + feature expectations."""

    arch: ArchSpec
    weights: dict[str, np.ndarray]
    feature_config: FeatureConfig = field(default_factory=FeatureConfig)
    metadata: dict = field(default_factory=dict)
    version: int = BUNDLE_VERSION

    @property
    def n_parameters(self) -> int:
        return self.arch.parameter_count()


def _tensor_order(arch: ArchSpec) -> list[str]:
    if arch.kind == "tpcnn":
        names = []
        for i in range(arch.n_conv):
            names += [f"conv{i}_w", f"conv{i}_b", f"bn{i}_gamma", f"bn{i}_beta",
                      f"bn{i}_mean", f"bn{i}_var"]
        for j in range(arch.n_dense):
            names += [f"dense{j}_w", f"dense{j}_b"]
        return names + ["out_w", "out_b"]
    names = []
    for j in range(len(arch.layer_sizes)):
        names += [f"layer{j}_w", f"layer{j}_b"]
    return names + ["out_w", "out_b"]


def build_model(arch: ArchSpec, seed: int = 0,
                feature_config: FeatureConfig | None = None,
                metadata: dict | None = None) -> ModelBundle:
    """Initialize a model: He-uniform weights, zero biases, identity batch norm.

    Deterministic for a given seed. For tpcnn, validates that every
    convolution/pooling stage keeps both spatial dimensions >= 1
    (ShapeUnderflow otherwise).
    """
    rng = np.random.default_rng(seed)
    weights: dict[str, np.ndarray] = {}
    if arch.kind == "tpcnn":
        stages = arch.shape_walk()
        c_in = 1
        for i in range(arch.n_conv):
            fan_in = arch.k1 * arch.k2 * c_in
            weights[f"conv{i}_w"] = nn.he_uniform((arch.k1, arch.k2, c_in, arch.n_filters), fan_in, rng)
            weights[f"conv{i}_b"] = np.zeros(arch.n_filters)
            weights[f"bn{i}_gamma"] = np.ones(arch.n_filters)
            weights[f"bn{i}_beta"] = np.zeros(arch.n_filters)
            weights[f"bn{i}_mean"] = np.zeros(arch.n_filters)
            weights[f"bn{i}_var"] = np.ones(arch.n_filters)
            c_in = arch.n_filters
        _, f, c = stages[-1]
        width = f * c
        for j in range(arch.n_dense):
            weights[f"dense{j}_w"] = nn.he_uniform((width, arch.n_neurons), width, rng)
            weights[f"dense{j}_b"] = np.zeros(arch.n_neurons)
            width = arch.n_neurons
        weights["out_w"] = nn.he_uniform((width, 1), width, rng)
        weights["out_b"] = np.zeros(1)
    else:
        dims = [arch.input_dim, *arch.layer_sizes]
        for j, (d_in, d_out) in enumerate(zip(dims[:-1], dims[1:])):
            weights[f"layer{j}_w"] = nn.he_uniform((d_in, d_out), d_in, rng)
            weights[f"layer{j}_b"] = np.zeros(d_out)
        weights["out_w"] = nn.he_uniform((dims[-1], 1), dims[-1], rng)
        weights["out_b"] = np.zeros(1)

    meta = {"seed": seed}
    meta.update(metadata or {})
    return ModelBundle(arch=arch, weights=weights,
                       feature_config=feature_config or FeatureConfig(n_bands=getattr(arch, "n_bands", 24)),
                       metadata=meta)


def pooled_stats_embedding(values) -> np.ndarray:
    """Order-free patch summary: per-band mean then population std."""
    if isinstance(values, MelPatch):
        values = values.values
    values = np.asarray(values, dtype=np.float64)
    return np.concatenate([values.mean(axis=0), values.std(axis=0)])


def _normalize_features(bundle: ModelBundle, x: np.ndarray) -> np.ndarray:
    if bundle.feature_config.normalization == "zscore":
        return (x - bundle.weights["feat_mu"]) / bundle.weights["feat_sd"]
    return x


def model_input_from_patch(bundle: ModelBundle, patch: MelPatch | np.ndarray) -> np.ndarray:
    """Convert a Mel patch to whatever the bundle's architecture consumes."""
    values = patch.values if isinstance(patch, MelPatch) else np.asarray(patch)
    arch = bundle.arch
    if arch.kind == "tpcnn":
        return values
    expected = 2 * values.shape[-1]
    if arch.input_dim != expected:
        raise DimensionMismatch(
            f"mlp expects {arch.input_dim}-dim input; pooled patch stats give {expected} "
            "(external embeddings must be supplied directly)"
        )
    return pooled_stats_embedding(values)


def forward(bundle: ModelBundle, x) -> float | np.ndarray:
    """Female probability for one input or a batch.

    tpcnn takes a (150, N) patch or (B, 150, N) batch; mlp takes an
    (input_dim,) vector or (B, input_dim) batch. Deterministic; dropout
    is a training-time device only. Output lies strictly inside (0, 1).

    Raises:
        DimensionMismatch: input shape incompatible with the architecture.
    """
    if isinstance(x, MelPatch):
        x = x.values
    x = np.asarray(x, dtype=np.float64)
    arch = bundle.arch

    if arch.kind == "tpcnn":
        single = x.ndim == 2
        batch = x[None] if single else x
        if batch.ndim != 3 or batch.shape[1:] != (arch.input_frames, arch.n_bands):
            raise DimensionMismatch(
                f"tpcnn expects (*, {arch.input_frames}, {arch.n_bands}), got {x.shape}")
        p = _tpcnn_forward(bundle, batch)
    else:
        single = x.ndim == 1
        batch = x[None] if single else x
        if batch.ndim != 2 or batch.shape[1] != arch.input_dim:
            raise DimensionMismatch(f"mlp expects (*, {arch.input_dim}), got {x.shape}")
        p = _mlp_forward(bundle, batch)

    p = np.clip(p, P_EPS, 1.0 - P_EPS)
    return float(p[0]) if single else p


def _tpcnn_forward(bundle: ModelBundle, x: np.ndarray) -> np.ndarray:
    w = bundle.weights
    arch = bundle.arch
    h = x[..., None]
    for i in range(arch.n_conv):
        h = nn.conv2d_valid(h, w[f"conv{i}_w"], w[f"conv{i}_b"])
        h = nn.batchnorm_inference(h, w[f"bn{i}_gamma"], w[f"bn{i}_beta"],
                                   w[f"bn{i}_mean"], w[f"bn{i}_var"])
        h = nn.relu(h)
        if i < arch.n_conv - 1:
            pt, pf = POOLING_KINDS[arch.pooling[i]]
            h = nn.maxpool2d(h, pt, pf)
    h = h.max(axis=1)  # temporal pooling over the remaining time axis
    h = h.reshape(len(h), -1)
    for j in range(arch.n_dense):
        h = nn.relu(h @ w[f"dense{j}_w"] + w[f"dense{j}_b"])
    z = h @ w["out_w"] + w["out_b"]
    return nn.sigmoid(z)[:, 0]


def _mlp_forward(bundle: ModelBundle, x: np.ndarray) -> np.ndarray:
    w = bundle.weights
    h = _normalize_features(bundle, x)
    for j in range(len(bundle.arch.layer_sizes)):
        h = nn.relu(h @ w[f"layer{j}_w"] + w[f"layer{j}_b"])
    z = h @ w["out_w"] + w["out_b"]
    return nn.sigmoid(z)[:, 0]


def mlp_network_from_bundle(bundle: ModelBundle) -> nn.MlpNetwork:
    """View an mlp bundle as a trainable network (copies parameters)."""
    arch = bundle.arch
    net = nn.MlpNetwork([arch.input_dim, *arch.layer_sizes, 1])
    names = [f"layer{j}_w" for j in range(len(arch.layer_sizes))] + ["out_w"]
    net.weights = [bundle.weights[n].astype(np.float64).copy() for n in names]
    net.biases = [bundle.weights[n.replace("_w", "_b")].astype(np.float64).copy() for n in names]
    return net


def bundle_from_mlp_network(net: nn.MlpNetwork, arch: MlpSpec,
                            feature_config: FeatureConfig, metadata: dict,
                            extra_weights: dict | None = None) -> ModelBundle:
    weights = {}
    names = [f"layer{j}" for j in range(len(arch.layer_sizes))] + ["out"]
    for name, w, b in zip(names, net.weights, net.biases):
        weights[f"{name}_w"] = w.copy()
        weights[f"{name}_b"] = b.copy()
    weights.update(extra_weights or {})
    return ModelBundle(arch=arch, weights=weights, feature_config=feature_config, metadata=metadata)


def save_model(bundle: ModelBundle, path) -> None:
    """Write the bundle container; tensors are stored as float32."""
    order = _tensor_order(bundle.arch)
    extra = sorted(set(bundle.weights) - set(order))  # e.g. feat_mu/feat_sd
    order += extra
    header = {
        "version": bundle.version,
        "arch": bundle.arch.to_dict(),
        "feature_config": bundle.feature_config.to_dict(),
        "metadata": bundle.metadata,
        "tensors": [{"name": n, "shape": list(bundle.weights[n].shape)} for n in order],
    }
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(BUNDLE_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for name in order:
            fh.write(np.ascontiguousarray(bundle.weights[name], dtype="<f4").tobytes())


def load_model(path) -> ModelBundle:
    """Read a bundle container back; inverse of :func:`save_model`.

    Raises:
        CorruptWeights: bad magic, truncated payload/header.
        VersionMismatch: unknown version tag.
    """
    data = Path(path).read_bytes()
    if len(data) < 8 or data[:4] != BUNDLE_MAGIC:
        raise CorruptWeights("not a model bundle (bad magic)")
    (header_len,) = struct.unpack_from("<I", data, 4)
    if 8 + header_len > len(data):
        raise CorruptWeights("truncated header")
    try:
        header = json.loads(data[8: 8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptWeights(f"unreadable header: {exc}") from exc
    if header.get("version") != BUNDLE_VERSION:
        raise VersionMismatch(f"bundle version {header.get('version')!r}")

    arch = arch_from_dict(header["arch"])
    weights = {}
    offset = 8 + header_len
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        end = offset + 4 * count
        if end > len(data):
            raise CorruptWeights(f"truncated tensor {entry['name']!r}")
        weights[entry["name"]] = np.frombuffer(data[offset:end], dtype="<f4").reshape(shape).astype(np.float64)
        offset = end
    if offset != len(data):
        raise CorruptWeights(f"{len(data) - offset} trailing bytes after tensors")
    return ModelBundle(
        arch=arch, weights=weights,
        feature_config=FeatureConfig.from_dict(header["feature_config"]),
        metadata=header.get("metadata", {}),
    )


def load_external_embeddings(path, dim: int = EMBEDDING_DIM) -> dict[str, np.ndarray]:
    """Read a recording_id -> embedding table (CSV or JSON-lines).

    CSV rows are ``recording_id,v0,...``; a header row is skipped when its
    second field is not numeric. JSON-lines rows are objects with
    ``recording_id`` and ``embedding``.

    Raises:
        BadDimension: a row without exactly ``dim`` finite values.
        DuplicateId: repeated recording id.
    """
    path = Path(path)
    table: dict[str, np.ndarray] = {}

    def add(rid: str, vec, where: str):
        arr = np.asarray(vec, dtype=np.float64)
        if arr.shape != (dim,) or not np.isfinite(arr).all():
            raise BadDimension(f"{where}: expected {dim} finite values, got shape {arr.shape}")
        if rid in table:
            raise DuplicateId(f"{where}: duplicate recording id {rid!r}")
        table[rid] = arr

    if path.suffix in (".jsonl", ".json"):
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                doc = json.loads(line)
                add(str(doc["recording_id"]), doc["embedding"], f"{path}:{lineno}")
        return table

    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row:
                continue
            if lineno == 1 and len(row) > 1:
                try:
                    float(row[1])
                except ValueError:
                    continue  # header row
            try:
                vec = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise BadDimension(f"{path}:{lineno}: {exc}") from exc
            add(row[0], vec, f"{path}:{lineno}")
    return table
