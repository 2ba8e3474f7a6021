"""Bias-aware training of the fully-connected gender classifier.

Protocol: gender-balance every corpus by randomly excluding speakers from
the larger gender, equalize corpus sizes to the smallest, split 80/20 by
speaker so no speaker crosses sets, then per epoch draw one random speech
excerpt per unique speaker (balanced across genders and corpora by
construction). Early stopping watches the development objective

    loss_all + |loss_male - loss_female|

with a 50-epoch patience; the best epoch's parameters are restored and
the best of several random initializations is kept.

Runs are bit-reproducible: every random draw derives from the base seed,
the initialization index, and the epoch number.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .classifier import (
    FeatureConfig,
    MlpSpec,
    ModelBundle,
    bundle_from_mlp_network,
    pooled_stats_embedding,
)
from .errors import EmptyGender, NonFiniteLoss, SpeakerTooShort, TooFewSpeakers
from .features import DEFAULT_PATCH_HOP, MelFrames, PATCH_FRAMES

GENDERS = ("F", "M")

# Fixed stream tags so the dev draw and feature-stats draw never collide
# with epoch streams.
_DEV_STREAM = 1_000_003
_STATS_STREAM = 1_000_033


@dataclass(frozen=True)
class SpeakerRecord:
    speaker_id: str
    gender: str
    corpus_tag: str
    recordings: tuple[str, ...]

    def __post_init__(self):
        if self.gender not in GENDERS:
            raise ValueError(f"gender must be F or M, got {self.gender!r}")
        if not self.recordings:
            raise ValueError(f"speaker {self.speaker_id}: no recordings")


@dataclass(frozen=True)
class CorpusIndex:
    """Speakers with their recordings, possibly spanning several corpora."""

    speakers: tuple[SpeakerRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "speakers", tuple(self.speakers))
        seen = set()
        for s in self.speakers:
            key = (s.corpus_tag, s.speaker_id)
            if key in seen:
                raise ValueError(f"duplicate speaker {key}")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.speakers)

    def count(self, gender: str, corpus_tag: str | None = None) -> int:
        return sum(
            1 for s in self.speakers
            if s.gender == gender and (corpus_tag is None or s.corpus_tag == corpus_tag)
        )

    @property
    def corpus_tags(self) -> tuple[str, ...]:
        tags = []
        for s in self.speakers:
            if s.corpus_tag not in tags:
                tags.append(s.corpus_tag)
        return tuple(tags)

    @classmethod
    def from_csv(cls, path) -> "CorpusIndex":
        """Rows: speaker_id,gender,corpus_tag,recording_ref (one per recording)."""
        grouped: dict[tuple[str, str], dict] = {}
        with open(path, newline="", encoding="utf-8") as fh:
            for lineno, row in enumerate(csv.reader(fh), 1):
                if not row or row[0].startswith("#"):
                    continue
                if lineno == 1 and [c.strip().lower() for c in row[:3]] == ["speaker_id", "gender", "corpus_tag"]:
                    continue
                if len(row) < 4:
                    raise ValueError(f"{path}:{lineno}: expected 4 columns, got {len(row)}")
                sid, gender, tag, ref = (c.strip() for c in row[:4])
                entry = grouped.setdefault((tag, sid), {"gender": gender.upper(), "refs": []})
                if entry["gender"] != gender.upper():
                    raise ValueError(f"{path}:{lineno}: speaker {sid} listed with two genders")
                entry["refs"].append(ref)
        speakers = [
            SpeakerRecord(sid, info["gender"], tag, tuple(info["refs"]))
            for (tag, sid), info in grouped.items()
        ]
        return cls(tuple(speakers))


def balance_by_gender(idx: CorpusIndex, seed: int = 0) -> CorpusIndex:
    """Equal unique-speaker counts per gender, within each corpus tag.

    Excess speakers of the larger gender are excluded uniformly at random.

    Raises:
        EmptyGender: a corpus has speakers of only one gender.
    """
    rng = np.random.default_rng(seed)
    kept: list[SpeakerRecord] = []
    for tag in idx.corpus_tags:
        females = [s for s in idx.speakers if s.corpus_tag == tag and s.gender == "F"]
        males = [s for s in idx.speakers if s.corpus_tag == tag and s.gender == "M"]
        if not females or not males:
            raise EmptyGender(f"corpus {tag!r}: F={len(females)}, M={len(males)}")
        target = min(len(females), len(males))
        for group in (females, males):
            if len(group) > target:
                keep_ids = rng.choice(len(group), size=target, replace=False)
                group = [group[i] for i in sorted(keep_ids)]
            kept.extend(group)
    kept.sort(key=lambda s: (s.corpus_tag, s.gender, s.speaker_id))
    return CorpusIndex(tuple(kept))


def equalize_corpora(corpora: list[CorpusIndex], seed: int = 0) -> list[CorpusIndex]:
    """Cut every (already gender-balanced) corpus to the smallest one.

    Removal is random but keeps per-gender counts equal.
    """
    if not corpora:
        return []
    rng = np.random.default_rng(seed)
    per_gender_min = min(idx.count("F") for idx in corpora)
    out = []
    for idx in corpora:
        kept = []
        for gender in GENDERS:
            group = [s for s in idx.speakers if s.gender == gender]
            if len(group) > per_gender_min:
                keep_ids = rng.choice(len(group), size=per_gender_min, replace=False)
                group = [group[i] for i in sorted(keep_ids)]
            kept.extend(group)
        kept.sort(key=lambda s: (s.corpus_tag, s.gender, s.speaker_id))
        out.append(CorpusIndex(tuple(kept)))
    return out


def combine_corpora(corpora: list[CorpusIndex]) -> CorpusIndex:
    speakers = []
    for idx in corpora:
        speakers.extend(idx.speakers)
    return CorpusIndex(tuple(speakers))


def split_train_dev(idx: CorpusIndex, ratio: float = 0.8, seed: int = 0):
    """Speaker-disjoint split, stratified by (corpus, gender).

    Raises:
        TooFewSpeakers: fewer than 5 speakers of either gender.
    """
    for gender in GENDERS:
        if idx.count(gender) < 5:
            raise TooFewSpeakers(f"{idx.count(gender)} {gender} speakers < 5")
    rng = np.random.default_rng(seed)
    train, dev = [], []
    for tag in idx.corpus_tags:
        for gender in GENDERS:
            group = [s for s in idx.speakers if s.corpus_tag == tag and s.gender == gender]
            if not group:
                continue
            order = rng.permutation(len(group))
            n_train = int(round(ratio * len(group)))
            train.extend(group[i] for i in sorted(order[:n_train]))
            dev.extend(group[i] for i in sorted(order[n_train:]))
    train.sort(key=lambda s: (s.corpus_tag, s.gender, s.speaker_id))
    dev.sort(key=lambda s: (s.corpus_tag, s.gender, s.speaker_id))
    return CorpusIndex(tuple(train)), CorpusIndex(tuple(dev))


class MelStatsProvider:
    """Training features from precomputed log-Mel frames.

    A sample is the pooled statistics (per-band mean and std) of a random
    150-frame window, i.e. a random 1515 ms excerpt of the recording.
    """

    def __init__(self, tables: dict[str, MelFrames], n_frames: int = PATCH_FRAMES):
        if not tables:
            raise ValueError("empty feature table")
        bands = {mel.n_bands for mel in tables.values()}
        if len(bands) != 1:
            raise ValueError(f"inconsistent band counts: {sorted(bands)}")
        self.tables = tables
        self.n_frames = n_frames
        self.input_dim = 2 * bands.pop()

    def sample(self, recording_id: str, rng: np.random.Generator) -> np.ndarray:
        mel = self.tables[recording_id]
        if mel.n_frames < self.n_frames:
            raise SpeakerTooShort(
                f"recording {recording_id!r}: {mel.n_frames} frames < {self.n_frames}")
        start = int(rng.integers(0, mel.n_frames - self.n_frames + 1))
        return pooled_stats_embedding(mel.values[start: start + self.n_frames])

    def windows(self, recording_id: str, hop: int = DEFAULT_PATCH_HOP) -> np.ndarray:
        """All overlapping windows of a recording, for whole-recording scoring."""
        mel = self.tables[recording_id]
        if mel.n_frames < self.n_frames:
            raise SpeakerTooShort(f"recording {recording_id!r} too short")
        count = (mel.n_frames - self.n_frames) // hop + 1
        return np.stack([
            pooled_stats_embedding(mel.values[i * hop: i * hop + self.n_frames])
            for i in range(count)
        ])


class EmbeddingProvider:
    """Training features from an external per-recording embedding table."""

    def __init__(self, table: dict[str, np.ndarray]):
        if not table:
            raise ValueError("empty embedding table")
        dims = {v.shape[0] for v in table.values()}
        if len(dims) != 1:
            raise ValueError(f"inconsistent embedding dims: {sorted(dims)}")
        self.table = table
        self.input_dim = dims.pop()

    def sample(self, recording_id: str, rng: np.random.Generator) -> np.ndarray:
        return self.table[recording_id]

    def windows(self, recording_id: str, hop: int = DEFAULT_PATCH_HOP) -> np.ndarray:
        return self.table[recording_id][None, :]


@dataclass(frozen=True)
class EpochSample:
    """One excerpt per speaker, gender- and corpus-balanced."""

    x: np.ndarray
    y: np.ndarray          # 1.0 = female, 0.0 = male
    genders: np.ndarray
    corpora: np.ndarray
    speaker_ids: tuple[str, ...]


def sample_epoch(idx: CorpusIndex, provider, seed, epoch_no: int = 0) -> EpochSample:
    """Draw the epoch's batch: one random excerpt per unique speaker.

    A speaker whose recordings are all too short is skipped with a warning
    together with one random speaker of the other gender from the same
    corpus, so the batch stays balanced. Asserts exact gender and corpus
    balance before returning.
    """
    rng = np.random.default_rng([*_seed_tuple(seed), epoch_no])
    rows, labels, genders, corpora, kept_ids = [], [], [], [], []
    dropped: dict[tuple[str, str], int] = {}

    for s in idx.speakers:
        ref = s.recordings[int(rng.integers(0, len(s.recordings)))]
        try:
            feat = provider.sample(ref, rng)
        except SpeakerTooShort as exc:
            warnings.warn(f"skipping speaker {s.speaker_id}: {exc}")
            dropped[(s.corpus_tag, _other(s.gender))] = dropped.get((s.corpus_tag, _other(s.gender)), 0) + 1
            continue
        rows.append(feat)
        labels.append(1.0 if s.gender == "F" else 0.0)
        genders.append(s.gender)
        corpora.append(s.corpus_tag)
        kept_ids.append(s.speaker_id)

    # Re-balance: drop partners of the other gender in the same corpus.
    if dropped:
        remove = set()
        for (tag, gender), n in dropped.items():
            pool = [i for i, (g, c) in enumerate(zip(genders, corpora)) if g == gender and c == tag]
            chosen = rng.choice(len(pool), size=min(n, len(pool)), replace=False)
            remove.update(pool[i] for i in chosen)
        keep = [i for i in range(len(rows)) if i not in remove]
        rows = [rows[i] for i in keep]
        labels = [labels[i] for i in keep]
        genders = [genders[i] for i in keep]
        corpora = [corpora[i] for i in keep]
        kept_ids = [kept_ids[i] for i in keep]

    sample = EpochSample(
        x=np.asarray(rows), y=np.asarray(labels),
        genders=np.asarray(genders), corpora=np.asarray(corpora),
        speaker_ids=tuple(kept_ids),
    )
    _assert_balanced(sample)
    return sample


def _other(gender: str) -> str:
    return "M" if gender == "F" else "F"


def _seed_tuple(seed) -> list[int]:
    return [int(s) for s in (seed if isinstance(seed, (list, tuple)) else [seed])]


def _assert_balanced(sample: EpochSample) -> None:
    n_f = int((sample.genders == "F").sum())
    n_m = int((sample.genders == "M").sum())
    assert n_f == n_m, f"gender imbalance in epoch batch: F={n_f}, M={n_m}"
    tags, counts = np.unique(sample.corpora, return_counts=True)
    assert len(set(counts)) <= 1, f"corpus imbalance in epoch batch: {dict(zip(tags, counts))}"


def monitored_objective(losses, genders) -> float:
    """Early-stopping estimate: overall loss plus the absolute per-gender gap.

    Raises:
        EmptyGender: a gender missing from the development examples.
    """
    losses = np.asarray(losses, dtype=np.float64)
    genders = np.asarray(genders)
    f_mask = genders == "F"
    m_mask = genders == "M"
    if not f_mask.any() or not m_mask.any():
        raise EmptyGender("development set must contain both genders")
    return float(losses.mean() + abs(losses[m_mask].mean() - losses[f_mask].mean()))


@dataclass(frozen=True)
class TrainConfig:
    patience: int = 50
    max_epochs: int = 160
    n_seeds: int = 3
    learning_rate: float = 0.5
    base_seed: int = 0
    split_ratio: float = 0.8
    normalize_features: bool = True
    batch_rule: str = "one-excerpt-per-speaker"

    def __post_init__(self):
        if self.patience > self.max_epochs:
            raise ValueError("patience must be <= max_epochs")


@dataclass
class SeedRunLog:
    seed_index: int
    epochs: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    best_objective: float = np.inf
    aborted: str | None = None


@dataclass
class TrainResult:
    bundle: ModelBundle
    logs: list[SeedRunLog]
    best_seed_index: int

    def log_records(self) -> list[dict]:
        """Flat JSON-ready per-epoch records (training-log file format)."""
        records = []
        for log in self.logs:
            records.extend(log.epochs)
        return records


def train(arch: MlpSpec, train_idx: CorpusIndex, dev_idx: CorpusIndex,
          provider, cfg: TrainConfig | None = None) -> TrainResult:
    """Run the full training protocol and return the best model bundle.

    Raises:
        NonFiniteLoss: every initialization diverged.
    """
    cfg = cfg or TrainConfig()
    if provider.input_dim != arch.input_dim:
        raise ValueError(f"provider dim {provider.input_dim} != arch input {arch.input_dim}")

    dev = sample_epoch(dev_idx, provider, [cfg.base_seed, _DEV_STREAM])
    stats = sample_epoch(train_idx, provider, [cfg.base_seed, _STATS_STREAM])
    if cfg.normalize_features:
        mu = stats.x.mean(axis=0)
        sd = np.maximum(stats.x.std(axis=0), 1e-8)
    else:
        mu = np.zeros(arch.input_dim)
        sd = np.ones(arch.input_dim)
    dev_x = (dev.x - mu) / sd

    logs: list[SeedRunLog] = []
    nets: list[nn.MlpNetwork | None] = []
    for seed_index in range(cfg.n_seeds):
        log = SeedRunLog(seed_index=seed_index)
        net = nn.MlpNetwork([arch.input_dim, *arch.layer_sizes, 1],
                            rng=np.random.default_rng([cfg.base_seed, seed_index]))
        best_params = net.get_parameters()
        try:
            for epoch in range(1, cfg.max_epochs + 1):
                batch = sample_epoch(train_idx, provider, [cfg.base_seed, seed_index], epoch)
                loss, gw, gb = net.loss_and_gradients((batch.x - mu) / sd, batch.y)
                if not np.isfinite(loss):
                    raise NonFiniteLoss(f"training loss {loss} at epoch {epoch}")
                net.apply_gradients(gw, gb, cfg.learning_rate)

                dev_losses = nn.bce_loss(net.forward(dev_x), dev.y)
                if not np.isfinite(dev_losses).all():
                    raise NonFiniteLoss(f"non-finite dev loss at epoch {epoch}")
                objective = monitored_objective(dev_losses, dev.genders)
                log.epochs.append({
                    "seed": seed_index, "epoch": epoch,
                    "loss_all": float(dev_losses.mean()),
                    "loss_f": float(dev_losses[dev.genders == "F"].mean()),
                    "loss_m": float(dev_losses[dev.genders == "M"].mean()),
                    "objective": objective,
                })
                if objective < log.best_objective:
                    log.best_objective = objective
                    log.best_epoch = epoch
                    best_params = net.get_parameters()
                if epoch - log.best_epoch >= cfg.patience:
                    break
        except NonFiniteLoss as exc:
            log.aborted = str(exc)
            logs.append(log)
            nets.append(None)
            continue
        net.set_parameters(*best_params)
        logs.append(log)
        nets.append(net)

    viable = [i for i, n in enumerate(nets) if n is not None]
    if not viable:
        raise NonFiniteLoss("all seeds aborted with non-finite losses")
    best = min(viable, key=lambda i: logs[i].best_objective)

    extra = {}
    normalization = "none"
    if cfg.normalize_features:
        extra = {"feat_mu": mu, "feat_sd": sd}
        normalization = "zscore"
    n_bands = provider.input_dim // 2 if isinstance(provider, MelStatsProvider) else 24
    bundle = bundle_from_mlp_network(
        nets[best], arch,
        feature_config=FeatureConfig(n_bands=n_bands, normalization=normalization),
        metadata={
            "training_corpus": "+".join(train_idx.corpus_tags),
            "base_seed": cfg.base_seed,
            "seed_index": best,
            "best_epoch": logs[best].best_epoch,
            "best_objective": logs[best].best_objective,
            "epochs_run": len(logs[best].epochs),
        },
        extra_weights=extra,
    )
    return TrainResult(bundle=bundle, logs=logs, best_seed_index=best)


def run_protocol(arch: MlpSpec, corpora: list[CorpusIndex], provider,
                 cfg: TrainConfig | None = None):
    """Balance, equalize, merge, split, train. Returns (result, train, dev)."""
    cfg = cfg or TrainConfig()
    balanced = [balance_by_gender(idx, seed=cfg.base_seed) for idx in corpora]
    equalized = equalize_corpora(balanced, seed=cfg.base_seed)
    merged = combine_corpora(equalized)
    train_idx, dev_idx = split_train_dev(merged, ratio=cfg.split_ratio, seed=cfg.base_seed)
    result = train(arch, train_idx, dev_idx, provider, cfg)
    return result, train_idx, dev_idx
