"""Perceptual femininity from listener answer tables.

A speaker's perceived femininity percentage is the share of Female
answers plus half of the I-don't-know answers. Companion statistics:
per-category answer proportions and reaction times, a quadratic fit of
reaction time as a function of perceived femininity (listeners hesitate
longest near 50%), and a rank-sum test for comparing listener groups.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import DegenerateDesign, EmptyGroup, NoAnswers, UnknownSpeaker

ANSWERS = ("F", "M", "IDK")
CATEGORIES = ("CF", "CM", "TF")


@dataclass(frozen=True)
class AnswerRecord:
    """One listener judgment of one voice."""

    listener_id: str
    listener_gender: str      # F / M / other
    listener_age_band: str
    speaker_id: str
    answer: str               # F / M / IDK
    rt: float                 # seconds

    def __post_init__(self):
        if self.answer not in ANSWERS:
            raise ValueError(f"answer must be one of {ANSWERS}, got {self.answer!r}")
        if not self.rt > 0:
            raise ValueError(f"reaction time must be > 0, got {self.rt}")


@dataclass(frozen=True)
class SpeakerMeta:
    speaker_id: str
    category: str             # CF / CM / TF
    age: float

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValueError(f"category must be one of {CATEGORIES}, got {self.category!r}")
        if not 18 <= self.age <= 100:
            raise ValueError(f"age must be in [18, 100], got {self.age}")


def vfp_from_answers(answers) -> float:
    """Perceived femininity percent: 100*(F + IDK/2) / total.

    Raises:
        NoAnswers: empty answer list.
    """
    answers = list(answers)
    if not answers:
        raise NoAnswers("no answers for speaker")
    n_f = sum(1 for a in answers if a.answer == "F")
    n_idk = sum(1 for a in answers if a.answer == "IDK")
    return 100.0 * (n_f + 0.5 * n_idk) / len(answers)


@dataclass(frozen=True)
class CategoryStats:
    category: str
    n_answers: int
    pct_f: float
    pct_m: float
    pct_idk: float
    rt_mean: float
    rt_std: float
    vfp: float


def category_stats(answers, meta) -> tuple[list[CategoryStats], list[str]]:
    """Per-category answer proportions, reaction times, and pooled VFP.

    ``meta`` maps speaker_id to :class:`SpeakerMeta` (or is an iterable of
    them). Categories without answers are omitted with a warning string.

    Raises:
        UnknownSpeaker: an answer references a speaker without metadata.
    """
    if not isinstance(meta, dict):
        meta = {m.speaker_id: m for m in meta}
    by_cat: dict[str, list[AnswerRecord]] = {c: [] for c in CATEGORIES}
    for a in answers:
        if a.speaker_id not in meta:
            raise UnknownSpeaker(f"answer references unknown speaker {a.speaker_id!r}")
        by_cat[meta[a.speaker_id].category].append(a)

    rows, warnings = [], []
    for cat in CATEGORIES:
        group = by_cat[cat]
        if not group:
            warnings.append(f"no answers for category {cat}; row omitted")
            continue
        n = len(group)
        rts = np.array([a.rt for a in group])
        rows.append(CategoryStats(
            category=cat,
            n_answers=n,
            pct_f=100.0 * sum(a.answer == "F" for a in group) / n,
            pct_m=100.0 * sum(a.answer == "M" for a in group) / n,
            pct_idk=100.0 * sum(a.answer == "IDK" for a in group) / n,
            rt_mean=float(rts.mean()),
            rt_std=float(rts.std()),
            vfp=vfp_from_answers(group),
        ))
    return rows, warnings


@dataclass(frozen=True)
class ParabolaFit:
    """rt = a + b*v + c*v^2 with the vertex -b/(2c) when curvature exists."""

    a: float
    b: float
    c: float
    vertex: float | None


def fit_rt_parabola(points, curvature_tol: float = 1e-9) -> ParabolaFit:
    """Least-squares quadratic of mean reaction time against femininity.

    The abscissa is scaled to [0, 1] internally so the normal equations
    stay well conditioned; coefficients are reported on the raw scale.

    Raises:
        DegenerateDesign: fewer than 3 distinct abscissae.
    """
    pts = np.asarray(list(points), dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise DegenerateDesign("need >= 3 (vfp, rt) points")
    v, rt = pts[:, 0], pts[:, 1]
    if len(np.unique(v)) < 3:
        raise DegenerateDesign("need >= 3 distinct vfp values")

    vs = v / 100.0
    design = np.stack([np.ones_like(vs), vs, vs * vs], axis=1)
    coef, _, rank, _ = np.linalg.lstsq(design, rt, rcond=None)
    if rank < 3:
        raise DegenerateDesign("rank-deficient design")
    a, b, c = float(coef[0]), float(coef[1]) / 100.0, float(coef[2]) / 10000.0
    vertex = None
    if abs(c) > curvature_tol:
        vertex = -b / (2.0 * c)
    return ParabolaFit(a=a, b=b, c=c, vertex=vertex)


def wilcoxon_rank_sum(group_a, group_b) -> tuple[float, float]:
    """Mann-Whitney U for group_a with a two-sided normal-approximation p.

    Mid-ranks for ties; the variance carries the tie correction and the
    z statistic a continuity correction. U_a + U_b = n_a * n_b.

    Raises:
        EmptyGroup: either group is empty.
    """
    a = np.asarray(list(group_a), dtype=np.float64)
    b = np.asarray(list(group_b), dtype=np.float64)
    if len(a) == 0 or len(b) == 0:
        raise EmptyGroup("both groups must be non-empty")
    n_a, n_b = len(a), len(b)
    combined = np.concatenate([a, b])
    ranks = rankdata(combined)  # mid-ranks
    r_a = ranks[:n_a].sum()
    u_a = r_a - n_a * (n_a + 1) / 2.0

    n = n_a + n_b
    mu = n_a * n_b / 2.0
    _, tie_counts = np.unique(combined, return_counts=True)
    tie_term = float(np.sum(tie_counts ** 3 - tie_counts))
    var = n_a * n_b / 12.0 * ((n + 1) - tie_term / (n * (n - 1))) if n > 1 else 0.0
    if var <= 0:
        return float(u_a), 1.0

    diff = u_a - mu
    if diff > 0:
        diff -= 0.5
    elif diff < 0:
        diff += 0.5
    z = diff / math.sqrt(var)
    p = min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))
    return float(u_a), float(p)


def judgment_value(answer: str) -> float:
    """Numeric judgment: F=1, IDK=0.5, M=0."""
    return {"F": 1.0, "IDK": 0.5, "M": 0.0}[answer]


def listener_mean_judgments(answers) -> dict[str, list[float]]:
    """Per-listener mean judgment, grouped by listener gender."""
    per_listener: dict[str, list[float]] = {}
    gender_of: dict[str, str] = {}
    for a in answers:
        per_listener.setdefault(a.listener_id, []).append(judgment_value(a.answer))
        gender_of[a.listener_id] = a.listener_gender
    grouped: dict[str, list[float]] = {}
    for lid, values in per_listener.items():
        grouped.setdefault(gender_of[lid], []).append(float(np.mean(values)))
    return grouped


# --- CSV interfaces ----------------------------------------------------------

ANSWERS_HEADER = ["listener_id", "listener_gender", "listener_age_band",
                  "speaker_id", "answer", "rt_ms"]
SPEAKERS_HEADER = ["speaker_id", "category", "age"]


def load_answers(path) -> list[AnswerRecord]:
    """Answers CSV: listener_id,listener_gender,listener_age_band,speaker_id,answer,rt_ms."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or row[0].startswith("#"):
                continue
            if lineno == 1 and [c.strip().lower() for c in row] == ANSWERS_HEADER:
                continue
            if len(row) != 6:
                raise ValueError(f"{path}:{lineno}: expected 6 columns, got {len(row)}")
            try:
                out.append(AnswerRecord(
                    listener_id=row[0].strip(),
                    listener_gender=row[1].strip().upper(),
                    listener_age_band=row[2].strip(),
                    speaker_id=row[3].strip(),
                    answer=row[4].strip().upper(),
                    rt=float(row[5]) / 1000.0,
                ))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return out


def load_speakers(path) -> dict[str, SpeakerMeta]:
    """Speakers CSV: speaker_id,category,age."""
    out: dict[str, SpeakerMeta] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or row[0].startswith("#"):
                continue
            if lineno == 1 and [c.strip().lower() for c in row] == SPEAKERS_HEADER:
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
            try:
                meta = SpeakerMeta(row[0].strip(), row[1].strip().upper(), float(row[2]))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
            if meta.speaker_id in out:
                raise ValueError(f"{path}:{lineno}: duplicate speaker {meta.speaker_id!r}")
            out[meta.speaker_id] = meta
    return out
