"""Signature corpora: file formats, directory layout, synthetic generation.

Two on-disk trajectory formats are supported.

SVC2004 format
    First line: sample count N. Then exactly N lines of 7 whitespace
    separated numeric fields::

        X Y timestamp button azimuth altitude pressure

    Azimuth and altitude are parsed and discarded.  A sample is pen-down
    when its button status is nonzero.

Canonical format
    Header line ``x y t p d`` followed by one sample per line with those
    five columns; ``d`` is the pen-down flag and must be exactly 0 or 1.
    Floats are written with shortest round-trip precision so that a
    write/read cycle reproduces every field exactly.

A corpus on disk is laid out as ``<root>/<user>/{genuine,forgery}/*.txt``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

logger = logging.getLogger(__name__)

GENUINE = "genuine"
SKILLED_FORGERY = "skilled_forgery"
LABELS = (GENUINE, SKILLED_FORGERY)

# Coordinates, timestamps and pressures emitted by the synthetic generator
# are quantized to this grid so that adding a modest integer offset is exact
# in double precision (translation invariance then holds bit-for-bit).
_SYNTH_QUANTUM = 1.0 / 65536.0


class ParseError(ValueError):
    """A signature file does not match its declared format."""


class PenSample(NamedTuple):
    x: float
    y: float
    t: float
    pressure: float
    pen_down: bool


class Trajectory:
    """Time-ordered pen samples of one signature.

    Samples are stored as parallel arrays: float64 ``x``, ``y``, ``t``,
    ``pressure`` and boolean ``pen_down``.  At least two samples are
    required, ``t`` must be non-decreasing and pressures non-negative.
    """

    __slots__ = ("x", "y", "t", "pressure", "pen_down", "user_id", "label", "source")

    def __init__(self, x, y, t, pressure, pen_down,
                 user_id="anonymous", label=GENUINE, source=""):
        self.x = np.asarray(x, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.float64)
        self.t = np.asarray(t, dtype=np.float64)
        self.pressure = np.asarray(pressure, dtype=np.float64)
        self.pen_down = np.asarray(pen_down, dtype=bool)
        self.user_id = user_id
        self.label = label
        self.source = source
        n = len(self.x)
        for name in ("y", "t", "pressure", "pen_down"):
            if len(getattr(self, name)) != n:
                raise ValueError("sample arrays must have equal length")
        if n < 2:
            raise ValueError(f"a trajectory needs at least 2 samples, got {n}")
        if np.any(np.diff(self.t) < 0):
            raise ValueError("timestamps must be non-decreasing")
        if np.any(self.pressure < 0):
            raise ValueError("pressures must be non-negative")
        if not np.all(np.isfinite(self.x)) or not np.all(np.isfinite(self.y)) \
                or not np.all(np.isfinite(self.t)) or not np.all(np.isfinite(self.pressure)):
            raise ValueError("sample fields must be finite")
        if not user_id:
            raise ValueError("user_id must be non-empty")
        if label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {label!r}")

    def __len__(self):
        return len(self.x)

    def __getitem__(self, i) -> PenSample:
        return PenSample(float(self.x[i]), float(self.y[i]), float(self.t[i]),
                         float(self.pressure[i]), bool(self.pen_down[i]))

    @property
    def samples(self) -> list[PenSample]:
        return [self[i] for i in range(len(self))]

    @classmethod
    def from_samples(cls, samples, **meta) -> "Trajectory":
        cols = list(zip(*samples))
        return cls(cols[0], cols[1], cols[2], cols[3], cols[4], **meta)

    def with_meta(self, **meta) -> "Trajectory":
        """Copy of this trajectory with some metadata fields replaced."""
        kw = {"user_id": self.user_id, "label": self.label, "source": self.source}
        kw.update(meta)
        return Trajectory(self.x, self.y, self.t, self.pressure, self.pen_down, **kw)

    def equals(self, other) -> bool:
        """Exact field-for-field equality, metadata included."""
        return (
            np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.pressure, other.pressure)
            and np.array_equal(self.pen_down, other.pen_down)
            and (self.user_id, self.label, self.source)
            == (other.user_id, other.label, other.source)
        )

    def __repr__(self):
        return (f"Trajectory(n={len(self)}, user_id={self.user_id!r}, "
                f"label={self.label!r}, source={self.source!r})")


def _read_text(stream) -> str:
    if hasattr(stream, "read"):
        return stream.read()
    return stream


def _parse_float(token, lineno, path=""):
    try:
        return float(token)
    except ValueError:
        where = f"{path}:" if path else "line "
        raise ParseError(f"{where}{lineno}: non-numeric field {token!r}") from None


def parse_svc2004(stream, user_id="anonymous", label=GENUINE, source="") -> Trajectory:
    """Parse one SVC2004 signature file.

    ``stream`` is a string or a file-like object.  Errors name the
    offending 1-based line number.
    """
    text = _read_text(stream)
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParseError("line 1: empty file")
    try:
        declared = int(lines[0].split()[0])
    except (ValueError, IndexError):
        raise ParseError(f"line 1: malformed sample count {lines[0]!r}") from None
    if declared < 2:
        raise ParseError(f"line 1: sample count must be at least 2, got {declared}")
    if len(lines) - 1 != declared:
        raise ParseError(
            f"line 1: declared {declared} samples but file has {len(lines) - 1} data lines")
    samples = []
    for i, ln in enumerate(lines[1:], start=2):
        fields = ln.split()
        if len(fields) != 7:
            raise ParseError(f"line {i}: expected 7 fields, got {len(fields)}")
        vals = [_parse_float(f, i) for f in fields]
        x, y, t, button, _azimuth, _altitude, pressure = vals
        if pressure < 0:
            raise ParseError(f"line {i}: negative pressure {pressure}")
        samples.append(PenSample(x, y, t, pressure, button != 0))
    for i in range(1, len(samples)):
        if samples[i].t < samples[i - 1].t:
            raise ParseError(f"line {i + 2}: timestamp decreases")
    return Trajectory.from_samples(samples, user_id=user_id, label=label, source=source)


def parse_canonical(stream, user_id="anonymous", label=GENUINE, source="") -> Trajectory:
    """Parse one canonical-format signature file."""
    text = _read_text(stream)
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParseError("line 1: empty file")
    if lines[0].split() != ["x", "y", "t", "p", "d"]:
        raise ParseError(f"line 1: expected header 'x y t p d', got {lines[0]!r}")
    samples = []
    for i, ln in enumerate(lines[1:], start=2):
        fields = ln.split()
        if len(fields) != 5:
            raise ParseError(f"line {i}: expected 5 fields, got {len(fields)}")
        x = _parse_float(fields[0], i)
        y = _parse_float(fields[1], i)
        t = _parse_float(fields[2], i)
        p = _parse_float(fields[3], i)
        if fields[4] not in ("0", "1"):
            raise ParseError(f"line {i}: pen-down flag must be 0 or 1, got {fields[4]!r}")
        if p < 0:
            raise ParseError(f"line {i}: negative pressure {p}")
        samples.append(PenSample(x, y, t, p, fields[4] == "1"))
    if len(samples) < 2:
        raise ParseError(f"line {len(lines)}: need at least 2 samples, got {len(samples)}")
    for i in range(1, len(samples)):
        if samples[i].t < samples[i - 1].t:
            raise ParseError(f"line {i + 2}: timestamp decreases")
    return Trajectory.from_samples(samples, user_id=user_id, label=label, source=source)


def format_canonical(traj: Trajectory) -> str:
    """Serialize a trajectory to canonical format (exact round trip)."""
    out = ["x y t p d"]
    for i in range(len(traj)):
        out.append(f"{float(traj.x[i])!r} {float(traj.y[i])!r} "
                   f"{float(traj.t[i])!r} {float(traj.pressure[i])!r} "
                   f"{1 if traj.pen_down[i] else 0}")
    return "\n".join(out) + "\n"


_PARSERS = {"svc2004": parse_svc2004, "canonical": parse_canonical}


@dataclass
class UserSignatures:
    genuine: list = field(default_factory=list)
    skilled_forgeries: list = field(default_factory=list)


@dataclass
class Corpus:
    """Signatures grouped per user, plus any loader warnings."""

    users: dict = field(default_factory=dict)
    source: str = ""
    warnings: list = field(default_factory=list)

    def user_ids(self) -> list[str]:
        return sorted(self.users)

    def all_trajectories(self) -> list[Trajectory]:
        out = []
        for uid in self.user_ids():
            out.extend(self.users[uid].genuine)
            out.extend(self.users[uid].skilled_forgeries)
        return out

    def n_trajectories(self) -> int:
        return len(self.all_trajectories())


def load_corpus(root, layout="canonical", source=None) -> Corpus:
    """Load ``<root>/<user>/{genuine,forgery}/*.txt`` into a Corpus.

    Files that fail to parse are skipped with a warning collected on the
    returned corpus.  Users with fewer than 4 genuine signatures are kept
    but flagged, since the evaluation protocol will exclude them.
    """
    root = Path(root)
    if layout not in _PARSERS:
        raise ValueError(f"unknown layout {layout!r}, expected one of {sorted(_PARSERS)}")
    if not root.is_dir():
        raise FileNotFoundError(f"corpus root {root} does not exist")
    parse = _PARSERS[layout]
    src = root.name if source is None else source
    corpus = Corpus(source=src)
    for user_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        uid = user_dir.name
        sigs = UserSignatures()
        for sub, label, bucket in (
            ("genuine", GENUINE, sigs.genuine),
            ("forgery", SKILLED_FORGERY, sigs.skilled_forgeries),
        ):
            subdir = user_dir / sub
            if not subdir.is_dir():
                continue
            for f in sorted(subdir.glob("*.txt")):
                try:
                    bucket.append(parse(f.read_text(), user_id=uid, label=label, source=src))
                except (ParseError, ValueError, OSError) as exc:
                    msg = f"skipped {f}: {exc}"
                    corpus.warnings.append(msg)
                    logger.warning(msg)
        if sigs.genuine or sigs.skilled_forgeries:
            corpus.users[uid] = sigs
            if len(sigs.genuine) < 4:
                msg = (f"user {uid} has {len(sigs.genuine)} genuine signatures; "
                       "the evaluation protocol needs at least 4")
                corpus.warnings.append(msg)
                logger.warning(msg)
    if corpus.n_trajectories() == 0:
        raise ValueError(f"no signatures could be loaded from {root}")
    return corpus


def save_corpus(corpus: Corpus, root) -> list[Path]:
    """Write a corpus in canonical format, returning the files created."""
    root = Path(root)
    written = []
    for uid in corpus.user_ids():
        sigs = corpus.users[uid]
        for sub, trajs in (("genuine", sigs.genuine), ("forgery", sigs.skilled_forgeries)):
            d = root / uid / sub
            d.mkdir(parents=True, exist_ok=True)
            for i, traj in enumerate(trajs):
                f = d / f"{i:03d}.txt"
                f.write_text(format_canonical(traj))
                written.append(f)
    return written


# ---------------------------------------------------------------------------
# Synthetic corpus
#
# Every user is a latent pen model: x(t) and y(t) are two-term sinusoids and
# pressure is a smooth positive profile.  Genuine signatures evaluate the
# latent curve and add small i.i.d. jitter; skilled forgeries perturb the
# latent parameters by a larger relative amount first.  All randomness flows
# through per-purpose child generators seeded as [seed, user, stream, index]
# so any single trajectory can be regenerated in isolation.
# ---------------------------------------------------------------------------

def _user_latents(rng) -> dict:
    # left-to-right pen drift plus two oscillation terms per axis gives a
    # cursive look: wide, loopy, and clearly different from user to user
    lat = {
        "cx": rng.uniform(80.0, 120.0),
        "cy": rng.uniform(80.0, 120.0),
        "span": rng.uniform(60.0, 110.0),
        "a1x": rng.uniform(8.0, 18.0),
        "f1x": rng.uniform(1.5, 3.5),
        "ph1x": rng.uniform(0.0, 2.0 * np.pi),
        "a2x": rng.uniform(3.0, 8.0),
        "f2x": rng.uniform(4.0, 9.0),
        "ph2x": rng.uniform(0.0, 2.0 * np.pi),
        "a1y": rng.uniform(10.0, 22.0),
        "f1y": rng.uniform(1.5, 3.5),
        "ph1y": rng.uniform(0.0, 2.0 * np.pi),
        "a2y": rng.uniform(3.0, 9.0),
        "f2y": rng.uniform(4.0, 9.0),
        "ph2y": rng.uniform(0.0, 2.0 * np.pi),
        "p0": rng.uniform(0.45, 0.7),
        "pa": rng.uniform(0.1, 0.3),
        "pb": rng.uniform(0.05, 0.15),
        "fp": rng.uniform(1.0, 3.0),
        "php": rng.uniform(0.0, 2.0 * np.pi),
        "gap_at": rng.uniform(0.3, 0.7),
        "base_n": int(rng.integers(90, 186)),
    }
    return lat


_PERTURB_MULTIPLICATIVE = ("span", "a1x", "f1x", "a2x", "f2x", "a1y", "f1y",
                           "a2y", "f2y", "p0", "pa", "pb", "fp")
_PERTURB_ADDITIVE = ("ph1x", "ph2x", "ph1y", "ph2y", "php")


def _perturb_latents(lat: dict, rng, amount: float) -> dict:
    out = dict(lat)
    for key in _PERTURB_MULTIPLICATIVE:
        out[key] = lat[key] * (1.0 + amount * rng.standard_normal())
    for key in _PERTURB_ADDITIVE:
        out[key] = lat[key] + amount * rng.standard_normal()
    return out


def _latent_curve(lat: dict, s: np.ndarray):
    """Evaluate the latent pen model at curve positions s in [0, 1]."""
    two_pi = 2.0 * np.pi
    x = (lat["cx"] + lat["span"] * s
         + lat["a1x"] * np.sin(two_pi * lat["f1x"] * s + lat["ph1x"])
         + lat["a2x"] * np.sin(two_pi * lat["f2x"] * s + lat["ph2x"]))
    y = (lat["cy"]
         + lat["a1y"] * np.sin(two_pi * lat["f1y"] * s + lat["ph1y"])
         + lat["a2y"] * np.sin(two_pi * lat["f2y"] * s + lat["ph2y"]))
    p = (lat["p0"]
         + lat["pa"] * np.sin(np.pi * s)
         + lat["pb"] * np.sin(two_pi * lat["fp"] * s + lat["php"]))
    return x, y, np.clip(p, 0.05, None)


def _quantize(v: np.ndarray) -> np.ndarray:
    return np.round(v / _SYNTH_QUANTUM) * _SYNTH_QUANTUM


def _render_trajectory(lat: dict, rng, jitter: float, **meta) -> Trajectory:
    n = int(np.clip(lat["base_n"] + rng.integers(-5, 6), 80, 200))
    dt = rng.uniform(4.0, 12.0)
    s = np.linspace(0.0, 1.0, n)
    x, y, p = _latent_curve(lat, s)
    amp = 30.0
    x = x + jitter * amp * rng.standard_normal(n)
    y = y + jitter * amp * rng.standard_normal(n)
    p = np.clip(p + 0.3 * jitter * rng.standard_normal(n), 0.02, None)
    t = dt * np.arange(n)
    pen_down = np.ones(n, dtype=bool)
    # a short mid-air gap splits the signature into two strokes
    gap = (s >= lat["gap_at"]) & (s < lat["gap_at"] + 0.04)
    if gap.any() and not gap.all():
        pen_down[gap] = False
        p[gap] = 0.0
    return Trajectory(_quantize(x), _quantize(y), _quantize(t),
                      _quantize(p), pen_down, **meta)


def generate_synthetic_corpus(seed: int, n_users: int, n_genuine: int, n_forgery: int,
                              genuine_jitter: float = 0.008,
                              forgery_perturbation: float = 0.08) -> Corpus:
    """Deterministic synthetic corpus of plausible pen trajectories.

    Genuine signatures are the user's latent curve plus i.i.d. jitter of
    relative magnitude ``genuine_jitter``; skilled forgeries perturb the
    latent parameters by the larger relative ``forgery_perturbation``
    before rendering.  Identical arguments produce identical corpora.
    """
    if n_users < 1 or n_genuine < 1 or n_forgery < 0:
        raise ValueError("need n_users >= 1, n_genuine >= 1, n_forgery >= 0")
    source = f"synthetic-seed{seed}"
    corpus = Corpus(source=source)
    for u in range(n_users):
        uid = f"user{u:03d}"
        lat = _user_latents(np.random.default_rng([seed, u, 0]))
        sigs = UserSignatures()
        for j in range(n_genuine):
            sigs.genuine.append(_render_trajectory(
                lat, np.random.default_rng([seed, u, 1, j]), genuine_jitter,
                user_id=uid, label=GENUINE, source=source))
        for j in range(n_forgery):
            forged = _perturb_latents(lat, np.random.default_rng([seed, u, 2, j]),
                                      forgery_perturbation)
            sigs.skilled_forgeries.append(_render_trajectory(
                forged, np.random.default_rng([seed, u, 3, j]), genuine_jitter,
                user_id=uid, label=SKILLED_FORGERY, source=source))
        corpus.users[uid] = sigs
    return corpus
