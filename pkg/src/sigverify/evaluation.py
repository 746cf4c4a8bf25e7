"""Verification protocol, error-rate metrics and the full experiment.

Scores follow the one-class convention: smaller means more genuine-like,
and a signature is accepted when its score is at or below the threshold.
So at a threshold t the false rejection rate is the fraction of genuine
scores above t and the false acceptance rate is the fraction of forgery
scores at or below t.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .dataset import Corpus
from .descriptor import DescriptorModel, describe
from .oneclass import fit_user_model, score

logger = logging.getLogger(__name__)

LABEL_GENUINE = "genuine"
LABEL_SKILLED = "skilled"
LABEL_RANDOM = "random"


@dataclass
class ScoreSet:
    genuine: np.ndarray
    forgery: np.ndarray
    user_id: str = ""

    def __post_init__(self):
        self.genuine = np.asarray(self.genuine, dtype=np.float64)
        self.forgery = np.asarray(self.forgery, dtype=np.float64)
        if self.genuine.size == 0 or self.forgery.size == 0:
            raise ValueError("a score set needs both genuine and forgery scores")
        if not (np.all(np.isfinite(self.genuine)) and np.all(np.isfinite(self.forgery))):
            raise ValueError("scores must be finite")


@dataclass
class RocCurve:
    far: np.ndarray
    frr: np.ndarray
    thresholds: np.ndarray

    def points(self):
        return list(zip(self.far, self.frr, self.thresholds))


@dataclass
class ProtocolSplit:
    train_genuine: list
    test_genuine: list
    skilled_forgeries: list
    random_forgeries: list


@dataclass
class UserResult:
    eer: float
    auc: float
    n_genuine_test: int
    n_forgery_test: int
    eer_skilled: float
    eer_random: float


@dataclass
class EvalReport:
    per_user: dict
    mean_eer: float
    mean_auc: float
    pooled_eer: float
    mean_eer_skilled: float
    mean_eer_random: float
    fold_count: int
    config: dict
    excluded_users: list = field(default_factory=list)
    score_rows: list = field(default_factory=list)  # (user, fold, label, score)
    per_user_scores: dict = field(default_factory=dict)


def _user_rng(seed: int, user_id: str):
    digest = hashlib.sha256(user_id.encode("utf-8")).digest()
    return np.random.default_rng([seed, int.from_bytes(digest[:8], "little")])


def split_protocol(corpus: Corpus, fold: int, k: int = 4, seed: int = 0):
    """Per-user train/test split for one fold of the k-fold protocol.

    Each user's genuine signatures are shuffled once (deterministically
    per user and seed, independent of the fold) and partitioned into k
    nearly equal blocks; block ``fold`` trains the model and the rest is
    the genuine test set.  The forgery test set is the user's skilled
    forgeries plus every other user's genuine signatures.  Users with
    fewer than k genuine signatures are excluded with a warning.

    Returns (splits, excluded) where splits maps user_id to a
    ProtocolSplit.
    """
    if k < 2:
        raise ValueError(f"need at least 2 folds, got k={k}")
    if not 0 <= fold < k:
        raise ValueError(f"fold must lie in [0, {k}), got {fold}")
    excluded = []
    splits = {}
    for uid in corpus.user_ids():
        genuine = corpus.users[uid].genuine
        if len(genuine) < k:
            excluded.append(uid)
            logger.warning("user %s has %d genuine signatures, fewer than k=%d; "
                           "excluded from the protocol", uid, len(genuine), k)
            continue
        order = _user_rng(seed, uid).permutation(len(genuine))
        sizes = [len(genuine) // k + (1 if b < len(genuine) % k else 0)
                 for b in range(k)]
        blocks, at = [], 0
        for size in sizes:
            blocks.append([genuine[i] for i in order[at:at + size]])
            at += size
        train = blocks[fold]
        test = [t for b, block in enumerate(blocks) if b != fold for t in block]
        splits[uid] = ProtocolSplit(train_genuine=train, test_genuine=test,
                                    skilled_forgeries=list(corpus.users[uid].skilled_forgeries),
                                    random_forgeries=[])
    for uid in splits:
        splits[uid].random_forgeries = [
            t for other in corpus.user_ids() if other != uid
            for t in corpus.users[other].genuine]
    return splits, excluded


def roc(scores: ScoreSet) -> RocCurve:
    """Operating points at midpoints between consecutive distinct scores.

    One threshold below the minimum and one above the maximum complete
    the curve, so it always starts at (far 0, frr 1) and ends at
    (far 1, frr 0).  Thresholds are strictly increasing; far is
    non-decreasing and frr non-increasing along the curve.
    """
    pooled = np.unique(np.concatenate([scores.genuine, scores.forgery]))
    mids = (pooled[:-1] + pooled[1:]) / 2.0
    thresholds = np.concatenate([[pooled[0] - 1.0], mids, [pooled[-1] + 1.0]])
    genuine = np.sort(scores.genuine)
    forgery = np.sort(scores.forgery)
    accepted_genuine = np.searchsorted(genuine, thresholds, side="right")
    accepted_forgery = np.searchsorted(forgery, thresholds, side="right")
    # single integer-count divisions keep the rates exact rationals
    frr = (genuine.size - accepted_genuine) / genuine.size
    far = accepted_forgery / forgery.size
    return RocCurve(far=far, frr=frr, thresholds=thresholds)


def eer(curve: RocCurve) -> float:
    """Equal error rate of a ROC curve.

    If an operating point has far == frr exactly, its rate is returned
    (the smallest threshold wins ties); otherwise the rate is linearly
    interpolated between the two points where far - frr changes sign.
    """
    diff = curve.far - curve.frr
    exact = np.flatnonzero(diff == 0)
    if exact.size:
        return float(curve.far[exact[0]])
    sign_change = np.flatnonzero((diff[:-1] < 0) & (diff[1:] > 0))
    if sign_change.size == 0:
        raise ValueError("ROC curve has no far/frr crossing")
    i = int(sign_change[0])
    fa, fb = curve.far[i], curve.far[i + 1]
    ra, rb = curve.frr[i], curve.frr[i + 1]
    s = (ra - fa) / ((fb - fa) - (rb - ra))
    return float(fa + s * (fb - fa))


def auc(scores: ScoreSet) -> float:
    """P(genuine score < forgery score) + 0.5 P(tie), by rank statistic."""
    n_g, n_f = scores.genuine.size, scores.forgery.size
    ranks = rankdata(np.concatenate([scores.genuine, scores.forgery]))
    forgery_rank_sum = float(ranks[n_g:].sum())
    return (forgery_rank_sum - n_f * (n_f + 1) / 2.0) / (n_g * n_f)


def _nanmean(values) -> float:
    values = [v for v in values if not np.isnan(v)]
    return float(np.mean(values)) if values else float("nan")


def run_experiment(corpus: Corpus, model: DescriptorModel, k: int = 4,
                   reg: float = 0.9, seed: int = 0,
                   describe_fn=None) -> EvalReport:
    """Full k-fold verification experiment over a labelled corpus.

    Every trajectory is described once.  For each fold and user a
    one-class model is fitted on the training descriptors and scores all
    test genuine signatures, the user's skilled forgeries and every other
    user's genuine signatures (random forgeries).  Scores pool across
    folds per user; the report carries per-user EER/AUC, their means, the
    forgery-type subsets, and a secondary EER computed with one global
    pooled threshold.
    """
    if describe_fn is None:
        describe_fn = describe
    overlap = set(model.train_sources) & {corpus.source}
    if overlap:
        logger.warning("evaluation corpus shares source tags %s with the "
                       "descriptor training set", sorted(overlap))

    genuine_desc, skilled_desc = {}, {}
    for uid in corpus.user_ids():
        genuine_desc[uid] = [describe_fn(t, model) for t in corpus.users[uid].genuine]
        skilled_desc[uid] = [describe_fn(t, model)
                             for t in corpus.users[uid].skilled_forgeries]
    index_of = {uid: {id(t): i for i, t in enumerate(corpus.users[uid].genuine)}
                for uid in corpus.user_ids()}

    rows = []
    excluded_all = []
    for fold in range(k):
        splits, excluded = split_protocol(corpus, fold, k, seed)
        excluded_all = excluded
        for uid, split in sorted(splits.items()):
            train = [genuine_desc[uid][index_of[uid][id(t)]]
                     for t in split.train_genuine]
            user_model = fit_user_model(train, reg=reg, user_id=uid)
            for t in split.test_genuine:
                s = score(user_model, genuine_desc[uid][index_of[uid][id(t)]])
                rows.append((uid, fold, LABEL_GENUINE, s))
            for i, _ in enumerate(split.skilled_forgeries):
                rows.append((uid, fold, LABEL_SKILLED,
                             score(user_model, skilled_desc[uid][i])))
            for t in split.random_forgeries:
                other = t.user_id
                s = score(user_model, genuine_desc[other][index_of[other][id(t)]])
                rows.append((uid, fold, LABEL_RANDOM, s))

    grouped = {}
    for uid, _fold, label, s in rows:
        grouped.setdefault(uid, {LABEL_GENUINE: [], LABEL_SKILLED: [],
                                 LABEL_RANDOM: []})[label].append(s)
    per_user = {}
    per_user_scores = {}
    for uid in sorted(grouped):
        gen = np.array(grouped[uid][LABEL_GENUINE])
        skl = np.array(grouped[uid][LABEL_SKILLED])
        rnd = np.array(grouped[uid][LABEL_RANDOM])
        forg = np.concatenate([skl, rnd])
        if gen.size == 0 or forg.size == 0:
            logger.warning("user %s has no reportable score set; skipped", uid)
            continue
        scores = ScoreSet(genuine=gen, forgery=forg, user_id=uid)
        per_user_scores[uid] = scores
        eer_sk = eer(roc(ScoreSet(gen, skl, uid))) if skl.size else float("nan")
        eer_rn = eer(roc(ScoreSet(gen, rnd, uid))) if rnd.size else float("nan")
        per_user[uid] = UserResult(eer=eer(roc(scores)), auc=auc(scores),
                                   n_genuine_test=gen.size,
                                   n_forgery_test=forg.size,
                                   eer_skilled=eer_sk, eer_random=eer_rn)

    if not per_user:
        raise ValueError("no user produced a reportable score set")
    all_gen = np.array([r[3] for r in rows if r[2] == LABEL_GENUINE])
    all_forg = np.array([r[3] for r in rows if r[2] != LABEL_GENUINE])
    pooled = eer(roc(ScoreSet(all_gen, all_forg, "pooled")))
    return EvalReport(
        per_user=per_user,
        mean_eer=float(np.mean([u.eer for u in per_user.values()])),
        mean_auc=float(np.mean([u.auc for u in per_user.values()])),
        pooled_eer=pooled,
        mean_eer_skilled=_nanmean([u.eer_skilled for u in per_user.values()]),
        mean_eer_random=_nanmean([u.eer_random for u in per_user.values()]),
        fold_count=k,
        config={"k": k, "reg": reg, "seed": seed, "hidden": model.hidden,
                "source": corpus.source},
        excluded_users=excluded_all,
        score_rows=rows,
        per_user_scores=per_user_scores,
    )


# -- deterministic text renderings -------------------------------------------

def format_report(report: EvalReport) -> str:
    lines = ["signature verification report"]
    for key in sorted(report.config):
        lines.append(f"config {key} = {report.config[key]}")
    if report.excluded_users:
        lines.append("excluded users: " + " ".join(report.excluded_users))
    lines.append("")
    lines.append(f"{'user':<12} {'eer':>8} {'auc':>8} {'eer_skilled':>12} "
                 f"{'eer_random':>11} {'n_gen':>6} {'n_forg':>7}")
    for uid in sorted(report.per_user):
        u = report.per_user[uid]
        lines.append(f"{uid:<12} {u.eer:8.4f} {u.auc:8.4f} {u.eer_skilled:12.4f} "
                     f"{u.eer_random:11.4f} {u.n_genuine_test:6d} "
                     f"{u.n_forgery_test:7d}")
    lines.append("")
    lines.append(f"mean eer          = {report.mean_eer:.6f}")
    lines.append(f"mean auc          = {report.mean_auc:.6f}")
    lines.append(f"mean eer skilled  = {report.mean_eer_skilled:.6f}")
    lines.append(f"mean eer random   = {report.mean_eer_random:.6f}")
    lines.append(f"pooled-threshold eer = {report.pooled_eer:.6f} "
                 "(secondary; one global threshold)")
    return "\n".join(lines) + "\n"


def scores_csv(report: EvalReport) -> str:
    lines = ["user_id,fold,label,score"]
    for uid, fold, label, s in report.score_rows:
        lines.append(f"{uid},{fold},{label},{s!r}")
    return "\n".join(lines) + "\n"


def roc_csv(curve: RocCurve) -> str:
    lines = ["far,frr,threshold"]
    for fa, rr, th in zip(curve.far, curve.frr, curve.thresholds):
        lines.append(f"{float(fa)!r},{float(rr)!r},{float(th)!r}")
    return "\n".join(lines) + "\n"
