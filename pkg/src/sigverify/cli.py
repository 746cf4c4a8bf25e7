"""Command line interface.

Subcommands: ``synth``, ``learn-descriptor``, ``enroll``, ``verify``,
``evaluate``.  Every run parameter lives in a flat key=value namespace
(see ``DEFAULTS``); values come from built-in defaults, then an optional
``--config`` file of ``key = value`` lines (``#`` starts a comment),
then repeated ``--set key=value`` overrides, then dedicated flags such
as ``--seed``.  Unknown keys are rejected.  The effective configuration
is echoed to stderr at the start of every command.

Exit codes: 0 success (or: signature accepted), 2 signature rejected,
1 any error.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .autoencoder import AeConfig
from .dataset import generate_synthetic_corpus, load_corpus, save_corpus, _PARSERS
from .descriptor import describe, load_model, save_model, train_descriptor
from .evaluation import format_report, roc, roc_csv, run_experiment, scores_csv
from .oneclass import (calibrate_threshold, fit_user_model, load_user_model,
                       save_user_model, score, verify)
from .patches import PatchConfig
from .preprocess import PreprocessConfig
from .whitening import WhitenConfig


def _bool(s: str) -> bool:
    if s not in ("true", "false"):
        raise ValueError(f"expected true or false, got {s!r}")
    return s == "true"


DEFAULTS = {
    "seed": (int, 0),
    "corpus.layout": (str, "canonical"),
    "preprocess.canvas": (int, 101),
    "preprocess.smooth": (_bool, True),
    "preprocess.spline_points_per_segment": (int, 4),
    "preprocess.cov_epsilon": (float, 1e-9),
    "patch.size": (int, 10),
    "patch.stride": (int, 5),
    "patch.train_count": (int, 100_000),
    "patch.skip_blank": (_bool, True),
    "patch.blank_threshold": (float, 0.0),
    "whiten.epsilon": (float, 0.01),
    "whiten.retained_variance": (float, 0.99),
    "whiten.mode": (str, "pca"),
    "ae.hidden": (int, 64),
    "ae.weight_decay": (float, 3e-3),
    "ae.sparsity_weight": (float, 3.0),
    "ae.sparsity_target": (float, 0.05),
    "ae.max_iter": (int, 200),
    "ae.memory": (int, 10),
    "ae.grad_tol": (float, 1e-5),
    "ae.seed": (int, 0),
    "oneclass.reg": (float, 0.9),
    "oneclass.quantile": (float, 1.0),
    "eval.folds": (int, 4),
    "synth.users": (int, 10),
    "synth.genuine": (int, 10),
    "synth.forgery": (int, 5),
    "synth.genuine_jitter": (float, 0.008),
    "synth.forgery_perturbation": (float, 0.08),
}


class RunConfig:
    def __init__(self):
        self.values = {key: default for key, (_, default) in DEFAULTS.items()}

    def set(self, key: str, raw: str):
        if key not in DEFAULTS:
            raise ValueError(f"unknown configuration key {key!r}")
        parse = DEFAULTS[key][0]
        try:
            self.values[key] = parse(raw)
        except ValueError as exc:
            raise ValueError(f"bad value for {key}: {exc}") from None

    def load_file(self, path: Path):
        try:
            text = path.read_text()
        except OSError as exc:
            raise ValueError(f"cannot read config file: {exc}") from None
        for i, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{i}: expected 'key = value', got {line!r}")
            self.set(key.strip(), value.strip())

    def __getitem__(self, key):
        return self.values[key]

    def echo(self, stream=None):
        stream = sys.stderr if stream is None else stream
        for key in sorted(self.values):
            value = self.values[key]
            if isinstance(value, bool):
                value = "true" if value else "false"
            print(f"config {key} = {value}", file=stream)

    def preprocess_cfg(self) -> PreprocessConfig:
        return PreprocessConfig(
            canvas=self["preprocess.canvas"],
            smooth=self["preprocess.smooth"],
            spline_points_per_segment=self["preprocess.spline_points_per_segment"],
            cov_epsilon=self["preprocess.cov_epsilon"])

    def patch_cfg(self) -> PatchConfig:
        return PatchConfig(
            size=self["patch.size"], stride=self["patch.stride"],
            train_count=self["patch.train_count"],
            skip_blank=self["patch.skip_blank"],
            blank_threshold=self["patch.blank_threshold"])

    def whiten_cfg(self) -> WhitenConfig:
        return WhitenConfig(
            epsilon=self["whiten.epsilon"],
            retained_variance=self["whiten.retained_variance"],
            mode=self["whiten.mode"])

    def ae_cfg(self) -> AeConfig:
        return AeConfig(
            hidden=self["ae.hidden"], weight_decay=self["ae.weight_decay"],
            sparsity_weight=self["ae.sparsity_weight"],
            sparsity_target=self["ae.sparsity_target"],
            max_iter=self["ae.max_iter"], memory=self["ae.memory"],
            grad_tol=self["ae.grad_tol"], seed=self["ae.seed"])


def _build_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        cfg.load_file(Path(args.config))
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"--set expects key=value, got {item!r}")
        cfg.set(key.strip(), value.strip())
    if args.seed is not None:
        cfg.values["seed"] = args.seed
    cfg.echo()
    return cfg


def _require_new(path: Path, force: bool, what: str):
    if path.exists() and not force:
        raise ValueError(f"{what} {path} already exists (use --force to overwrite)")


def cmd_synth(args) -> int:
    cfg = _build_config(args)
    out = Path(args.out)
    if out.exists() and any(out.iterdir()) and not args.force:
        raise ValueError(f"output directory {out} is not empty "
                         "(use --force to write anyway)")
    corpus = generate_synthetic_corpus(
        cfg["seed"], cfg["synth.users"], cfg["synth.genuine"],
        cfg["synth.forgery"], genuine_jitter=cfg["synth.genuine_jitter"],
        forgery_perturbation=cfg["synth.forgery_perturbation"])
    written = save_corpus(corpus, out)
    print(f"wrote {len(written)} signature files for "
          f"{len(corpus.users)} users under {out}")
    return 0


def _load_corpus_arg(args, cfg):
    corpus = load_corpus(Path(args.corpus), layout=cfg["corpus.layout"])
    for w in corpus.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return corpus


def cmd_learn_descriptor(args) -> int:
    cfg = _build_config(args)
    out = Path(args.out)
    _require_new(out, args.force, "model file")
    corpus = _load_corpus_arg(args, cfg)
    unlabeled = corpus.all_trajectories()
    started = time.perf_counter()
    model = train_descriptor(unlabeled, pre_cfg=cfg.preprocess_cfg(),
                             patch_cfg=cfg.patch_cfg(),
                             whiten_cfg=cfg.whiten_cfg(), ae_cfg=cfg.ae_cfg(),
                             seed=cfg["seed"])
    elapsed = time.perf_counter() - started
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    if model.ae.line_search_failed:
        print("warning: line search failed before the iteration budget; "
              "the model is the last accepted iterate", file=sys.stderr)
    print(f"trained on {len(unlabeled)} signatures: whitened patch dim "
          f"{model.whitening.output_dim}, hidden {model.hidden}, "
          f"final cost {model.ae.final_cost:.6f}, "
          f"{model.ae.n_iter} iterations, {elapsed:.1f}s")
    print(f"saved descriptor model to {out}")
    return 0


def cmd_enroll(args) -> int:
    cfg = _build_config(args)
    model = load_model(Path(args.model))
    corpus = _load_corpus_arg(args, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    enrolled, skipped, failed = 0, 0, 0
    for uid in corpus.user_ids():
        genuine = corpus.users[uid].genuine
        target = out / f"{uid}.usermodel"
        if target.exists() and not args.force:
            skipped += 1
            print(f"warning: {target} exists, skipping {uid} "
                  "(use --force to re-enroll)", file=sys.stderr)
            continue
        try:
            if not genuine:
                raise ValueError("no genuine signatures")
            descs = [describe(t, model) for t in genuine]
            user_model = fit_user_model(descs, reg=cfg["oneclass.reg"], user_id=uid)
            train_scores = [score(user_model, d) for d in descs]
            calibrate_threshold(user_model, train_scores, cfg["oneclass.quantile"])
            save_user_model(user_model, target)
            enrolled += 1
            print(f"enrolled {uid}: {len(descs)} genuine signatures, "
                  f"threshold {user_model.threshold:.6f}")
        except (ValueError, OSError) as exc:
            failed += 1
            print(f"warning: could not enroll {uid}: {exc}", file=sys.stderr)
    print(f"enrolled {enrolled} users into {out} ({skipped} already present)")
    if enrolled == 0 and skipped == 0:
        raise ValueError(f"no user could be enrolled ({failed} failures)")
    return 0


def cmd_verify(args) -> int:
    cfg = _build_config(args)
    model = load_model(Path(args.model))
    user_file = Path(args.user_models) / f"{args.user}.usermodel"
    if not user_file.is_file():
        raise ValueError(f"no enrolled model for user {args.user!r} at {user_file}")
    user_model = load_user_model(user_file)
    if user_model.dim != model.hidden:
        raise ValueError(
            f"user model dimension {user_model.dim} does not match "
            f"descriptor hidden size {model.hidden}")
    sig_path = Path(args.signature)
    try:
        text = sig_path.read_text()
    except OSError as exc:
        raise ValueError(f"cannot read signature file: {exc}") from None
    traj = _PARSERS[cfg["corpus.layout"]](text, user_id=args.user)
    desc = describe(traj, model)
    accepted, s = verify(user_model, desc)
    word = "accept" if accepted else "reject"
    print(f"{word} score={s:.9g} threshold={user_model.threshold:.9g}")
    return 0 if accepted else 2


def cmd_evaluate(args) -> int:
    cfg = _build_config(args)
    model = load_model(Path(args.model))
    corpus = _load_corpus_arg(args, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    report = run_experiment(corpus, model, k=cfg["eval.folds"],
                            reg=cfg["oneclass.reg"], seed=cfg["seed"])
    (out / "report.txt").write_text(format_report(report))
    (out / "scores.csv").write_text(scores_csv(report))
    for uid, scores in sorted(report.per_user_scores.items()):
        (out / f"roc_{uid}.csv").write_text(roc_csv(roc(scores)))
    print(f"mean EER {report.mean_eer:.6f}  mean AUC {report.mean_auc:.6f}  "
          f"pooled EER {report.pooled_eer:.6f}  "
          f"({time.perf_counter() - started:.1f}s)")
    print(f"report and score dumps written to {out}")
    return 0


class _Parser(argparse.ArgumentParser):
    # usage problems are errors, not "reject" (exit code 2 is taken)
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _common(sub):
    sub.add_argument("--config", help="key = value configuration file")
    sub.add_argument("--seed", type=int, default=None,
                     help="override the run seed")
    sub.add_argument("--set", action="append", metavar="KEY=VALUE",
                     help="override one configuration key")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sigverify",
                     description="online signature verification toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[], help="generate a synthetic corpus")
    p.add_argument("--out", required=True, help="corpus output directory")
    p.add_argument("--force", action="store_true")
    _common(p)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("learn-descriptor",
                       help="train the descriptor on an unlabeled corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="descriptor model file")
    p.add_argument("--force", action="store_true")
    _common(p)
    p.set_defaults(fn=cmd_learn_descriptor)

    p = sub.add_parser("enroll", help="fit and calibrate per-user models")
    p.add_argument("--model", required=True, help="descriptor model file")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="user model output directory")
    p.add_argument("--force", action="store_true")
    _common(p)
    p.set_defaults(fn=cmd_enroll)

    p = sub.add_parser("verify", help="verify one signature against a user")
    p.add_argument("--model", required=True, help="descriptor model file")
    p.add_argument("--user-models", required=True, dest="user_models",
                   help="directory of enrolled user models")
    p.add_argument("--user", required=True)
    p.add_argument("signature", help="signature file to verify")
    _common(p)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("evaluate", help="run the k-fold protocol on a corpus")
    p.add_argument("--model", required=True, help="descriptor model file")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="report output directory")
    _common(p)
    p.set_defaults(fn=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    except Exception as exc:  # deliberate catch-all: map failures to exit 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
