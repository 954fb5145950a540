"""Command line entry point: one subcommand per pipeline stage plus fixture
generation. Exit codes: 0 ok, 2 config error, 3 missing upstream artifact,
4 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .pipeline import ABLATION_AXES, STAGES, MissingArtifactError, run_stage

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MISSING = 3
EXIT_RUNTIME = 4


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="paraforge",
        description="Cluster a monolingual corpus, train unsupervised "
                    "translation models on cluster pairs, distill them into a "
                    "single paraphraser, and evaluate it.")
    sub = p.add_subparsers(dest="stage", required=True)
    for stage in STAGES:
        sp = sub.add_parser(stage, help=f"run the {stage} stage")
        sp.add_argument("--config", required=True, help="pipeline config file (INI)")
        sp.add_argument("--out", default=None, help="output directory override")
        sp.add_argument("--seed", type=int, default=None, help="global seed override")
        sp.add_argument("--profile", choices=("paper", "desk"), default=None,
                        help="hyperparameter profile")
        if stage == "ablate":
            sp.add_argument("--axis", choices=ABLATION_AXES, required=True)
    fx = sub.add_parser("make-fixture", help="write a synthetic corpus and labeled splits")
    fx.add_argument("--out", required=True, help="directory for the fixture files")
    fx.add_argument("--topics", type=int, default=4)
    fx.add_argument("--sentences-per-topic", type=int, default=500)
    fx.add_argument("--labeled-pairs", type=int, default=100)
    fx.add_argument("--seed", type=int, default=0)
    return p


def _make_fixture(args) -> int:
    from .fixtures import PipelineFixtureSpec, gen_pipeline_fixture
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spec = PipelineFixtureSpec(topics=args.topics,
                               sentences_per_topic=args.sentences_per_topic,
                               labeled_pairs=args.labeled_pairs, seed=args.seed)
    lines, labels, pairs = gen_pipeline_fixture(spec)
    (out / "corpus.txt").write_text("".join(ln + "\n" for ln in lines), encoding="utf-8")
    (out / "labels.txt").write_text("".join(f"{l}\n" for l in labels), encoding="utf-8")
    (out / "labeled.tsv").write_text("".join(f"{s}\t{r}\n" for s, r in pairs),
                                     encoding="utf-8")
    (out / "inputs.txt").write_text("".join(s + "\n" for s, _ in pairs),
                                    encoding="utf-8")
    print(f"wrote {len(lines)} sentences, {len(pairs)} labeled pairs to {out}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.stage == "make-fixture":
        return _make_fixture(args)
    try:
        cfg = load_config(args.config, profile=args.profile, seed=args.seed,
                          out_dir=args.out)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        outputs = run_stage(args.stage, cfg, axis=getattr(args, "axis", None))
    except MissingArtifactError as e:
        print(f"missing artifact: {e}", file=sys.stderr)
        return EXIT_MISSING
    except Exception as e:
        print(f"{args.stage} failed: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    for p in outputs:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
