"""Stage orchestration: seeds, artifacts, manifest bookkeeping, review loop."""

import json

import numpy as np
import pytest

from paraforge.config import load_config
from paraforge.manifest import Manifest, sha256_file
from paraforge.pipeline import (MissingArtifactError, PIPELINE_SEQUENCE, STAGES,
                                StageError, Workspace, run_stage, stage_seed)
from paraforge.fixtures import PipelineFixtureSpec, gen_pipeline_fixture


def test_stage_seed_is_deterministic_and_distinct():
    assert stage_seed(0, "cluster") == stage_seed(0, "cluster")
    names = ["cluster", "pair", "umt:0->1", "surrogate", "finetune"]
    seeds = [stage_seed(7, n) for n in names]
    assert len(set(seeds)) == len(names)
    assert stage_seed(7, "cluster") != stage_seed(8, "cluster")
    assert all(0 <= s < 2 ** 32 for s in seeds)


def test_workspace_require_raises_with_stage_hint(tmp_path):
    ws = Workspace(tmp_path)
    with pytest.raises(MissingArtifactError, match="cluster"):
        ws.require("vocab.txt", "cluster")


def write_fixture(tmp_path, topics=2, per_topic=30, labeled=8, seed=0):
    lines, labels, pairs = gen_pipeline_fixture(PipelineFixtureSpec(
        topics=topics, sentences_per_topic=per_topic, labeled_pairs=labeled,
        seed=seed))
    (tmp_path / "corpus.txt").write_text("".join(l + "\n" for l in lines))
    (tmp_path / "labeled.tsv").write_text(
        "".join(f"{s}\t{r}\n" for s, r in pairs))
    (tmp_path / "inputs.txt").write_text("".join(s + "\n" for s, _ in pairs))
    return lines, labels, pairs


CONFIG = """\
[pipeline]
seed = 7

[corpus]
path = {root}/corpus.txt
min_count = 1

[clustering]
k = {k}
sweeps = 3
{cluster_extra}

[pairing]
strategy = smallest

[umt]
steps = 2
batch_size = 4
lr = 0.003
init_steps = 10
p_drop = 0.05
swap_window = 1
disc_hidden = 8

[model]
enc_blocks = 1
dec_blocks = 1
heads = 2
d_model = 16
d_ff = 32

[surrogate]
epochs = 1
batch_size = 8
lr = 0.003
warmup = 0
beam_width = 1

[metrics]
max_order = 2
labeled_path = {root}/labeled.tsv

[paraphrase]
input = {root}/inputs.txt
"""


def make_cfg(tmp_path, out="run", k=2, cluster_extra="", seed=None):
    path = tmp_path / "config.ini"
    path.write_text(CONFIG.format(root=tmp_path, k=k, cluster_extra=cluster_extra))
    return load_config(path, seed=seed, out_dir=tmp_path / out)


def test_cluster_stage_artifacts(tmp_path):
    write_fixture(tmp_path)
    cfg = make_cfg(tmp_path)
    outputs = run_stage("cluster", cfg)
    ws = Workspace(cfg.out_dir)
    assert ws.path("vocab.txt").exists()
    assert ws.path("clusters.ckpt").exists()
    lines = ws.path("assignments.tsv").read_text().splitlines()
    assert len(lines) == 60
    for ln in lines:
        sid, cid = ln.split("\t")
        assert int(cid) in (0, 1)
    D = [[float(x) for x in row.split("\t")]
         for row in ws.path("distances.tsv").read_text().splitlines()]
    D = np.array(D)
    assert D.shape == (2, 2)
    assert D[0, 0] == D[1, 1] == 0.0
    assert D[0, 1] == D[1, 0] > 0.0
    assert all(p.exists() for p in outputs)


def test_pair_before_cluster_is_missing_artifact(tmp_path):
    write_fixture(tmp_path)
    cfg = make_cfg(tmp_path, out="fresh")
    with pytest.raises(MissingArtifactError):
        run_stage("pair", cfg)


def test_review_report_and_decisions_round_trip(tmp_path):
    write_fixture(tmp_path, topics=3, per_topic=20)
    cfg = make_cfg(tmp_path, k=3)
    run_stage("cluster", cfg)
    run_stage("review-report", cfg)
    ws = Workspace(cfg.out_dir)
    report = ws.path("cluster_report.tsv").read_text().splitlines()
    assert len(report) == 3
    assert all(ln.startswith("cluster ") for ln in report)
    template = ws.path("review_template.tsv").read_text().splitlines()
    assert [ln.split("\t")[1] for ln in template] == ["keep"] * 3

    # discard one cluster and confirm pairing excludes it
    review = tmp_path / "review.tsv"
    review.write_text("0\tkeep\t\n1\tdiscard\tlooks off\n2\tkeep\t\n")
    cfg2 = make_cfg(tmp_path, k=3, cluster_extra=f"review = {review}")
    run_stage("pair", cfg2)
    plan = ws.path("plan.tsv").read_text().splitlines()
    srcs = [int(ln.split("\t")[0]) for ln in plan]
    tgts = [int(ln.split("\t")[1]) for ln in plan]
    assert sorted(srcs) == [0, 2]
    assert 1 not in tgts


def test_manifest_records_stage_digests(tmp_path):
    write_fixture(tmp_path)
    cfg = make_cfg(tmp_path)
    outputs = run_stage("cluster", cfg)
    manifest = Manifest(cfg.out_dir)
    assert "cluster" in manifest.data["stages"]
    digests = manifest.artifact_digests()
    for p in outputs:
        assert digests[str(p)] == sha256_file(p)
    assert manifest.data["config"]["seed"] == 7


def test_full_sequence_produces_eval_report(tmp_path):
    write_fixture(tmp_path)
    cfg = make_cfg(tmp_path)
    for stage in PIPELINE_SEQUENCE:
        run_stage(stage, cfg)
    ws = Workspace(cfg.out_dir)
    report = json.loads(ws.path("eval_report.json").read_text())
    assert set(report) == {"bleu", "ibleu", "rouge1", "rouge2", "sentences"}
    assert report["sentences"] == 8
    per = ws.path("eval_per_sentence.csv").read_text().splitlines()
    assert per[0] == "index,bleu,ibleu,rouge1,rouge2"
    assert len(per) == 9
    assert ws.path("surrogate_loss.png").exists()
    assert ws.path("eval_scores.png").exists()

    run_stage("paraphrase", cfg)
    outs = ws.path("paraphrases.txt").read_text().splitlines()
    assert len(outs) == 8


def test_finetune_requires_labeled_path(tmp_path):
    write_fixture(tmp_path)
    cfg = make_cfg(tmp_path)
    cfg.finetune_labeled_path = None
    with pytest.raises(StageError):
        run_stage("finetune", cfg)


def test_unknown_stage_raises(tmp_path):
    write_fixture(tmp_path)
    cfg = make_cfg(tmp_path)
    with pytest.raises(StageError):
        run_stage("polish", cfg)
    assert "polish" not in STAGES


def test_kmeans_cluster_stage_writes_embeddings(tmp_path):
    write_fixture(tmp_path)
    cfg = make_cfg(tmp_path, out="kmrun", cluster_extra="kind = kmeans")
    run_stage("cluster", cfg)
    ws = Workspace(cfg.out_dir)
    assert ws.path("embeddings.txt").exists()
    first = ws.path("embeddings.txt").read_text().splitlines()[0]
    assert first == "d=16"
