"""Config parsing, profiles, overrides and CLI exit codes."""

import pytest

from paraforge.cli import (EXIT_CONFIG, EXIT_MISSING, EXIT_OK, main)
from paraforge.config import ConfigError, PROFILES, load_config, snapshot


def write_config(tmp_path, body="", name="config.ini"):
    path = tmp_path / name
    path.write_text(body, encoding="utf-8")
    return path


BASIC = """\
[pipeline]
seed = 3
out_dir = {out}

[corpus]
path = {corpus}
min_count = 1

[clustering]
k = 2
"""


def basic_config(tmp_path):
    corpus = tmp_path / "corpus.txt"
    corpus.write_text("a b\nc d\n", encoding="utf-8")
    body = BASIC.format(out=tmp_path / "runs", corpus=corpus)
    return write_config(tmp_path, body)


def test_defaults_follow_desk_profile(tmp_path):
    cfg = load_config(basic_config(tmp_path))
    assert cfg.profile == "desk"
    assert cfg.d_model == PROFILES["desk"]["d_model"]
    assert cfg.surrogate_batch == PROFILES["desk"]["surrogate_batch"]
    assert cfg.seed == 3
    assert cfg.k == 2


def test_paper_profile_switches_defaults(tmp_path):
    cfg = load_config(basic_config(tmp_path), profile="paper")
    assert cfg.d_model == PROFILES["paper"]["d_model"]
    assert cfg.enc_blocks == 6
    # explicit keys still win over the profile
    assert cfg.k == 2


def test_seed_and_out_overrides(tmp_path):
    cfg = load_config(basic_config(tmp_path), seed=99, out_dir=tmp_path / "other")
    assert cfg.seed == 99
    assert cfg.out_dir == tmp_path / "other"


def test_env_out_dir_override(tmp_path, monkeypatch):
    monkeypatch.setenv("PARAFORGE_OUT", str(tmp_path / "envruns"))
    cfg = load_config(basic_config(tmp_path))
    assert cfg.out_dir == tmp_path / "envruns"
    # an explicit out_dir argument beats the environment
    cfg = load_config(basic_config(tmp_path), out_dir=tmp_path / "cli")
    assert cfg.out_dir == tmp_path / "cli"


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.ini")


def test_unparsable_value_names_section_and_key(tmp_path):
    path = write_config(tmp_path, "[clustering]\nk = lots\n")
    with pytest.raises(ConfigError, match=r"clustering\.k"):
        load_config(path)


def test_validation_names_field_paths(tmp_path):
    cases = [
        ("[clustering]\nk = 1\n", r"clustering\.k"),
        ("[clustering]\nkind = dbscan\n", r"clustering\.kind"),
        ("[pairing]\nstrategy = nearest\n", r"pairing\.strategy"),
        ("[distill]\nsample_fraction = 0\n", r"distill\.sample_fraction"),
        ("[model]\nd_model = 63\n", r"model\.d_model"),
    ]
    for body, pattern in cases:
        path = write_config(tmp_path, body)
        with pytest.raises(ConfigError, match=pattern):
            load_config(path)


def test_unknown_profile_rejected(tmp_path):
    path = write_config(tmp_path, "[pipeline]\nprofile = galactic\n")
    with pytest.raises(ConfigError, match="profile"):
        load_config(path)


def test_filter_section_builds_spec(tmp_path):
    path = write_config(tmp_path,
                        "[filter]\nfilters = identity length_ratio\nmax_ratio = 1.5\n")
    cfg = load_config(path)
    assert cfg.filter_spec.filters == [("identity", {}),
                                       ("length_ratio", {"max_ratio": 1.5})]


def test_unknown_filter_predicate_names_it(tmp_path):
    path = write_config(tmp_path, "[filter]\nfilters = identity profanity\n")
    with pytest.raises(ConfigError, match="profanity"):
        load_config(path)


def test_snapshot_is_json_friendly(tmp_path):
    import json
    cfg = load_config(basic_config(tmp_path))
    text = json.dumps(snapshot(cfg), sort_keys=True)
    assert "d_model" in text


def test_cli_make_fixture_writes_files(tmp_path):
    out = tmp_path / "fx"
    code = main(["make-fixture", "--out", str(out), "--topics", "2",
                 "--sentences-per-topic", "30", "--labeled-pairs", "10",
                 "--seed", "0"])
    assert code == EXIT_OK
    assert (out / "corpus.txt").read_text().count("\n") == 60
    assert (out / "labels.txt").read_text().count("\n") == 60
    assert (out / "labeled.tsv").read_text().count("\n") == 10
    assert (out / "inputs.txt").read_text().count("\n") == 10


def test_cli_config_error_exit_code(tmp_path):
    path = write_config(tmp_path, "[clustering]\nk = 1\n")
    assert main(["cluster", "--config", str(path)]) == EXIT_CONFIG
    assert main(["cluster", "--config", str(tmp_path / "missing.ini")]) == EXIT_CONFIG


def test_cli_missing_artifact_exit_code(tmp_path):
    # pairing before clustering has produced anything
    path = basic_config(tmp_path)
    assert main(["pair", "--config", str(path),
                 "--out", str(tmp_path / "empty_run")]) == EXIT_MISSING


def test_cli_cluster_stage_runs(tmp_path):
    path = basic_config(tmp_path)
    out = tmp_path / "run"
    code = main(["cluster", "--config", str(path), "--out", str(out)])
    assert code == EXIT_OK
    assert (out / "vocab.txt").exists()
    assert (out / "clusters.ckpt").exists()
    assert (out / "assignments.tsv").exists()
    assert (out / "distances.tsv").exists()


def test_cli_unknown_stage_rejected(capsys):
    with pytest.raises(SystemExit):
        main(["polish", "--config", "x.ini"])
    capsys.readouterr()
