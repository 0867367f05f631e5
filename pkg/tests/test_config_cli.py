"""Configuration merging and the command-line pipeline."""

import numpy as np
import pytest

from graphpae import cli
from graphpae import config as cfgmod
from graphpae.errors import ArgumentError, ParseError


# ---------------------------------------------------------------------------
# config parsing and merging


def test_parse_config_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# comment\nepochs = 5\nencoder.hidden=32\nmask_ratio=0.5\n"
                 "encoder.attention = gat\nencoder.rbf_sigma = none\n")
    cfg = cfgmod.parse_config_file(p)
    assert cfg == {"epochs": 5, "encoder.hidden": 32, "mask_ratio": 0.5,
                   "encoder.attention": "gat", "encoder.rbf_sigma": None}


def test_parse_config_unknown_key(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("learning_rate=0.1\n")
    with pytest.raises(ArgumentError, match="unknown config key"):
        cfgmod.parse_config_file(p)


def test_parse_config_bad_value_and_missing_equals(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("epochs=abc\n")
    with pytest.raises(ArgumentError, match="bad value"):
        cfgmod.parse_config_file(p)
    p.write_text("epochs\n")
    with pytest.raises(ParseError, match="expected key=value"):
        cfgmod.parse_config_file(p)


def test_env_overrides_mapping():
    env = {"PAE_EPOCHS": "7", "PAE_ENCODER__HIDDEN": "16", "HOME": "/root"}
    out = cfgmod.env_overrides(env)
    assert out == {"epochs": 7, "encoder.hidden": 16}
    with pytest.raises(ArgumentError):
        cfgmod.env_overrides({"PAE_NOT_A_KEY": "1"})


def test_merge_precedence_file_flags_env():
    cfg = cfgmod.merge_config({"epochs": 1, "lr": 0.5}, {"epochs": 2},
                              environ={"PAE_EPOCHS": "3"})
    assert cfg["epochs"] == 3
    assert cfg["lr"] == 0.5


def test_make_run_and_probe_config():
    cfg = {"epochs": 4, "encoder.hidden": 32, "encoder.attention": "gat",
           "encoder.heads": 4, "probe.metric": "accuracy", "probe.epochs": 10,
           "dataset.edges": "x"}
    run = cfgmod.make_run_config(cfg)
    assert run.epochs == 4 and run.encoder.hidden == 32
    probe = cfgmod.make_probe_config(cfg)
    assert probe.epochs == 10


def test_effective_config_roundtrips(tmp_path):
    cfg = {"epochs": 4, "mask_ratio": 0.25, "encoder.attention": "gat"}
    p = tmp_path / "eff.txt"
    p.write_text(cfgmod.effective_config_text(cfg))
    assert cfgmod.parse_config_file(p) == cfg


def test_bool_conversion():
    assert cfgmod._convert("encoder.activation_after_agg", "true") is True
    assert cfgmod._convert("encoder.activation_after_agg", "0") is False
    with pytest.raises(ArgumentError):
        cfgmod._convert("encoder.activation_after_agg", "maybe")


# ---------------------------------------------------------------------------
# CLI exit codes


def test_cli_unknown_set_key_exit_2(tmp_path):
    rc = cli.main(["pretrain", "--set", "bogus=1", "--out", str(tmp_path / "r")])
    assert rc == 2


def test_cli_missing_dataset_exit_2(tmp_path):
    rc = cli.main(["pretrain", "--out", str(tmp_path / "r")])
    assert rc == 2


def test_cli_nonexistent_dataset_path_exit_2(tmp_path):
    rc = cli.main(["pretrain", "--set", "dataset.edges=/nope", "--set",
                   "dataset.features=/nope", "--out", str(tmp_path / "r")])
    assert rc == 2


def test_cli_malformed_edge_file_exit_3(tmp_path):
    edges = tmp_path / "bad.edges"
    edges.write_text("0 zebra\n")
    feats = tmp_path / "f.csv"
    feats.write_text("1,0\n0,1\n")
    rc = cli.main(["pretrain", "--set", f"dataset.edges={edges}",
                   "--set", f"dataset.features={feats}", "--out", str(tmp_path / "r")])
    assert rc == 3


# ---------------------------------------------------------------------------
# end-to-end pipeline


@pytest.fixture(scope="module")
def synth_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("synth")
    prefix = str(root / "toy")
    rc = cli.main(["make-synth", "--blocks", "12,12", "--p-in", "0.4",
                   "--p-out", "0.05", "--seed", "3", "--out", prefix])
    assert rc == 0
    return prefix


def test_make_synth_outputs(synth_dataset):
    import os
    for suffix in (".edges", ".features.csv", ".labels.csv"):
        assert os.path.exists(synth_dataset + suffix)
    from graphpae.graph import load_graph
    g = load_graph(synth_dataset + ".edges", synth_dataset + ".features.csv",
                   synth_dataset + ".labels.csv")
    assert g.num_nodes == 24
    g.validate()


def test_pretrain_probe_pipeline(synth_dataset, tmp_path):
    run_dir = tmp_path / "run"
    rc = cli.main(["pretrain",
                   "--set", f"dataset.edges={synth_dataset}.edges",
                   "--set", f"dataset.features={synth_dataset}.features.csv",
                   "--set", "num_eigenvectors=6",
                   "--epochs", "3", "--seed", "1", "--out", str(run_dir)])
    assert rc == 0
    assert (run_dir / "checkpoint.paew").exists()
    assert (run_dir / "inputs.sha256").exists()
    eff = (run_dir / "effective_config.txt").read_text()
    assert "epochs=3" in eff and "num_eigenvectors=6" in eff
    log_lines = (run_dir / "trainlog.csv").read_text().strip().splitlines()
    assert len(log_lines) == 4

    out_csv = tmp_path / "probe.csv"
    rc = cli.main(["probe", "--run-dir", str(run_dir),
                   "--edges", f"{synth_dataset}.edges",
                   "--features", f"{synth_dataset}.features.csv",
                   "--labels", f"{synth_dataset}.labels.csv",
                   "--seeds", "0,1", "--out", str(out_csv)])
    assert rc == 0
    lines = out_csv.read_text().strip().splitlines()
    assert lines[0] == "dataset,seed,metric,value"
    assert len(lines) == 4  # 2 seed rows + summary
    assert lines[-1].startswith("summary,")


def test_pretrain_identical_logs_same_seed(synth_dataset, tmp_path):
    logs = []
    for name in ("a", "b"):
        run_dir = tmp_path / name
        rc = cli.main(["pretrain",
                       "--set", f"dataset.edges={synth_dataset}.edges",
                       "--set", f"dataset.features={synth_dataset}.features.csv",
                       "--set", "num_eigenvectors=6",
                       "--epochs", "2", "--seed", "7", "--out", str(run_dir)])
        assert rc == 0
        lines = (run_dir / "trainlog.csv").read_text().splitlines()
        logs.append([ln.rsplit(",", 1)[0] for ln in lines])  # drop wall-time column
    assert logs[0] == logs[1]


def test_probe_requires_labels(synth_dataset, tmp_path):
    run_dir = tmp_path / "run"
    cli.main(["pretrain",
              "--set", f"dataset.edges={synth_dataset}.edges",
              "--set", f"dataset.features={synth_dataset}.features.csv",
              "--set", "num_eigenvectors=6",
              "--epochs", "1", "--out", str(run_dir)])
    rc = cli.main(["probe", "--run-dir", str(run_dir),
                   "--edges", f"{synth_dataset}.edges",
                   "--features", f"{synth_dataset}.features.csv",
                   "--out", str(tmp_path / "p.csv")])
    assert rc == 2


def test_spectral_analysis_subcommand(synth_dataset, tmp_path):
    out = tmp_path / "bands.csv"
    rc = cli.main(["spectral-analysis", "--edges", f"{synth_dataset}.edges",
                   "--features", f"{synth_dataset}.features.csv",
                   "--mask-kind", "feature", "--ratio", "0.2", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "band_lo,band_hi,orig_magnitude,corrupt_magnitude,abs_diff"
    assert len(lines) > 1


def test_spectral_analysis_custom_bands(synth_dataset, tmp_path):
    out = tmp_path / "bands.csv"
    rc = cli.main(["spectral-analysis", "--edges", f"{synth_dataset}.edges",
                   "--features", f"{synth_dataset}.features.csv",
                   "--mask-kind", "offset", "--bands", "0:0.5,0.5:2.0",
                   "--out", str(out)])
    assert rc == 0
    assert len(out.read_text().strip().splitlines()) <= 3
