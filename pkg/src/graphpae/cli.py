"""Command-line entry point: make-synth, spectral-analysis, pretrain, probe."""

from __future__ import annotations

import argparse
import hashlib
import os
import sys

import numpy as np

from . import analysis, config as cfgmod, evalkit, trainer
from .errors import (ArgumentError, ContractError, DataError, GraphPAEError,
                     NumericalError, ParseError, ShapeError)
from .graph import Graph, load_graph, make_sbm

EXIT_ARGUMENT = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _parse_bands(spec: str | None, width: float):
    if not spec:
        from .spectral import default_bands

        return default_bands(width=width)
    bands = []
    for part in spec.split(","):
        lo, hi = part.split(":")
        bands.append((float(lo), float(hi)))
    return bands


def _write_synth(g: Graph, prefix: str):
    dst, src = g.edge_endpoints()
    with open(prefix + ".edges", "w", encoding="utf-8") as fh:
        for i, j in zip(dst, src):
            if i <= j:
                fh.write(f"{i} {j}\n")
    with open(prefix + ".features.csv", "w", encoding="utf-8") as fh:
        for row in g.node_features:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    if g.labels is not None:
        with open(prefix + ".labels.csv", "w", encoding="utf-8") as fh:
            for v in g.labels:
                fh.write(f"{v}\n")


def cmd_make_synth(args):
    sizes = [int(s) for s in args.blocks.split(",")]
    g = make_sbm(sizes, args.p_in, args.p_out, args.seed,
                 feature_mode=args.feature_mode, feature_dim=args.feature_dim)
    _write_synth(g, args.out)
    print(f"wrote {args.out}.edges / .features.csv / .labels.csv "
          f"(N={g.num_nodes}, E={g.num_edges})")
    return 0


def cmd_spectral_analysis(args):
    g = load_graph(args.edges, args.features)
    bands = _parse_bands(args.bands, args.band_width)
    rows = analysis.spectral_analysis(g, args.mask_kind, args.ratio,
                                      args.noise_scale, bands, seed=args.seed)
    analysis.write_band_csv(rows, args.out)
    print(f"wrote {args.out} ({len(rows)} bands)")
    return 0


def _gather_flag_overrides(pairs):
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise ArgumentError(f"--set expects key=value, got {item!r}")
        key, raw = (s.strip() for s in item.split("=", 1))
        cfgmod.check_key(key)
        out[key] = cfgmod._convert(key, raw)
    return out


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_dataset(cfg: dict) -> Graph:
    for key in ("dataset.edges", "dataset.features"):
        if key not in cfg:
            raise ArgumentError(f"missing required config key {key}")
        if not os.path.exists(cfg[key]):
            raise ArgumentError(f"{key} path does not exist: {cfg[key]}")
    for key in ("dataset.labels", "dataset.splits"):
        if key in cfg and not os.path.exists(cfg[key]):
            raise ArgumentError(f"{key} path does not exist: {cfg[key]}")
    return load_graph(cfg["dataset.edges"], cfg["dataset.features"],
                      cfg.get("dataset.labels"), cfg.get("dataset.splits"))


def cmd_pretrain(args):
    file_cfg = cfgmod.parse_config_file(args.config) if args.config else {}
    flags = _gather_flag_overrides(args.set)
    if args.epochs is not None:
        flags["epochs"] = args.epochs
    if args.mask_ratio is not None:
        flags["mask_ratio"] = args.mask_ratio
    if args.seed is not None:
        flags["seed"] = args.seed
    cfg = cfgmod.merge_config(file_cfg, flags)
    g = _load_dataset(cfg)
    run_cfg = cfgmod.make_run_config(cfg)

    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "effective_config.txt"), "w", encoding="utf-8") as fh:
        fh.write(cfgmod.effective_config_text(cfg))
    with open(os.path.join(args.out, "inputs.sha256"), "w", encoding="utf-8") as fh:
        for key in ("dataset.edges", "dataset.features", "dataset.labels", "dataset.splits"):
            if key in cfg:
                fh.write(f"{_sha256(cfg[key])}  {cfg[key]}\n")

    ckpt_path = os.path.join(args.out, "checkpoint.paew")
    params, log = trainer.pretrain(g, run_cfg, checkpoint_path=ckpt_path,
                                   checkpoint_every=args.checkpoint_every)
    log.to_csv(os.path.join(args.out, "trainlog.csv"))
    last = log.records[-1]
    print(f"run dir {args.out}: {len(log.records)} epochs, "
          f"final loss {last.loss_total:.6f}")
    return 0


def cmd_probe(args):
    run_cfg_dict = cfgmod.parse_config_file(os.path.join(args.run_dir, "effective_config.txt"))
    run_cfg = cfgmod.make_run_config(run_cfg_dict)
    g = load_graph(args.edges, args.features, args.labels, args.splits)
    if g.labels is None:
        raise ArgumentError("probe requires labels")
    params, _, _ = trainer.load_checkpoint(
        os.path.join(args.run_dir, "checkpoint.paew"), run_cfg, g.feature_dim)
    expected = params["lift/w"].data.shape[0]
    if expected != g.feature_dim:
        raise DataError(f"checkpoint feature dim {expected} != dataset dim {g.feature_dim}")

    basis = trainer.compute_basis(g, run_cfg.num_eigenvectors, seed=run_cfg.seed)
    h = evalkit.embed_nodes(g, basis, params, run_cfg)
    labels = np.asarray(g.labels)

    seeds = [int(s) for s in args.seeds.split(",")]
    rows = []
    for seed in seeds:
        if g.split is not None:
            tr, va, te = g.split["train"], g.split.get("valid"), g.split["test"]
        else:
            rng = np.random.default_rng(seed)
            perm = rng.permutation(g.num_nodes)
            n_tr = max(1, g.num_nodes // 10)
            tr, va = perm[:n_tr], perm[n_tr:2 * n_tr]
            te = perm[2 * n_tr:]
        pc = cfgmod.make_probe_config(run_cfg_dict)
        pc.seed = seed
        value = evalkit.linear_probe(
            h[tr], labels[tr], h[te], labels[te], pc,
            h_valid=None if va is None else h[va],
            y_valid=None if va is None else labels[va])
        rows.append((args.dataset_name, seed, pc.metric, value))

    vals = np.array([r[3] for r in rows])
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("dataset,seed,metric,value\n")
        for name, seed, metric, value in rows:
            fh.write(f"{name},{seed},{metric},{value!r}\n")
        fh.write(f"summary,-,{rows[0][2]},{vals.mean():.4f}±{vals.std():.4f}\n")
    print(f"wrote {args.out}: {vals.mean():.4f}±{vals.std():.4f} over {len(seeds)} seeds")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="graphpae")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("make-synth", help="generate a stochastic block model dataset")
    s.add_argument("--blocks", required=True, help="comma-separated block sizes")
    s.add_argument("--p-in", type=float, required=True)
    s.add_argument("--p-out", type=float, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--feature-mode", choices=["smooth", "block-onehot"], default="smooth")
    s.add_argument("--feature-dim", type=int, default=8)
    s.add_argument("--out", required=True, help="output path prefix")
    s.set_defaults(func=cmd_make_synth)

    s = sub.add_parser("spectral-analysis", help="band-wise frequency magnitudes "
                                                 "of original vs corrupted graph")
    s.add_argument("--edges", required=True)
    s.add_argument("--features", required=True)
    s.add_argument("--mask-kind", choices=list(analysis.MASK_KINDS), required=True)
    s.add_argument("--ratio", type=float, default=0.2)
    s.add_argument("--noise-scale", type=float, default=0.01)
    s.add_argument("--bands", help="comma-separated lo:hi pairs; default 0.1-wide over [0,2]")
    s.add_argument("--band-width", type=float, default=0.1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_spectral_analysis)

    s = sub.add_parser("pretrain", help="run the pretraining loop")
    s.add_argument("--config", help="key=value config file")
    s.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config key (repeatable)")
    s.add_argument("--epochs", type=int)
    s.add_argument("--mask-ratio", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--checkpoint-every", type=int, default=0)
    s.add_argument("--out", required=True, help="run directory")
    s.set_defaults(func=cmd_pretrain)

    s = sub.add_parser("probe", help="linear probe on a frozen checkpoint")
    s.add_argument("--run-dir", required=True)
    s.add_argument("--edges", required=True)
    s.add_argument("--features", required=True)
    s.add_argument("--labels")
    s.add_argument("--splits")
    s.add_argument("--dataset-name", default="dataset")
    s.add_argument("--seeds", default="0", help="comma-separated probe seeds")
    s.add_argument("--out", required=True, help="results CSV path")
    s.set_defaults(func=cmd_probe)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ArgumentError, ContractError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGUMENT
    except (ParseError, DataError, ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
