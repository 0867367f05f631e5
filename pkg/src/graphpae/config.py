"""Flat key=value configuration with section dots; merge order is
file < flags < PAE_* environment variables. Unknown keys are rejected."""

from __future__ import annotations

import os

from .encoder import EncoderConfig
from .errors import ArgumentError, ParseError
from .evalkit import ProbeConfig
from .trainer import RunConfig

_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}

# key -> python type ('optional-int' admits the literal `none`)
KNOWN_KEYS = {
    "epochs": int,
    "mask_ratio": float,
    "noise_scale": float,
    "loss_alpha": float,
    "sce_gamma": float,
    "num_eigenvectors": int,
    "lr": float,
    "weight_decay": float,
    "seed": int,
    "batch_size": int,
    "pooling": str,
    "encoder.layers": int,
    "encoder.hidden": int,
    "encoder.attention": str,
    "encoder.heads": int,
    "encoder.rbf_count": int,
    "encoder.rbf_low": float,
    "encoder.rbf_high": float,
    "encoder.rbf_sigma": "optional-float",
    "encoder.dropout": float,
    "encoder.edge_dropout": float,
    "encoder.edge_vocab": "optional-int",
    "encoder.activation_after_agg": bool,
    "probe.kind": str,
    "probe.lr": float,
    "probe.epochs": int,
    "probe.weight_decay": float,
    "probe.metric": str,
    "probe.seed": int,
    "dataset.edges": str,
    "dataset.features": str,
    "dataset.labels": str,
    "dataset.splits": str,
}


def _convert(key: str, raw: str):
    kind = KNOWN_KEYS[key]
    try:
        if kind is bool:
            return _BOOL[raw.strip().lower()]
        if kind == "optional-int":
            return None if raw.strip().lower() == "none" else int(raw)
        if kind == "optional-float":
            return None if raw.strip().lower() == "none" else float(raw)
        return kind(raw)
    except (KeyError, ValueError):
        raise ArgumentError(f"bad value {raw!r} for config key {key!r}") from None


def check_key(key: str):
    if key not in KNOWN_KEYS:
        raise ArgumentError(f"unknown config key {key!r}")


def parse_config_file(path) -> dict:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"{path}:{lineno}: expected key=value")
            key, raw = (s.strip() for s in line.split("=", 1))
            check_key(key)
            out[key] = _convert(key, raw)
    return out


def env_overrides(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    out = {}
    for name, raw in environ.items():
        if not name.startswith("PAE_"):
            continue
        key = name[4:].lower().replace("__", ".")
        check_key(key)
        out[key] = _convert(key, raw)
    return out


def merge_config(file_cfg: dict | None = None, flag_cfg: dict | None = None,
                 environ=None) -> dict:
    cfg = {}
    cfg.update(file_cfg or {})
    cfg.update(flag_cfg or {})
    cfg.update(env_overrides(environ))
    return cfg


def make_run_config(cfg: dict) -> RunConfig:
    enc_kwargs = {k.split(".", 1)[1]: v for k, v in cfg.items() if k.startswith("encoder.")}
    run_kwargs = {k: v for k, v in cfg.items()
                  if "." not in k and k in KNOWN_KEYS}
    return RunConfig(encoder=EncoderConfig(**enc_kwargs), **run_kwargs)


def make_probe_config(cfg: dict) -> ProbeConfig:
    kwargs = {k.split(".", 1)[1]: v for k, v in cfg.items() if k.startswith("probe.")}
    return ProbeConfig(**kwargs)


def effective_config_text(cfg: dict) -> str:
    return "".join(f"{k}={cfg[k]}\n" for k in sorted(cfg))
