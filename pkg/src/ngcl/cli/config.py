"""Pipeline configuration: defaults, key=value files, and CLI overrides.

Precedence is CLI ``--set key=value`` over the config file over the
built-in defaults. Keys are dotted (``pretrain.lr``, ``gat.heads``,
``band.delta``); unknown keys are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from ..connectivity import DEFAULT_BANDS, FrequencyBand
from ..contrastive import PretrainConfig
from ..errors import DataError, ParseError
from ..gatclassifier import GatConfig
from ..graphbuild import AugmentationPolicy


def _default_bands() -> dict:
    return {name: (lo, hi) for name, lo, hi in DEFAULT_BANDS}


@dataclass
class PipelineConfig:
    # global
    seed: int = 0
    threshold: float = 0.5
    k_folds: int = 10
    # graph construction
    dtf_normalized: bool = True
    mvar_order: int = 10
    window_s: float = 2.0
    overlap: float = 0.5
    pre_s: float = 10.0
    post_s: float = 10.0
    bands: dict = field(default_factory=_default_bands)
    # pretraining
    pretrain_hidden: int = 256
    pretrain_lr: float = 1e-3
    pretrain_weight_decay: float = 0.0
    pretrain_epochs: int = 50
    pretrain_batch_size: int = 128
    pretrain_tau: float = 0.3
    pretrain_gamma: float = 0.5
    pretrain_alpha: float = 1.0
    pretrain_dropout: float = 0.2
    pretrain_proj_dim: int = 32
    pretrain_sigma_mode: str = "median"
    pretrain_sigma_value: float = 1.0
    node_mask_ratio: float = 0.2
    edge_perturb_ratio: float = 0.2
    # classifier
    gat_layers: int = 2
    gat_heads: int = 4
    gat_embed: int = 16
    gat_neighbor_rate: float = 0.5
    # fine-tuning
    finetune_lr: float = 1e-3
    finetune_weight_decay: float = 1e-4
    finetune_batch_size: int = 128
    finetune_epochs: int = 50
    finetune_encoder: bool = False
    # synthetic dataset
    synth_n_per_class: int = 100
    synth_n_nodes: int = 20
    synth_soz_size: int = 4
    synth_noise: float = 0.3

    def pretrain_config(self) -> PretrainConfig:
        return PretrainConfig(
            epochs=self.pretrain_epochs,
            batch_size=self.pretrain_batch_size,
            lr=self.pretrain_lr,
            weight_decay=self.pretrain_weight_decay,
            tau=self.pretrain_tau,
            gamma=self.pretrain_gamma,
            alpha=self.pretrain_alpha,
            sigma_mode=self.pretrain_sigma_mode,
            sigma_value=self.pretrain_sigma_value,
            hidden=self.pretrain_hidden,
            proj_dim=self.pretrain_proj_dim,
            dropout=self.pretrain_dropout,
        )

    def gat_config(self) -> GatConfig:
        return GatConfig(
            layers=self.gat_layers,
            heads=self.gat_heads,
            embed=self.gat_embed,
            neighbor_rate=self.gat_neighbor_rate,
            lr=self.finetune_lr,
            weight_decay=self.finetune_weight_decay,
            batch_size=self.finetune_batch_size,
            epochs=self.finetune_epochs,
            finetune_encoder=self.finetune_encoder,
        )

    def policy(self) -> AugmentationPolicy:
        return AugmentationPolicy(
            node_mask_ratio=self.node_mask_ratio,
            edge_perturb_ratio=self.edge_perturb_ratio,
            seed=self.seed,
        )

    def band_list(self) -> list:
        return [FrequencyBand(name, lo, hi) for name, (lo, hi) in self.bands.items()]


#: dotted config key -> (attribute, parser)
def _parse_bool(v: str) -> bool:
    if v.lower() in ("true", "1", "yes"):
        return True
    if v.lower() in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


_KEYMAP = {
    "seed": ("seed", int),
    "threshold": ("threshold", float),
    "k_folds": ("k_folds", int),
    "dtf_normalized": ("dtf_normalized", _parse_bool),
    "mvar_order": ("mvar_order", int),
    "window_s": ("window_s", float),
    "overlap": ("overlap", float),
    "pre_s": ("pre_s", float),
    "post_s": ("post_s", float),
    "pretrain.hidden": ("pretrain_hidden", int),
    "pretrain.lr": ("pretrain_lr", float),
    "pretrain.weight_decay": ("pretrain_weight_decay", float),
    "pretrain.epochs": ("pretrain_epochs", int),
    "pretrain.batch_size": ("pretrain_batch_size", int),
    "pretrain.tau": ("pretrain_tau", float),
    "pretrain.gamma": ("pretrain_gamma", float),
    "pretrain.alpha": ("pretrain_alpha", float),
    "pretrain.dropout": ("pretrain_dropout", float),
    "pretrain.proj_dim": ("pretrain_proj_dim", int),
    "pretrain.sigma_mode": ("pretrain_sigma_mode", str),
    "pretrain.sigma_value": ("pretrain_sigma_value", float),
    "pretrain.node_mask_ratio": ("node_mask_ratio", float),
    "pretrain.edge_perturb_ratio": ("edge_perturb_ratio", float),
    "gat.layers": ("gat_layers", int),
    "gat.heads": ("gat_heads", int),
    "gat.embed": ("gat_embed", int),
    "gat.neighbor_rate": ("gat_neighbor_rate", float),
    "finetune.lr": ("finetune_lr", float),
    "finetune.weight_decay": ("finetune_weight_decay", float),
    "finetune.batch_size": ("finetune_batch_size", int),
    "finetune.epochs": ("finetune_epochs", int),
    "finetune.encoder": ("finetune_encoder", _parse_bool),
    "synth.n_per_class": ("synth_n_per_class", int),
    "synth.n_nodes": ("synth_n_nodes", int),
    "synth.soz_size": ("synth_soz_size", int),
    "synth.noise": ("synth_noise", float),
}


def _set_key(cfg: PipelineConfig, key: str, raw: str) -> None:
    if key.startswith("band."):
        name = key[len("band."):]
        parts = raw.split(",")
        if len(parts) != 2:
            raise DataError(f"band override {key} needs 'lo,hi', got {raw!r}")
        cfg.bands[name] = (float(parts[0]), float(parts[1]))
        return
    if key not in _KEYMAP:
        raise DataError(f"unknown config key: {key!r}")
    attr, parser = _KEYMAP[key]
    try:
        setattr(cfg, attr, parser(raw))
    except ValueError as exc:
        raise DataError(f"config key {key}: {exc}") from exc


def load_config(path=None) -> PipelineConfig:
    """Defaults, updated from a key=value file when `path` is given."""
    cfg = PipelineConfig()
    if path is None:
        return cfg
    path = Path(path)
    if not path.exists():
        raise DataError(f"config file not found: {path}")
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        _set_key(cfg, key.strip(), value.strip())
    return cfg


def apply_overrides(cfg: PipelineConfig, overrides) -> PipelineConfig:
    """Apply CLI ``key=value`` strings on top of `cfg` (highest precedence)."""
    for item in overrides or []:
        if "=" not in item:
            raise DataError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        _set_key(cfg, key.strip(), value.strip())
    return cfg


def dump_config(cfg: PipelineConfig) -> str:
    """Render the full configuration as sorted key=value lines."""
    inverse = {attr: key for key, (attr, _) in _KEYMAP.items()}
    lines = []
    for f in fields(cfg):
        if f.name == "bands":
            continue
        value = getattr(cfg, f.name)
        rendered = str(value).lower() if isinstance(value, bool) else repr(value) if isinstance(value, float) else str(value)
        lines.append(f"{inverse[f.name]}={rendered}")
    for name, (lo, hi) in cfg.bands.items():
        lines.append(f"band.{name}={lo!r},{hi!r}")
    return "\n".join(sorted(lines)) + "\n"
