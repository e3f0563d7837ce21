"""Flat configuration: every tunable of the pipeline with its default value.

Config files are plain ``key = value`` lines with ``#`` comments.  Unknown
keys are rejected.  Defaults that mirror published operating points
(confidence thresholds, NMS IoU, matching thresholds, anchor ratios, mining
cap) must stay at those values; tests pin them.
"""
from dataclasses import dataclass, field, fields, replace


def _tuple_of(kind, raw):
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    return tuple(kind(p) for p in parts)


@dataclass(frozen=True)
class Config:
    seed: int = 7

    # confidence fusion thresholds
    theta_v_prime: float = 20.0
    theta_r_prime: float = 0.5
    theta_r: float = 0.3
    absent_threshold: float = 0.3
    global_exit: float = 0.5

    # candidate proposal
    n_r: int = 5
    nms_iou: float = 0.6
    nms_per_level: bool = False

    # anchor layout (two scale levels over a 300x300 search patch)
    anchor_ratios: tuple = (0.33, 0.5, 1.0, 2.0, 3.0)
    grid_sizes: tuple = (19, 10)
    anchor_strides: tuple = (16.0, 30.0)
    anchor_bases: tuple = (75.0, 56.0)

    # anchor-truth matching and hard negative mining
    th_lo: float = 0.5
    th_hi: float = 0.7
    neg_pos_ratio: float = 3.0
    min_negatives: int = 16

    # regression network
    feature_channels: int = 32
    head_channels: int = 32
    share_branches: bool = False
    fuse_multiply: bool = True
    fuse_concat: bool = True
    search_size: int = 300
    template_size: int = 127

    # training
    train_steps: int = 500
    batch_size: int = 2
    learning_rate: float = 0.01
    sample_max_interval: int = 30

    # tracking strategy
    use_verifier: bool = True
    search_scale: float = 4.0
    scale_damping: float = 0.7
    window_overlap: float = 0.5

    # verification network
    verifier_size: int = 107
    verifier_channels: tuple = (8, 16, 24)
    verifier_hidden: int = 32
    verifier_lr: float = 0.02
    update_interval: int = 10
    harvest_gate: float = 0.5
    positive_memory: int = 96
    negative_memory: int = 192
    init_positives: int = 24
    init_negatives: int = 72
    harvest_positives: int = 4
    harvest_negatives: int = 8
    update_iters: int = 20
    init_iters: int = 300

    def override(self, **kwargs):
        return replace(self, **kwargs)


def _parse_value(f, raw):
    raw = raw.strip()
    if f.type == "bool" or isinstance(f.default, bool):
        low = raw.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"invalid boolean for {f.name}: {raw!r}")
    if isinstance(f.default, int):
        return int(raw)
    if isinstance(f.default, float):
        return float(raw)
    if isinstance(f.default, tuple):
        kind = float if any(isinstance(v, float) for v in f.default) else int
        return _tuple_of(kind, raw)
    return raw


def parse_config_text(text, base=None, source="<config>"):
    cfg = base or Config()
    by_name = {f.name: f for f in fields(Config)}
    updates = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key not in by_name:
            raise ValueError(f"{source}:{lineno}: unknown config key {key!r}")
        try:
            updates[key] = _parse_value(by_name[key], raw)
        except ValueError as exc:
            raise ValueError(f"{source}:{lineno}: {exc}") from None
    return cfg.override(**updates)


def load_config(path, base=None):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), base=base, source=str(path))


def config_to_text(cfg):
    lines = []
    for f in fields(Config):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ",".join(str(x) for x in v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
