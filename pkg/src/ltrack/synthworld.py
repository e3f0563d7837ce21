"""Deterministic synthetic long-term sequences, dataset I/O and pair sampling.

A world is a textured background, one procedurally patterned target rectangle
doing a reflective random walk, and a few distractor rectangles wearing
perturbed copies of the target pattern.  The target is omitted during
scheduled absence intervals and re-enters at a far random location, which is
what long-term re-detection tests feed on.
"""
import math
import os
import re
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .geometry import Box
from .imageops import (box_frame_to_patch, box_frame_to_rotated_patch,
                       crop_resize, rotated_crop)

PATTERN_CELLS = 8


@dataclass(frozen=True)
class WorldSpec:
    width: int = 480
    height: int = 360
    length: int = 60
    seed: int = 0
    pattern_seed: int = 0
    target_w: float = 72.0
    target_h: float = 72.0
    step_sigma: float = 4.0
    scale_sigma: float = 0.004
    absent: tuple = ()                 # ((start, end) inclusive, ...)
    distractors: int = 3
    distractor_similarity: float = 0.5
    appearance_drift: float = 0.0

    def validate(self):
        if self.step_sigma < 0 or self.scale_sigma < 0:
            raise ValueError("motion sigmas must be non-negative")
        if self.target_w >= self.width or self.target_h >= self.height:
            raise ValueError("target does not fit inside the image")
        prev_end = -1
        for start, end in self.absent:
            if not (0 <= start <= end < self.length):
                raise ValueError(f"absence interval ({start},{end}) outside sequence")
            if start <= prev_end:
                raise ValueError("absence intervals must be disjoint and ordered")
            prev_end = end


@dataclass
class Sequence:
    name: str
    frames: list
    annotation: list                    # Box or None per frame
    spec: WorldSpec = None


def _palette(rng):
    # vivid, mutually distant colors
    base = rng.uniform(0.15, 1.0, size=(4, 3))
    base[0] = rng.uniform(0.7, 1.0, size=3)
    base[1] = rng.uniform(0.0, 0.35, size=3)
    return base


def _make_pattern(rng, palette):
    cells = rng.integers(0, len(palette), size=(PATTERN_CELLS, PATTERN_CELLS))
    pat = palette[cells]
    pat[0, :] = palette[0]
    pat[-1, :] = palette[1]
    pat[:, 0] = palette[0]
    pat[:, -1] = palette[1]
    return pat


def _perturb_pattern(rng, pattern, palette, similarity):
    out = pattern.copy()
    flip = rng.random(size=pattern.shape[:2]) >= similarity
    repl = palette[rng.integers(0, len(palette), size=pattern.shape[:2])]
    out[flip] = repl[flip]
    return out


def _render_rect(frame, box, pattern):
    h, w = frame.shape[:2]
    x1 = max(int(math.floor(box.x)), 0)
    y1 = max(int(math.floor(box.y)), 0)
    x2 = min(int(math.ceil(box.x + box.w)), w)
    y2 = min(int(math.ceil(box.y + box.h)), h)
    if x2 <= x1 or y2 <= y1:
        return
    xs = np.arange(x1, x2) + 0.5
    ys = np.arange(y1, y2) + 0.5
    u = np.clip(((xs - box.x) / box.w * PATTERN_CELLS).astype(int), 0, PATTERN_CELLS - 1)
    v = np.clip(((ys - box.y) / box.h * PATTERN_CELLS).astype(int), 0, PATTERN_CELLS - 1)
    frame[y1:y2, x1:x2] = pattern[np.ix_(v, u)]


def _background(rng, width, height):
    coarse = rng.uniform(0.25, 0.55, size=(9, 12, 3))
    ys = np.linspace(0, coarse.shape[0] - 1, height)
    xs = np.linspace(0, coarse.shape[1] - 1, width)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, coarse.shape[0] - 1)
    x1 = np.minimum(x0 + 1, coarse.shape[1] - 1)
    ty = (ys - y0)[:, None, None]
    tx = (xs - x0)[None, :, None]
    top = coarse[y0][:, x0] * (1 - tx) + coarse[y0][:, x1] * tx
    bot = coarse[y1][:, x0] * (1 - tx) + coarse[y1][:, x1] * tx
    return top * (1 - ty) + bot * ty


def _reflect(value, lo, hi):
    span = hi - lo
    if span <= 0:
        return lo
    t = (value - lo) % (2 * span)
    return lo + (t if t <= span else 2 * span - t)


def generate(spec):
    """Render a sequence; returns (frames as HxWx3 uint8, annotation).

    Fully deterministic per spec: one RNG stream drives layout, motion and
    reappearance in a fixed draw order.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    prng = np.random.default_rng(spec.pattern_seed)
    palette = _palette(prng)
    target_pattern = _make_pattern(prng, palette)
    drift_palette = _palette(prng)
    background = _background(rng, spec.width, spec.height)

    absent_frames = set()
    for start, end in spec.absent:
        absent_frames.update(range(start, end + 1))

    half_w, half_h = spec.target_w / 2.0, spec.target_h / 2.0
    cx = rng.uniform(half_w + 2, spec.width - half_w - 2)
    cy = rng.uniform(half_h + 2, spec.height - half_h - 2)
    log_scale = 0.0

    dists = []
    for _ in range(spec.distractors):
        dw = spec.target_w * rng.uniform(0.8, 1.25)
        dh = spec.target_h * rng.uniform(0.8, 1.25)
        dx = rng.uniform(dw / 2 + 2, spec.width - dw / 2 - 2)
        dy = rng.uniform(dh / 2 + 2, spec.height - dh / 2 - 2)
        pat = _perturb_pattern(rng, target_pattern, palette,
                               spec.distractor_similarity)
        dists.append([dx, dy, dw, dh, pat])

    frames, annotation = [], []
    was_absent = False
    for t in range(spec.length):
        frame = background.copy()
        # distractors jitter around with their own reflected walks
        for d in dists:
            d[0] = _reflect(d[0] + rng.normal(0, spec.step_sigma),
                            d[2] / 2 + 1, spec.width - d[2] / 2 - 1)
            d[1] = _reflect(d[1] + rng.normal(0, spec.step_sigma),
                            d[3] / 2 + 1, spec.height - d[3] / 2 - 1)
            _render_rect(frame, Box(d[0] - d[2] / 2, d[1] - d[3] / 2, d[2], d[3]),
                         d[4])

        log_scale = float(np.clip(log_scale + rng.normal(0, spec.scale_sigma),
                                  -0.25, 0.25))
        scale = math.exp(log_scale)
        w = spec.target_w * scale
        h = spec.target_h * scale

        if t in absent_frames:
            annotation.append(None)
            was_absent = True
        else:
            if was_absent:
                # re-enter far from the disappearance point
                diag = math.hypot(w, h)
                for _ in range(1000):
                    nx = rng.uniform(w / 2 + 2, spec.width - w / 2 - 2)
                    ny = rng.uniform(h / 2 + 2, spec.height - h / 2 - 2)
                    if math.hypot(nx - cx, ny - cy) >= 2.0 * diag:
                        cx, cy = nx, ny
                        break
                was_absent = False
            else:
                cx = _reflect(cx + rng.normal(0, spec.step_sigma),
                              w / 2 + 1, spec.width - w / 2 - 1)
                cy = _reflect(cy + rng.normal(0, spec.step_sigma),
                              h / 2 + 1, spec.height - h / 2 - 1)
            if spec.appearance_drift > 0:
                mix = spec.appearance_drift * t / max(spec.length - 1, 1)
                pal = palette * (1 - mix) + drift_palette * mix
                idx = np.argmin(
                    ((target_pattern[:, :, None, :] - palette[None, None]) ** 2
                     ).sum(-1), axis=2)
                pattern = pal[idx]
            else:
                pattern = target_pattern
            box = Box(cx - w / 2, cy - h / 2, w, h)
            _render_rect(frame, box, pattern)
            annotation.append(box)
        frames.append((np.clip(frame, 0, 1) * 255).round().astype(np.uint8))
    return frames, annotation


# ---------------------------------------------------------------------------
# dataset I/O: <root>/<seq>/frames/%06d.ppm + groundtruth.txt + spec.txt

class AnnotationError(ValueError):
    pass


def write_ppm(path, image):
    if image.dtype != np.uint8 or image.ndim != 3 or image.shape[2] != 3:
        raise ValueError("write_ppm expects HxWx3 uint8")
    h, w = image.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(image.tobytes())


def read_ppm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    m = re.match(rb"P6\s+(\d+)\s+(\d+)\s+255\s", data)
    if not m:
        raise ValueError(f"{path}: not a supported P6 PPM file")
    w, h = int(m.group(1)), int(m.group(2))
    pixels = np.frombuffer(data[m.end():m.end() + w * h * 3], dtype=np.uint8)
    if pixels.size != w * h * 3:
        raise ValueError(f"{path}: truncated pixel data")
    return pixels.reshape(h, w, 3).copy()


def write_annotation(path, annotation):
    with open(path, "w", encoding="ascii") as fh:
        for entry in annotation:
            if entry is None:
                fh.write("absent\n")
            else:
                fh.write(f"{entry.x},{entry.y},{entry.w},{entry.h}\n")


def read_annotation(path):
    annotation = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line == "absent":
                annotation.append(None)
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise AnnotationError(f"{path}:{lineno}: expected 'x,y,w,h' or "
                                      f"'absent', got {line!r}")
            try:
                annotation.append(Box(*(float(p) for p in parts)))
            except ValueError as exc:
                raise AnnotationError(f"{path}:{lineno}: {exc}") from None
    return annotation


def _spec_to_text(spec):
    lines = []
    for f in fields(WorldSpec):
        v = getattr(spec, f.name)
        if f.name == "absent":
            v = ";".join(f"{s}:{e}" for s, e in v)
        lines.append(f"{f.name}={v}")
    return "\n".join(lines) + "\n"

def _spec_from_text(text):
    values = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, raw = line.split("=", 1)
        key = key.strip(); raw = raw.strip()
        f = {fl.name: fl for fl in fields(WorldSpec)}.get(key)
        if f is None:
            raise ValueError(f"unknown sequence spec key {key!r}")
        if key == "absent":
            values[key] = tuple(tuple(int(x) for x in part.split(":"))
                                for part in raw.split(";") if part)
        elif isinstance(f.default, int):
            values[key] = int(raw)
        elif isinstance(f.default, float):
            values[key] = float(raw)
        else:
            values[key] = raw
    return WorldSpec(**values)


def write_sequence(seq, root):
    seq_dir = os.path.join(root, seq.name)
    frames_dir = os.path.join(seq_dir, "frames")
    os.makedirs(frames_dir, exist_ok=True)
    for i, frame in enumerate(seq.frames):
        write_ppm(os.path.join(frames_dir, f"{i:06d}.ppm"), frame)
    write_annotation(os.path.join(seq_dir, "groundtruth.txt"), seq.annotation)
    if seq.spec is not None:
        with open(os.path.join(seq_dir, "spec.txt"), "w", encoding="ascii") as fh:
            fh.write(_spec_to_text(seq.spec))


def read_sequence(seq_dir):
    name = os.path.basename(os.path.normpath(seq_dir))
    frames_dir = os.path.join(seq_dir, "frames")
    frame_files = sorted(os.listdir(frames_dir))
    frames = [read_ppm(os.path.join(frames_dir, f)) for f in frame_files]
    annotation = read_annotation(os.path.join(seq_dir, "groundtruth.txt"))
    spec = None
    spec_path = os.path.join(seq_dir, "spec.txt")
    if os.path.exists(spec_path):
        with open(spec_path, "r", encoding="ascii") as fh:
            spec = _spec_from_text(fh.read())
    return Sequence(name=name, frames=frames, annotation=annotation, spec=spec)


def write_dataset(sequences, root):
    os.makedirs(root, exist_ok=True)
    for seq in sequences:
        write_sequence(seq, root)


def read_dataset(root):
    names = sorted(d for d in os.listdir(root)
                   if os.path.isdir(os.path.join(root, d, "frames")))
    return [read_sequence(os.path.join(root, d)) for d in names]


# ---------------------------------------------------------------------------
# corpus construction

def build_corpus(count, base_seed, length=40, size_range=(62.0, 82.0),
                 absences=0, absence_length=6, distractors=3,
                 distractor_similarity=0.5, appearance_drift=0.0,
                 width=480, height=360, step_sigma=4.0, scale_sigma=0.004):
    """A family of sequences with per-sequence seeds, sizes and schedules."""
    rng = np.random.default_rng(base_seed)
    sequences = []
    for i in range(count):
        tw = rng.uniform(*size_range)
        th = tw * rng.uniform(0.85, 1.18)
        schedule = []
        if absences > 0:
            usable = length - 8
            starts = sorted(rng.choice(
                np.arange(6, usable - absence_length, absence_length + 4),
                size=min(absences, 1 + (usable - 10) // (absence_length + 4)),
                replace=False))
            for s in starts:
                schedule.append((int(s), int(s + absence_length - 1)))
        spec = WorldSpec(
            width=width, height=height, length=length,
            seed=int(rng.integers(0, 2 ** 31)),
            pattern_seed=int(rng.integers(0, 2 ** 31)),
            target_w=float(tw), target_h=float(th),
            step_sigma=step_sigma, scale_sigma=scale_sigma,
            absent=tuple(schedule), distractors=distractors,
            distractor_similarity=distractor_similarity,
            appearance_drift=appearance_drift,
        )
        frames, annotation = generate(spec)
        sequences.append(Sequence(name=f"seq{i:03d}", frames=frames,
                                  annotation=annotation, spec=spec))
    return sequences


def build_teleport_trials(count, base_seed, length=22, present_prefix=8,
                          absence_length=4, **kwargs):
    """Teleport suite: one absence, far reappearance, known reappear frame."""
    trials = []
    rng = np.random.default_rng(base_seed)
    for i in range(count):
        spec = WorldSpec(
            length=length,
            seed=int(rng.integers(0, 2 ** 31)),
            pattern_seed=int(rng.integers(0, 2 ** 31)),
            target_w=float(rng.uniform(64, 80)),
            target_h=float(rng.uniform(64, 80)),
            absent=((present_prefix, present_prefix + absence_length - 1),),
            **kwargs,
        )
        frames, annotation = generate(spec)
        trials.append(Sequence(name=f"trial{i:03d}", frames=frames,
                               annotation=annotation, spec=spec))
    return trials


def reappearance_index(annotation):
    """First present frame after the first absence, or None."""
    seen_absent = False
    for i, entry in enumerate(annotation):
        if entry is None:
            seen_absent = True
        elif seen_absent:
            return i
    return None


# ---------------------------------------------------------------------------
# training-pair sampling

class SamplingError(RuntimeError):
    pass


def sample_training_pair(corpus, rng, cfg=None, jitter=True, max_interval=30,
                         max_retries=20):
    """Draw (template 127x127x3, search 300x300x3, truths in search coords).

    Template: tight crop of the truth box at frame t.  Search: square crop of
    4x the truth's mean extent around frame t+interval's truth, with affine
    jitter (rotation <= 10 deg, scale 0.8-1.2, center shift) and one random
    erasing rectangle applied to the search side only.
    """
    from .config import Config
    cfg = cfg or Config()
    present_per_seq = [
        [i for i, a in enumerate(seq.annotation) if a is not None]
        for seq in corpus
    ]
    candidates = [i for i, pres in enumerate(present_per_seq) if len(pres) >= 1]
    if not candidates:
        raise SamplingError("corpus has no present frames")

    for _ in range(max_retries):
        si = candidates[rng.integers(len(candidates))]
        seq, present = corpus[si], present_per_seq[si]
        t = int(present[rng.integers(len(present))])
        lo = t + 1 if max_interval >= 1 else t
        later = [j for j in present if lo <= j <= t + max_interval]
        if not later:
            continue
        t2 = int(later[rng.integers(len(later))])

        tb = seq.annotation[t]
        template = crop_resize(seq.frames[t].astype(np.float64) / 255.0,
                               tb.cx, tb.cy, tb.w, tb.h, cfg.template_size)

        sb = seq.annotation[t2]
        side = cfg.search_scale * math.sqrt(sb.w * sb.h)
        if jitter:
            side /= rng.uniform(0.8, 1.2)
            angle = math.radians(rng.uniform(-10.0, 10.0))
            cx = sb.cx + rng.uniform(-0.2, 0.2) * side
            cy = sb.cy + rng.uniform(-0.2, 0.2) * side
        else:
            angle, cx, cy = 0.0, sb.cx, sb.cy
        frame = seq.frames[t2].astype(np.float64) / 255.0
        search = rotated_crop(frame, cx, cy, side, cfg.search_size, angle)
        truth = box_frame_to_rotated_patch(sb, cx, cy, side, cfg.search_size,
                                           angle)
        # reject pairs whose truth center was jittered out of the patch
        if not (0 <= truth.cx < cfg.search_size and 0 <= truth.cy < cfg.search_size):
            continue
        x1 = max(truth.x, 0.0)
        y1 = max(truth.y, 0.0)
        x2 = min(truth.x + truth.w, float(cfg.search_size))
        y2 = min(truth.y + truth.h, float(cfg.search_size))
        if x2 - x1 < 4 or y2 - y1 < 4:
            continue
        truth = Box(x1, y1, x2 - x1, y2 - y1)

        if jitter:
            search = random_erase(search, rng)
        return template, search, [truth]
    raise SamplingError(f"no valid training pair after {max_retries} attempts")


def random_erase(patch, rng, max_area_fraction=0.2):
    """Overwrite one rectangle (<= 20% of the patch) with uniform noise."""
    out = patch.copy()
    h, w = patch.shape[:2]
    for _ in range(10):
        ew = int(rng.uniform(0.1, 0.5) * w)
        eh = int(rng.uniform(0.1, 0.5) * h)
        if ew * eh <= max_area_fraction * w * h and ew >= 2 and eh >= 2:
            break
    else:
        ew = eh = int(math.sqrt(max_area_fraction) * min(w, h) / 2)
    x = int(rng.integers(0, w - ew + 1))
    y = int(rng.integers(0, h - eh + 1))
    out[y:y + eh, x:x + ew] = rng.uniform(0.0, 1.0, size=(eh, ew, patch.shape[2]))
    return out
