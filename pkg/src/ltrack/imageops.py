"""Bilinear patch sampling and box coordinate transforms between frame and patch.

Coordinate convention: boxes live in continuous pixel space where pixel (i, j)
covers [j, j+1) x [i, i+1); its sample sits at the center (j+0.5, i+0.5).
"""
import numpy as np

from .geometry import Box

FILL_VALUE = 0.45


def affine_sample(image, matrix, offset, out_h, out_w, fill=FILL_VALUE):
    """Sample out[u, v] = image(A @ (v+0.5, u+0.5) + t), bilinearly.

    ``matrix`` is the 2x2 patch->frame linear map (x right, y down) and
    ``offset`` the translation.  Samples falling outside the frame get the
    constant fill value.
    """
    H, W = image.shape[:2]
    vs, us = np.meshgrid(np.arange(out_w) + 0.5, np.arange(out_h) + 0.5)
    fx = matrix[0][0] * vs + matrix[0][1] * us + offset[0]
    fy = matrix[1][0] * vs + matrix[1][1] * us + offset[1]
    sx = fx - 0.5
    sy = fy - 0.5
    outside = (sx < -1.0) | (sx > W) | (sy < -1.0) | (sy > H)
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    tx = sx - x0
    ty = sy - y0
    x0c = np.clip(x0, 0, W - 1)
    x1c = np.clip(x0 + 1, 0, W - 1)
    y0c = np.clip(y0, 0, H - 1)
    y1c = np.clip(y0 + 1, 0, H - 1)
    img = image if image.ndim == 3 else image[:, :, None]
    tx = tx[:, :, None]
    ty = ty[:, :, None]
    top = img[y0c, x0c] * (1 - tx) + img[y0c, x1c] * tx
    bot = img[y1c, x0c] * (1 - tx) + img[y1c, x1c] * tx
    out = top * (1 - ty) + bot * ty
    out[outside] = fill
    if image.ndim == 2:
        out = out[:, :, 0]
    return out


def crop_resize(image, cx, cy, side_w, side_h, out_size, fill=FILL_VALUE):
    """Crop a (side_w x side_h) region centered at (cx, cy), resized to out^2."""
    matrix = ((side_w / out_size, 0.0), (0.0, side_h / out_size))
    offset = (cx - side_w / 2.0, cy - side_h / 2.0)
    return affine_sample(image, matrix, offset, out_size, out_size, fill)


def rotated_crop(image, cx, cy, side, out_size, angle_rad, fill=FILL_VALUE):
    """Square crop of extent ``side`` rotated by ``angle_rad`` about its center."""
    c, s = np.cos(angle_rad), np.sin(angle_rad)
    sc = side / out_size
    matrix = ((c * sc, -s * sc), (s * sc, c * sc))
    half = out_size / 2.0
    offset = (cx - (matrix[0][0] * half + matrix[0][1] * half),
              cy - (matrix[1][0] * half + matrix[1][1] * half))
    return affine_sample(image, matrix, offset, out_size, out_size, fill)


def box_frame_to_patch(box, cx, cy, side, out_size):
    s = out_size / side
    return Box((box.x - (cx - side / 2.0)) * s,
               (box.y - (cy - side / 2.0)) * s,
               box.w * s, box.h * s)


def box_patch_to_frame(box, cx, cy, side, out_size):
    s = side / out_size
    return Box(box.x * s + (cx - side / 2.0),
               box.y * s + (cy - side / 2.0),
               box.w * s, box.h * s)


def box_frame_to_rotated_patch(box, cx, cy, side, out_size, angle_rad):
    """Axis-aligned bound of the box corners mapped into a rotated crop."""
    c, s = np.cos(angle_rad), np.sin(angle_rad)
    corners = np.array([
        [box.x, box.y],
        [box.x + box.w, box.y],
        [box.x, box.y + box.h],
        [box.x + box.w, box.y + box.h],
    ])
    rel = corners - np.array([cx, cy])
    # inverse rotation, then scale to patch units about the patch center
    px = (c * rel[:, 0] + s * rel[:, 1]) * out_size / side + out_size / 2.0
    py = (-s * rel[:, 0] + c * rel[:, 1]) * out_size / side + out_size / 2.0
    x1, x2 = px.min(), px.max()
    y1, y2 = py.min(), py.max()
    return Box(x1, y1, max(x2 - x1, 1e-6), max(y2 - y1, 1e-6))


def clip_box_to_patch(box, out_size, min_size=1e-3):
    x1 = min(max(box.x, 0.0), out_size - min_size)
    y1 = min(max(box.y, 0.0), out_size - min_size)
    x2 = min(max(box.x + box.w, min_size), out_size)
    y2 = min(max(box.y + box.h, min_size), out_size)
    return Box(x1, y1, max(x2 - x1, min_size), max(y2 - y1, min_size))
