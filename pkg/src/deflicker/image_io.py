"""8-bit image file I/O: PNG (via Pillow) and binary PPM, both RGB.

Float [0, 1] to byte conversion is round-half-away-from-zero on value*255,
i.e. floor(v*255 + 0.5) after clipping, so emitted images roundtrip through
this module's own reader bit-exactly.
"""

from __future__ import annotations

import numpy as np
from PIL import Image


class ImageFormatError(ValueError):
    """Unsupported or malformed image file."""


def to_u8(img: np.ndarray) -> np.ndarray:
    """[0, 1] float image to uint8, rounding halves away from zero."""
    img = np.asarray(img, dtype=np.float64)
    return np.floor(np.clip(img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def to_float(img: np.ndarray) -> np.ndarray:
    """uint8 image to float64 in [0, 1]."""
    return np.asarray(img, dtype=np.float64) / 255.0


def _require_rgb(u8: np.ndarray) -> np.ndarray:
    if u8.ndim == 2:
        u8 = np.repeat(u8[:, :, None], 3, axis=2)
    if u8.ndim != 3 or u8.shape[2] != 3:
        raise ImageFormatError(f"expected (H, W, 3) image data, got {u8.shape}")
    return u8


def save_image(path, img: np.ndarray) -> None:
    """Write a float [0,1] (or uint8) RGB image as .png or .ppm (P6)."""
    path = str(path)
    u8 = img if img.dtype == np.uint8 else to_u8(img)
    u8 = np.ascontiguousarray(_require_rgb(u8))
    if path.lower().endswith(".png"):
        Image.fromarray(u8, mode="RGB").save(path, format="PNG")
    elif path.lower().endswith(".ppm"):
        h, w, _ = u8.shape
        with open(path, "wb") as fh:
            fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
            fh.write(u8.tobytes())
    else:
        raise ImageFormatError(f"unsupported image extension: {path}")


def load_image(path) -> np.ndarray:
    """Read a .png or .ppm image as float64 RGB in [0, 1]."""
    path = str(path)
    if path.lower().endswith(".png"):
        with Image.open(path) as im:
            u8 = np.asarray(im.convert("RGB"), dtype=np.uint8)
    elif path.lower().endswith(".ppm"):
        u8 = _load_ppm(path)
    else:
        raise ImageFormatError(f"unsupported image extension: {path}")
    return to_float(u8)


def _load_ppm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    fields: list[bytes] = []
    pos = 0
    # header: magic, width, height, maxval; '#' comments allowed between fields
    while len(fields) < 4 and pos < len(data):
        if data[pos:pos + 1].isspace():
            pos += 1
        elif data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
        else:
            end = pos
            while end < len(data) and not data[end:end + 1].isspace():
                end += 1
            fields.append(data[pos:end])
            pos = end
    if len(fields) != 4 or fields[0] != b"P6":
        raise ImageFormatError(f"not a binary PPM (P6) file: {path}")
    try:
        w, h, maxval = (int(f) for f in fields[1:])
    except ValueError:
        raise ImageFormatError(f"malformed PPM header in {path}") from None
    if maxval != 255:
        raise ImageFormatError(f"only maxval 255 PPM supported, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    pixels = data[pos:pos + 3 * w * h]
    if len(pixels) != 3 * w * h:
        raise ImageFormatError(f"truncated PPM pixel data in {path}")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(h, w, 3)


def save_heatmap(path, values: np.ndarray, sidecar_path=None) -> None:
    """Write a 2-D array as a min-max normalized grayscale PNG.

    The normalization range is recorded in a sidecar text file so original
    values stay recoverable.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ImageFormatError(f"heatmap expects a 2-D array, got {values.shape}")
    lo = float(values.min())
    hi = float(values.max())
    span = hi - lo if hi > lo else 1.0
    norm = (values - lo) / span
    u8 = np.floor(norm * 255.0 + 0.5).astype(np.uint8)
    Image.fromarray(u8, mode="L").save(str(path), format="PNG")
    if sidecar_path is not None:
        with open(sidecar_path, "w", encoding="utf-8") as fh:
            fh.write(f"min {lo:.12g}\nmax {hi:.12g}\n")
