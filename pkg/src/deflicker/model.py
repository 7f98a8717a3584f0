"""The three-frame restoration network and its checkpoint format.

Parameters live in one flat, insertion-ordered {name: float64 array} dict so
the whole model can be lifted onto a tape (training, gradient checks) or run
as plain numpy (inference) without separate code paths.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import blocks
from .tensor_ops import ConvSpec, ShapeError


class CheckpointError(Exception):
    """Malformed or mismatched checkpoint file."""


@dataclass(frozen=True)
class ModelConfig:
    """Widths, depths and attention geometry per resolution stage."""

    channels: tuple[int, int, int] = (32, 64, 96)
    blocks: tuple[int, int, int] = (2, 2, 2)
    heads: tuple[int, int, int] = (1, 2, 4)
    window: int = 8
    gamma: float = 2.66

    def __post_init__(self):
        for name in ("channels", "blocks", "heads"):
            v = getattr(self, name)
            if len(v) != 3 or any(int(x) != x or x < 1 for x in v):
                raise ValueError(f"{name} must be three positive ints, got {v}")
        for c, h in zip(self.channels, self.heads):
            if c % h:
                raise ValueError(f"channels {c} not divisible by heads {h}")
        if self.window < 1:
            raise ValueError(f"window must be positive, got {self.window}")

    @property
    def pad_multiple(self) -> int:
        # three halvings, then a further half-resolution attention grid
        return 8 * self.window


def tiny_config() -> ModelConfig:
    """Desk-scale configuration for tests and quick experiments."""
    return ModelConfig(channels=(8, 16, 24), blocks=(2, 2, 2), heads=(1, 2, 4),
                       window=4)


def _stage_specs(cfg: ModelConfig) -> dict[str, ConvSpec]:
    c1, c2, c3 = cfg.channels
    return {
        "embed": ConvSpec.same(3, 9, 3 * c1, groups=3),
        "down1": ConvSpec(3, c1, c2, stride=2, padding=1),
        "down2": ConvSpec(3, c2, c3, stride=2, padding=1),
        "down3": ConvSpec(3, c3, c3, stride=2, padding=1),
        "up3": ConvSpec.same(3, c3, c3),
        "skip3": ConvSpec(1, 2 * c3, c3),
        "up2": ConvSpec.same(3, c3, c2),
        "skip2": ConvSpec(1, 2 * c2, c2),
        "up1": ConvSpec.same(3, c2, c1),
        "skip1": ConvSpec(1, 2 * c1, c1),
        "head": ConvSpec.same(3, c1, 3),
    }


def build_model(cfg: ModelConfig, seed: int = 0) -> dict[str, np.ndarray]:
    """Freshly initialized parameters; deterministic in (cfg, seed)."""
    rng = np.random.default_rng(seed)
    specs = _stage_specs(cfg)
    params: dict[str, np.ndarray] = {}

    def put(prefix, d):
        params.update(blocks._with_prefix(prefix, d))

    put("embed.", blocks.init_conv(rng, specs["embed"]))
    put("pfm.", blocks.init_pfm(rng, cfg.channels[0]))
    for i in range(1, 4):
        c, h, n = cfg.channels[i - 1], cfg.heads[i - 1], cfg.blocks[i - 1]
        for j in range(n):
            put(f"enc{i}.block{j}.",
                blocks.init_block(rng, c, h, cfg.window, "wmha", cfg.gamma))
        put(f"down{i}.", blocks.init_conv(rng, specs[f"down{i}"]))
    for i in (3, 2, 1):
        c, h, n = cfg.channels[i - 1], cfg.heads[i - 1], cfg.blocks[i - 1]
        put(f"up{i}.", blocks.init_conv(rng, specs[f"up{i}"]))
        put(f"skip{i}.", blocks.init_conv(rng, specs[f"skip{i}"]))
        for j in range(n):
            put(f"dec{i}.block{j}.",
                blocks.init_block(rng, c, h, cfg.window, "wdam", cfg.gamma))
    # residual head starts at zero so the initial output is the input frame
    put("head.", blocks.init_conv(rng, specs["head"], zero=True))
    return params


def param_count(params: dict[str, np.ndarray]) -> int:
    return int(sum(np.size(v) for v in params.values()))


def _check_frames(x0, x1, x2):
    shapes = [np.shape(ad.value_of(x)) for x in (x0, x1, x2)]
    if len(set(shapes)) != 1:
        raise ShapeError(f"frames disagree in shape: {shapes}")
    if len(shapes[0]) != 3 or shapes[0][2] != 3:
        raise ShapeError(f"frames must be (H, W, 3), got {shapes[0]}")


def forward(params, x0, x1, x2, cfg: ModelConfig):
    """Predict the restored reference frame (unclamped).

    Frames are (H, W, 3) arrays in [0, 1]; x1 is the frame being restored.
    Spatial sides are reflect-padded up to the stage multiple and the
    residual cropped back, so any size with pad < side is accepted.
    """
    _check_frames(x0, x1, x2)
    h, w, _ = np.shape(ad.value_of(x0))
    mult = cfg.pad_multiple
    hp = -(-h // mult) * mult
    wp = -(-w // mult) * mult
    if hp - h >= h or wp - w >= w:
        raise ShapeError(f"input {h}x{w} too small to pad to a multiple of {mult}")
    specs = _stage_specs(cfg)
    p = lambda n: params[n]
    c1 = cfg.channels[0]

    x = ad.concat([ad.reflect_pad(f, hp - h, wp - w) for f in (x0, x1, x2)], axis=2)
    y = ad.conv2d(x, specs["embed"], p("embed.w"), p("embed.b"))
    f = blocks.pfm_fuse(ad.narrow(y, 2, 0, c1), ad.narrow(y, 2, c1, c1),
                        ad.narrow(y, 2, 2 * c1, c1), params, "pfm.", c1)

    skips = []
    for i in range(1, 4):
        c, hd, n = cfg.channels[i - 1], cfg.heads[i - 1], cfg.blocks[i - 1]
        skips.append(f)
        for j in range(n):
            f = blocks.block_forward(f, params, f"enc{i}.block{j}.", c, hd,
                                     cfg.window, "wmha", cfg.gamma)
        f = ad.conv2d(f, specs[f"down{i}"], p(f"down{i}.w"), p(f"down{i}.b"))

    for i in (3, 2, 1):
        c, hd, n = cfg.channels[i - 1], cfg.heads[i - 1], cfg.blocks[i - 1]
        f = ad.nearest_upsample(f)
        f = ad.conv2d(f, specs[f"up{i}"], p(f"up{i}.w"), p(f"up{i}.b"))
        f = ad.concat([f, skips[i - 1]], axis=2)
        f = ad.conv2d(f, specs[f"skip{i}"], p(f"skip{i}.w"), p(f"skip{i}.b"))
        for j in range(n):
            f = blocks.block_forward(f, params, f"dec{i}.block{j}.", c, hd,
                                     cfg.window, "wdam", cfg.gamma)

    r = ad.conv2d(f, specs["head"], p("head.w"), p("head.b"))
    return ad.add(x1, ad.crop(r, h, w))


def restore(params, x0, x1, x2, cfg: ModelConfig) -> np.ndarray:
    """Inference entry point: forward pass clamped to the display range."""
    pred = ad.value_of(forward(params, x0, x1, x2, cfg))
    return np.clip(pred, 0.0, 1.0)


# ---------------------------------------------------------------------------
# checkpoint serialization
# ---------------------------------------------------------------------------

_MAGIC = b"FLKR"
_VERSION = 1


def save_checkpoint(path, params: dict[str, np.ndarray]) -> None:
    """Write parameters as little-endian f32 in insertion order."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _VERSION, len(params)))
        for name, value in params.items():
            raw = name.encode("utf-8")
            arr = np.ascontiguousarray(value, dtype="<f4")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{max(arr.ndim, 0)}I", *arr.shape))
            fh.write(arr.tobytes(order="C"))


def load_checkpoint(path, reference: dict[str, np.ndarray] | None = None
                    ) -> dict[str, np.ndarray]:
    """Read a checkpoint back as float64 arrays.

    With a reference parameter dict, the stored names and shapes must match
    it exactly; the result is returned in reference order.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    pos = 0

    def take(n, what):
        nonlocal pos
        if pos + n > len(data):
            raise CheckpointError(f"unexpected end of checkpoint while reading {what}")
        chunk = data[pos:pos + n]
        pos += n
        return chunk

    if take(4, "magic") != _MAGIC:
        raise CheckpointError("bad magic: not a checkpoint file")
    version, count = struct.unpack("<II", take(8, "header"))
    if version != _VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")

    loaded: dict[str, np.ndarray] = {}
    for _ in range(count):
        (nlen,) = struct.unpack("<H", take(2, "name length"))
        name = take(nlen, "name").decode("utf-8")
        (ndim,) = struct.unpack("<B", take(1, "rank"))
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim, "shape"))
        n_values = int(np.prod(shape, dtype=np.int64))
        if n_values < 0 or 4 * n_values > len(data):
            raise CheckpointError(f"tensor shape overflow for {name}: {shape}")
        nbytes = 4 * n_values
        arr = np.frombuffer(take(nbytes, f"values of {name}"), dtype="<f4")
        loaded[name] = arr.reshape(shape).astype(np.float64)
    if pos != len(data):
        raise CheckpointError(f"{len(data) - pos} trailing bytes after last tensor")

    if reference is not None:
        missing = [n for n in reference if n not in loaded]
        extra = [n for n in loaded if n not in reference]
        if missing or extra:
            raise CheckpointError(
                f"parameter names do not match: missing {missing or 'none'}, "
                f"unknown {extra or 'none'}")
        for name, ref in reference.items():
            if loaded[name].shape != np.shape(ref):
                raise CheckpointError(
                    f"shape mismatch for {name}: checkpoint "
                    f"{loaded[name].shape}, model {np.shape(ref)}")
        loaded = {n: loaded[n] for n in reference}
    return loaded
