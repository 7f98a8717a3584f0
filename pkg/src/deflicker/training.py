"""Adam optimization and the desk-scale single-burst overfit loop."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import metrics, model
from .flicker import BurstTriplet
from .tensor_ops import ShapeError


class TrainingError(RuntimeError):
    """Raised when optimization produces a non-finite loss."""


@dataclass
class AdamState:
    """Per-parameter moment estimates plus the shared step counter."""

    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    @staticmethod
    def for_params(params: dict, lr: float = 1e-4) -> "AdamState":
        state = AdamState(lr=lr)
        for name, value in params.items():
            state.m[name] = np.zeros_like(value)
            state.v[name] = np.zeros_like(value)
        return state


def adam_step(params: dict, grads: dict, state: AdamState) -> None:
    """One bias-corrected Adam update, in place."""
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        if np.shape(g) != np.shape(p):
            raise ShapeError(f"gradient shape {np.shape(g)} != parameter "
                             f"shape {np.shape(p)} for {name}")
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


def loss_and_grads(params: dict, burst: BurstTriplet, cfg: model.ModelConfig):
    """One traced forward/backward pass; returns (loss, grads, prediction)."""
    tape = ad.Tape()
    leaves = {name: tape.leaf(value) for name, value in params.items()}
    pred = model.forward(leaves, *burst.frames, cfg)
    loss = ad.tmean(ad.absolute(ad.sub(pred, burst.clean)))
    grad_list = tape.backward(loss)
    grads = {name: grad_list[leaf.idx] for name, leaf in leaves.items()}
    return float(loss.value), grads, pred.value


def train_overfit(burst: BurstTriplet, cfg: model.ModelConfig, steps: int,
                  seed: int = 0, lr: float = 1e-4):
    """Overfit the network to a single burst with L1 loss.

    Returns (params, l1_curve, psnr_curve); curve entry k holds the metrics
    after k updates, so both lists have steps+1 entries.  L1 is the training
    loss on the unclamped prediction; PSNR compares the clamped output with
    the clean frame.  Deterministic given (cfg, seed).
    """
    params = model.build_model(cfg, seed=seed)
    state = AdamState.for_params(params, lr=lr)
    l1_curve: list[float] = []
    psnr_curve: list[float] = []
    for k in range(steps + 1):
        loss, grads, pred = loss_and_grads(params, burst, cfg)
        if not np.isfinite(loss):
            raise TrainingError(f"non-finite loss at step {k}")
        l1_curve.append(loss)
        psnr_curve.append(metrics.psnr(np.clip(pred, 0.0, 1.0), burst.clean))
        if k < steps:
            adam_step(params, grads, state)
    return params, l1_curve, psnr_curve


def write_curves(path, l1_curve, psnr_curve) -> None:
    """Emit training curves as CSV with header step,l1,psnr."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("step,l1,psnr\n")
        for k, (l1, p) in enumerate(zip(l1_curve, psnr_curve)):
            fh.write(f"{k},{l1:.10g},{metrics.format_db(p)}\n")


def full_network_gradcheck(h: float = 1e-5, tol: float = 1e-3,
                           coords_per_param: int = 3, seed: int = 0) -> ad.GradReport:
    """Finite-difference check of the end-to-end L1 loss gradient.

    Builds the small reference model on a 32x32 synthetic burst, perturbs all
    parameters away from their init (the zero head and zero modulation scalars
    would otherwise kill upstream gradients), and probes a representative
    subset of tensors spanning every module.

    The L1 target is the clean frame offset by +-1.5 per pixel: central
    differences must never cross the abs kink, and the mixed sign pattern
    keeps both abs branches active.  The network Jacobian under test is
    unchanged by the offset.
    """
    from . import flicker

    cfg = model.tiny_config()
    rng = np.random.default_rng(seed)
    scene = flicker.sample_scene(32, 32, seed=seed)
    fp = flicker.FlickerParams(exposure_time=2.5e-3, row_readout_time=6.25e-4,
                               gamma_w=1.0, min_gain=0.1)
    burst = flicker.synth_burst(scene, fp, seed=seed)
    target = burst.clean + rng.choice([-1.5, 1.5], size=burst.clean.shape)
    params = model.build_model(cfg, seed=seed)
    for value in params.values():
        value += 0.02 * rng.standard_normal(value.shape)

    names = [
        "embed.w",
        "pfm.gate0.w",
        "pfm.fuse.w",
        "pfm.fuse.b",
        "enc1.block0.ln1.g",
        "enc1.block0.attn.q.w",
        "enc1.block0.attn.bias_table",
        "enc1.block0.ffn.alpha",
        "enc1.block0.ffn.beta",
        "enc1.block0.ffn.expand.w",
        "enc1.block0.ffn.dw.w",
        "down1.w",
        "enc2.block1.attn.proj.w",
        "enc3.block0.attn.k.b",
        "up3.w",
        "skip3.w",
        "dec3.block0.attn.mod.w",
        "dec3.block0.attn.high.w",
        "dec3.block0.attn.v.w",
        "dec2.block1.ffn.proj.w",
        "dec1.block0.ln2.b",
        "head.w",
        "head.b",
    ]
    missing = [n for n in names if n not in params]
    if missing:
        raise TrainingError(f"gradcheck probe names absent from model: {missing}")
    probe = {n: params[n] for n in names}
    consts = {n: v for n, v in params.items() if n not in names}

    def build(p):
        merged = dict(consts)
        merged.update(p)
        pred = model.forward(merged, *burst.frames, cfg)
        return ad.tmean(ad.absolute(ad.sub(pred, target)))

    return ad.gradcheck(build, probe, h=h, tol=tol,
                        max_coords=coords_per_param, seed=seed)
