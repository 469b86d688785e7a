"""
Prototype matching with sliding windows.

A bank holds K learnable grids shaped like the fused feature grid. At each
position the prototype patch is compared by cosine similarity with every
feature patch inside the p x p window centered there (clipped at borders).
The best match per prototype gives D_k = 1 - max, and the distance map is
the minimum of D_k over the bank.
"""

from functools import lru_cache
from typing import Tuple

import numpy as np

from shared.errors import DatasetError, ShapeMismatchError, WindowConfigError

from . import nn
from .autodiff import Function, Stream, Tensor, generator
from .autodiff import functional as F


def check_window(grid_h: int, grid_w: int, p: int) -> None:
    if p < 1 or p % 2 == 0:
        raise WindowConfigError(f"window side p must be a positive odd integer, got {p}")
    if p > min(grid_h, grid_w):
        raise WindowConfigError(f"window side p={p} exceeds the {grid_h}x{grid_w} patch grid")


@lru_cache(maxsize=64)
def neighbor_table(grid_h: int, grid_w: int, p: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Window members per position.

    Returns:
        (index, valid): both (grid_h * grid_w, p * p). Out-of-grid slots point
        at the center position and are marked invalid.
    """
    check_window(grid_h, grid_w, p)
    r = p // 2
    rows, cols = np.divmod(np.arange(grid_h * grid_w), grid_w)
    dr, dc = np.divmod(np.arange(p * p), p)
    nr = rows[:, None] + dr[None, :] - r
    nc = cols[:, None] + dc[None, :] - r
    valid = (nr >= 0) & (nr < grid_h) & (nc >= 0) & (nc < grid_w)
    index = np.where(valid, nr * grid_w + nc, (rows * grid_w + cols)[:, None])
    index.setflags(write=False)
    valid.setflags(write=False)
    return index, valid


def window_cardinality(grid_h: int, grid_w: int, p: int) -> np.ndarray:
    """Number of in-grid window members at every position."""
    _, valid = neighbor_table(grid_h, grid_w, p)
    return valid.sum(axis=1).reshape(grid_h, grid_w)


class WindowCosine(Function):
    """
    Cosine similarity of each prototype patch with its window of feature patches.

    bank: (K, h, w, C), feature: (B, h, w, C) -> (B, K, h*w, p*p); slots
    outside the grid are -inf so a max never selects them.
    """

    op_name = "window-cosine"

    def forward(self, bank, feature, p: int = 3):
        if bank.ndim != 4 or feature.ndim != 4 or bank.shape[1:] != feature.shape[1:]:
            raise ShapeMismatchError(self.op_name, f"bank {bank.shape} vs feature {feature.shape}")
        k, h, w, c = bank.shape
        batch = feature.shape[0]
        index, valid = neighbor_table(h, w, p)

        mb = bank.reshape(k, h * w, c)
        fw = feature.reshape(batch, h * w, c)[:, index, :]
        nm = np.linalg.norm(mb, axis=-1)
        nf = np.linalg.norm(fw, axis=-1)
        denom = nm[None, :, :, None] * nf[:, None, :, :]
        usable = (denom > 0) & valid

        safe = np.where(usable, denom, 1)
        sim = np.where(usable, np.einsum("kgc,bgqc->bkgq", mb, fw) / safe, 0)

        self.shape_in = (k, h, w, c, batch)
        self.index, self.mb, self.fw = index, mb, fw
        self.nm, self.nf = np.where(nm > 0, nm, 1), np.where(nf > 0, nf, 1)
        self.usable, self.safe, self.sim = usable, safe, sim
        return np.where(valid, sim, -np.inf)

    def backward(self, grad):
        k, h, w, c, batch = self.shape_in
        g = np.where(self.usable, grad, 0)
        gs = g * self.sim
        scaled = g / self.safe

        g_bank = np.einsum("bkgq,bgqc->kgc", scaled, self.fw)
        g_bank -= self.mb * (gs.sum(axis=(0, 3)) / self.nm ** 2)[..., None]

        g_fw = np.einsum("bkgq,kgc->bgqc", scaled, self.mb)
        g_fw -= self.fw * (gs.sum(axis=1) / self.nf ** 2)[..., None]

        positions = h * w
        g_feat = np.zeros((positions, batch, c), dtype=grad.dtype)
        np.add.at(g_feat, self.index.reshape(-1), g_fw.transpose(1, 2, 0, 3).reshape(-1, batch, c))
        return g_bank.reshape(k, h, w, c), g_feat.transpose(1, 0, 2).reshape(batch, h, w, c)


def window_cosine(bank: Tensor, feature: Tensor, p: int) -> Tensor:
    return WindowCosine.apply(bank, feature, p=p)


def window_distance(bank: Tensor, feature: Tensor, p: int = 3) -> Tensor:
    """Distance map (B, h, w) with values in [0, 2]."""
    batch, h, w, _ = feature.shape
    best = F.max(window_cosine(bank, feature, p), axis=-1)
    per_prototype = F.scalar_add(F.scalar_mul(best, -1.0), 1.0)
    return F.reshape(F.min(per_prototype, axis=1), (batch, h, w))


def nearest_prototype_index(bank: Tensor, feature: Tensor, p: int = 3) -> np.ndarray:
    """(B, h, w) index of the prototype with the highest windowed similarity; lowest k on ties."""
    batch, h, w, _ = feature.shape
    best = window_cosine(Tensor.wrap(bank.data), Tensor.wrap(feature.data), p).data.max(axis=-1)
    return np.argmax(best, axis=1).reshape(batch, h, w)


def assemble_final_prototype(bank: Tensor, feature: Tensor, p: int = 3) -> np.ndarray:
    """(B, h, w, C) grid taking each position's patch from its best-matching prototype."""
    choice = nearest_prototype_index(bank, feature, p)
    _, h, w = choice.shape
    rows, cols = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    return bank.data[choice, rows[None], cols[None]]


def upsample_distance(distance: Tensor, height: int, width: int) -> Tensor:
    """Bilinear (corner-aligned) upsampling of a distance map to image size."""
    gh, gw = distance.shape[-2:]
    if height < gh or width < gw or height % gh or width % gw:
        raise ShapeMismatchError("upsample-distance", f"{height}x{width} is not a multiple of {gh}x{gw}")
    return F.bilinear_resize(distance, height, width)


class PrototypeBank(nn.Module):
    """K learnable prototype grids (K, h, w, C)."""

    def __init__(self, num_prototypes: int, grid: int, channels: int, window: int = 3):
        if num_prototypes < 1:
            raise WindowConfigError("a prototype bank needs K >= 1")
        check_window(grid, grid, window)
        self.window = window
        self.bank = nn.parameter(np.zeros((num_prototypes, grid, grid, channels)), "bank")

    @property
    def num_prototypes(self) -> int:
        return self.bank.shape[0]

    def __call__(self, feature: Tensor) -> Tensor:
        return window_distance(self.bank, feature, self.window)

    def load_samples(self, samples: np.ndarray, seed: int) -> None:
        self.bank.data = init_prototypes(samples, self.num_prototypes, seed).astype(self.bank.dtype)


def init_prototypes(samples: np.ndarray, num_prototypes: int, seed: int) -> np.ndarray:
    """
    Draw K feature grids without replacement.

    Args:
        samples: (S, h, w, C) fused features from early training batches
    """
    samples = np.asarray(samples)
    if samples.shape[0] < num_prototypes:
        raise DatasetError(f"need at least {num_prototypes} feature samples, got {samples.shape[0]}")
    rng = generator(seed, Stream.PROTOTYPES)
    chosen = rng.choice(samples.shape[0], size=num_prototypes, replace=False)
    return np.array(samples[chosen], copy=True)
