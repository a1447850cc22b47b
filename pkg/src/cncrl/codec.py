"""State views: how an environment state becomes model symbols.

Three views:

    atomic   one symbol, the state's atomic index
    cells    the environment's factored view, one symbol per factor
    patches  factors regrouped into (ph, pw) rectangles of the grid;
             each patch becomes one composite symbol (bytes of its cell
             values), giving a sparse huge-alphabet factor per region

The view decides the symbol-block shape every bucket model consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError
from .envs.base import Mdp


@dataclass(frozen=True)
class ViewSpec:
    kind: str = "atomic"
    patch: tuple[int, int] | None = None

    @staticmethod
    def from_config(cfg) -> "ViewSpec":
        if cfg is None:
            return ViewSpec("atomic")
        if isinstance(cfg, str):
            return ViewSpec(cfg)
        kind = cfg.get("kind", "atomic")
        patch = tuple(cfg["patch"]) if "patch" in cfg else None
        return ViewSpec(kind, patch)


class StateCodec:
    """Encodes environment states into symbol blocks for one view."""

    def __init__(self, env: Mdp, view: ViewSpec):
        self.env = env
        self.view = view
        if view.kind == "atomic":
            self.block_len = 1
            self.factor_alphabets = None
            self.atomic_size = env.n_states
            self.log_factor_sizes = None
        elif view.kind == "cells":
            if env.factor_alphabets is None:
                raise ConfigError(f"{type(env).__name__} has no factored view")
            self.block_len = len(env.factor_alphabets)
            self.factor_alphabets = tuple(env.factor_alphabets)
            self.atomic_size = None
            self.log_factor_sizes = [math.log(b) for b in self.factor_alphabets]
        elif view.kind == "patches":
            if env.grid_shape is None or env.factor_alphabets is None:
                raise ConfigError(f"{type(env).__name__} has no grid for a patch view")
            h, w = env.grid_shape
            ph, pw = view.patch or (4, 4)
            if h % ph or w % pw:
                raise ConfigError(f"patch {ph}x{pw} does not tile a {h}x{w} grid")
            sizes = set(env.factor_alphabets)
            if len(sizes) != 1:
                raise ConfigError("patch view needs a uniform cell alphabet")
            self.cell_alphabet = sizes.pop()
            self.ph, self.pw, self.h, self.w = ph, pw, h, w
            self.block_len = (h // ph) * (w // pw)
            cells_per_patch = ph * pw
            self.log_factor_sizes = [cells_per_patch * math.log(self.cell_alphabet)] * self.block_len
            self.factor_alphabets = tuple(
                float(self.cell_alphabet) ** cells_per_patch for _ in range(self.block_len))
            self.atomic_size = None
            self._patch_cell_indices = self._tile_indices()
            # Full-width patches are contiguous runs of the row-major
            # buffer, so encoding is pure slicing.
            self._patch_slices = None
            if pw == w:
                self._patch_slices = [slice(idx[0], idx[-1] + 1)
                                      for idx in self._patch_cell_indices]
        else:
            raise ConfigError(f"unknown state view '{view.kind}'")

    def _tile_indices(self):
        rows = []
        for py in range(self.h // self.ph):
            for px in range(self.w // self.pw):
                idx = []
                for dy in range(self.ph):
                    base = (py * self.ph + dy) * self.w + px * self.pw
                    idx.extend(range(base, base + self.pw))
                rows.append(tuple(idx))
        return rows

    def encode(self, state) -> tuple:
        kind = self.view.kind
        if kind == "atomic":
            return (self.env.state_index(state),)
        if kind == "cells":
            return self.env.factor_view(state)
        buf = self.env.cell_bytes(state) if hasattr(self.env, "cell_bytes") \
            else bytes(self.env.factor_view(state))
        if self._patch_slices is not None:
            return tuple(buf[sl] for sl in self._patch_slices)
        return tuple(bytes(buf[i] for i in idx) for idx in self._patch_cell_indices)

    def describe(self) -> str:
        if self.view.kind == "patches":
            return f"patches({self.ph}x{self.pw})"
        return self.view.kind
