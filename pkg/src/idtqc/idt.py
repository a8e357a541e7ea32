"""PAM mapping, sub-block interleaving, frozen-tail/CP framing, and rates.

The framing turns a linear channel delay of up to D_max symbols into a
circular shift of each interleaved sub-block, which for a b-QC code is a
circular shift of the codeword by b times the delay.  Message sub-blocks
end in S*D_max frozen (field-zero) symbols; parity sub-blocks carry a
cyclic prefix of length D_max instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .galois import FieldSpec

__all__ = [
    "PamMap",
    "IdtConfig",
    "IdtFrame",
    "interleave",
    "deinterleave",
    "frame",
    "unframe",
    "unframe_and_transform",
    "actual_rate",
    "actual_rate_p2p",
    "actual_rate_cf",
]


@dataclass(frozen=True)
class PamMap:
    """Bijection between F_p and a centered p-PAM constellation.

    ``map``/``unmap`` work on the unscaled constellation (integers for
    p >= 3, half-integers for p = 2); ``scale`` converts to amplitudes
    meeting the average power constraint under uniform symbols.
    """

    field: FieldSpec
    power: float = 1.0

    @property
    def p(self) -> int:
        return self.field.p

    @property
    def offset(self) -> float:
        """Constellation point of the zero symbol."""
        return -0.5 if self.p == 2 else 0.0

    @property
    def symbol_energy(self) -> float:
        return 0.25 if self.p == 2 else (self.p * self.p - 1) / 12.0

    @property
    def scale(self) -> float:
        return float(np.sqrt(self.power / self.symbol_energy))

    def map(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=np.int64) % self.p
        if self.p == 2:
            return u - 0.5
        half = (self.p - 1) // 2
        return np.where(u <= half, u, u - self.p).astype(np.float64)

    def unmap(self, x) -> np.ndarray:
        """Fold any real value onto the lattice of constellation translates."""
        x = np.asarray(x, dtype=np.float64)
        return np.round(x - self.offset).astype(np.int64) % self.p

    def modulate(self, u) -> np.ndarray:
        """Field symbols to transmit amplitudes (power-scaled)."""
        return self.scale * self.map(u)

    @property
    def frozen_amplitude(self) -> float:
        """Transmit amplitude of a frozen (field-zero) symbol."""
        return self.scale * self.offset


@dataclass(frozen=True)
class IdtConfig:
    """Framing parameters: b sub-blocks of length L, delays bounded by D_max."""

    b: int
    L: int
    d_max: int
    n_sources: int
    r_d: float

    def __post_init__(self):
        kb = self.r_d * self.b
        if abs(kb - round(kb)) > 1e-9:
            raise ValueError("r_d * b must be an integer")
        if self.d_max < 0:
            raise ValueError("d_max must be >= 0")
        if self.n_sources * self.d_max >= self.L:
            raise ValueError("frozen tail S*D_max must be shorter than a sub-block")

    @classmethod
    def for_code(cls, code, d_max: int, n_sources: int = 1) -> "IdtConfig":
        return cls(b=code.b, L=code.L, d_max=d_max, n_sources=n_sources,
                   r_d=code.k_blocks / code.b)

    @property
    def k_blocks(self) -> int:
        return round(self.r_d * self.b)

    @property
    def parity_blocks(self) -> int:
        return self.b - self.k_blocks

    @property
    def n_prime(self) -> int:
        return self.b * self.L

    @property
    def k(self) -> int:
        return self.k_blocks * self.L

    @property
    def n_frozen(self) -> int:
        return self.n_sources * self.d_max

    @property
    def frame_len(self) -> int:
        return self.n_prime + self.parity_blocks * self.d_max

    def frozen_message_indices(self) -> np.ndarray:
        """Message-vector indices pinned to zero (sub-block-major layout)."""
        idx = [s * self.L + j for s in range(self.k_blocks)
               for j in range(self.L - self.n_frozen, self.L)]
        return np.array(idx, dtype=np.int64)

    def random_message(self, rng: np.random.Generator, p: int) -> np.ndarray:
        w = rng.integers(0, p, size=self.k)
        w[self.frozen_message_indices()] = 0
        return w


@dataclass(frozen=True)
class IdtFrame:
    """Framed transmit signal: b sub-blocks, parity ones CP-extended."""

    sub_blocks: tuple
    cfg: IdtConfig

    @property
    def signal(self) -> np.ndarray:
        return np.concatenate(self.sub_blocks)


def interleave(x: np.ndarray, b: int, L: int) -> np.ndarray:
    """Write column-wise / transmit row-wise: sub-block s holds x[s::b]."""
    x = np.asarray(x)
    if x.shape[0] != b * L:
        raise ValueError(f"length {x.shape[0]} != b*L = {b * L}")
    return x.reshape(L, b).T.reshape(-1)


def deinterleave(x: np.ndarray, b: int, L: int) -> np.ndarray:
    x = np.asarray(x)
    if x.shape[0] != b * L:
        raise ValueError(f"length {x.shape[0]} != b*L = {b * L}")
    return x.reshape(b, L).T.reshape(-1)


def frame(xbar: np.ndarray, cfg: IdtConfig, frozen_value: float = 0.0,
          check_frozen: bool = True) -> IdtFrame:
    """Attach cyclic prefixes to parity sub-blocks of an interleaved signal."""
    xbar = np.asarray(xbar, dtype=np.float64)
    if xbar.shape[0] != cfg.n_prime:
        raise ValueError("interleaved signal has wrong length")
    L, d = cfg.L, cfg.d_max
    blocks = []
    for s in range(cfg.b):
        blk = xbar[s * L:(s + 1) * L]
        if s < cfg.k_blocks:
            if check_frozen and cfg.n_frozen and not np.allclose(
                    blk[L - cfg.n_frozen:], frozen_value, atol=1e-9):
                raise ValueError("message sub-block tail is not frozen")
            blocks.append(blk.copy())
        else:
            blocks.append(np.concatenate([blk[L - d:], blk]) if d else blk.copy())
    return IdtFrame(sub_blocks=tuple(blocks), cfg=cfg)


def unframe(y: np.ndarray, cfg: IdtConfig, delays: Sequence[int],
            gains: Sequence[float], frozen_value: float = 0.0) -> np.ndarray:
    """Fixed-window CP stripping; output sub-blocks are circularly shifted.

    ``delays``/``gains`` describe the superimposed delayed copies present in
    y (one entry per source or channel tap); they are needed only to add the
    known frozen-symbol contribution at the head of the first sub-block,
    where signals have not yet arrived.  Windows never move: delay tau turns
    into a circular shift by tau of every sub-block.
    """
    delays = np.asarray(delays, dtype=np.int64)
    gains = np.asarray(gains, dtype=np.float64)
    if (delays < 0).any() or (delays > cfg.d_max).any():
        raise ValueError("delays must lie in [0, d_max]")
    y = np.asarray(y, dtype=np.float64)
    if y.shape[0] < cfg.frame_len:
        y = np.concatenate([y, np.zeros(cfg.frame_len - y.shape[0])])
    L, d, kb = cfg.L, cfg.d_max, cfg.k_blocks
    out = np.empty(cfg.n_prime)
    for s in range(kb):
        out[s * L:(s + 1) * L] = y[s * L:(s + 1) * L]
    base = kb * L
    for j in range(cfg.parity_blocks):
        seg = base + j * (L + d)
        out[(kb + j) * L:(kb + j + 1) * L] = y[seg + d: seg + d + L]
    # frozen-symbol compensation for sources that arrive late
    if frozen_value != 0.0:
        for n in range(int(delays.max(initial=0))):
            out[n] += frozen_value * gains[delays > n].sum()
    return out


def unframe_and_transform(y: np.ndarray, cfg: IdtConfig, delays: Sequence[int],
                          gains: Sequence[float], frozen_value: float = 0.0) -> np.ndarray:
    """CP strip plus deinterleave; noiseless output is the codeword-domain
    signal circularly shifted by b*tau per source."""
    return deinterleave(unframe(y, cfg, delays, gains, frozen_value), cfg.b, cfg.L)


def actual_rate(cfg: IdtConfig, p: int = 2) -> float:
    """Throughput after the frozen-tail and cyclic-prefix overhead."""
    k = cfg.k
    loss = cfg.r_d * cfg.b * cfg.n_sources * cfg.d_max
    return (k - loss) * np.log2(p) / cfg.frame_len


def actual_rate_p2p(n_prime: int, b: int, k: int, d_max: int, p: int = 2) -> float:
    cfg = IdtConfig(b=b, L=n_prime // b, d_max=d_max, n_sources=1, r_d=k / n_prime)
    return actual_rate(cfg, p)


def actual_rate_cf(n_prime: int, b: int, k: int, d_max: int, n_sources: int, p: int = 2) -> float:
    cfg = IdtConfig(b=b, L=n_prime // b, d_max=d_max, n_sources=n_sources, r_d=k / n_prime)
    return actual_rate(cfg, p)
