"""Channel models: AWGN, integer-tap ISI, and asynchronous superposition.

Two flavors of asynchronism are modeled.  In the frame-level case every
delay is an integer number of symbols and the relay output is a delayed,
scaled superposition plus unit-variance noise.  In the symbol-level case
the relative delay has a fractional part tau_s and the receiver oversamples
with two matched filters per symbol period, yielding interleaved odd/even
sample streams whose noise variances are 1/tau_s and 1/(1-tau_s).

All operations take an explicit rng and are deterministic given its state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "IsiChannel",
    "CfScene",
    "OversampledRx",
    "awgn",
    "isi_apply",
    "cf_frame_apply",
    "cf_symbol_oversample",
    "window_snrs",
]


@dataclass(frozen=True)
class IsiChannel:
    """Intersymbol-interference channel with integer taps and AWGN."""

    taps: tuple
    noise_std: float = 0.0

    def __post_init__(self):
        if len(self.taps) == 0:
            raise ValueError("need at least one tap")
        if any(t != int(t) for t in self.taps):
            raise ValueError("taps must be integers")
        if self.taps[0] == 0:
            raise ValueError("leading tap must be nonzero")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")

    @property
    def d_max(self) -> int:
        """Channel memory: number of taps minus one."""
        return len(self.taps) - 1

    def tap_array(self) -> np.ndarray:
        return np.array(self.taps, dtype=np.float64)


@dataclass(frozen=True)
class CfScene:
    """Multi-source superposition scene seen by M relays.

    ``gains`` and ``delays`` are (M, S) arrays.  Frame-level scenes carry
    integer delays in {0, ..., d_max}; symbol-level scenes carry real delays
    in [0, d_max) whose fractional part drives the oversampling model.
    Noise at every relay has unit variance per full-symbol window.
    """

    n_sources: int
    n_relays: int
    power: float
    gains: tuple  # M rows of S floats
    delays: tuple  # M rows of S floats (integers for the frame model)
    d_max: int
    model: str = "frame"

    def __post_init__(self):
        g = self.gain_matrix()
        t = self.delay_matrix()
        if g.shape != (self.n_relays, self.n_sources) or t.shape != g.shape:
            raise ValueError("gains/delays must be (M, S)")
        if self.power <= 0:
            raise ValueError("power must be positive")
        if self.model not in ("frame", "symbol"):
            raise ValueError("model must be 'frame' or 'symbol'")
        if self.model == "frame":
            if not np.array_equal(t, np.round(t)):
                raise ValueError("frame-level delays must be integers")
            if (t < 0).any() or (t > self.d_max).any():
                raise ValueError("frame-level delays must lie in [0, d_max]")
        else:
            if (t < 0).any() or (t >= max(self.d_max, 1)).any():
                raise ValueError("symbol-level delays must lie in [0, d_max)")

    @classmethod
    def of(cls, gains, delays, power: float, d_max: int, model: str = "frame") -> "CfScene":
        g = np.atleast_2d(np.asarray(gains, dtype=np.float64))
        t = np.atleast_2d(np.asarray(delays, dtype=np.float64))
        return cls(
            n_sources=g.shape[1], n_relays=g.shape[0], power=float(power),
            gains=tuple(tuple(float(x) for x in r) for r in g),
            delays=tuple(tuple(float(x) for x in r) for r in t),
            d_max=int(d_max), model=model,
        )

    def gain_matrix(self) -> np.ndarray:
        return np.array(self.gains, dtype=np.float64)

    def delay_matrix(self) -> np.ndarray:
        return np.array(self.delays, dtype=np.float64)

    def int_delays(self, m: int) -> np.ndarray:
        return self.delay_matrix()[m].astype(np.int64)

    def to_json(self) -> str:
        t = self.delay_matrix()
        doc = {
            "S": self.n_sources,
            "M": self.n_relays,
            "P": self.power,
            "h": [list(r) for r in self.gains],
            "tau": np.floor(t).astype(int).tolist() if self.model == "symbol" else [list(r) for r in self.delays],
            "D_max": self.d_max,
            "model": self.model,
            "tau_s": (t - np.floor(t)).tolist() if self.model == "symbol" else None,
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "CfScene":
        doc = json.loads(text)
        tau = np.array(doc["tau"], dtype=np.float64)
        if doc.get("tau_s") is not None:
            tau = tau + np.array(doc["tau_s"], dtype=np.float64)
        return cls.of(doc["h"], tau, doc["P"], doc["D_max"], doc.get("model", "frame"))


def awgn(x: np.ndarray, std: float, rng: np.random.Generator) -> np.ndarray:
    """Add i.i.d. zero-mean Gaussian noise of the given standard deviation."""
    if std < 0:
        raise ValueError("std must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    if std == 0:
        return x.copy()
    return x + std * rng.normal(size=x.shape)


def isi_apply(x: np.ndarray, ch: IsiChannel, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Linear convolution of a framed signal with integer taps, plus noise."""
    y = np.convolve(np.asarray(x, dtype=np.float64), ch.tap_array())
    if ch.noise_std > 0:
        if rng is None:
            raise ValueError("noisy channel needs an rng")
        y = awgn(y, ch.noise_std, rng)
    return y


def cf_frame_apply(
    frames: Sequence[np.ndarray],
    scene: CfScene,
    m: int,
    rng: Optional[np.random.Generator] = None,
    noise_std: float = 1.0,
) -> np.ndarray:
    """Received signal y_m[n] = sum_s h_ms x_s[n - tau_ms] + z_m[n]."""
    if scene.model != "frame":
        raise ValueError("cf_frame_apply needs a frame-level scene")
    if len(frames) != scene.n_sources:
        raise ValueError("one frame per source required")
    h = scene.gain_matrix()[m]
    tau = scene.int_delays(m)
    n_out = max(int(tau[s]) + len(frames[s]) for s in range(scene.n_sources))
    y = np.zeros(n_out)
    for s in range(scene.n_sources):
        xs = np.asarray(frames[s], dtype=np.float64)
        y[tau[s]: tau[s] + len(xs)] += h[s] * xs
    if noise_std > 0:
        if rng is None:
            raise ValueError("noisy channel needs an rng")
        y = awgn(y, noise_std, rng)
    return y


@dataclass(frozen=True)
class OversampledRx:
    """Matched-filter oversampled output for two symbol-async sources.

    With frames of length n_sym and relative delay tau_f + tau_s, index n
    runs from 1 to n_sym + tau_f + 1.  The odd sample of slot n covers the
    window [n-1, n-1+tau_s) and sees x1[n] together with the second source's
    previous symbol; the even sample covers [n-1+tau_s, n) and sees x1[n]
    with the second source's current symbol.  The final odd sample is the
    trailing fragment carrying only the second source.  Entries are None
    where a stream has no samples (tau_s = 0 drops the odd stream entirely,
    reducing to frame-synchronous superposition).
    """

    odd: Optional[np.ndarray]  # length n_slots, noise var 1/tau_s
    even: np.ndarray  # length n_slots - 1 (tau_s > 0) or n_slots (tau_s = 0)
    tau_f: int
    tau_s: float
    gains: tuple  # (h1, h2)
    n_sym: int  # per-source frame length

    @property
    def n_slots(self) -> int:
        return self.n_sym + self.tau_f + (1 if self.tau_s > 0 else 0)

    @property
    def var_odd(self) -> float:
        if self.tau_s <= 0:
            raise ValueError("no odd samples when tau_s = 0")
        return 1.0 / self.tau_s

    @property
    def var_even(self) -> float:
        return 1.0 / (1.0 - self.tau_s)

    @property
    def flat(self) -> np.ndarray:
        """Samples in transmission order r[1], r[2], ... (odd first)."""
        if self.odd is None:
            return self.even.copy()
        out = np.empty(len(self.odd) + len(self.even))
        out[0::2] = self.odd
        out[1::2] = self.even
        return out


def cf_symbol_oversample(
    frames: Sequence[np.ndarray],
    scene: CfScene,
    m: int,
    rng: Optional[np.random.Generator] = None,
    noiseless: bool = False,
) -> OversampledRx:
    """Oversample a two-source symbol-asynchronous superposition.

    Source order at relay m is fixed by the scene: the first source is the
    earlier arrival (its delay is subtracted as the receiver's time
    reference).  Streams outside their support contribute zero.
    """
    if scene.model != "symbol":
        raise ValueError("cf_symbol_oversample needs a symbol-level scene")
    if scene.n_sources != 2 or len(frames) != 2:
        raise ValueError("the oversampled path supports exactly two sources")
    h = scene.gain_matrix()[m]
    tau = scene.delay_matrix()[m]
    if tau[0] > tau[1]:
        raise ValueError("source 1 must be the earlier arrival at this relay")
    rel = tau[1] - tau[0]
    tau_f = int(np.floor(rel))
    tau_s = float(rel - tau_f)
    x1 = np.asarray(frames[0], dtype=np.float64)
    x2 = np.asarray(frames[1], dtype=np.float64)
    if len(x1) != len(x2):
        raise ValueError("frames must have equal length")
    n = len(x1)

    def at(x, i):  # 1-based with zeros outside support
        return x[i - 1] if 1 <= i <= n else 0.0

    if tau_s == 0.0:
        n_slots = n + tau_f
        even = np.array([h[0] * at(x1, k) + h[1] * at(x2, k - tau_f)
                         for k in range(1, n_slots + 1)])
        if not noiseless:
            if rng is None:
                raise ValueError("noisy channel needs an rng")
            even = awgn(even, 1.0, rng)
        return OversampledRx(odd=None, even=even, tau_f=tau_f, tau_s=0.0,
                             gains=(h[0], h[1]), n_sym=n)

    n_slots = n + tau_f + 1
    odd = np.array([h[0] * at(x1, k) + h[1] * at(x2, k - tau_f - 1)
                    for k in range(1, n_slots + 1)])
    even = np.array([h[0] * at(x1, k) + h[1] * at(x2, k - tau_f)
                     for k in range(1, n_slots)])
    if not noiseless:
        if rng is None:
            raise ValueError("noisy channel needs an rng")
        odd = awgn(odd, np.sqrt(1.0 / tau_s), rng)
        even = awgn(even, np.sqrt(1.0 / (1.0 - tau_s)), rng)
    return OversampledRx(odd=odd, even=even, tau_f=tau_f, tau_s=tau_s,
                         gains=(h[0], h[1]), n_sym=n)


def window_snrs(scene: CfScene, m: int, T: float = 1.0) -> np.ndarray:
    """Per-window SNRs of the S matched filters at relay m.

    The symbol period splits at the sorted fractional arrival offsets into S
    windows (the last one wraps around); each filter's SNR is proportional
    to its window duration, and the receiver operates at the best of them.
    Durations always sum to T.
    """
    frac = np.sort(np.mod(scene.delay_matrix()[m], T))
    durations = np.empty(scene.n_sources)
    durations[:-1] = np.diff(frac)
    durations[-1] = T - frac[-1] + frac[0]
    return scene.power * durations / T
