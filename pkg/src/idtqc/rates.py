"""Computation-rate formulas and Monte-Carlo rate curves versus D_max.

The frame-level achievable rate of a relay computing the integer
combination a of S lattice streams through gains h at power P is

    R(h, a) = 1/2 log2+( (||a||^2 - P (h.a)^2 / (1 + P ||h||^2))^-1 ),

per real dimension.  The symbol-level rate replaces P by the best
matched-filter window SNR.  The Monte-Carlo driver draws random gains and
delays, lets each relay pick rate-maximizing coefficients, and enforces
joint invertibility of the delay/coefficient matrix over F_p[D] so that a
central destination could actually separate the streams.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "RateQuery",
    "RatePoint",
    "comp_rate_frame",
    "comp_rate_symbol",
    "best_coeffs",
    "ranked_coeffs",
    "delay_matrix_invertible",
    "monte_carlo_rates",
    "rate_points_to_csv",
]


@dataclass(frozen=True)
class RateQuery:
    """Gains, integer coefficients, and power of one rate evaluation."""

    h: tuple
    a: tuple
    power: float

    def __post_init__(self):
        if len(self.h) != len(self.a):
            raise ValueError("h and a must have equal length")
        if self.power <= 0:
            raise ValueError("power must be positive")


@dataclass(frozen=True)
class RatePoint:
    """One point of a Monte-Carlo rate curve."""

    d_max: int
    mean_rate: float
    n_realizations: int
    seed: int


def comp_rate_frame(h: Sequence[float], a: Sequence[int], P: float) -> float:
    """Frame-level achievable computation rate in bits per real dimension."""
    h = np.asarray(h, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    if not a.any():
        raise ValueError("coefficient vector must be nonzero")
    val = float(a @ a) - P * float(h @ a) ** 2 / (1.0 + P * float(h @ h))
    if val <= 0.0:
        # a^T (I - P h h^T / (1 + P||h||^2)) a is positive definite; this
        # can only be numerical round-off at extreme alignment
        return float("inf")
    return max(0.0, 0.5 * float(np.log2(1.0 / val)))


def comp_rate_symbol(h: Sequence[float], a: Sequence[int],
                     window_powers: Sequence[float]) -> float:
    """Symbol-level rate: the frame formula at the best window SNR P_m."""
    return comp_rate_frame(h, a, float(np.max(window_powers)))


def default_bound(h: Sequence[float], P: float) -> int:
    """Coefficient search radius; larger ||a|| cannot yield positive rate."""
    h = np.asarray(h, dtype=np.float64)
    return int(np.ceil(np.sqrt(1.0 + P * float(h @ h))))


def ranked_coeffs(h: Sequence[float], P: float,
                  a_bound: Optional[int] = None,
                  max_candidates: int = 16) -> list:
    """Nonzero coefficient vectors in the search box, best rate first.

    Ties are broken by smaller ||a||^2, then by a positive leading entry,
    then lexicographically, so the ranking (and everything built on it) is
    deterministic.
    """
    h = np.asarray(h, dtype=np.float64)
    S = h.shape[0]
    if a_bound is None:
        a_bound = default_bound(h, P)
    if a_bound < 1:
        raise ValueError("a_bound must be >= 1")
    axes = [np.arange(-a_bound, a_bound + 1)] * S
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, S)
    grid = grid[np.any(grid != 0, axis=1)]
    norm2 = (grid * grid).sum(axis=1)
    val = norm2 - P * (grid @ h) ** 2 / (1.0 + P * float(h @ h))
    rate = np.where(val > 0, np.maximum(0.0, 0.5 * np.log2(1.0 / np.maximum(val, 1e-300))), np.inf)
    lead = grid[np.arange(grid.shape[0]),
                np.argmax(grid != 0, axis=1)]
    # np.lexsort sorts by the last key first
    keys = [grid[:, j] for j in range(S - 1, -1, -1)]
    keys += [(lead < 0).astype(np.int64), norm2, -rate]
    order = np.lexsort(keys)[:max_candidates]
    return [(float(rate[i]), tuple(int(x) for x in grid[i])) for i in order]


def best_coeffs(h: Sequence[float], P: float,
                a_bound: Optional[int] = None) -> tuple:
    """Exhaustive rate-maximizing coefficients; returns (a, rate)."""
    rate, a = ranked_coeffs(h, P, a_bound, max_candidates=1)[0]
    return np.array(a, dtype=np.int64), rate


def delay_matrix_invertible(coeffs: np.ndarray, delays: np.ndarray,
                            p: int) -> bool:
    """Whether det of the matrix with entries phi(a_ms) D^(tau_ms) is a
    nonzero polynomial over F_p[D] (symbolic, no ring reduction).

    All entries are monomials, so the determinant is the signed permutation
    sum with coefficient products and exponent sums accumulated directly.
    """
    coeffs = np.asarray(coeffs, dtype=np.int64) % p
    delays = np.asarray(delays, dtype=np.int64)
    S = coeffs.shape[0]
    acc = np.zeros(int(delays.sum()) + 1, dtype=np.int64)
    rows = np.arange(S)
    for sign, perm in _signed_permutations(S):
        c = 1
        for i in rows:
            c = (c * int(coeffs[i, perm[i]])) % p
            if c == 0:
                break
        if c == 0:
            continue
        e = int(delays[rows, perm].sum())
        acc[e] = (acc[e] + sign * c) % p
    return bool((acc % p).any())


@functools.lru_cache(maxsize=8)
def _signed_permutations(S: int) -> tuple:
    out = []
    for perm in itertools.permutations(range(S)):
        inv = sum(1 for i in range(S) for j in range(i + 1, S)
                  if perm[i] > perm[j])
        out.append((-1 if inv % 2 else 1, np.array(perm, dtype=np.int64)))
    return tuple(out)


def _realization_rate(ranked: list, delays: np.ndarray, p: int,
                      max_attempts: int = 64) -> float:
    """Minimum relay rate of the best jointly invertible assignment.

    ``ranked`` holds each relay's candidate list from ranked_coeffs.  The S
    highest-rate relays are selected; on a singular delay/coefficient
    matrix the relay whose next-best candidate sacrifices the least rate is
    stepped down, repeatedly, until the determinant is a nonzero polynomial
    or the attempt budget runs out (then the realization scores 0).
    """
    M = len(ranked)
    S = delays.shape[1]
    order = sorted(range(M), key=lambda m: -ranked[m][0][0])
    chosen_relays = order[:S]
    pick = {m: 0 for m in chosen_relays}
    for _ in range(max_attempts):
        coeffs = np.array([ranked[m][pick[m]][1] for m in chosen_relays])
        dl = np.array([delays[m] for m in chosen_relays], dtype=np.int64)
        if delay_matrix_invertible(coeffs, dl, p):
            return min(ranked[m][pick[m]][0] for m in chosen_relays)
        # step down the relay that loses the least rate by advancing
        best_m, best_next = None, -1.0
        for m in chosen_relays:
            if pick[m] + 1 < len(ranked[m]):
                nxt = ranked[m][pick[m] + 1][0]
                if nxt > best_next:
                    best_next = nxt
                    best_m = m
        if best_m is None:
            break
        pick[best_m] += 1
    return 0.0


def monte_carlo_rates(S: int, M: int, P: float, d_max_list: Sequence[int],
                      n_realizations: int, seed: int,
                      a_bound: Optional[int] = None, p: int = 2) -> list:
    """Average minimum-relay rate versus D_max over random scenes.

    Gains are i.i.d. real standard Gaussian; delays are uniform integers in
    {0, ..., D_max}, coupled across the D_max grid through common random
    numbers so that the curve is monotone realization by realization.
    Results are bit-reproducible for a fixed seed and independent of any
    evaluation order.
    """
    if M < S:
        raise ValueError("need at least S relays")
    d_max_list = [int(d) for d in d_max_list]
    sums = {d: 0.0 for d in d_max_list}
    for t in range(n_realizations):
        rng = np.random.default_rng(np.random.SeedSequence((seed, t)))
        gains = rng.normal(size=(M, S))
        u = rng.random(size=(M, S))
        ranked = [ranked_coeffs(gains[m], P, a_bound) for m in range(M)]
        for d in d_max_list:
            delays = np.floor(u * (d + 1)).astype(np.int64)
            sums[d] += _realization_rate(ranked, delays, p)
    return [RatePoint(d_max=d, mean_rate=sums[d] / n_realizations,
                      n_realizations=n_realizations, seed=seed)
            for d in d_max_list]


def rate_points_to_csv(points: Sequence[RatePoint]) -> str:
    lines = ["d_max,n_realizations,mean_rate,seed"]
    for pt in points:
        lines.append(f"{pt.d_max},{pt.n_realizations},{pt.mean_rate:.6f},{pt.seed}")
    return "\n".join(lines) + "\n"
