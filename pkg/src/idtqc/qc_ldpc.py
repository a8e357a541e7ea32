"""Quasi-cyclic LDPC codes from circulant protograph expansion.

A code is built by replacing each 1-entry of a c x b protomatrix with an
L x L circulant permutation and each 0-entry with a zero block.  Codewords
use the shift-by-multiples-of-b convention: the parity-check matrix stored
here acts on codewords for which every circular shift by b*i is again a
codeword.  Internally that means the circulant assembly (which naturally
acts on the b sub-block ordering) is column-permuted by the sub-block
interleaver.

Message coordinates are the first r_d*b sub-blocks, ordered sub-block-major:
message index s*L + j sits at codeword position s + j*b.  This is the layout
the freezing/cyclic-prefix framing relies on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from . import _kernels
from .galois import FieldSpec, mat_inv

__all__ = [
    "Protograph",
    "QcCode",
    "ConstructionFailure",
    "default_protograph",
    "expand_protograph",
    "systematic_generator",
    "encode",
    "verify_qc_closure",
    "bp_decode",
    "BpResult",
    "code_to_json",
    "code_from_json",
]


class ConstructionFailure(Exception):
    """Raised when no invertible parity submatrix could be found."""


@dataclass(frozen=True)
class Protograph:
    """A c x b template matrix with entries in {0, 1}."""

    entries: tuple

    @classmethod
    def of(cls, rows) -> "Protograph":
        arr = np.array(rows, dtype=np.int64)
        if arr.ndim != 2:
            raise ValueError("protomatrix must be 2-D")
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("protomatrix entries must be 0 or 1")
        c, b = arr.shape
        if c >= b:
            raise ValueError("protomatrix must have fewer rows than columns")
        if (arr.sum(axis=0) == 0).any():
            raise ValueError("protomatrix has an all-zero column")
        return cls(tuple(tuple(int(x) for x in r) for r in rows))

    @property
    def c(self) -> int:
        return len(self.entries)

    @property
    def b(self) -> int:
        return len(self.entries[0])

    def as_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64)


@dataclass
class QcCode:
    """A b-QC LDPC code with an optional systematic encoder."""

    field: FieldSpec
    proto: Protograph
    L: int
    shifts: np.ndarray  # (c, b), -1 where the protomatrix entry is zero
    H: np.ndarray  # (cL, N') parity-check matrix, codeword-shift ordering
    msg_positions: np.ndarray  # (K,) codeword positions of message symbols
    parity_positions: np.ndarray  # (N'-K,)
    encode_matrix: Optional[np.ndarray] = None  # parity = -E @ w mod p
    _chk_vars: np.ndarray = dc_field(default=None, repr=False)
    _chk_deg: np.ndarray = dc_field(default=None, repr=False)

    @property
    def b(self) -> int:
        return self.proto.b

    @property
    def n(self) -> int:
        return self.b * self.L

    @property
    def k(self) -> int:
        return self.msg_positions.shape[0]

    @property
    def design_rate(self) -> float:
        return self.k / self.n

    @property
    def k_blocks(self) -> int:
        """Number of message sub-blocks r_d * b."""
        return self.b - self.proto.c

    def check_structure(self):
        if self._chk_vars is None:
            rows = [np.nonzero(r)[0].astype(np.int32) for r in self.H]
            dmax = max(len(r) for r in rows)
            cv = np.full((len(rows), dmax), -1, dtype=np.int32)
            for i, r in enumerate(rows):
                cv[i, : len(r)] = r
            self._chk_vars = cv
            self._chk_deg = np.array([len(r) for r in rows], dtype=np.int32)
        return self._chk_vars, self._chk_deg

    def syndrome(self, c: np.ndarray) -> np.ndarray:
        return (self.H.astype(np.int64) @ (np.asarray(c, dtype=np.int64) % self.field.p)) % self.field.p

    def is_codeword(self, c: np.ndarray) -> bool:
        return not self.syndrome(c).any()


def default_protograph(b: int, k_b: int, msg_col_weight: int = 3) -> Protograph:
    """Rate k_b/b protomatrix with an always-invertible parity structure.

    The parity part is lower bidiagonal (ones on the diagonal and first
    subdiagonal), so the expanded parity submatrix is block lower triangular
    with circulant permutations on the diagonal and is invertible for every
    shift choice and every field.  A fully random parity part can be
    structurally singular over F_2 whenever each of its rows has even weight,
    which no amount of shift resampling fixes.

    Message columns get weight min(msg_col_weight, c) with supports spread
    evenly across the c rows to balance check degrees.
    """
    c = b - k_b
    if c < 1 or k_b < 1:
        raise ValueError("need at least one message and one parity sub-block")
    arr = np.zeros((c, b), dtype=np.int64)
    w = min(msg_col_weight, c)
    step = max(1, c // w)
    for j in range(k_b):
        for t in range(w):
            arr[(j + t * step) % c, j] = 1
    for i in range(c):
        arr[i, k_b + i] = 1
        if i > 0:
            arr[i, k_b + i - 1] = 1
    return Protograph.of(arr)


def _subblock_permutation(b: int, L: int) -> np.ndarray:
    """perm[n] = sub-block-ordering index of codeword position n."""
    n = np.arange(b * L)
    return (n % b) * L + n // b


def _assemble_blocks(proto: Protograph, L: int, shifts: np.ndarray) -> np.ndarray:
    c, b = proto.c, proto.b
    H2 = np.zeros((c * L, b * L), dtype=np.int8)
    rows = np.arange(L)
    for r in range(c):
        for cb in range(b):
            if proto.entries[r][cb]:
                s = int(shifts[r, cb])
                H2[r * L + rows, cb * L + (rows + s) % L] = 1
    return H2


def expand_protograph(
    proto: Protograph,
    L: int,
    shifts=None,
    rng: Optional[np.random.Generator] = None,
    build_generator: bool = True,
    max_resample: int = 100,
    p: int = 2,
) -> QcCode:
    """Expand a protomatrix into a b-QC code with L x L circulants.

    Exactly one of ``shifts`` (per-entry offsets, -1 on zero entries) and
    ``rng`` must be given; with an rng, shifts are resampled until the
    systematic parity submatrix is invertible (up to ``max_resample`` tries).
    """
    if L < 1:
        raise ValueError("circulant size must be >= 1")
    if (shifts is None) == (rng is None):
        raise ValueError("give either explicit shifts or an rng")
    field = FieldSpec(p)
    tries = max_resample if rng is not None else 1
    last_err = None
    for _ in range(tries):
        if rng is not None:
            sh = np.where(proto.as_array() == 1, rng.integers(0, L, size=(proto.c, proto.b)), -1)
        else:
            sh = np.array(shifts, dtype=np.int64)
            if sh.shape != (proto.c, proto.b):
                raise ValueError("shift array shape mismatch")
            if ((proto.as_array() == 1) & ((sh < 0) | (sh >= L))).any():
                raise ValueError("shifts of nonzero entries must lie in [0, L)")
        code = _build_code(proto, L, sh, field)
        if not build_generator:
            return code
        try:
            return systematic_generator(code)
        except ConstructionFailure as err:
            last_err = err
            if rng is None:
                raise
    raise ConstructionFailure(f"no invertible parity submatrix in {tries} tries: {last_err}")


def _build_code(proto: Protograph, L: int, sh: np.ndarray, field: FieldSpec) -> QcCode:
    b = proto.b
    H2 = _assemble_blocks(proto, L, sh)
    perm = _subblock_permutation(b, L)
    H = H2[:, perm]
    kb = b - proto.c
    msg = np.concatenate([s + np.arange(L) * b for s in range(kb)])
    par = np.concatenate([s + np.arange(L) * b for s in range(kb, b)])
    return QcCode(field=field, proto=proto, L=L, shifts=sh, H=H,
                  msg_positions=msg.astype(np.int64), parity_positions=par.astype(np.int64))


def systematic_generator(code: QcCode) -> QcCode:
    """Populate the systematic encoder; fails if the parity submatrix is singular."""
    p = code.field.p
    Hp = code.H[:, code.parity_positions].astype(np.int64)
    if Hp.shape[0] != Hp.shape[1]:
        raise ConstructionFailure("parity submatrix is not square")
    try:
        Hp_inv = mat_inv(Hp, p)
    except ValueError as err:
        raise ConstructionFailure(str(err)) from err
    Hm = code.H[:, code.msg_positions].astype(np.float64)
    E = (Hp_inv.astype(np.float64) @ Hm) % p
    code.encode_matrix = E.astype(np.int64)
    return code


def encode(code: QcCode, w: np.ndarray) -> np.ndarray:
    """Systematic encoding: message symbols land verbatim on msg_positions."""
    w = np.asarray(w, dtype=np.int64) % code.field.p
    if w.shape[0] != code.k:
        raise ValueError(f"message length {w.shape[0]} != K = {code.k}")
    if code.encode_matrix is None:
        raise ValueError("code has no generator; call systematic_generator first")
    v = (-(code.encode_matrix.astype(np.float64) @ w.astype(np.float64))) % code.field.p
    c = np.zeros(code.n, dtype=np.int64)
    c[code.msg_positions] = w
    c[code.parity_positions] = v.astype(np.int64)
    return c


def extract_message(code: QcCode, c: np.ndarray) -> np.ndarray:
    return np.asarray(c)[code.msg_positions]


def generator_matrix(code: QcCode) -> np.ndarray:
    """Explicit K x N' generator (dense; intended for small codes and tests)."""
    G = np.zeros((code.k, code.n), dtype=np.int64)
    for i in range(code.k):
        w = np.zeros(code.k, dtype=np.int64)
        w[i] = 1
        G[i] = encode(code, w)
    return G


def verify_qc_closure(code: QcCode, c: np.ndarray) -> bool:
    """Brute-force check that every shift of c by a multiple of b is a codeword."""
    p = code.field.p
    c = np.asarray(c, dtype=np.int64) % p
    L = code.L
    b = code.b
    idx = (np.arange(code.n)[:, None] - b * np.arange(L)[None, :]) % code.n
    shifted = c[idx]  # column i = c shifted right by b*i
    syn = (code.H.astype(np.float32) @ shifted.astype(np.float32)) % p
    return not syn.any()


@dataclass(frozen=True)
class BpResult:
    word: Optional[np.ndarray]
    ok: bool
    iters: int
    hard: np.ndarray  # hard decision regardless of parity outcome


def bp_decode(code: QcCode, evidence: np.ndarray, max_iters: int = 200) -> BpResult:
    """Sum-product decoding with flooding schedule and parity early exit.

    For p = 2 ``evidence`` is an LLR vector log(P0/P1); for p > 2 it is an
    (N', p) matrix of per-symbol probabilities.  Failure to satisfy parity
    within max_iters is reported via ``ok=False`` (word is then None).
    """
    chk_vars, chk_deg = code.check_structure()
    if code.field.p == 2:
        ev = np.asarray(evidence, dtype=np.float64)
        if ev.ndim != 1 or ev.shape[0] != code.n:
            raise ValueError("binary evidence must be an LLR vector of length N'")
        hard, ok, iters = _kernels.bp_binary(ev, chk_vars, chk_deg, max_iters)
        hard = hard.astype(np.int64)
    else:
        ev = np.asarray(evidence, dtype=np.float64)
        if ev.shape != (code.n, code.field.p):
            raise ValueError("evidence must be (N', p) probabilities")
        hard, ok, iters = _bp_nonbinary(ev, chk_vars, chk_deg, code.field.p, max_iters)
    return BpResult(word=hard if ok else None, ok=bool(ok), iters=iters, hard=hard)


def _bp_nonbinary(chan, chk_vars, chk_deg, p, max_iters):
    """Probability-domain sum-product over F_p with unit check coefficients."""
    eps = 1e-30
    n_checks, dmax = chk_vars.shape
    n = chan.shape[0]
    slot = np.arange(dmax)[None, :]
    mask = slot < chk_deg[:, None]
    vars_safe = np.where(mask, chk_vars, 0)
    logch = np.log(chan + eps)
    c2v = np.full((n_checks, dmax, p), 1.0 / p)
    neg_idx = (-np.arange(p)) % p
    hard = np.zeros(n, dtype=np.int64)
    ok = False
    iters = 0
    for it in range(max_iters):
        iters = it + 1
        logtot = logch.copy()
        np.add.at(logtot, vars_safe[mask], np.log(c2v[mask] + eps))
        lmsg = logtot[vars_safe] - np.log(c2v + eps)
        lmsg -= lmsg.max(axis=2, keepdims=True)
        msg = np.exp(lmsg)
        msg /= msg.sum(axis=2, keepdims=True)
        spec = np.fft.fft(msg, axis=2)
        spec = np.where(mask[:, :, None], spec, 1.0 + 0.0j)
        pre = np.ones_like(spec)
        pre[:, 1:] = np.cumprod(spec[:, :-1], axis=1)
        suf = np.ones_like(spec)
        suf[:, :-1] = np.cumprod(spec[:, :0:-1], axis=1)[:, ::-1]
        conv = np.fft.ifft(pre * suf, axis=2).real  # pmf of the sum of the others
        out = np.maximum(conv[:, :, neg_idx], 0.0)  # P(x) = P(sum of others = -x)
        tot = out.sum(axis=2, keepdims=True)
        c2v = np.where(tot > 0, out / np.where(tot > 0, tot, 1.0), 1.0 / p)
        c2v = np.where(mask[:, :, None], c2v, 1.0 / p)
        logtot = logch.copy()
        np.add.at(logtot, vars_safe[mask], np.log(c2v[mask] + eps))
        hard = np.argmax(logtot, axis=1).astype(np.int64)
        syn = np.where(mask, hard[vars_safe], 0).sum(axis=1) % p
        if not syn.any():
            ok = True
            break
    return hard, ok, iters


# ---------------------------------------------------------------------------
# Code description files
# ---------------------------------------------------------------------------


def code_to_json(code: QcCode) -> str:
    doc = {
        "p": code.field.p,
        "b": code.b,
        "L": code.L,
        "protomatrix": [list(r) for r in code.proto.entries],
        "shifts": code.shifts.tolist(),
    }
    return json.dumps(doc, indent=2)


def code_from_json(text: str, build_generator: bool = True) -> QcCode:
    doc = json.loads(text)
    proto = Protograph.of(doc["protomatrix"])
    if doc["b"] != proto.b:
        raise ValueError("b inconsistent with protomatrix width")
    return expand_protograph(
        proto, int(doc["L"]), shifts=np.array(doc["shifts"], dtype=np.int64),
        build_generator=build_generator, p=int(doc["p"]),
    )
