"""Decoding pipelines for ISI, frame-async relays, and symbol-async relays.

Every receiver follows the same outline: undo the framing with fixed
windows (delays become circular shifts), convert real observations into
field-symbol evidence by folding onto the lattice of constellation
translates, and run belief propagation.  The decoded words are linear
combinations of circularly shifted codewords; the frozen tails make the
final deconvolution back to individual messages deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .channels import CfScene, IsiChannel, OversampledRx
from .galois import DecodeFailure, Poly, PolyMatrix, deconvolve_tail, poly_mul_circ
from .idt import IdtConfig, PamMap, unframe_and_transform
from .qc_ldpc import QcCode, bp_decode

__all__ = [
    "DecodedFunction",
    "ReceiveResult",
    "fold_evidence",
    "isi_receive",
    "relay_receive_frame",
    "central_recover",
    "jcf_decode",
]

_MAX_LLR = 38.0


@dataclass(frozen=True)
class DecodedFunction:
    """A relay's decoded linear function of shifted codewords.

    When ``ok`` the word satisfies the code's parity and equals
    sum_s coeffs[s] * c_s shifted by b*delays[s], over F_p.
    """

    relay: int
    coeffs: tuple  # field coefficients phi(a_ms)
    delays: tuple  # integer delays tau_ms
    word: Optional[np.ndarray]
    ok: bool


@dataclass(frozen=True)
class ReceiveResult:
    """Point-to-point decode outcome: recovered message plus the raw
    combined word the decoder converged to (None on failure)."""

    message: Optional[np.ndarray]
    combined: Optional[np.ndarray]
    ok: bool


def fold_evidence(y: np.ndarray, int_gains: Sequence[int], pam: PamMap,
                  noise_std: float) -> np.ndarray:
    """Per-position likelihoods of f[n] = xor/sum of gain-weighted symbols.

    The noiseless combined amplitude at a position where the target field
    value is f lies on the lattice scale * (base(f) + p*Z): the PAM mapping
    is a homomorphism modulo p, with an extra additive offset for p = 2
    where each of the A = sum(gains) superimposed symbols carries the -1/2
    constellation shift.  Likelihoods sum the Gaussian density over all
    translates within a 6-sigma window of the observations (the tail beyond
    that is negligible at double precision).
    """
    y = np.asarray(y, dtype=np.float64)
    p = pam.p
    a = np.asarray(int_gains, dtype=np.int64)
    A = int(a.sum())
    base = pam.map(np.arange(p))
    if p == 2:
        base = base + (-0.5) * (A - 1)
    scale = pam.scale
    span = float(np.abs(a).sum()) * (p - 1) / 2.0 + abs(A) * 0.5
    sigma = max(noise_std, 1e-12)
    k_max = int(np.ceil((span + 6.0 * sigma / scale) / p)) + 1
    ks = np.arange(-k_max, k_max + 1)
    cand = scale * (base[:, None] + p * ks[None, :])  # (p, nk)
    d2 = (y[:, None, None] - cand[None, :, :]) ** 2
    d2 -= d2.min(axis=(1, 2), keepdims=True)
    probs = np.exp(-d2 / (2.0 * sigma * sigma)).sum(axis=2)
    probs /= probs.sum(axis=1, keepdims=True)
    return probs


def _evidence_for_code(probs: np.ndarray, p: int) -> np.ndarray:
    """Probabilities to the form bp_decode expects (LLR vector for p=2)."""
    if p == 2:
        eps = 1e-300
        return np.clip(np.log(probs[:, 0] + eps) - np.log(probs[:, 1] + eps),
                       -_MAX_LLR, _MAX_LLR)
    return probs


def _subblock_poly(word: np.ndarray, s: int, code: QcCode) -> Poly:
    """Stream of sub-block s in the codeword domain as a polynomial in D."""
    coeffs = word[s + np.arange(code.L) * code.b]
    return Poly.of(coeffs, code.field)


def _deconvolve_message(word: np.ndarray, g: Poly, code: QcCode,
                        cfg: IdtConfig) -> np.ndarray:
    """Per message sub-block tail-anchored deconvolution of g(D) * c(D)."""
    w = np.empty(cfg.k, dtype=np.int64)
    for s in range(cfg.k_blocks):
        c_s = deconvolve_tail(_subblock_poly(word, s, code).padded(code.L),
                              g, cfg.n_frozen)
        w[s * cfg.L:(s + 1) * cfg.L] = c_s.as_array(cfg.L)
    return w


def isi_receive(y: np.ndarray, ch: IsiChannel, code: QcCode, cfg: IdtConfig,
                pam: PamMap, max_iters: int = 200) -> ReceiveResult:
    """Integer-forcing receiver for the ISI channel.

    Decodes the combined word f = sum_d i_d * c shifted by b*d (a codeword
    by QC closure), then deconvolves each message sub-block by the tap
    polynomial g(D) = sum_d i_d D^d using the frozen tails.
    """
    p = code.field.p
    taps = ch.tap_array()
    delays = np.nonzero(taps)[0]
    gains = taps[delays]
    ycw = unframe_and_transform(y, cfg, delays, gains, pam.frozen_amplitude)
    probs = fold_evidence(ycw, np.round(taps).astype(np.int64), pam, ch.noise_std)
    res = bp_decode(code, _evidence_for_code(probs, p), max_iters)
    if not res.ok:
        return ReceiveResult(message=None, combined=None, ok=False)
    g = Poly.of(np.round(taps).astype(np.int64), code.field)
    try:
        w = _deconvolve_message(res.word, g, code, cfg)
    except DecodeFailure:
        return ReceiveResult(message=None, combined=res.word, ok=False)
    return ReceiveResult(message=w, combined=res.word, ok=True)


def relay_receive_frame(y: np.ndarray, scene: CfScene, m: int,
                        a_m: Sequence[int], code: QcCode, cfg: IdtConfig,
                        pam: PamMap, max_iters: int = 200) -> DecodedFunction:
    """Frame-async compute-and-forward relay.

    Scales by the MMSE coefficient alpha = P h'a / (1 + P ||h||^2), folds
    the result onto the field, and BP-decodes the function word
    f_m = xor_s phi(a_ms) * c_s shifted by b*tau_ms.
    """
    a = np.asarray(a_m, dtype=np.int64)
    if not a.any():
        raise ValueError("coefficient vector must be nonzero")
    h = scene.gain_matrix()[m]
    tau = scene.int_delays(m)
    P = scene.power
    alpha = P * float(h @ a) / (1.0 + P * float(h @ h))
    sigma_eff = float(np.sqrt(alpha * alpha + P * float(((alpha * h - a) ** 2).sum())))
    ycw = unframe_and_transform(alpha * y, cfg, tau, a.astype(np.float64),
                                pam.frozen_amplitude)
    probs = fold_evidence(ycw, a, pam, sigma_eff)
    res = bp_decode(code, _evidence_for_code(probs, code.field.p), max_iters)
    coeffs = tuple(int(x) % code.field.p for x in a)
    return DecodedFunction(relay=m, coeffs=coeffs, delays=tuple(int(t) for t in tau),
                           word=res.word, ok=res.ok)


def central_recover(funcs: Sequence[DecodedFunction], code: QcCode,
                    cfg: IdtConfig) -> np.ndarray:
    """Recover all source messages from S decoded relay functions.

    Forms the delay/coefficient matrix B with entries coeffs * D^delay,
    left-multiplies the function polynomials by adj(B) to isolate
    det(B) * c_s per stream, and deconvolves by det(B) using the frozen
    tails of length S*D_max.  Raises DecodeFailure when det(B) = 0 (the
    relays delivered a dependent function set) or when a stream is
    inconsistent with a zero tail.
    """
    S = cfg.n_sources
    if len(funcs) != S:
        raise ValueError(f"need exactly {S} decoded functions")
    for f in funcs:
        if f.word is None:
            raise DecodeFailure("cannot recover from a failed relay decode")
    field = code.field
    L = code.L
    B = PolyMatrix.from_monomials([list(f.coeffs) for f in funcs],
                                  [list(f.delays) for f in funcs], field)
    det = B.det(L)
    if det.is_zero():
        raise DecodeFailure("function set is dependent: det(B) = 0")
    adj = B.adj(L)
    msgs = np.empty((S, cfg.k), dtype=np.int64)
    for sb in range(cfg.k_blocks):
        fpolys = [_subblock_poly(f.word, sb, code) for f in funcs]
        for i in range(S):
            acc = Poly.zero(L, field)
            for j in range(S):
                acc = acc.add(poly_mul_circ(adj.entry(i, j), fpolys[j], L))
            c_s = deconvolve_tail(acc, det, cfg.n_frozen)
            msgs[i, sb * cfg.L:(sb + 1) * cfg.L] = c_s.as_array(cfg.L)
    return msgs


# ---------------------------------------------------------------------------
# Joint zigzag MAP detection + pair-alphabet decoding (symbol-level async)
# ---------------------------------------------------------------------------


def _slot_to_interleaved(cfg: IdtConfig) -> np.ndarray:
    """Interleaved-domain index of each 0-based frame slot (CP slots map to
    the body position they duplicate)."""
    L, d, kb = cfg.L, cfg.d_max, cfg.k_blocks
    out = np.empty(cfg.frame_len, dtype=np.int64)
    head = kb * L
    out[:head] = np.arange(head)
    t = np.arange(cfg.frame_len - head)
    jp = t // (L + d)
    off = t % (L + d)
    j = np.where(off < d, L - d + off, off - d)
    out[head:] = (kb + jp) * L + j
    return out


def _frozen_mask(cfg: IdtConfig, code: QcCode, shift: int) -> np.ndarray:
    """Codeword positions known to be field-zero in c shifted by b*shift."""
    mask = np.zeros(code.n, dtype=bool)
    n = np.arange(code.n)
    s = n % code.b
    j = n // code.b
    mask[(s < cfg.k_blocks) & (j >= cfg.L - cfg.n_frozen)] = True
    return np.roll(mask, code.b * shift)


def _gauss(r, mean, var):
    return np.exp(-(r - mean) ** 2 / (2.0 * var))


def jcf_decode(rx: OversampledRx, code: QcCode, cfg: IdtConfig, pam: PamMap,
               outer_iters: int = 40, inner_iters: int = 5) -> DecodedFunction:
    """Joint MAP detection and decoding for two symbol-async sources (p=2).

    The oversampled model chains consecutive joint-symbol variables: the
    even sample of a slot sees the tau_f-aligned symbol pair while the odd
    sample straddles a pair boundary.  Per outer iteration an exact
    forward-backward sweep over that chain produces detector extrinsics,
    which feed a sum-product decoder over the 4-ary pair alphabet whose
    checks apply the binary code component-wise; decoder extrinsics prime
    the next sweep.  The receiver first targets the alignment backed by the
    longer matched-filter window (c1 xor c2 shifted by b*tau_f for the even
    window, by b*(tau_f+1) for the odd one) and falls back to the other on
    parity failure.
    """
    if code.field.p != 2:
        raise ValueError("the joint decoder supports p = 2 only")
    h1, h2 = rx.gains
    flen = cfg.frame_len
    if rx.n_sym != flen:
        raise ValueError("oversampled frame length does not match the config")
    slot_map = _slot_to_interleaved(cfg)
    L, b = cfg.L, code.b

    def cw_index(slot0):  # 0-based frame slot -> codeword position
        m = slot_map[slot0]
        return int(m // L + (m % L) * b)

    amp = pam.scale * np.array([-0.5, 0.5])  # amplitude of bits 0/1

    if rx.tau_s == 0.0:
        # Synchronous limit: the even samples are exactly the frame-level
        # superposition, so decode the XOR word directly instead of the
        # joint pair (whose sum evidence leaves (0,1)/(1,0) unresolved).
        a = np.array([1, 1])
        h = np.array([h1, h2])
        P = pam.power
        alpha = P * float(h @ a) / (1.0 + P * float(h @ h))
        sigma_eff = float(np.sqrt(alpha * alpha +
                                  P * float(((alpha * h - a) ** 2).sum())))
        ycw = unframe_and_transform(alpha * rx.even, cfg, (0, rx.tau_f),
                                    a.astype(np.float64), pam.frozen_amplitude)
        probs = fold_evidence(ycw, a, pam, sigma_eff)
        res = bp_decode(code, _evidence_for_code(probs, 2),
                        outer_iters * inner_iters)
        return DecodedFunction(relay=0, coeffs=(1, 1), delays=(0, rx.tau_f),
                               word=res.word, ok=res.ok)

    alignments = [0, 1] if rx.tau_s <= 0.5 else [1, 0]

    last = None
    for e in alignments:
        out = _jcf_try_alignment(rx, code, cfg, e, slot_map, cw_index, amp,
                                 h1, h2, outer_iters, inner_iters)
        last = out
        if out.ok:
            return out
    return last


def _jcf_try_alignment(rx, code, cfg, e, slot_map, cw_index, amp, h1, h2,
                       outer_iters, inner_iters):
    tau_f = rx.tau_f
    tau = tau_f + e
    flen = cfg.frame_len
    n_slots = rx.n_slots
    Ncw = code.n
    # Node k (0-based, received slot k+1) carries the joint symbol at
    # codeword position map_idx[k] of (c1, c2 shifted by b*tau); kernel state
    # z = u + 2v must put the chain-coupled components in the right slots:
    # the cross-boundary sample always couples v of the left node with u of
    # the right node.
    k_idx = np.arange(n_slots)
    present1 = k_idx < flen
    shift2 = tau  # frame-2 slot seen at received slot k+1 under this alignment
    present2 = (k_idx - shift2 >= 0) & (k_idx - shift2 < flen)
    map_idx = np.array([cw_index(k) if k < flen else -1 for k in range(n_slots)],
                       dtype=np.int64)
    # In a cyclic-prefix region the first tau received slots carry the
    # second stream's previous-segment tail, not a duplicate of the current
    # body, so the joint-symbol coupling is invalid there; such slots stay
    # in the chain as nuisance nodes without a codeword variable.
    if tau > 0 and cfg.parity_blocks > 0 and cfg.d_max > 0:
        head = cfg.k_blocks * cfg.L
        t0 = k_idx - head
        cp_conflict = (k_idx >= head) & (k_idx < flen) & \
            (t0 % (cfg.L + cfg.d_max) < min(tau, cfg.d_max))
        map_idx[cp_conflict] = -1

    u_bits = np.array([z & 1 for z in range(4)])
    v_bits = np.array([(z >> 1) & 1 for z in range(4)])
    if e == 0:
        # u = stream-1 bit, v = stream-2 bit; node sample = even, edge = odd
        bit1, bit2 = u_bits, v_bits
        node_r = rx.even
        node_var = rx.var_even
        edge_r = rx.odd
        edge_var = rx.var_odd if rx.tau_s > 0 else None
    else:
        # u = stream-2 bit, v = stream-1 bit; node sample = odd, edge = even
        bit1, bit2 = v_bits, u_bits
        node_r = rx.odd
        node_var = rx.var_odd
        edge_r = rx.even
        edge_var = rx.var_even

    mean1 = h1 * amp[bit1]  # per state, stream-1 contribution
    mean2 = h2 * amp[bit2]

    loc0 = np.ones((n_slots, 4))
    for k in range(min(n_slots, len(node_r))):
        mu = mean1 * present1[k] + mean2 * present2[k]
        loc0[k] = _gauss(node_r[k], mu, node_var)

    trans = np.ones((n_slots, 2, 2))
    if edge_r is not None:
        # edge between node k-1 and node k: stream-1 symbol of node k with
        # stream-2 symbol of node k-1 (alignment 0), and conversely for
        # alignment 1, which is what the u/v role swap above encodes.
        for k in range(1, n_slots):
            if e == 0:
                pres_u = present1[k]
                pres_v = (k - tau_f - 1 >= 0) & (k - tau_f - 1 < flen)
                r = edge_r[k] if k < len(edge_r) else None
                mu_u = h1 * amp
                mu_v = h2 * amp
            else:
                pres_u = present2[k]
                pres_v = present1[k - 1]
                r = edge_r[k - 1] if k - 1 < len(edge_r) else None
                mu_u = h2 * amp
                mu_v = h1 * amp
            if r is None:
                continue
            mu = (mu_v[:, None] * pres_v + mu_u[None, :] * pres_u)
            trans[k] = _gauss(r, mu, edge_var)
        # a leading cross-boundary sample has no left neighbor; its sole
        # dependence is on node 0, so it folds into that node's local factor
        if e == 0 and len(edge_r) > 0:
            mu = h1 * amp[bit1] * present1[0]  # stream 2 not yet arrived
            loc0[0] *= _gauss(edge_r[0], mu, edge_var)

    # known-zero (frozen-tail) positions of each component, in pair states
    frz1 = _frozen_mask(cfg, code, 0)
    frz2 = _frozen_mask(cfg, code, tau)
    prior_cw = np.ones((Ncw, 4))
    bad1 = bit1 == 1
    bad2 = bit2 == 1
    prior_cw[np.ix_(frz1, np.nonzero(bad1)[0])] = 1e-12
    prior_cw[np.ix_(frz2, np.nonzero(bad2)[0])] = 1e-12
    prior_cw /= prior_cw.sum(axis=1, keepdims=True)

    chk_vars, chk_deg = code.check_structure()
    eps = 1e-15
    dec_ext = np.full((Ncw, 4), 0.25)
    mapped = map_idx >= 0
    states = None
    ok = False
    for _ in range(outer_iters):
        loc = loc0.copy()
        loc[mapped] *= dec_ext[map_idx[mapped]] * prior_cw[map_idx[mapped]]
        post = _kernels.chain_forward_backward(loc, trans)
        det_ext = post[mapped] / (dec_ext[map_idx[mapped]] *
                                  prior_cw[map_idx[mapped]] + eps)
        chan = prior_cw.copy()
        np.multiply.at(chan, map_idx[mapped], det_ext)
        chan /= chan.sum(axis=1, keepdims=True) + eps
        states, bp_ok, _, logtot = _kernels.bp_pair(chan, chk_vars, chk_deg,
                                                    inner_iters)
        lext = logtot - np.log(chan + 1e-300)
        lext -= lext.max(axis=1, keepdims=True)
        dec_ext = np.exp(lext)
        dec_ext /= dec_ext.sum(axis=1, keepdims=True)
        if bp_ok:
            ok = True
            break
    if not ok:
        return DecodedFunction(relay=0, coeffs=(1, 1), delays=(0, tau),
                               word=None, ok=False)
    z = np.asarray(states, dtype=np.int64)
    f = (z & 1) ^ ((z >> 1) & 1)
    return DecodedFunction(relay=0, coeffs=(1, 1), delays=(0, tau),
                           word=f, ok=True)
