"""Hot numeric kernels: belief propagation and chain detection sweeps.

Two interchangeable backends are provided for every kernel: a numba
``@njit`` version and a pure-numpy version.  The numba path is used when
numba imports successfully; setting the environment variable
``IDTQC_DISABLE_NUMBA=1`` forces the numpy path (useful for debugging and
for the backend benchmark in ``benchmarks/``).

Parity-check structure is passed in a padded layout: ``chk_vars`` has shape
(n_checks, max_dc) with variable indices and -1 padding, ``chk_deg`` holds
the true degree of each check.
"""

from __future__ import annotations

import os

import numpy as np

_MAX_LLR = 38.0
_EPS = 1e-30

NUMBA_AVAILABLE = False
if os.environ.get("IDTQC_DISABLE_NUMBA", "0") != "1":
    try:
        from numba import njit

        NUMBA_AVAILABLE = True
    except ImportError:
        pass

if not NUMBA_AVAILABLE:
    def njit(*args, **kwargs):  # noqa: D103 - passthrough decorator
        def wrap(fn):
            return fn
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return wrap


# ---------------------------------------------------------------------------
# Binary LLR sum-product decoding
# ---------------------------------------------------------------------------


@njit(cache=True)
def _bp_binary_jit(llr, chk_vars, chk_deg, max_iters):
    n_checks, dmax = chk_vars.shape
    n = llr.shape[0]
    c2v = np.zeros((n_checks, dmax))
    tot = np.empty(n)
    hard = np.zeros(n, dtype=np.int8)
    t = np.empty(dmax)
    pre = np.empty(dmax)
    suf = np.empty(dmax)
    iters = 0
    ok = False
    for it in range(max_iters):
        iters = it + 1
        # variable totals
        for v in range(n):
            tot[v] = llr[v]
        for c in range(n_checks):
            for k in range(chk_deg[c]):
                tot[chk_vars[c, k]] += c2v[c, k]
        # check updates (tanh rule, leave-one-out by prefix/suffix products)
        for c in range(n_checks):
            dc = chk_deg[c]
            for k in range(dc):
                m = tot[chk_vars[c, k]] - c2v[c, k]
                if m > _MAX_LLR:
                    m = _MAX_LLR
                elif m < -_MAX_LLR:
                    m = -_MAX_LLR
                t[k] = np.tanh(0.5 * m)
            acc = 1.0
            for k in range(dc):
                pre[k] = acc
                acc *= t[k]
            acc = 1.0
            for k in range(dc - 1, -1, -1):
                suf[k] = acc
                acc *= t[k]
            for k in range(dc):
                x = pre[k] * suf[k]
                if x > 1.0 - 1e-15:
                    x = 1.0 - 1e-15
                elif x < -1.0 + 1e-15:
                    x = -1.0 + 1e-15
                c2v[c, k] = 2.0 * np.arctanh(x)
        # posterior, hard decision, parity
        for v in range(n):
            tot[v] = llr[v]
        for c in range(n_checks):
            for k in range(chk_deg[c]):
                tot[chk_vars[c, k]] += c2v[c, k]
        for v in range(n):
            hard[v] = 1 if tot[v] < 0.0 else 0
        ok = True
        for c in range(n_checks):
            s = 0
            for k in range(chk_deg[c]):
                s ^= hard[chk_vars[c, k]]
            if s != 0:
                ok = False
                break
        if ok:
            break
    return hard, ok, iters


def _bp_binary_np(llr, chk_vars, chk_deg, max_iters):
    n_checks, dmax = chk_vars.shape
    n = llr.shape[0]
    slot = np.arange(dmax)[None, :]
    mask = slot < chk_deg[:, None]
    vars_safe = np.where(mask, chk_vars, 0)
    c2v = np.zeros((n_checks, dmax))
    hard = np.zeros(n, dtype=np.int8)
    ok = False
    iters = 0
    for it in range(max_iters):
        iters = it + 1
        tot = llr.copy()
        np.add.at(tot, vars_safe[mask], c2v[mask])
        v2c = np.clip(tot[vars_safe] - c2v, -_MAX_LLR, _MAX_LLR)
        t = np.where(mask, np.tanh(0.5 * v2c), 1.0)
        pre = np.ones_like(t)
        pre[:, 1:] = np.cumprod(t[:, :-1], axis=1)
        suf = np.ones_like(t)
        suf[:, :-1] = np.cumprod(t[:, :0:-1], axis=1)[:, ::-1]
        x = np.clip(pre * suf, -1.0 + 1e-15, 1.0 - 1e-15)
        c2v = np.where(mask, 2.0 * np.arctanh(x), 0.0)
        tot = llr.copy()
        np.add.at(tot, vars_safe[mask], c2v[mask])
        hard = (tot < 0.0).astype(np.int8)
        syn = np.bitwise_xor.reduce(np.where(mask, hard[vars_safe], 0), axis=1)
        if not syn.any():
            ok = True
            break
    return hard, ok, iters


# ---------------------------------------------------------------------------
# Sum-product decoding over the pair alphabet (Z2 x Z2), component-wise checks
# ---------------------------------------------------------------------------

# 4-point Walsh-Hadamard transform for the group Z2 x Z2; state index u + 2v.
_WHT4 = np.array(
    [
        [1.0, 1.0, 1.0, 1.0],
        [1.0, -1.0, 1.0, -1.0],
        [1.0, 1.0, -1.0, -1.0],
        [1.0, -1.0, -1.0, 1.0],
    ]
)


@njit(cache=True)
def _bp_pair_jit(chan, chk_vars, chk_deg, max_iters, wht):
    n_checks, dmax = chk_vars.shape
    n = chan.shape[0]
    c2v = np.full((n_checks, dmax, 4), 0.25)
    logtot = np.empty((n, 4))
    states = np.zeros(n, dtype=np.int8)
    spec = np.empty((dmax, 4))
    pre = np.empty((dmax, 4))
    suf = np.empty((dmax, 4))
    msg = np.empty(4)
    ok = False
    iters = 0
    for it in range(max_iters):
        iters = it + 1
        for v in range(n):
            for z in range(4):
                logtot[v, z] = np.log(chan[v, z] + _EPS)
        for c in range(n_checks):
            for k in range(chk_deg[c]):
                v = chk_vars[c, k]
                for z in range(4):
                    logtot[v, z] += np.log(c2v[c, k, z] + _EPS)
        for c in range(n_checks):
            dc = chk_deg[c]
            for k in range(dc):
                v = chk_vars[c, k]
                mx = -1e300
                for z in range(4):
                    msg[z] = logtot[v, z] - np.log(c2v[c, k, z] + _EPS)
                    if msg[z] > mx:
                        mx = msg[z]
                s = 0.0
                for z in range(4):
                    msg[z] = np.exp(msg[z] - mx)
                    s += msg[z]
                for z in range(4):
                    msg[z] /= s
                for w in range(4):
                    acc = 0.0
                    for z in range(4):
                        acc += wht[w, z] * msg[z]
                    spec[k, w] = acc
            for w in range(4):
                acc = 1.0
                for k in range(dc):
                    pre[k, w] = acc
                    acc *= spec[k, w]
                acc = 1.0
                for k in range(dc - 1, -1, -1):
                    suf[k, w] = acc
                    acc *= spec[k, w]
            for k in range(dc):
                s = 0.0
                for z in range(4):
                    acc = 0.0
                    for w in range(4):
                        acc += wht[w, z] * pre[k, w] * suf[k, w]
                    acc *= 0.25
                    if acc < 0.0:
                        acc = 0.0
                    msg[z] = acc
                    s += acc
                if s <= 0.0:
                    for z in range(4):
                        c2v[c, k, z] = 0.25
                else:
                    for z in range(4):
                        c2v[c, k, z] = msg[z] / s
        for v in range(n):
            for z in range(4):
                logtot[v, z] = np.log(chan[v, z] + _EPS)
        for c in range(n_checks):
            for k in range(chk_deg[c]):
                v = chk_vars[c, k]
                for z in range(4):
                    logtot[v, z] += np.log(c2v[c, k, z] + _EPS)
        for v in range(n):
            best = 0
            for z in range(1, 4):
                if logtot[v, z] > logtot[v, best]:
                    best = z
            states[v] = best
        ok = True
        for c in range(n_checks):
            su = 0
            sv = 0
            for k in range(chk_deg[c]):
                z = states[chk_vars[c, k]]
                su ^= z & 1
                sv ^= (z >> 1) & 1
            if su != 0 or sv != 0:
                ok = False
                break
        if ok:
            break
    return states, ok, iters, logtot


def _bp_pair_np(chan, chk_vars, chk_deg, max_iters, wht):
    n_checks, dmax = chk_vars.shape
    n = chan.shape[0]
    slot = np.arange(dmax)[None, :]
    mask = slot < chk_deg[:, None]
    vars_safe = np.where(mask, chk_vars, 0)
    logch = np.log(chan + _EPS)
    c2v = np.full((n_checks, dmax, 4), 0.25)
    states = np.zeros(n, dtype=np.int8)
    ok = False
    iters = 0
    for it in range(max_iters):
        iters = it + 1
        logtot = logch.copy()
        np.add.at(logtot, vars_safe[mask], np.log(c2v[mask] + _EPS))
        lmsg = logtot[vars_safe] - np.log(c2v + _EPS)
        lmsg -= lmsg.max(axis=2, keepdims=True)
        msg = np.exp(lmsg)
        msg /= msg.sum(axis=2, keepdims=True)
        spec = msg @ wht.T
        spec = np.where(mask[:, :, None], spec, 1.0)
        pre = np.ones_like(spec)
        pre[:, 1:] = np.cumprod(spec[:, :-1], axis=1)
        suf = np.ones_like(spec)
        suf[:, :-1] = np.cumprod(spec[:, :0:-1], axis=1)[:, ::-1]
        out = np.maximum((pre * suf) @ (0.25 * wht), 0.0)
        tot = out.sum(axis=2, keepdims=True)
        c2v = np.where(tot > 0.0, out / np.where(tot > 0.0, tot, 1.0), 0.25)
        c2v = np.where(mask[:, :, None], c2v, 0.25)
        logtot = logch.copy()
        np.add.at(logtot, vars_safe[mask], np.log(c2v[mask] + _EPS))
        states = np.argmax(logtot, axis=1).astype(np.int8)
        zz = np.where(mask, states[vars_safe], 0)
        su = np.bitwise_xor.reduce(zz & 1, axis=1)
        sv = np.bitwise_xor.reduce((zz >> 1) & 1, axis=1)
        if not su.any() and not sv.any():
            ok = True
            break
    return states, ok, iters, logtot


# ---------------------------------------------------------------------------
# Forward-backward sweep over the zigzag detection chain
# ---------------------------------------------------------------------------


@njit(cache=True)
def _chain_fb_jit(loc, trans):
    """Exact marginals of a 4-state chain.

    loc: (N, 4) local factors (even-sample likelihood times prior).
    trans: (N, 2, 2) pairwise factor between node n-1 and node n indexed by
    (v-component of node n-1, u-component of node n); trans[0] is unused.
    """
    n = loc.shape[0]
    alpha = np.empty((n, 4))
    beta = np.empty((n, 4))
    s = 0.0
    for z in range(4):
        alpha[0, z] = loc[0, z]
        s += alpha[0, z]
    if s > 0.0:
        for z in range(4):
            alpha[0, z] /= s
    for i in range(1, n):
        s = 0.0
        for z in range(4):
            u = z & 1
            acc = 0.0
            for zp in range(4):
                vp = (zp >> 1) & 1
                acc += alpha[i - 1, zp] * trans[i, vp, u]
            alpha[i, z] = acc * loc[i, z]
            s += alpha[i, z]
        if s > 0.0:
            for z in range(4):
                alpha[i, z] /= s
    for z in range(4):
        beta[n - 1, z] = 1.0
    for i in range(n - 2, -1, -1):
        s = 0.0
        for zp in range(4):
            vp = (zp >> 1) & 1
            acc = 0.0
            for z in range(4):
                u = z & 1
                acc += trans[i + 1, vp, u] * loc[i + 1, z] * beta[i + 1, z]
            beta[i, zp] = acc
            s += acc
        if s > 0.0:
            for zp in range(4):
                beta[i, zp] /= s
    post = np.empty((n, 4))
    for i in range(n):
        s = 0.0
        for z in range(4):
            post[i, z] = alpha[i, z] * beta[i, z]
            s += post[i, z]
        if s > 0.0:
            for z in range(4):
                post[i, z] /= s
        else:
            for z in range(4):
                post[i, z] = 0.25
    return post


def _chain_fb_np(loc, trans):
    n = loc.shape[0]
    # expand (v_prev, u) factor to a full 4x4 state transition per step
    u = np.array([z & 1 for z in range(4)])
    vp = np.array([(z >> 1) & 1 for z in range(4)])
    alpha = np.empty((n, 4))
    beta = np.empty((n, 4))
    a = loc[0].copy()
    s = a.sum()
    alpha[0] = a / s if s > 0 else 0.25
    for i in range(1, n):
        t = trans[i][vp[:, None], u[None, :]]  # (z_prev, z)
        a = (alpha[i - 1] @ t) * loc[i]
        s = a.sum()
        alpha[i] = a / s if s > 0 else 0.25
    beta[n - 1] = 1.0
    for i in range(n - 2, -1, -1):
        t = trans[i + 1][vp[:, None], u[None, :]]
        b = t @ (loc[i + 1] * beta[i + 1])
        s = b.sum()
        beta[i] = b / s if s > 0 else 0.25
    post = alpha * beta
    s = post.sum(axis=1, keepdims=True)
    return np.where(s > 0, post / np.where(s > 0, s, 1.0), 0.25)


# ---------------------------------------------------------------------------
# Public dispatch
# ---------------------------------------------------------------------------


def bp_binary(llr, chk_vars, chk_deg, max_iters):
    """Binary sum-product decode; returns (hard_bits, parity_ok, iters)."""
    llr = np.ascontiguousarray(llr, dtype=np.float64)
    if NUMBA_AVAILABLE:
        return _bp_binary_jit(llr, chk_vars, chk_deg, max_iters)
    return _bp_binary_np(llr, chk_vars, chk_deg, max_iters)


def bp_pair(chan, chk_vars, chk_deg, max_iters):
    """Pair-alphabet sum-product decode.

    Returns (states, parity_ok, iters, log_posterior); the unnormalized
    log posterior lets callers form extrinsics for iterative detection.
    """
    chan = np.ascontiguousarray(chan, dtype=np.float64)
    if NUMBA_AVAILABLE:
        return _bp_pair_jit(chan, chk_vars, chk_deg, max_iters, _WHT4)
    return _bp_pair_np(chan, chk_vars, chk_deg, max_iters, _WHT4)


def chain_forward_backward(loc, trans):
    """Exact posterior marginals on the oversampled detection chain."""
    loc = np.ascontiguousarray(loc, dtype=np.float64)
    trans = np.ascontiguousarray(trans, dtype=np.float64)
    if NUMBA_AVAILABLE:
        return _chain_fb_jit(loc, trans)
    return _chain_fb_np(loc, trans)
