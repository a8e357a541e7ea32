"""Protograph expansion, systematic encoding, QC closure, and BP decoding."""

import numpy as np
import pytest

from idtqc.galois import mat_rank
from idtqc.qc_ldpc import (
    ConstructionFailure,
    Protograph,
    bp_decode,
    code_from_json,
    code_to_json,
    default_protograph,
    encode,
    expand_protograph,
    extract_message,
    generator_matrix,
    verify_qc_closure,
)
from tests.conftest import make_code


# ---------------------------------------------------------------------------
# Protograph validation and the default family
# ---------------------------------------------------------------------------


def test_protograph_validation():
    with pytest.raises(ValueError):
        Protograph.of([[0, 2]])
    with pytest.raises(ValueError):
        Protograph.of([[1, 1], [1, 1]])  # c >= b
    with pytest.raises(ValueError):
        Protograph.of([[1, 0, 1]])  # all-zero column


def test_default_protograph_shape_and_parity_structure():
    proto = default_protograph(8, 6)
    arr = proto.as_array()
    assert arr.shape == (2, 8)
    # parity part is lower bidiagonal
    par = arr[:, 6:]
    assert np.array_equal(np.diag(par), np.ones(2, dtype=np.int64))
    assert par[0, 1] == 0 and par[1, 0] == 1
    # message columns carry weight min(3, c)
    assert (arr[:, :6].sum(axis=0) == 2).all()


def test_default_protograph_rejects_degenerate():
    with pytest.raises(ValueError):
        default_protograph(2, 2)
    with pytest.raises(ValueError):
        default_protograph(2, 0)


# ---------------------------------------------------------------------------
# Expansion
# ---------------------------------------------------------------------------


def test_expand_single_row_explicit_shifts():
    # proto [[1, 1]] at L=3 with shifts (0, 1): identity next to one circulant
    code = expand_protograph(Protograph.of([[1, 1]]), 3,
                             shifts=np.array([[0, 1]]))
    assert code.n == 6 and code.k == 3
    # block assembly before the codeword-domain column permutation
    ident = np.eye(3, dtype=np.int64)
    circ = np.roll(ident, 1, axis=1)  # shift 1: row i has its 1 at column i+1
    h_blocks = np.concatenate([ident, circ], axis=1)
    perm = (np.arange(6) % 2) * 3 + np.arange(6) // 2
    assert np.array_equal(code.H.astype(np.int64), h_blocks[:, perm])
    assert mat_rank(code.H.astype(np.int64), 2) == 3


def test_expand_requires_exactly_one_shift_source():
    proto = default_protograph(4, 2)
    with pytest.raises(ValueError):
        expand_protograph(proto, 8)
    with pytest.raises(ValueError):
        expand_protograph(proto, 8, shifts=np.zeros((2, 4), dtype=np.int64),
                          rng=np.random.default_rng(0))


def test_expand_rejects_bad_shift_values():
    proto = Protograph.of([[1, 1]])
    with pytest.raises(ValueError):
        expand_protograph(proto, 4, shifts=np.array([[0, 4]]))
    with pytest.raises(ValueError):
        expand_protograph(proto, 4, shifts=np.array([[0]]))


def test_zero_proto_entry_gives_zero_block():
    proto = default_protograph(4, 2)
    code = make_code(4, 2, 8, seed=7)
    arr = proto.as_array()
    zr, zc = np.nonzero(arr == 0)
    # undo the codeword-domain permutation to look at the block layout
    perm = (np.arange(code.n) % 4) * 8 + np.arange(code.n) // 4
    h_blocks = np.empty_like(code.H)
    h_blocks[:, perm] = code.H
    for r, c in zip(zr, zc):
        assert not h_blocks[r * 8:(r + 1) * 8, c * 8:(c + 1) * 8].any()


# ---------------------------------------------------------------------------
# Systematic encoding
# ---------------------------------------------------------------------------


def test_encode_zero_and_linearity(small_code):
    code = small_code
    p = code.field.p
    assert not encode(code, np.zeros(code.k, dtype=np.int64)).any()
    rng = np.random.default_rng(0)
    w1 = rng.integers(0, p, size=code.k)
    w2 = rng.integers(0, p, size=code.k)
    c12 = encode(code, (w1 + w2) % p)
    assert np.array_equal(c12, (encode(code, w1) + encode(code, w2)) % p)


def test_encode_is_systematic_and_valid(small_code, small_code5):
    for code in (small_code, small_code5):
        rng = np.random.default_rng(4)
        for _ in range(20):
            w = rng.integers(0, code.field.p, size=code.k)
            c = encode(code, w)
            assert code.is_codeword(c)
            assert np.array_equal(extract_message(code, c), w)


def test_message_layout_subblock_major(small_code):
    # message index s*L + j sits at codeword position s + j*b
    code = small_code
    L, b = code.L, code.b
    want = np.concatenate([s + np.arange(L) * b for s in range(code.k_blocks)])
    assert np.array_equal(code.msg_positions, want)


def test_encode_length_mismatch(small_code):
    with pytest.raises(ValueError):
        encode(small_code, np.zeros(small_code.k + 1, dtype=np.int64))


def test_generator_matrix_orthogonal_to_h(small_code):
    G = generator_matrix(small_code)
    assert mat_rank(G, 2) == small_code.k
    assert not ((G @ small_code.H.T.astype(np.int64)) % 2).any()


def test_construction_failure_on_singular_parity():
    # two identical parity columns make the parity submatrix singular
    proto = Protograph.of([[1, 1, 1], [1, 1, 1]])
    shifts = np.array([[0, 0, 0], [0, 1, 1]])
    with pytest.raises(ConstructionFailure):
        expand_protograph(proto, 4, shifts=shifts)


# ---------------------------------------------------------------------------
# QC closure
# ---------------------------------------------------------------------------


def test_qc_closure_random_codewords(small_code, small_code5):
    for code in (small_code, small_code5):
        rng = np.random.default_rng(5)
        for _ in range(25):
            w = rng.integers(0, code.field.p, size=code.k)
            assert verify_qc_closure(code, encode(code, w))
        assert verify_qc_closure(code, np.zeros(code.n, dtype=np.int64))
        bad = encode(code, rng.integers(0, code.field.p, size=code.k))
        bad[0] = (bad[0] + 1) % code.field.p
        assert not verify_qc_closure(code, bad)


# ---------------------------------------------------------------------------
# Belief propagation
# ---------------------------------------------------------------------------


def _noiseless_llr(c):
    return np.where(np.asarray(c) == 0, 30.0, -30.0)


def test_bp_binary_noiseless(small_code):
    code = small_code
    rng = np.random.default_rng(6)
    w = rng.integers(0, 2, size=code.k)
    c = encode(code, w)
    res = bp_decode(code, _noiseless_llr(c))
    assert res.ok and res.iters == 1
    assert np.array_equal(res.word, c)


def test_bp_binary_corrects_weak_positions(small_code):
    code = small_code
    rng = np.random.default_rng(7)
    w = rng.integers(0, 2, size=code.k)
    c = encode(code, w)
    llr = _noiseless_llr(c)
    llr[[3, 17]] = 0.0  # erase two symbols
    res = bp_decode(code, llr)
    assert res.ok
    assert np.array_equal(res.word, c)


def test_bp_failure_is_reported_not_thrown(small_code):
    res = bp_decode(small_code, np.zeros(small_code.n), max_iters=5)
    if res.ok:
        assert small_code.is_codeword(res.word)
    else:
        assert res.word is None


def test_bp_output_always_satisfies_parity(small_code):
    rng = np.random.default_rng(8)
    for _ in range(10):
        llr = rng.normal(scale=2.0, size=small_code.n)
        res = bp_decode(small_code, llr, max_iters=50)
        if res.ok:
            assert small_code.is_codeword(res.word)


def test_bp_nonbinary_noiseless(small_code5):
    code = small_code5
    rng = np.random.default_rng(9)
    w = rng.integers(0, 5, size=code.k)
    c = encode(code, w)
    probs = np.full((code.n, 5), 1e-6)
    probs[np.arange(code.n), c] = 1.0
    probs /= probs.sum(axis=1, keepdims=True)
    res = bp_decode(code, probs)
    assert res.ok
    assert np.array_equal(res.word, c)


def test_bp_nonbinary_corrects_erasures(small_code5):
    code = small_code5
    rng = np.random.default_rng(10)
    w = rng.integers(0, 5, size=code.k)
    c = encode(code, w)
    probs = np.full((code.n, 5), 1e-6)
    probs[np.arange(code.n), c] = 1.0
    probs[5] = 0.2  # erase one symbol
    probs /= probs.sum(axis=1, keepdims=True)
    res = bp_decode(code, probs)
    assert res.ok
    assert np.array_equal(res.word, c)


def test_bp_evidence_shape_errors(small_code, small_code5):
    with pytest.raises(ValueError):
        bp_decode(small_code, np.zeros((small_code.n, 2)))
    with pytest.raises(ValueError):
        bp_decode(small_code5, np.zeros(small_code5.n))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def test_code_json_round_trip(small_code, small_code5):
    for code in (small_code, small_code5):
        clone = code_from_json(code_to_json(code))
        assert np.array_equal(clone.H, code.H)
        assert np.array_equal(clone.shifts, code.shifts)
        assert clone.field.p == code.field.p
        w = np.random.default_rng(11).integers(0, code.field.p, size=code.k)
        assert np.array_equal(encode(clone, w), encode(code, w))
