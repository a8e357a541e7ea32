"""Shared fixtures: small codes, fields, and helper builders.

Codes are session-scoped because circulant expansion plus generator
construction is the expensive part of most tests.
"""

import numpy as np
import pytest

from idtqc.galois import FieldSpec
from idtqc.idt import IdtConfig, PamMap
from idtqc.qc_ldpc import default_protograph, expand_protograph


@pytest.fixture(scope="session")
def field2():
    return FieldSpec(2)


@pytest.fixture(scope="session")
def field5():
    return FieldSpec(5)


@pytest.fixture(scope="session")
def small_code():
    """Binary b=4, L=16 code (N' = 64, K = 32)."""
    proto = default_protograph(4, 2)
    return expand_protograph(proto, 16, rng=np.random.default_rng(1), p=2)


@pytest.fixture(scope="session")
def small_code5():
    """Five-ary b=4, L=16 code (N' = 64, K = 32)."""
    proto = default_protograph(4, 2)
    return expand_protograph(proto, 16, rng=np.random.default_rng(2), p=5)


def make_code(b, k_b, L, seed, p=2):
    """Construct a code from the default protograph family."""
    proto = default_protograph(b, k_b)
    return expand_protograph(proto, L, rng=np.random.default_rng(seed), p=p)


def make_setup(code, d_max, n_sources=1, power=10.0):
    """(config, pam) pair for a code under the given framing parameters."""
    cfg = IdtConfig.for_code(code, d_max=d_max, n_sources=n_sources)
    pam = PamMap(code.field, power=power)
    return cfg, pam
