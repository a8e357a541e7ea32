"""Quasi-cyclic coded physical-layer network coding with
interleave/deinterleave framing: simulation library and experiment CLI.

The package splits into field/polynomial arithmetic (``galois``), code
construction and belief propagation (``qc_ldpc``), modulation and framing
(``idt``), channel models (``channels``), decoding pipelines
(``receivers``), achievable-rate computations (``rates``), and the
experiment runner (``cli``).
"""

__version__ = "0.1.0"

from . import channels, galois, idt, qc_ldpc, rates, receivers  # noqa: F401,E402

__all__ = [
    "__version__",
    "galois",
    "qc_ldpc",
    "idt",
    "channels",
    "receivers",
    "rates",
]
