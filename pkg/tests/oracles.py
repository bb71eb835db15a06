"""Brute-force reference implementations used only by the tests."""

import itertools

import numpy as np


def codewords(H_dense):
    """Every word with zero syndrome, by exhaustive enumeration (n <= ~20)."""
    n = H_dense.shape[1]
    words = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.uint8)
    ok = ~((words @ H_dense.T.astype(np.int64)) % 2).any(axis=1)
    return words[ok]


def ml_decode(C, llr):
    """Maximum-likelihood codeword for BI-AWGN LLRs (positive favours 0)."""
    return C[np.argmin(C.astype(np.float64) @ llr)]


def dense_syndrome(H_dense, bits):
    return (np.asarray(bits, dtype=np.int64) @ H_dense.T.astype(np.int64)) % 2


def small_code():
    """A (3,6)-regular 8x16 parity-check matrix (rank 8, so 256 codewords)."""
    from scldpc.peg import peg_construct

    return peg_construct((3, 6), 16, seed=1)
