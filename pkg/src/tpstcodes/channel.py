"""BPSK over AWGN: noise scaling, channel LLRs, likelihoods and the EDF.

BPSK maps bit 0 to +1 and bit 1 to -1. LLRs are natural-log, positive
favouring bit 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import _kernels as K
from .binlin import BitVector

SnrMode = Literal["ebn0", "esn0"]


def sigma_for(snr_db: float, snr_mode: SnrMode = "ebn0", code_rate: float = 0.5) -> float:
    lin = 10.0 ** (snr_db / 10.0)
    if snr_mode == "esn0":
        return math.sqrt(1.0 / (2.0 * lin))
    if snr_mode == "ebn0":
        if not 0 < code_rate <= 1:
            raise ValueError(f"code_rate must lie in (0, 1], got {code_rate}")
        return math.sqrt(1.0 / (2.0 * code_rate * lin))
    raise ValueError(f"unknown snr_mode {snr_mode!r}")


@dataclass(frozen=True)
class ChannelParams:
    snr_db: float
    snr_mode: SnrMode = "ebn0"
    code_rate: float = 0.5

    @property
    def sigma(self) -> float:
        return sigma_for(self.snr_db, self.snr_mode, self.code_rate)

    @classmethod
    def from_sigma(cls, sigma: float) -> "ChannelParams":
        """Es/N0 parameters that reproduce a given noise standard deviation."""
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        return cls(10.0 * math.log10(1.0 / (2.0 * sigma * sigma)), "esn0")


def _bits(c) -> np.ndarray:
    return c.to_bits() if isinstance(c, BitVector) else np.asarray(c, np.uint8)


def bpsk(c) -> np.ndarray:
    return 1.0 - 2.0 * _bits(c).astype(np.float64)


def bpsk_awgn(c, params: ChannelParams | float, rng_seed: int | np.random.Generator | None = None) -> np.ndarray:
    """Received samples ``y = (1 - 2c) + z``, ``z ~ N(0, sigma^2)``.

    ``params`` may be a bare sigma. ``rng_seed`` may also be a ready Generator.
    """
    sigma = params if isinstance(params, (int, float)) else params.sigma
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    x = bpsk(c)
    return x + sigma * rng.standard_normal(x.size)


def channel_llr(y: np.ndarray, sigma: float) -> np.ndarray:
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return 2.0 * np.asarray(y, np.float64) / sigma**2


def log_likelihood(y: np.ndarray, c, sigma: float) -> float:
    """``log P(y|c)`` without the ``-len(y)/2 * log(2 pi sigma^2)`` term shared by all words."""
    y = np.ascontiguousarray(y, np.float64)
    c = np.ascontiguousarray(_bits(c))
    if y.size != c.size:
        raise ValueError(f"length mismatch: {y.size} samples vs {c.size} bits")
    return float(K.loglik(y, c, sigma))


def edf(y: np.ndarray, c, sigma: float) -> float:
    """Empirical divergence ``(1/N) log2 P(y|c)/P(y)`` with uniform-input ``P(y)``.

    Per bit this is ``1 - log2(1 + exp(-x_j * llr_j))``, hence never above 1.
    """
    y = np.ascontiguousarray(y, np.float64)
    c = np.ascontiguousarray(_bits(c))
    if y.size != c.size:
        raise ValueError(f"length mismatch: {y.size} samples vs {c.size} bits")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return float(K.edf_value(y, c, sigma))


def boxplus(a, b):
    """LLR of the XOR of two independent bits, ``log((1+e^(a+b))/(e^a+e^b))``."""
    a = np.asarray(a, np.float64)
    b = np.asarray(b, np.float64)
    return (
        np.sign(a + (a == 0)) * np.sign(b + (b == 0)) * np.minimum(np.abs(a), np.abs(b))
        + np.log1p(np.exp(-np.abs(a + b)))
        - np.log1p(np.exp(-np.abs(a - b)))
    )
