"""Twisted-pair superposition transmission codes.

Two basic codewords ``v0``, ``v1`` of length ``n`` are mixed into one length
``2n`` codeword::

    c1 = v1 + v0 R          (forward superposition)
    c0 = v0 + c1 S          (backward superposition)

and decoded layer by layer: a list of layer-0 candidates, each followed by a
layer-1 Viterbi pass with the candidate's interference cancelled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels as K
from .binlin import (
    BitMatrix,
    BitVector,
    SelectionMatrix,
    build_selection_matrix,
    hstack,
    sample_structured_matrix,
    vstack,
)
from .convcode import ConvSpec


@dataclass(frozen=True)
class TpstSpec:
    basic0: ConvSpec
    basic1: ConvSpec
    R: BitMatrix
    S: SelectionMatrix
    l_max: int = 1
    threshold: float = math.inf

    def __post_init__(self):
        n = self.basic0.length
        if self.basic1.length != n:
            raise ValueError(f"basic codes differ in length: {n} vs {self.basic1.length}")
        if self.R.shape != (n, n):
            raise ValueError(f"R must be {n}x{n}, got {self.R.rows}x{self.R.cols}")
        if self.S.n != n:
            raise ValueError(f"S must have {n} diagonal entries, got {self.S.n}")
        if self.l_max < 1:
            raise ValueError(f"l_max must be >= 1, got {self.l_max}")

    @classmethod
    def build(
        cls,
        basic0: ConvSpec,
        basic1: ConvSpec | None = None,
        alpha: float = 1.0,
        r_kind: str = "permutation",
        r_seed: int = 0,
        l_max: int = 1,
        threshold: float = math.inf,
    ) -> "TpstSpec":
        basic1 = basic0 if basic1 is None else basic1
        n = basic0.length
        return cls(basic0, basic1, sample_structured_matrix(n, r_kind, r_seed),
                   build_selection_matrix(n, alpha), l_max, threshold)

    def with_options(self, **changes) -> "TpstSpec":
        fields = dict(basic0=self.basic0, basic1=self.basic1, R=self.R, S=self.S,
                      l_max=self.l_max, threshold=self.threshold)
        fields.update(changes)
        return TpstSpec(**fields)

    @property
    def n(self) -> int:
        return self.basic0.length

    @property
    def k0(self) -> int:
        return self.basic0.info_len

    @property
    def k1(self) -> int:
        return self.basic1.info_len

    @property
    def k(self) -> int:
        return self.k0 + self.k1

    @property
    def length(self) -> int:
        return 2 * self.n

    @property
    def rate(self) -> float:
        return self.k / self.length

    @cached_property
    def r_dense(self) -> np.ndarray:
        return np.ascontiguousarray(self.R.to_bits())

    @cached_property
    def s_diag(self) -> np.ndarray:
        return np.ascontiguousarray(self.S.diag.to_bits())


@dataclass(frozen=True)
class DecodeResult:
    codeword: BitVector
    info: BitVector
    list_used: int
    terminated_early: bool
    final_metric: float


def build_generator(spec: TpstSpec) -> BitMatrix:
    """``[[G0 + G0 R S, G0 R], [G1 S, G1]]``."""
    g0 = spec.basic0.generator_matrix()
    g1 = spec.basic1.generator_matrix()
    s = spec.S.as_matrix()
    g0r = g0 @ spec.R
    return vstack(hstack(g0 + g0r @ s, g0r), hstack(g1 @ s, g1))


def build_parity(spec: TpstSpec) -> BitMatrix:
    """``[[H0, H0 S^T], [H1 R^T, H1 + H1 R^T S^T]]``."""
    h0 = spec.basic0.parity_matrix()
    h1 = spec.basic1.parity_matrix()
    st = spec.S.as_matrix().T
    h1rt = h1 @ spec.R.T
    return vstack(hstack(h0, h0 @ st), hstack(h1rt, h1 + h1rt @ st))


def encode_bits(u: np.ndarray, spec: TpstSpec) -> np.ndarray:
    """uint8 fast path of :func:`encode`."""
    u = np.asarray(u, np.uint8)
    if u.size != spec.k:
        raise ValueError(f"info length {u.size} != k0 + k1 = {spec.k}")
    b0, b1 = spec.basic0, spec.basic1
    v0 = K.encode_punctured(np.ascontiguousarray(u[: spec.k0]), b0.info_len, b0.memory, b0.tap_masks, b0.kept)
    v1 = K.encode_punctured(np.ascontiguousarray(u[spec.k0:]), b1.info_len, b1.memory, b1.tap_masks, b1.kept)
    return K.assemble(v0, v1, K.times_r(v0, spec.r_dense), spec.s_diag)


def encode(u: BitVector | np.ndarray, spec: TpstSpec) -> BitVector:
    bits = u.to_bits() if isinstance(u, BitVector) else u
    return BitVector(encode_bits(bits, spec))


def llr_layer0(y0: np.ndarray, y1: np.ndarray, spec: TpstSpec, sigma: float) -> np.ndarray:
    """Layer-0 LLRs treating ``c1`` as uniform interference with side information ``y1``."""
    y0 = np.ascontiguousarray(y0, np.float64)
    y1 = np.ascontiguousarray(y1, np.float64)
    if y0.size != spec.n or y1.size != spec.n:
        raise ValueError(f"expected two halves of length {spec.n}")
    return K.layer0_llr(y0, y1, spec.s_diag, sigma)


def llr_layer1(y0: np.ndarray, y1: np.ndarray, v0_hat, spec: TpstSpec, sigma: float) -> np.ndarray:
    """Layer-1 LLRs with the interference of candidate ``v0_hat`` removed from both halves."""
    y0 = np.ascontiguousarray(y0, np.float64)
    y1 = np.ascontiguousarray(y1, np.float64)
    v0 = np.ascontiguousarray(v0_hat.to_bits() if isinstance(v0_hat, BitVector) else v0_hat, np.uint8)
    if v0.size != spec.n:
        raise ValueError(f"v0_hat must have length {spec.n}")
    w0 = K.times_r(v0, spec.r_dense)
    return K.layer1_llr(y0, y1, v0, w0, spec.s_diag, sigma)


def _kernel_args(spec: TpstSpec) -> tuple:
    b0, b1 = spec.basic0, spec.basic1
    return (
        b0.out_pat, b0.memory, b0.info_len, b0.streams, b0.tap_masks, b0.kept, b0.mother_len,
        b1.out_pat, b1.memory, b1.info_len, b1.streams, b1.tap_masks, b1.kept, b1.mother_len,
    )


def scl_raw(y: np.ndarray, spec: TpstSpec, sigma: float):
    """Kernel-level decode: (codeword uint8, info0, info1, list_used, early, loglik, edf)."""
    return K.scl_kernel(
        np.ascontiguousarray(y, np.float64), float(sigma), spec.s_diag, spec.r_dense,
        int(spec.l_max), float(spec.threshold), *_kernel_args(spec),
    )


def scl_decode(y: np.ndarray, spec: TpstSpec, sigma: float) -> DecodeResult:
    """Successive-cancellation list decoding with EDF early termination."""
    y = np.asarray(y, np.float64)
    if y.size != spec.length:
        raise ValueError(f"expected {spec.length} received samples, got {y.size}")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    c, i0, i1, used, early, ll, _ = scl_raw(y, spec, sigma)
    info = np.concatenate([K.info_to_bits(i0, spec.k0), K.info_to_bits(i1, spec.k1)])
    return DecodeResult(BitVector(c), BitVector(info), int(used), bool(early), float(ll))
