"""Tail-biting feedforward convolutional codes.

Generators use the left-justified octal convention: the octal digits are
expanded MSB-first and the first ``m + 1`` bits are the taps of
``1, D, ..., D^m``. So ``"56"`` -> ``101110`` -> ``1 + D^2 + D^3 + D^4``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from . import _kernels as K
from .binlin import BitMatrix, BitVector, homogeneous_mask

MAX_INFO_LEN = 62


def parse_octal(text: str | Sequence[str]) -> tuple[str, ...]:
    """Split ``"52,66,76"`` (or a sequence of strings) into validated octal tokens."""
    parts = text.split(",") if isinstance(text, str) else list(text)
    out = []
    for p in parts:
        p = str(p).strip()
        if not p or any(ch not in "01234567" for ch in p):
            raise ValueError(f"malformed octal generator {p!r}")
        out.append(p)
    if not out:
        raise ValueError("no generators given")
    return tuple(out)


def octal_taps(gen: str) -> list[int]:
    """Coefficients of 1, D, D^2, ... up to the last nonzero tap."""
    bits = [int(b) for ch in gen for b in format(int(ch, 8), "03b")]
    if not any(bits):
        raise ValueError(f"generator {gen!r} is the zero polynomial")
    last = max(i for i, b in enumerate(bits) if b)
    return bits[: last + 1]


@dataclass(frozen=True)
class PuncturePattern:
    """Keep mask applied cyclically over the serialized mother codeword."""

    keep_mask: tuple[int, ...]

    def __post_init__(self):
        mask = tuple(int(b) for b in self.keep_mask)
        if not mask or any(b not in (0, 1) for b in mask):
            raise ValueError("keep_mask must be a non-empty 0/1 pattern")
        if not any(mask):
            raise ValueError("keep_mask must keep at least one position per period")
        object.__setattr__(self, "keep_mask", mask)

    @classmethod
    def from_string(cls, text: str) -> "PuncturePattern":
        return cls(tuple(int(ch) for ch in text.strip()))

    @classmethod
    def homogeneous(cls, mother_len: int, target_len: int) -> "PuncturePattern":
        """Drop ``mother_len - target_len`` positions spread by the floor-counter rule."""
        if not 0 < target_len <= mother_len:
            raise ValueError(f"cannot puncture length {mother_len} down to {target_len}")
        drop = homogeneous_mask(mother_len, mother_len - target_len)
        return cls(tuple(int(1 - d) for d in drop))

    @property
    def period(self) -> int:
        return len(self.keep_mask)

    def kept_positions(self, mother_len: int) -> np.ndarray:
        mask = np.resize(np.array(self.keep_mask, np.uint8), mother_len)
        return np.flatnonzero(mask).astype(np.int64)

    def punctured_len(self, mother_len: int) -> int:
        return int(self.kept_positions(mother_len).size)

    def __str__(self) -> str:
        return "".join(map(str, self.keep_mask))


@dataclass(frozen=True)
class ConvSpec:
    """A tail-biting convolutional basic code with optional puncturing."""

    generators: tuple[str, ...]
    info_len: int
    memory: int | None = None
    puncture: PuncturePattern | None = None
    taps: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        gens = parse_octal(self.generators)
        object.__setattr__(self, "generators", gens)
        coeffs = [octal_taps(g) for g in gens]
        degree = max(len(c) - 1 for c in coeffs)
        m = degree if self.memory is None else int(self.memory)
        if degree > m:
            raise ValueError(f"generator degree {degree} exceeds memory {m}")
        object.__setattr__(self, "memory", m)
        object.__setattr__(self, "taps", tuple(tuple(c + [0] * (m + 1 - len(c))) for c in coeffs))
        if self.info_len < max(m, 1):
            raise ValueError(f"info_len {self.info_len} < memory {m}: tail-biting start state undefined")
        if self.info_len > MAX_INFO_LEN:
            raise ValueError(f"info_len {self.info_len} exceeds supported maximum {MAX_INFO_LEN}")

    @classmethod
    def from_octal(cls, text: str, info_len: int, memory: int | None = None,
                   puncture: PuncturePattern | str | None = None) -> "ConvSpec":
        if isinstance(puncture, str):
            puncture = PuncturePattern.from_string(puncture)
        return cls(parse_octal(text), info_len, memory, puncture)

    @property
    def streams(self) -> int:
        return len(self.generators)

    @property
    def mother_len(self) -> int:
        return self.streams * self.info_len

    @property
    def length(self) -> int:
        """Codeword length after puncturing."""
        return self.mother_len if self.puncture is None else self.puncture.punctured_len(self.mother_len)

    @property
    def k(self) -> int:
        return self.info_len

    # compiled-kernel tables
    @cached_property
    def tap_masks(self) -> np.ndarray:
        return np.array([sum(b << d for d, b in enumerate(t)) for t in self.taps], np.int64)

    @cached_property
    def out_pat(self) -> np.ndarray:
        S = 1 << self.memory
        pat = np.zeros((S, 2), np.int64)
        for x in range(S):
            for b in (0, 1):
                reg = (x << 1) | b
                pat[x, b] = sum((bin(reg & int(t)).count("1") & 1) << i for i, t in enumerate(self.tap_masks))
        return pat

    @cached_property
    def kept(self) -> np.ndarray:
        if self.puncture is None:
            return np.arange(self.mother_len, dtype=np.int64)
        return self.puncture.kept_positions(self.mother_len)

    def generator_matrix(self) -> BitMatrix:
        """k x n matrix whose rows encode the unit information vectors (punctured)."""
        eye = np.eye(self.info_len, dtype=np.uint8)
        return BitMatrix(np.array([puncture_bits(encode_bits(e, self), self) for e in eye]), cols=self.length)

    def parity_matrix(self) -> BitMatrix:
        return self.generator_matrix().nullspace()


@dataclass(frozen=True)
class ListEntry:
    codeword: BitVector
    info: BitVector
    metric: float


def _as_bits(u) -> np.ndarray:
    return u.to_bits() if isinstance(u, BitVector) else np.asarray(u, np.uint8)


def encode_bits(u: np.ndarray, spec: ConvSpec) -> np.ndarray:
    """Mother codeword as a uint8 array; each stream is a cyclic convolution of ``u``."""
    u = np.asarray(u, np.uint8)
    if u.size != spec.info_len:
        raise ValueError(f"info length {u.size} != {spec.info_len}")
    out = np.zeros((spec.info_len, spec.streams), np.uint8)
    for i, taps in enumerate(spec.taps):
        for d, g in enumerate(taps):
            if g:
                out[:, i] ^= np.roll(u, d)
    return out.reshape(-1)


def encode_tbcc(u: BitVector | np.ndarray, spec: ConvSpec) -> BitVector:
    """Tail-biting encoding to the (unpunctured) mother codeword."""
    u = _as_bits(u)
    if u.size < spec.memory:
        raise ValueError(f"info length {u.size} < memory {spec.memory}")
    return BitVector(encode_bits(u, spec))


def puncture_bits(c: np.ndarray, spec: ConvSpec) -> np.ndarray:
    return np.asarray(c, np.uint8)[spec.kept]


def puncture(c: BitVector | np.ndarray, pattern: PuncturePattern) -> BitVector:
    bits = _as_bits(c)
    return BitVector(bits[pattern.kept_positions(bits.size)])


def depuncture_llr(llr: np.ndarray, pattern: PuncturePattern | None, mother_len: int) -> np.ndarray:
    """Scatter kept LLRs back to mother positions; punctured positions become 0."""
    llr = np.asarray(llr, np.float64)
    kept = np.arange(mother_len) if pattern is None else pattern.kept_positions(mother_len)
    if llr.size != kept.size:
        raise ValueError(f"expected {kept.size} LLRs for mother length {mother_len}, got {llr.size}")
    out = np.zeros(mother_len)
    out[kept] = llr
    return out


def _entry(metric: float, info: int, spec: ConvSpec) -> ListEntry:
    u = K.info_to_bits(np.int64(info), spec.info_len)
    return ListEntry(BitVector(encode_bits(u, spec)), BitVector(u), float(metric))


def _check_llr(llr: np.ndarray, spec: ConvSpec) -> np.ndarray:
    llr = np.ascontiguousarray(llr, dtype=np.float64)
    if llr.shape != (spec.mother_len,):
        raise ValueError(f"expected {spec.mother_len} mother-length LLRs, got shape {llr.shape}")
    return llr


def viterbi_tb(llr: np.ndarray, spec: ConvSpec) -> ListEntry:
    """Exact ML tail-biting decoding (every start state tried)."""
    llr = _check_llr(llr, spec)
    metric, info = K.viterbi_info(llr, spec.out_pat, spec.memory, spec.info_len, spec.streams)
    return _entry(metric, info, spec)


class ListViterbi:
    """Lazy exact list decoder: yields tail-biting paths in (metric desc, info asc) order."""

    def __init__(self, llr: np.ndarray, spec: ConvSpec, capacity: int = 256):
        self.spec = spec
        llr = _check_llr(llr, spec)
        self._pm = K.branch_metrics(llr, spec.streams, spec.info_len)
        self._beta, self._bit, self._sec = K.backward(self._pm, spec.out_pat, spec.memory, spec.info_len)
        self._heap = K.new_heap(max(capacity, (1 << spec.memory) + spec.info_len + 1))
        self._size = K.heap_seed(*self._heap, self._beta, self._sec)

    def _grow(self):
        cap = self._heap[0].size
        if self._size + self.spec.info_len + 1 > cap:
            new = K.new_heap(2 * cap)
            for old, arr in zip(self._heap, new):
                arr[: self._size] = old[: self._size]
            self._heap = new

    def next_raw(self) -> tuple[float, int]:
        """(metric, info int) of the next path; info is -1 once the codebook is exhausted."""
        self._grow()
        metric, info, self._size = K.kbest_next(
            *self._heap, self._size, self._pm, self.spec.out_pat,
            self._beta, self._bit, self._sec, self.spec.memory, self.spec.info_len,
        )
        return float(metric), int(info)

    def __iter__(self) -> Iterator[ListEntry]:
        while True:
            metric, info = self.next_raw()
            if info < 0:
                return
            yield _entry(metric, info, self.spec)


def list_viterbi_tb(llr: np.ndarray, spec: ConvSpec, l_max: int) -> list[ListEntry]:
    """The global top-``l_max`` tail-biting codewords by correlation metric."""
    if l_max < 1:
        raise ValueError(f"l_max must be >= 1, got {l_max}")
    out = []
    for entry in ListViterbi(llr, spec, capacity=(1 << spec.memory) + min(l_max, 1 << 16) * spec.info_len + 1):
        out.append(entry)
        if len(out) == l_max:
            break
    return out


# Table I basic codes
PRESETS: dict[str, tuple[str, int]] = {
    "tbcc-1/4-(52,56,66,76)": ("52,56,66,76", 4),
    "tbcc-1/3-(52,66,76)": ("52,66,76", 4),
    "tbcc-1/2-(56,62)": ("56,62", 4),
}


def preset_spec(name: str, info_len: int, length: int | None = None) -> ConvSpec:
    """Table I mother code, punctured homogeneously down to ``length`` when shorter."""
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    gens, m = PRESETS[name]
    base = ConvSpec.from_octal(gens, info_len, m)
    if length is None or length == base.mother_len:
        return base
    return ConvSpec(base.generators, info_len, m, PuncturePattern.homogeneous(base.mother_len, length))
