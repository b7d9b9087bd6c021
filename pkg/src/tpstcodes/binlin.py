"""Bit-packed GF(2) vectors and matrices.

Bits are packed little-endian into ``uint64`` words (bit ``j`` lives in word
``j // 64`` at position ``j % 64``). Padding bits beyond the logical length are
always zero, so word-level equality is logical equality.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Literal

import numpy as np

WORD = 64


def _n_words(nbits: int) -> int:
    return (nbits + WORD - 1) // WORD


def _pack(bits: np.ndarray) -> np.ndarray:
    """Pack the last axis of a 0/1 array into uint64 words."""
    bits = np.asarray(bits, dtype=np.uint8)
    nbits = bits.shape[-1]
    nw = _n_words(nbits)
    padded = np.zeros(bits.shape[:-1] + (nw * WORD,), dtype=np.uint8)
    padded[..., :nbits] = bits & 1
    packed = np.packbits(padded, axis=-1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64, copy=False)


def _unpack(words: np.ndarray, nbits: int) -> np.ndarray:
    raw = np.ascontiguousarray(words.astype("<u8", copy=False)).view(np.uint8)
    return np.unpackbits(raw, axis=-1, count=nbits, bitorder="little")


class BitVector:
    """Immutable vector over GF(2). ``+`` and ``^`` are both XOR."""

    __slots__ = ("_words", "_len")

    def __init__(self, bits: Iterable[int] | np.ndarray = ()):
        arr = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits, dtype=np.uint8)
        if arr.ndim != 1:
            raise ValueError(f"BitVector needs a 1-D bit sequence, got shape {arr.shape}")
        if arr.size and arr.max() > 1:
            raise ValueError("BitVector entries must be 0 or 1")
        self._len = int(arr.size)
        self._words = _pack(arr)
        self._words.setflags(write=False)

    @classmethod
    def _from_words(cls, words: np.ndarray, length: int) -> "BitVector":
        obj = cls.__new__(cls)
        obj._len = length
        obj._words = words
        obj._words.setflags(write=False)
        return obj

    @classmethod
    def zeros(cls, n: int) -> "BitVector":
        return cls._from_words(np.zeros(_n_words(n), dtype=np.uint64), n)

    @classmethod
    def from_hex(cls, text: str, length: int) -> "BitVector":
        """Parse MSB-first hex; trailing pad bits of the last nibble are ignored."""
        return cls(hex_to_bits(text, length))

    @property
    def words(self) -> np.ndarray:
        return self._words

    def to_bits(self) -> np.ndarray:
        return _unpack(self._words, self._len)

    def to_hex(self) -> str:
        return bits_to_hex(self.to_bits())

    def weight(self) -> int:
        return int(sum(bin(int(w)).count("1") for w in self._words))

    def __len__(self) -> int:
        return self._len

    def __getitem__(self, j: int) -> int:
        if j < 0:
            j += self._len
        if not 0 <= j < self._len:
            raise IndexError(j)
        return int((int(self._words[j // WORD]) >> (j % WORD)) & 1)

    def __iter__(self):
        return iter(int(b) for b in self.to_bits())

    def __xor__(self, other: "BitVector") -> "BitVector":
        if not isinstance(other, BitVector):
            return NotImplemented
        if len(other) != self._len:
            raise ValueError(f"length mismatch: {self._len} vs {len(other)}")
        return BitVector._from_words(self._words ^ other._words, self._len)

    __add__ = __xor__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitVector):
            return NotImplemented
        return self._len == other._len and bool(np.array_equal(self._words, other._words))

    def __hash__(self) -> int:
        return hash((self._len, self._words.tobytes()))

    def __repr__(self) -> str:
        s = "".join(str(b) for b in self.to_bits()[:64])
        return f"BitVector({s}{'...' if self._len > 64 else ''}, len={self._len})"


class BitMatrix:
    """Immutable ``rows x cols`` matrix over GF(2), rows packed into words."""

    __slots__ = ("_words", "rows", "cols")

    def __init__(self, bits: np.ndarray | Iterable[Iterable[int]], cols: int | None = None):
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.ndim != 2:
            if arr.size == 0 and cols is not None:
                arr = arr.reshape(0, cols)
            else:
                raise ValueError(f"BitMatrix needs a 2-D array, got shape {arr.shape}")
        if arr.size and arr.max() > 1:
            raise ValueError("BitMatrix entries must be 0 or 1")
        self.rows, self.cols = int(arr.shape[0]), int(arr.shape[1])
        self._words = _pack(arr) if self.rows else np.zeros((0, _n_words(self.cols)), np.uint64)
        self._words.setflags(write=False)

    @classmethod
    def _from_words(cls, words: np.ndarray, rows: int, cols: int) -> "BitMatrix":
        obj = cls.__new__(cls)
        obj.rows, obj.cols = rows, cols
        obj._words = words
        obj._words.setflags(write=False)
        return obj

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(np.eye(n, dtype=np.uint8))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls._from_words(np.zeros((rows, _n_words(cols)), np.uint64), rows, cols)

    @classmethod
    def from_rows(cls, rows: Iterable[BitVector], cols: int) -> "BitMatrix":
        rows = list(rows)
        for r in rows:
            if len(r) != cols:
                raise ValueError(f"row length {len(r)} != {cols}")
        if not rows:
            return cls.zeros(0, cols)
        return cls._from_words(np.stack([r.words for r in rows]), len(rows), cols)

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def words(self) -> np.ndarray:
        return self._words

    def to_bits(self) -> np.ndarray:
        if self.rows == 0:
            return np.zeros((0, self.cols), np.uint8)
        return _unpack(self._words, self.cols)

    def row(self, i: int) -> BitVector:
        return BitVector._from_words(self._words[i].copy(), self.cols)

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return int((int(self._words[i, j // WORD]) >> (j % WORD)) & 1)

    @property
    def T(self) -> "BitMatrix":
        return BitMatrix(self.to_bits().T.copy(), cols=self.rows)

    def __add__(self, other: "BitMatrix") -> "BitMatrix":
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch: {self.shape} vs {other.shape}")
        return BitMatrix._from_words(self._words ^ other._words, self.rows, self.cols)

    __xor__ = __add__

    def __matmul__(self, other: "BitMatrix") -> "BitMatrix":
        if self.cols != other.rows:
            raise ValueError(
                f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}"
            )
        sel = self.to_bits().astype(bool)
        out = np.zeros((self.rows, other._words.shape[1]), np.uint64)
        for i in range(self.rows):
            if sel[i].any():
                out[i] = np.bitwise_xor.reduce(other._words[sel[i]], axis=0)
        return BitMatrix._from_words(out, self.rows, other.cols)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._words, other._words))

    def __hash__(self) -> int:
        return hash((self.shape, self._words.tobytes()))

    def __repr__(self) -> str:
        return f"BitMatrix({self.rows}x{self.cols})"

    def is_zero(self) -> bool:
        return not self._words.any()

    def rank(self) -> int:
        return _rank_rows([int.from_bytes(r.tobytes(), "little") for r in self._words])

    def nullspace(self) -> "BitMatrix":
        """Basis of ``{x : M x^T = 0}`` as the rows of a ``(cols - rank) x cols`` matrix."""
        a = self.to_bits().copy()
        rows, cols = a.shape
        pivots: list[int] = []
        r = 0
        for c in range(cols):
            if r == rows:
                break
            hits = np.nonzero(a[r:, c])[0]
            if hits.size == 0:
                continue
            p = r + hits[0]
            if p != r:
                a[[r, p]] = a[[p, r]]
            others = np.nonzero(a[:, c])[0]
            others = others[others != r]
            a[others] ^= a[r]
            pivots.append(c)
            r += 1
        free = [c for c in range(cols) if c not in set(pivots)]
        basis = np.zeros((len(free), cols), np.uint8)
        for i, f in enumerate(free):
            basis[i, f] = 1
            for row, pc in enumerate(pivots):
                basis[i, pc] = a[row, f]
        return BitMatrix(basis, cols=cols)

    def to_hex_rows(self) -> str:
        """One MSB-first hex row per line, each covering ``cols`` bits."""
        return "\n".join(bits_to_hex(row) for row in self.to_bits())

    @classmethod
    def from_hex_rows(cls, text: str, cols: int) -> "BitMatrix":
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        return cls(np.array([hex_to_bits(ln, cols) for ln in lines], np.uint8).reshape(-1, cols), cols=cols)


def _rank_rows(rows: list[int]) -> int:
    rank = 0
    work = [r for r in rows if r]
    while work:
        pivot = max(work)
        top = pivot.bit_length() - 1
        work = [r ^ pivot if (r >> top) & 1 else r for r in work if r != pivot]
        work = [r for r in work if r]
        rank += 1
    return rank


def bits_to_hex(bits: np.ndarray) -> str:
    bits = np.asarray(bits, np.uint8)
    pad = (-bits.size) % 4
    if pad:
        bits = np.concatenate([bits, np.zeros(pad, np.uint8)])
    nib = bits.reshape(-1, 4) @ np.array([8, 4, 2, 1])
    return "".join("0123456789abcdef"[v] for v in nib)


def hex_to_bits(text: str, length: int) -> np.ndarray:
    text = text.strip().lower()
    if len(text) != (length + 3) // 4:
        raise ValueError(f"expected {(length + 3) // 4} hex digits for {length} bits, got {len(text)}")
    try:
        vals = [int(ch, 16) for ch in text]
    except ValueError:
        raise ValueError(f"not a hex string: {text!r}") from None
    bits = np.array([(v >> s) & 1 for v in vals for s in (3, 2, 1, 0)], np.uint8)
    return bits[:length]


def mat_vec_mul(v: BitVector, m: BitMatrix) -> BitVector:
    """Row vector times matrix over GF(2): XOR of the rows of ``m`` selected by ``v``."""
    if len(v) != m.rows:
        raise ValueError(f"dimension mismatch: vector length {len(v)} vs matrix {m.rows}x{m.cols}")
    sel = v.to_bits().astype(bool)
    if not sel.any():
        return BitVector.zeros(m.cols)
    return BitVector._from_words(np.bitwise_xor.reduce(m.words[sel], axis=0), m.cols)


def hstack(*blocks: BitMatrix) -> BitMatrix:
    return BitMatrix(np.hstack([b.to_bits() for b in blocks]), cols=sum(b.cols for b in blocks))


def vstack(*blocks: BitMatrix) -> BitMatrix:
    return BitMatrix(np.vstack([b.to_bits() for b in blocks]), cols=blocks[0].cols)


def homogeneous_mask(n: int, ones: int) -> np.ndarray:
    """Spread ``ones`` ones over ``n`` slots: slot j is set iff floor((j+1)m/n) > floor(jm/n)."""
    if not 0 <= ones <= n:
        raise ValueError(f"cannot place {ones} ones in {n} slots")
    j = np.arange(n, dtype=np.int64)
    return (((j + 1) * ones) // n > (j * ones) // n).astype(np.uint8)


@dataclass(frozen=True)
class SelectionMatrix:
    """Binary diagonal matrix S with superposition fraction ``alpha``."""

    diag: BitVector
    alpha: float

    @property
    def n(self) -> int:
        return len(self.diag)

    def as_matrix(self) -> BitMatrix:
        return BitMatrix(np.diag(self.diag.to_bits()), cols=self.n)


def floor_fraction(n: int, alpha: float) -> int:
    # alpha=0.29, n=100 must give 29, not floor(28.999...)
    return int(n * Fraction(alpha).limit_denominator(10**6))


def build_selection_matrix(n: int, alpha: float) -> SelectionMatrix:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    ones = floor_fraction(n, alpha)
    return SelectionMatrix(BitVector(homogeneous_mask(n, ones)), float(alpha))


def sample_structured_matrix(
    n: int, kind: Literal["permutation", "dense-random"] = "permutation", seed: int = 0
) -> BitMatrix:
    """Seeded n x n matrix: a permutation matrix or i.i.d. fair coin flips."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    if kind == "permutation":
        m = np.zeros((n, n), np.uint8)
        m[np.arange(n), rng.permutation(n)] = 1
        return BitMatrix(m)
    if kind == "dense-random":
        return BitMatrix(rng.integers(0, 2, size=(n, n), dtype=np.uint8))
    raise ValueError(f"unknown matrix kind {kind!r}")
