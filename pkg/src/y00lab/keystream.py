"""Keyed pseudorandom bit streams that drive basis selection and OSK."""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass

import numpy as np

# Maximal-length feedback polynomials, given as exponents (x^w + ... + 1).
LFSR_TAPS = {
    8: (8, 6, 5, 4),
    9: (9, 5),
    10: (10, 7),
    11: (11, 9),
    12: (12, 6, 4, 1),
    13: (13, 4, 3, 1),
    14: (14, 5, 3, 1),
    15: (15, 14),
    16: (16, 15, 13, 4),
    17: (17, 14),
    18: (18, 11),
    19: (19, 6, 2, 1),
    20: (20, 17),
    21: (21, 19),
    22: (22, 21),
    23: (23, 18),
    24: (24, 23, 22, 17),
}

# Steps the OSK register runs ahead of the basis register (domain separation).
LFSR_OSK_OFFSET = 977


class KeystreamKind(str, enum.Enum):
    LFSR = "lfsr"
    COUNTER = "counter"


@dataclass(frozen=True)
class SecretKey:
    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if not bits:
            raise ValueError("key must have at least one bit")
        if any(b not in (0, 1) for b in bits):
            raise ValueError("key bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    def __len__(self) -> int:
        return len(self.bits)

    @classmethod
    def from_int(cls, value: int, length: int) -> "SecretKey":
        if value < 0 or value >= 1 << length:
            raise ValueError(f"{value} does not fit in {length} bits")
        return cls(tuple((value >> (length - 1 - i)) & 1 for i in range(length)))

    @classmethod
    def random(cls, length: int, rng: np.random.Generator) -> "SecretKey":
        return cls(tuple(int(b) for b in rng.integers(0, 2, size=length)))

    def to_int(self) -> int:
        v = 0
        for b in self.bits:
            v = (v << 1) | b
        return v

    def to_bytes(self) -> bytes:
        return self.to_int().to_bytes((len(self.bits) + 7) // 8, "big") + bytes([len(self.bits) & 0xFF])


class LFSR:
    """Fibonacci LFSR emitting the low bit and shifting right.

    The feedback bit is the XOR of state bits ``w - t`` for each tap exponent
    ``t``; it enters at the top bit.
    """

    def __init__(self, width: int, seed: int, taps: tuple[int, ...] | None = None):
        if taps is None:
            if width not in LFSR_TAPS:
                raise ValueError(f"no built-in taps for width {width}")
            taps = LFSR_TAPS[width]
        mask = (1 << width) - 1
        if seed & mask == 0:
            raise ValueError("LFSR state must not be all zero")
        self.width = width
        self.taps = tuple(taps)
        self._shifts = tuple(width - t for t in self.taps)
        self.state = seed & mask

    def step(self) -> int:
        s = self.state
        out = s & 1
        fb = 0
        for sh in self._shifts:
            fb ^= (s >> sh) & 1
        self.state = (s >> 1) | (fb << (self.width - 1))
        return out

    def bits(self, n: int) -> np.ndarray:
        return np.fromiter((self.step() for _ in range(n)), dtype=np.uint8, count=n)


def lfsr_bits_batch(width: int, seeds: np.ndarray, n: int, skip: int = 0) -> np.ndarray:
    """Output bits of many LFSRs at once, shape (len(seeds), n).

    Same register as :class:`LFSR`; used by the exhaustive key search.
    """
    state = np.asarray(seeds, dtype=np.int64).copy()
    if np.any(state & ((1 << width) - 1) == 0):
        raise ValueError("LFSR state must not be all zero")
    shifts = [width - t for t in LFSR_TAPS[width]]
    out = np.empty((state.size, n), dtype=np.uint8)
    for i in range(skip + n):
        if i >= skip:
            out[:, i - skip] = state & 1
        fb = np.zeros_like(state)
        for sh in shifts:
            fb ^= (state >> sh) & 1
        state = (state >> 1) | (fb << (width - 1))
    return out


class CounterStream:
    """SHA-256 in counter mode over (key, nonce, block index)."""

    def __init__(self, key: SecretKey, nonce: bytes):
        self._prefix = b"y00lab-ctr\x00" + key.to_bytes() + b"\x00" + nonce
        self._block = 0
        self._buf = np.empty(0, dtype=np.uint8)

    def bits(self, n: int) -> np.ndarray:
        chunks = [self._buf]
        have = self._buf.size
        while have < n:
            digest = hashlib.sha256(self._prefix + self._block.to_bytes(8, "big")).digest()
            self._block += 1
            chunk = np.unpackbits(np.frombuffer(digest, dtype=np.uint8))
            chunks.append(chunk)
            have += chunk.size
        allbits = np.concatenate(chunks)
        self._buf = allbits[n:]
        return allbits[:n].copy()


@dataclass(frozen=True)
class KeystreamGenerator:
    """Recipe for a deterministic stream; call :meth:`stream` for a fresh one.

    For LFSR the key must be exactly ``width`` bits and is the initial state
    (most significant key bit to the top register bit).
    """

    kind: KeystreamKind
    key: SecretKey
    nonce: bytes = b""
    width: int | None = None

    def stream(self, label: str = "basis"):
        if self.kind == KeystreamKind.LFSR:
            width = self.width or len(self.key)
            if width != len(self.key):
                raise ValueError(f"LFSR width {width} needs a {width}-bit key")
            reg = LFSR(width, self.key.to_int())
            if label != "basis":
                for _ in range(LFSR_OSK_OFFSET):
                    reg.step()
            return reg
        return CounterStream(self.key, self.nonce + b"/" + label.encode())


def bits_to_running_keys(bits: np.ndarray, M: int) -> np.ndarray:
    """Chunk bits big-endian into log2(M)-bit values, mapped to 1..M."""
    k = _log2_exact(M)
    bits = np.asarray(bits, dtype=np.int64).reshape(-1, k)
    weights = 1 << np.arange(k - 1, -1, -1)
    return bits @ weights + 1


def derive_running_keys(gen: KeystreamGenerator | LFSR | CounterStream, n: int, M: int) -> np.ndarray:
    """n running-key values in 1..M, consuming log2(M) bits per slot.

    An LFSR source wraps around its period silently.
    """
    k = _log2_exact(M)
    src = gen.stream("basis") if isinstance(gen, KeystreamGenerator) else gen
    if n == 0:
        return np.empty(0, dtype=np.int64)
    return bits_to_running_keys(src.bits(n * k), M)


def _log2_exact(M: int) -> int:
    if M < 2 or M & (M - 1):
        raise ValueError(f"M={M} must be a power of two and at least 2")
    return M.bit_length() - 1
