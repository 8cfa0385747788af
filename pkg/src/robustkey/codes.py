"""Codes over the 2^m-ary alphabet of link messages.

A link carries one m-bit message, and the distance between two link tuples
counts the links on which they differ, no matter how many bits changed.
Every scheme in the package draws its codebooks from here:

* ``build_repetition`` -- one message repeated on every link,
* ``build_full`` -- the whole space of link tuples,
* ``build_mds`` -- polynomial evaluation codes over GF(2^m), meeting the
  Singleton bound with ``2**(m*(n-d+1))`` codewords,
* ``max_code`` -- the package's realization of a maximum-size code of
  length n and distance d (repetition, full, MDS, or a single codeword).

Structured codebooks encode algebraically and are only materialized as a
``(size, n)`` integer array when ``size <= cap``.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, ParameterError, UnsupportedParameters
from .gf import field as gf_field

MATERIALIZE_CAP = 2**20
PAIR_CAP = 2**26
FULL_BITS_CAP = 20
SUBSET_CAP = 10**6

CONSTRUCTIONS = ("repetition", "full", "mds", "explicit", "random")
FORMAT_MAGIC = "robustkey-codebook 1"


@dataclass(frozen=True)
class Message:
    """One m-bit link message; ``bits[0]`` is the most significant bit."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if not self.bits or any(b not in (0, 1) for b in self.bits):
            raise ParameterError("a message is a non-empty sequence of 0/1 bits")

    @property
    def m(self) -> int:
        return len(self.bits)

    @property
    def value(self) -> int:
        return int("".join(map(str, self.bits)), 2)

    @classmethod
    def from_int(cls, value: int, m: int) -> "Message":
        if not 0 <= value < (1 << m):
            raise ParameterError(f"{value} does not fit in {m} bits")
        return cls(tuple(int(c) for c in format(value, f"0{m}b")))


@dataclass(frozen=True)
class LinkTuple:
    """Messages on ``n`` links, each stored as an int in ``range(2**m)``."""

    messages: tuple[int, ...]
    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ParameterError("m must be positive")
        if not isinstance(self.messages, tuple):
            object.__setattr__(self, "messages", tuple(int(v) for v in self.messages))
        if not self.messages:
            raise ParameterError("a link tuple needs at least one link")
        top = 1 << self.m
        for v in self.messages:
            if not 0 <= v < top:
                raise ParameterError(f"message {v} does not fit in {self.m} bits")

    @property
    def n(self) -> int:
        return len(self.messages)

    def message(self, i: int) -> Message:
        return Message.from_int(self.messages[i], self.m)

    def replace(self, i: int, value: int) -> "LinkTuple":
        msgs = list(self.messages)
        msgs[i] = value
        return LinkTuple(tuple(msgs), self.m)

    def to_int(self) -> int:
        acc = 0
        for v in self.messages:
            acc = (acc << self.m) | v
        return acc

    def to_hex(self) -> str:
        digits = -(-self.n * self.m // 4)
        return format(self.to_int(), f"0{digits}x")

    @classmethod
    def from_hex(cls, text: str, n: int, m: int) -> "LinkTuple":
        value = int(text, 16)
        if value >> (n * m):
            raise ParameterError(f"hex word {text!r} exceeds {n * m} bits")
        mask = (1 << m) - 1
        msgs = [(value >> (m * (n - 1 - i))) & mask for i in range(n)]
        return cls(tuple(msgs), m)

    @classmethod
    def from_messages(cls, messages: Sequence[Message]) -> "LinkTuple":
        ms = {msg.m for msg in messages}
        if len(ms) != 1:
            raise ParameterError("all messages of a link tuple share the same m")
        return cls(tuple(msg.value for msg in messages), ms.pop())


def link_distance(a: LinkTuple, b: LinkTuple) -> int:
    """Number of links on which ``a`` and ``b`` carry different messages."""
    if a.n != b.n or a.m != b.m:
        raise ParameterError(f"dimension mismatch: ({a.n},{a.m}) vs ({b.n},{b.m})")
    return sum(u != v for u, v in zip(a.messages, b.messages))


class DecodeStatus(enum.Enum):
    CLEAN = "clean"
    CORRECTED = "corrected"
    DETECTED = "detected"


@dataclass(frozen=True)
class DecodeOutcome:
    status: DecodeStatus
    codeword: LinkTuple | None = None
    num_errors: int = 0

    @property
    def decoded(self) -> bool:
        return self.status is not DecodeStatus.DETECTED

    @classmethod
    def clean(cls, codeword):
        return cls(DecodeStatus.CLEAN, codeword, 0)

    @classmethod
    def corrected(cls, codeword, num_errors):
        if num_errors < 1:
            raise ParameterError("a corrected outcome has at least one error")
        return cls(DecodeStatus.CORRECTED, codeword, num_errors)

    @classmethod
    def detected(cls):
        return cls(DecodeStatus.DETECTED)


@dataclass(frozen=True, eq=False)
class Codebook:
    """A set of link tuples with distance metadata.

    Structured codebooks (``repetition``, ``full``, ``mds``) are defined by
    ``k`` information symbols over the inner alphabet of ``m - prefix_bits``
    bits.  When ``prefix_bits > 0`` every message of every codeword starts
    with the big-endian integer ``prefix`` in its top ``prefix_bits`` bits.
    ``explicit`` and ``random`` codebooks carry their codewords as an array.
    """

    n: int
    m: int
    declared_min_distance: int
    construction: str
    k: int = 0
    prefix: int = 0
    prefix_bits: int = 0
    field_poly: int | None = None
    cap: int = MATERIALIZE_CAP
    explicit: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.construction not in CONSTRUCTIONS:
            raise ParameterError(f"unknown construction {self.construction!r}")
        if self.n < 1 or self.m < 1:
            raise ParameterError("n and m must be positive")
        if not 0 <= self.prefix_bits < self.m:
            raise ParameterError("prefix must leave at least one inner bit")
        if not 0 <= self.prefix < (1 << self.prefix_bits) or (self.prefix and not self.prefix_bits):
            raise ParameterError(f"prefix {self.prefix} does not fit in {self.prefix_bits} bits")

    # ------------------------------------------------------------------ size

    @property
    def inner_m(self) -> int:
        return self.m - self.prefix_bits

    @property
    def size(self) -> int:
        if self.explicit is not None:
            return len(self.explicit)
        return 1 << (self.inner_m * self.k)

    def __len__(self):
        return self.size

    @property
    def log2_size(self):
        """Exact exponent when the size is a power of two, else a float."""
        size = self.size
        if size & (size - 1) == 0:
            return size.bit_length() - 1
        return math.log2(size)

    @property
    def materializable(self) -> bool:
        return self.size <= self.cap

    # -------------------------------------------------------------- encoding

    def _prefix_mask(self) -> int:
        return self.prefix << self.inner_m

    def encode(self, info: Sequence[int]) -> tuple[int, ...]:
        """Map ``k`` inner symbols to a codeword (structured codebooks only)."""
        if self.explicit is not None:
            raise ParameterError("explicit codebooks have no algebraic encoder")
        if len(info) != self.k:
            raise ParameterError(f"expected {self.k} information symbols")
        if self.k == 0:
            inner = (0,) * self.n
        elif self.construction == "repetition":
            inner = (info[0],) * self.n
        elif self.construction == "full":
            inner = tuple(info)
        else:
            gf = gf_field(self.inner_m)
            inner = tuple(gf.poly_eval(info, p) for p in range(self.n))
        pm = self._prefix_mask()
        return tuple(v | pm for v in inner)

    def _info_of_index(self, index: int) -> list[int]:
        mask = (1 << self.inner_m) - 1
        return [(index >> (self.inner_m * j)) & mask for j in range(self.k)]

    def codeword(self, index: int) -> LinkTuple:
        if not 0 <= index < self.size:
            raise ParameterError(f"codeword index {index} out of range")
        if self.explicit is not None:
            return LinkTuple(tuple(int(v) for v in self.explicit[index]), self.m)
        return LinkTuple(self.encode(self._info_of_index(index)), self.m)

    def draw(self, rng: np.random.Generator) -> LinkTuple:
        """A uniformly random codeword."""
        if self.explicit is not None:
            return self.codeword(int(rng.integers(self.size)))
        info = [int(v) for v in rng.integers(0, 1 << self.inner_m, size=self.k)]
        return LinkTuple(self.encode(info), self.m)

    @cached_property
    def words(self) -> np.ndarray:
        """All codewords as a read-only ``(size, n)`` int64 array."""
        if self.explicit is not None:
            return self.explicit
        if not self.materializable:
            raise CapacityError(f"codebook of size {self.size} exceeds cap {self.cap}")
        q = 1 << self.inner_m
        idx = np.arange(self.size, dtype=np.int64)
        info = np.stack([(idx >> (self.inner_m * j)) & (q - 1) for j in range(self.k)], axis=1) if self.k else None
        if self.k == 0:
            inner = np.zeros((1, self.n), dtype=np.int64)
        elif self.construction == "repetition":
            inner = np.repeat(info, self.n, axis=1)
        elif self.construction == "full":
            inner = info
        else:
            inner = _rs_encode_array(info, self.n, self.inner_m)
        out = inner | self._prefix_mask()
        out.setflags(write=False)
        return out

    @property
    def codewords(self) -> tuple[LinkTuple, ...]:
        return tuple(LinkTuple(tuple(int(v) for v in row), self.m) for row in self.words)

    def __iter__(self):
        return iter(self.codewords)

    def __contains__(self, item: LinkTuple) -> bool:
        return self.contains(item)

    def contains(self, received: LinkTuple) -> bool:
        self._check_dims(received)
        if self.materializable or self.explicit is not None:
            return bool((self.words == np.asarray(received.messages)).all(axis=1).any())
        return self._algebraic_candidates(received, 0) == [(received.messages, 0)]

    def _check_dims(self, t: LinkTuple):
        if t.n != self.n or t.m != self.m:
            raise ParameterError(
                f"tuple is ({t.n},{t.m}) but codebook is ({self.n},{self.m})"
            )

    # -------------------------------------------------------------- decoding

    def _interpolate(self, positions: Sequence[int], values: Sequence[int]) -> tuple[int, ...]:
        if self.construction == "repetition":
            inner = (values[0],) * self.n
        elif self.construction == "full":
            inner = tuple(values)
        else:
            gf = gf_field(self.inner_m)
            inner = tuple(gf.interpolate_eval(list(positions), list(values), range(self.n)))
        pm = self._prefix_mask()
        return tuple(v | pm for v in inner)

    def _algebraic_candidates(self, received: LinkTuple, radius: int):
        """Codewords within ``radius`` found by interpolating k agreeing links."""
        if radius >= self.declared_min_distance and self.size > 1:
            raise CapacityError(
                "radius at or beyond the minimum distance needs an enumerated codebook"
            )
        if self.size == 1:
            word = self.encode([0] * self.k)
            dist = sum(u != v for u, v in zip(word, received.messages))
            return [(word, dist)] if dist <= radius else []
        shift, pm = self.inner_m, self.prefix
        good = [i for i, v in enumerate(received.messages) if v >> shift == pm]
        if len(good) < self.n - radius:
            return []
        if math.comb(len(good), self.k) > SUBSET_CAP:
            raise CapacityError("too many interpolation subsets for algebraic decoding")
        mask = (1 << shift) - 1
        found = {}
        for subset in itertools.combinations(good, self.k):
            vals = [received.messages[i] & mask for i in subset]
            word = self._interpolate(subset, vals)
            if word in found:
                continue
            dist = sum(u != v for u, v in zip(word, received.messages))
            if dist <= radius:
                found[word] = dist
        return sorted(found.items(), key=lambda kv: kv[1])

    def decode(self, received: LinkTuple, radius: int) -> DecodeOutcome:
        return bounded_distance_decode(self, received, radius)

    # ------------------------------------------------------------- variants

    def with_prefix(self, prefix: int, prefix_bits: int) -> "Codebook":
        """Prepend ``prefix`` (``prefix_bits`` wide) to every message."""
        if self.prefix_bits:
            raise ParameterError("codebook already carries a prefix")
        explicit = None
        if self.explicit is not None:
            explicit = self.explicit | (prefix << self.m)
            explicit.setflags(write=False)
        return Codebook(
            n=self.n,
            m=self.m + prefix_bits,
            declared_min_distance=self.declared_min_distance,
            construction=self.construction,
            k=self.k,
            prefix=prefix,
            prefix_bits=prefix_bits,
            field_poly=self.field_poly,
            cap=self.cap,
            explicit=explicit,
        )


def _rs_encode_array(info: np.ndarray, n: int, m: int) -> np.ndarray:
    gf = gf_field(m)
    exp = np.asarray(gf._exp, dtype=np.int64)
    log = np.asarray(gf._log, dtype=np.int64)
    out = np.zeros((info.shape[0], n), dtype=np.int64)
    for p in range(n):
        col = np.zeros(info.shape[0], dtype=np.int64)
        power = 1
        for j in range(info.shape[1]):
            c = info[:, j]
            if power:
                term = np.where(c == 0, 0, exp[(log[c] + log[power]) % (gf.order - 1)])
                col ^= term
            power = gf.mul(power, p)
        out[:, p] = col
    return out


# ---------------------------------------------------------------- builders


def _check_nm(n: int, m: int):
    if n < 1 or m < 1:
        raise ParameterError(f"need n >= 1 and m >= 1, got n={n}, m={m}")


def build_repetition(n: int, m: int, cap: int = MATERIALIZE_CAP) -> Codebook:
    """All tuples repeating a single message on every link (distance n)."""
    _check_nm(n, m)
    return Codebook(n=n, m=m, declared_min_distance=n, construction="repetition", k=1, cap=cap)


def build_full(n: int, m: int, cap: int = MATERIALIZE_CAP, bits_cap: int = FULL_BITS_CAP) -> Codebook:
    """The whole space of ``2**(n*m)`` tuples (distance 1)."""
    _check_nm(n, m)
    if n * m > bits_cap:
        raise CapacityError(f"full space of n*m={n * m} bits exceeds cap {bits_cap}")
    return _full(n, m, cap)


def _full(n, m, cap=MATERIALIZE_CAP):
    return Codebook(n=n, m=m, declared_min_distance=1, construction="full", k=n, cap=cap)


def build_mds(n: int, d: int, m: int, cap: int = MATERIALIZE_CAP) -> Codebook:
    """Evaluation code of polynomials of degree < n-d+1 at the points 0..n-1.

    Raises
    ------
    UnsupportedParameters
        If ``2**m < n`` (not enough evaluation points) or m is not tabulated.
    """
    _check_nm(n, m)
    if not 1 <= d <= n:
        raise ParameterError(f"need 1 <= d <= n, got d={d}, n={n}")
    if (1 << m) < n:
        raise UnsupportedParameters(f"2^m = {1 << m} < n = {n}: no MDS evaluation code")
    gf = gf_field(m)
    return Codebook(
        n=n, m=m, declared_min_distance=d, construction="mds", k=n - d + 1,
        field_poly=gf.poly, cap=cap,
    )


def build_explicit(
    codewords: Iterable[LinkTuple],
    declared_min_distance: int | None = None,
    construction: str = "explicit",
    cap: int = MATERIALIZE_CAP,
    check: bool = True,
) -> Codebook:
    """Codebook from a list of distinct tuples; distance computed if not given.

    With ``check`` a declared distance is compared against brute force when
    the pair count allows it.
    """
    words = list(codewords)
    if not words:
        raise ParameterError("an explicit codebook needs at least one codeword")
    n, m = words[0].n, words[0].m
    for w in words:
        if (w.n, w.m) != (n, m):
            raise ParameterError("all codewords share n and m")
    arr = np.array([w.messages for w in words], dtype=np.int64)
    if len(np.unique(arr, axis=0)) != len(arr):
        raise ParameterError("codewords must be pairwise distinct")
    arr.setflags(write=False)
    cb = Codebook(
        n=n, m=m, declared_min_distance=n + 1, construction=construction, cap=cap,
        explicit=arr,
    )
    if declared_min_distance is None:
        declared_min_distance = min_distance(cb) if len(words) > 1 else n + 1
    elif check and 1 < len(words) and len(words) ** 2 <= PAIR_CAP:
        found = min_distance(cb)
        if found != declared_min_distance:
            raise ParameterError(f"declared distance {declared_min_distance}, actual {found}")
    return Codebook(
        n=n, m=m, declared_min_distance=declared_min_distance, construction=construction,
        cap=cap, explicit=arr,
    )


def max_code(n: int, d: int, m: int, cap: int = MATERIALIZE_CAP) -> Codebook:
    """Realize a maximum-size code of length n and minimum distance d.

    ``d <= 1`` gives the full space, ``d == n`` repetition, ``d > n`` the
    single all-zero codeword, and anything else an MDS evaluation code.
    """
    _check_nm(n, m)
    if d <= 1:
        return _full(n, m, cap)
    if d == n:
        return build_repetition(n, m, cap)
    if d > n:
        return Codebook(n=n, m=m, declared_min_distance=d, construction="repetition", k=0, cap=cap)
    return build_mds(n, d, m, cap)


# -------------------------------------------------------------- operations


def min_distance(cb: Codebook, pair_cap: int = PAIR_CAP) -> int:
    """Exact minimum pairwise link distance by brute force."""
    size = cb.size
    if size < 2:
        raise ParameterError("minimum distance needs at least two codewords")
    if size * size > pair_cap:
        raise CapacityError(f"{size}^2 codeword pairs exceed cap {pair_cap}")
    words = cb.words
    best = cb.n
    for i in range(size - 1):
        d = (words[i + 1 :] != words[i]).sum(axis=1).min()
        if d < best:
            best = int(d)
            if best <= 1:
                break
    return best


def bounded_distance_decode(cb: Codebook, received: LinkTuple, radius: int) -> DecodeOutcome:
    """Decode to the unique codeword within ``radius`` links, if there is one.

    A received tuple that is itself a codeword is always ``CLEAN``.  Two or
    more codewords within the radius give ``DETECTED``; the decoder never
    guesses.
    """
    if radius < 0:
        raise ParameterError("radius must be nonnegative")
    cb._check_dims(received)
    if cb.explicit is not None or cb.materializable:
        dist = (cb.words != np.asarray(received.messages)).sum(axis=1)
        if (dist == 0).any():
            return DecodeOutcome.clean(received)
        hits = np.flatnonzero(dist <= radius)
        if len(hits) != 1:
            return DecodeOutcome.detected()
        row = cb.words[hits[0]]
        return DecodeOutcome.corrected(
            LinkTuple(tuple(int(v) for v in row), cb.m), int(dist[hits[0]])
        )
    found = cb._algebraic_candidates(received, radius)
    if found and found[0][1] == 0:
        return DecodeOutcome.clean(received)
    if len(found) != 1:
        return DecodeOutcome.detected()
    word, dist = found[0]
    return DecodeOutcome.corrected(LinkTuple(word, cb.m), dist)


def codebook_log2_size(cb: Codebook):
    return cb.log2_size


# ---------------------------------------------------------------- text I/O


def dumps(cb: Codebook) -> str:
    """Serialize a (materializable) codebook to the line-based text format."""
    poly = "none" if cb.field_poly is None else f"{cb.field_poly:#x}"
    lines = [
        FORMAT_MAGIC,
        f"n {cb.n}",
        f"m {cb.m}",
        f"d {cb.declared_min_distance}",
        f"construction {cb.construction}",
        f"field_poly {poly}",
        f"prefix {cb.prefix} {cb.prefix_bits}",
        f"size {cb.size}",
    ]
    lines.extend(w.to_hex() for w in cb.codewords)
    return "\n".join(lines) + "\n"


def loads(text: str, cap: int = MATERIALIZE_CAP) -> Codebook:
    """Parse the text format back into an explicit codebook."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != FORMAT_MAGIC:
        raise ParameterError("not a robustkey codebook file")
    header = {}
    body_start = 1
    for i, ln in enumerate(lines[1:], start=1):
        key, _, rest = ln.partition(" ")
        if key not in ("n", "m", "d", "construction", "field_poly", "prefix", "size"):
            body_start = i
            break
        header[key] = rest
        body_start = i + 1
    try:
        n, m, d = int(header["n"]), int(header["m"]), int(header["d"])
        size = int(header["size"])
        construction = header["construction"]
        poly = None if header["field_poly"] == "none" else int(header["field_poly"], 16)
        prefix, prefix_bits = (int(v) for v in header.get("prefix", "0 0").split())
    except (KeyError, ValueError) as exc:
        raise ParameterError(f"malformed codebook header: {exc}") from exc
    words = [LinkTuple.from_hex(h, n, m) for h in lines[body_start:]]
    if len(words) != size:
        raise ParameterError(f"header says {size} codewords, found {len(words)}")
    if size > cap:
        raise CapacityError(f"codebook of size {size} exceeds cap {cap}")
    arr = np.array([w.messages for w in words], dtype=np.int64)
    if len(np.unique(arr, axis=0)) != size:
        raise ParameterError("codewords must be pairwise distinct")
    arr.setflags(write=False)
    return Codebook(
        n=n, m=m, declared_min_distance=d, construction=construction,
        prefix=prefix, prefix_bits=prefix_bits, field_poly=poly, cap=cap, explicit=arr,
    )
