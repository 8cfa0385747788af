"""Combinatorial binary symmetric channel and random bounded-distance codes.

Binary words of length ``n <= 64`` are packed into ``uint64`` values with
bit ``n-1-j`` holding position ``j``, so Hamming distances reduce to a
popcount of an XOR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ParameterError

CODE_BITS_CAP = 20
MAX_BLOCK = 64


def _ball_radius(n: int, frac: float) -> int:
    # round first so that e.g. 0.29 * 100 lands on 29, not 28
    return math.floor(round(n * frac, 9))


def _ceil(x: float) -> int:
    return math.ceil(round(x, 9))


def pack_bits(bits) -> int:
    acc = 0
    for b in bits:
        acc = (acc << 1) | int(b)
    return acc


def pack_rows(bits: np.ndarray) -> np.ndarray:
    """Pack each row of a 0/1 matrix into a uint64 word."""
    bits = np.asarray(bits, dtype=np.uint64)
    n = bits.shape[1]
    shifts = np.arange(n - 1, -1, -1, dtype=np.uint64)
    return np.bitwise_or.reduce(bits << shifts, axis=1)


def unpack_bits(word: int, n: int) -> np.ndarray:
    return np.array([(int(word) >> (n - 1 - j)) & 1 for j in range(n)], dtype=np.uint8)


@dataclass(frozen=True)
class CbsChannel:
    """Adds an error word uniform over the Hamming ball of radius floor(n*eps)."""

    n: int
    epsilon: float

    def __post_init__(self):
        if not 1 <= self.n <= MAX_BLOCK:
            raise ParameterError(f"block length must lie in 1..{MAX_BLOCK}")
        if not 0.0 <= self.epsilon < 0.5:
            raise ParameterError(f"epsilon={self.epsilon} outside [0, 1/2)")

    @property
    def radius(self) -> int:
        return _ball_radius(self.n, self.epsilon)

    @property
    def weight_law(self) -> np.ndarray:
        """P(weight = w) for w = 0..radius, proportional to C(n, w)."""
        counts = np.array([math.comb(self.n, w) for w in range(self.radius + 1)], dtype=float)
        return counts / counts.sum()

    def sample(self, rng: np.random.Generator, size: int | None = None):
        """Packed error word(s); a single int when ``size`` is None."""
        count = 1 if size is None else size
        weights = rng.choice(self.radius + 1, size=count, p=self.weight_law)
        # a uniform w-subset: the w smallest of n iid uniforms
        u = rng.random((count, self.n))
        srt = np.sort(u, axis=1)
        kth = srt[np.arange(count), np.maximum(weights - 1, 0)]
        hit = (u <= kth[:, None]) & (weights[:, None] > 0)
        out = pack_rows(hit)
        return int(out[0]) if size is None else out


def sample_cbs_error(n: int, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    """One error vector of the CBS(epsilon) channel as a 0/1 array."""
    ch = CbsChannel(n, epsilon)
    word = ch.sample(rng)
    e = unpack_bits(word, n)
    assert int(e.sum()) <= ch.radius
    return e


@dataclass(frozen=True, eq=False)
class RandomCode:
    """Random binary code with a bounded-distance decoder.

    ``codewords[i - 1]`` is the packed codeword of message ``i``; decoder
    output 0 means failure.
    """

    n: int
    s: float
    codewords: np.ndarray
    decode_radius: int

    @property
    def num_bits(self) -> int:
        return int(self.codewords.size).bit_length() - 1

    @property
    def rate(self) -> float:
        return self.num_bits / self.n

    def __len__(self):
        return int(self.codewords.size)


def code_bits(n: int, s: float) -> int:
    """Number of information bits ``ceil(n*s)`` of a rate-s code of length n."""
    return max(0, _ceil(n * s))


def decode_radius_for(n: int, xi: float) -> int:
    """Largest weight strictly below ``n*xi`` (never negative)."""
    return max(0, _ceil(n * xi) - 1)


def build_random_code(
    n: int,
    s: float,
    rng: np.random.Generator,
    xi: float | None = None,
    radius: int | None = None,
    bits_cap: int = CODE_BITS_CAP,
) -> RandomCode:
    """Draw ``2**ceil(n*s)`` distinct uniform words of length n.

    The decode radius is ``radius`` if given, else the largest weight below
    ``n*xi``, else 0.
    """
    if not 1 <= n <= MAX_BLOCK:
        raise ParameterError(f"block length must lie in 1..{MAX_BLOCK}")
    if s < 0:
        raise ParameterError("rate must be nonnegative")
    k = code_bits(n, s)
    if k > n:
        raise ParameterError(f"rate {s} needs {k} > n = {n} bits")
    if k > bits_cap:
        raise CapacityError(f"2^{k} codewords exceed cap 2^{bits_cap}")
    if radius is None:
        radius = decode_radius_for(n, xi) if xi is not None else 0
    size = 1 << k
    top = np.uint64((1 << n) - 1) if n < 64 else np.uint64(2**64 - 1)
    words = rng.integers(0, top, size=size, dtype=np.uint64, endpoint=True)
    while True:
        _, first = np.unique(words, return_index=True)
        if len(first) == size:
            break
        dup = np.ones(size, dtype=bool)
        dup[first] = False
        words[dup] = rng.integers(0, top, size=int(dup.sum()), dtype=np.uint64, endpoint=True)
    words.setflags(write=False)
    return RandomCode(n=n, s=s, codewords=words, decode_radius=int(radius))


def _decode_many(code: RandomCode, received: np.ndarray) -> np.ndarray:
    received = np.asarray(received, dtype=np.uint64)
    dist = np.bitwise_count(received[:, None] ^ code.codewords[None, :])
    exact = dist == 0
    within = dist <= code.decode_radius
    count = within.sum(axis=1)
    out = np.where(count == 1, within.argmax(axis=1) + 1, 0)
    has_exact = exact.any(axis=1)
    out = np.where(has_exact, exact.argmax(axis=1) + 1, out)
    return out.astype(np.int64)


def bd_decode_random(code: RandomCode, received) -> int:
    """Index of the unique codeword within the radius, 0 otherwise.

    ``received`` is a packed int or a 0/1 sequence of length ``code.n``.  A
    received word equal to a codeword decodes to it.
    """
    if not isinstance(received, (int, np.integer)):
        bits = list(received)
        if len(bits) != code.n:
            raise ParameterError(f"received length {len(bits)} != n = {code.n}")
        received = pack_bits(bits)
    return int(_decode_many(code, np.array([received], dtype=np.uint64))[0])


@dataclass(frozen=True)
class FailureEstimate:
    p_correction: float
    p_detection: float
    trials: int

    @staticmethod
    def _half_width(p: float, trials: int) -> float:
        return 1.96 * math.sqrt(p * (1 - p) / trials)

    @property
    def ci_correction(self) -> float:
        return self._half_width(self.p_correction, self.trials)

    @property
    def ci_detection(self) -> float:
        return self._half_width(self.p_detection, self.trials)


def _check_detection_events(code, sent_words, received, decoded, sent_idx):
    bad = (decoded != 0) & (decoded != sent_idx)
    if bad.any():
        chosen = code.codewords[decoded[bad] - 1]
        dist = np.bitwise_count(received[bad] ^ chosen)
        assert (dist <= code.decode_radius).all()
        assert (np.bitwise_count(received[bad] ^ sent_words[bad]) > 0).all()


def estimate_failures(
    code: RandomCode,
    channel: CbsChannel,
    trials: int,
    rng: np.random.Generator,
    batch: int = 8192,
) -> FailureEstimate:
    """Monte Carlo correction/detection failure rates of one code."""
    if trials < 1:
        raise ParameterError("trials must be positive")
    if channel.n != code.n:
        raise ParameterError("channel and code lengths differ")
    corr = det = 0
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        idx = rng.integers(1, len(code) + 1, size=b)
        sent = code.codewords[idx - 1]
        received = sent ^ channel.sample(rng, size=b)
        decoded = _decode_many(code, received)
        _check_detection_events(code, sent, received, decoded, idx)
        corr += int((decoded != idx).sum())
        det += int(((decoded != idx) & (decoded != 0)).sum())
        done += b
    return FailureEstimate(corr / trials, det / trials, trials)


def estimate_failures_ensemble(
    n: int,
    s: float,
    xi: float,
    channel: CbsChannel,
    trials: int,
    rng: np.random.Generator,
    codes: int = 1000,
) -> FailureEstimate:
    """Failure rates averaged over ``codes`` independently drawn random codes."""
    if codes < 1:
        raise ParameterError("need at least one code")
    per = [trials // codes + (1 if i < trials % codes else 0) for i in range(codes)]
    corr = det = 0.0
    for count in per:
        if not count:
            continue
        code = build_random_code(n, s, rng, xi=xi)
        est = estimate_failures(code, channel, count, rng)
        corr += est.p_correction * count
        det += est.p_detection * count
    return FailureEstimate(corr / trials, det / trials, trials)
