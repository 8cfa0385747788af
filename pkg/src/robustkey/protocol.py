"""Two-round key agreement over tampered links.

Three schemes are executable:

``run_direct_transmission``
    Each party ships a key part protected by a distance-(2t+1) code.
``run_theorem2``
    Alice sends a distance-d codeword; Bob counts the forward attacks (or
    detects that there were at least d-t of them), writes that count as an
    l-bit prefix on every backward message, and protects his own codeword
    only against the attacks Eve still has left.
``run_eps_protocol``
    The m = 1 random-attack variant built from random bounded-distance codes.

Every run returns a :class:`Transcript` holding both sides' keys.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, NamedTuple, Sequence

import numpy as np

from . import cbs
from .codes import Codebook, LinkTuple, bounded_distance_decode, link_distance, max_code
from .errors import ConfigurationError, ParameterError, ProtocolFailure
from .rates import binary_I, ell

if TYPE_CHECKING:
    from .adversary import AttackProfile


class _Sentinel:
    """Stands in for Alice's part of the key when Bob only detected errors."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "SENTINEL"

    def __reduce__(self):
        return (_Sentinel, ())


SENTINEL = _Sentinel()


# ----------------------------------------------------------------- streams


class Streams(NamedTuple):
    alice: np.random.Generator
    bob: np.random.Generator
    eve: np.random.Generator
    channel: np.random.Generator
    codes: np.random.Generator


def streams(seed) -> Streams:
    """Split one master seed (int or tuple of ints) into independent streams."""
    children = np.random.SeedSequence(seed).spawn(len(Streams._fields))
    return Streams(*(np.random.default_rng(c) for c in children))


def _as_streams(rng) -> Streams:
    return rng if isinstance(rng, Streams) else streams(rng)


# ----------------------------------------------------------------- params


@dataclass(frozen=True)
class SchemeParams:
    """Link counts, attack budget, bits per message and forward distance."""

    m: int
    n1: int
    n2: int
    t: int
    d: int

    def __post_init__(self):
        if min(self.m, self.n1, self.n2) < 1 or self.t < 0:
            raise ParameterError("need m, n1, n2 >= 1 and t >= 0")
        if not 1 <= self.d <= self.n1:
            raise ParameterError(f"need 1 <= d <= n1, got d={self.d}, n1={self.n1}")

    @property
    def ell(self) -> int:
        return ell(self.t)

    @property
    def guaranteed(self) -> bool:
        """True when the two-round construction is provably zero-error."""
        return self.d > self.t and self.n2 >= 2 * self.t and self.m > self.ell

    @property
    def forward_radius(self) -> int:
        return max(0, self.d - self.t - 1)

    @property
    def bucket(self) -> int | None:
        """Branch used on detection, or None when detection needs > t attacks."""
        b = self.d - self.t
        return b if 0 < b <= self.t else None

    @property
    def branches(self) -> tuple[int, ...]:
        top = min(self.forward_radius, self.t)
        out = list(range(top + 1))
        if self.bucket is not None and self.bucket not in out:
            out.append(self.bucket)
        return tuple(out)

    def backward_distance(self, branch: int) -> int:
        return 2 * (self.t - branch) + 1


@dataclass(frozen=True)
class KeyTriple:
    """``(k_o, k_a, k_b)``: branch indicator, Alice's part, Bob's part."""

    k_o: int
    k_a: object
    k_b: object

    def to_record(self) -> dict:
        return {
            "k_o": self.k_o,
            "k_a": None if self.k_a is SENTINEL else _hex(self.k_a),
            "k_b": _hex(self.k_b),
        }


def _hex(v):
    if isinstance(v, LinkTuple):
        return v.to_hex()
    return v


@dataclass
class Transcript:
    x_sent: LinkTuple
    x_received: LinkTuple
    y_sent: LinkTuple
    y_received: LinkTuple
    bob_branch: int
    key_alice: KeyTriple | None
    key_bob: KeyTriple | None
    key_bits: float
    scheme: str = "theorem2"
    failure: str | None = None

    @property
    def forward_attacks(self) -> int:
        return link_distance(self.x_sent, self.x_received)

    @property
    def backward_attacks(self) -> int:
        return link_distance(self.y_sent, self.y_received)

    @property
    def agreed(self) -> bool:
        return self.key_alice is not None and self.key_alice == self.key_bob

    def to_record(self) -> dict:
        return {
            "scheme": self.scheme,
            "x_sent": self.x_sent.to_hex(),
            "x_received": self.x_received.to_hex(),
            "y_sent": self.y_sent.to_hex(),
            "y_received": self.y_received.to_hex(),
            "bob_branch": self.bob_branch,
            "forward_attacks": self.forward_attacks,
            "backward_attacks": self.backward_attacks,
            "key_alice": None if self.key_alice is None else self.key_alice.to_record(),
            "key_bob": None if self.key_bob is None else self.key_bob.to_record(),
            "key_bits": self.key_bits,
            "agreed": self.agreed,
            "failure": self.failure,
        }


# ------------------------------------------------------- two-round scheme


@dataclass(frozen=True)
class Theorem2Scheme:
    """Alice's codebook plus Bob's prefixed backward codebooks by branch."""

    params: SchemeParams
    cb_a: Codebook
    backward_books: dict = field(hash=False)

    def key_bits(self, branch: int) -> int:
        """log2 of the key space given Bob's branch."""
        bb = self.backward_books[branch].log2_size
        if branch == self.params.bucket:
            return bb
        return self.cb_a.log2_size + bb


def build_theorem2_scheme(params: SchemeParams, cap: int | None = None) -> Theorem2Scheme:
    """Realize the forward code and every backward codebook for ``params``.

    Raises
    ------
    ConfigurationError
        If ``n2 < 2t`` (backward branches would not be separable) or the
        message is too short for the l-bit branch prefix.
    """
    if params.n2 < 2 * params.t:
        raise ConfigurationError(f"need n2 >= 2t, got n2={params.n2}, t={params.t}")
    if params.m <= params.ell:
        raise ConfigurationError(f"need m > ceil(log2(t+1)) = {params.ell}")
    kw = {} if cap is None else {"cap": cap}
    cb_a = max_code(params.n1, params.d, params.m, **kw)
    inner_m = params.m - params.ell
    books = {}
    for i in params.branches:
        inner = max_code(params.n2, params.backward_distance(i), inner_m, **kw)
        books[i] = inner.with_prefix(i, params.ell)
    check_backward_books(params, books)
    return Theorem2Scheme(params, cb_a, books)


def check_backward_books(params: SchemeParams, books) -> None:
    for i in params.branches:
        if i not in books:
            raise ConfigurationError(f"no backward codebook for branch {i}")
        book = books[i]
        if (book.n, book.m) != (params.n2, params.m):
            raise ConfigurationError(f"branch {i} codebook has wrong dimensions")
        if book.prefix != i or book.prefix_bits != params.ell:
            raise ConfigurationError(f"branch {i} codebook carries prefix {book.prefix}")
        if book.size > 1 and book.declared_min_distance < params.backward_distance(i):
            raise ConfigurationError(
                f"branch {i} codebook distance {book.declared_min_distance} "
                f"< {params.backward_distance(i)}"
            )


def alice_round1(cb_a: Codebook, rng: np.random.Generator) -> LinkTuple:
    """Alice's uniformly drawn forward codeword."""
    return cb_a.draw(rng)


def bob_round2(
    params: SchemeParams,
    x_received: LinkTuple,
    backward_books,
    rng: np.random.Generator,
    cb_a: Codebook,
):
    """Bob's branch, backward codeword and decoded forward codeword.

    Returns ``(branch, y_sent, x_decoded)`` where ``x_decoded`` is
    :data:`SENTINEL` on detection.
    """
    outcome = bounded_distance_decode(cb_a, x_received, params.forward_radius)
    if outcome.decoded:
        branch, x_decoded = outcome.num_errors, outcome.codeword
    elif params.bucket is not None:
        branch, x_decoded = params.bucket, SENTINEL
    else:
        raise ProtocolFailure("Bob detected errors that the attack budget cannot produce")
    if branch not in backward_books:
        raise ProtocolFailure(f"Bob counted {branch} forward errors, beyond the budget")
    return branch, backward_books[branch].draw(rng), x_decoded


def alice_finalize(
    params: SchemeParams,
    x_sent: LinkTuple,
    y_received: LinkTuple,
    backward_books,
) -> KeyTriple:
    """Identify Bob's branch by decoding every backward codebook.

    Branch ``i`` is decoded with radius ``t - i``; the radius balls of
    distinct branches are disjoint, so at most one branch succeeds when Eve
    stays within budget.
    """
    hits = []
    for i, book in backward_books.items():
        outcome = bounded_distance_decode(book, y_received, params.t - i)
        if outcome.decoded:
            hits.append((i, outcome.codeword))
    if len(hits) != 1:
        raise ProtocolFailure(f"{len(hits)} backward branches decode; expected exactly one")
    branch, y = hits[0]
    k_o = y.messages[0] >> (params.m - params.ell) if params.ell else 0
    if k_o != branch:
        raise ProtocolFailure("decoded prefix disagrees with the branch codebook")
    k_a = SENTINEL if branch == params.bucket else x_sent
    return KeyTriple(k_o, k_a, y)


def bob_key(params: SchemeParams, branch: int, x_decoded, y_sent: LinkTuple) -> KeyTriple:
    """Bob's key; ``x_decoded`` is the sentinel exactly on the bucket branch."""
    is_bucket = branch == params.bucket
    if is_bucket != (x_decoded is SENTINEL):
        raise ParameterError("x_decoded must be the sentinel exactly on the detection branch")
    return KeyTriple(branch, x_decoded, y_sent)


def run_theorem2(
    params: SchemeParams,
    rng,
    attack: "AttackProfile | None" = None,
    scheme: Theorem2Scheme | None = None,
) -> Transcript:
    """One full two-round execution under a fixed attack profile.

    ``rng`` is a master seed or a :class:`Streams`.  A
    :class:`ProtocolFailure` from either party propagates.
    """
    rs = _as_streams(rng)
    scheme = scheme or build_theorem2_scheme(params)
    x = alice_round1(scheme.cb_a, rs.alice)
    x_hat = attack.apply_forward(x) if attack else x
    branch, y, x_dec = bob_round2(params, x_hat, scheme.backward_books, rs.bob, scheme.cb_a)
    y_hat = attack.apply_backward(y) if attack else y
    k_alice = alice_finalize(params, x, y_hat, scheme.backward_books)
    k_bob = bob_key(params, branch, x_dec, y)
    return Transcript(x, x_hat, y, y_hat, branch, k_alice, k_bob, scheme.key_bits(branch))


# ------------------------------------------------------ direct transmission


@dataclass(frozen=True)
class DirectScheme:
    params: SchemeParams
    cb_a: Codebook
    cb_b: Codebook

    def key_bits(self, branch: int = 0) -> int:
        return self.cb_a.log2_size + self.cb_b.log2_size


def build_direct_scheme(params: SchemeParams, cap: int | None = None) -> DirectScheme:
    need = 2 * params.t + 1
    if params.n1 < need or params.n2 < need:
        raise ConfigurationError(f"direct transmission needs n1, n2 >= 2t+1 = {need}")
    kw = {} if cap is None else {"cap": cap}
    return DirectScheme(
        params, max_code(params.n1, need, params.m, **kw), max_code(params.n2, need, params.m, **kw)
    )


def run_direct_transmission(
    params: SchemeParams,
    rng,
    attack: "AttackProfile | None" = None,
    scheme: DirectScheme | None = None,
) -> Transcript:
    """Two independent one-round key transmissions, keys ``(x, y)``."""
    rs = _as_streams(rng)
    scheme = scheme or build_direct_scheme(params)
    x = scheme.cb_a.draw(rs.alice)
    x_hat = attack.apply_forward(x) if attack else x
    y = scheme.cb_b.draw(rs.bob)
    y_hat = attack.apply_backward(y) if attack else y
    return _direct_transcript(scheme, x, x_hat, y, y_hat)


def _direct_transcript(scheme: DirectScheme, x, x_hat, y, y_hat) -> Transcript:
    t = scheme.params.t
    bob = bounded_distance_decode(scheme.cb_a, x_hat, t)
    alice = bounded_distance_decode(scheme.cb_b, y_hat, t)
    failure = None
    if not (bob.decoded and alice.decoded):
        failure = "decoding failed"
    k_bob = KeyTriple(0, bob.codeword, y) if bob.decoded else None
    k_alice = KeyTriple(0, x, alice.codeword) if alice.decoded else None
    return Transcript(
        x, x_hat, y, y_hat, 0, k_alice, k_bob, scheme.key_bits(), scheme="direct", failure=failure
    )


# ---------------------------------------------------------------- presets

PRESETS = {
    "example1": ("direct", dict(n1=3, n2=3, t=1, d=3)),
    "example2": ("theorem2", dict(n1=3, n2=3, t=1, d=2)),
    "example3": ("theorem2", dict(n1=2, n2=2, t=1, d=2)),
}


def preset(name: str, m: int) -> tuple[str, SchemeParams]:
    """``(scheme, params)`` for one of the named presets."""
    try:
        scheme, kw = PRESETS[name]
    except KeyError:
        raise ParameterError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return scheme, SchemeParams(m=m, **kw)


def build_scheme(scheme: str, params: SchemeParams, cap: int | None = None):
    if scheme == "direct":
        return build_direct_scheme(params, cap)
    if scheme == "theorem2":
        return build_theorem2_scheme(params, cap)
    raise ParameterError(f"unknown scheme {scheme!r}")


# ------------------------------------------------------------ random errors


@dataclass(frozen=True)
class EpsParams:
    """Scale-r instance of the random-attack model (one bit per link).

    ``backoff`` scales every code rate below its asymptotic target so that
    desk-scale block lengths still decode reliably.
    """

    lambda1: float
    lambda2: float
    tau: float
    r: int
    xi: float
    backoff: float = 0.5

    def __post_init__(self):
        if self.lambda1 <= 0 or self.lambda2 <= 0 or self.tau < 0 or self.r < 1:
            raise ParameterError("need lambda1, lambda2 > 0, tau >= 0, r >= 1")
        if self.tau / self.lambda2 >= 0.5:
            raise ParameterError("need tau/lambda2 < 1/2")
        if not 0 <= self.xi <= min(0.5, self.tau / self.lambda1):
            raise ParameterError("need 0 <= xi <= min(1/2, tau/lambda1)")
        if not 0 < self.backoff <= 1:
            raise ParameterError("backoff must lie in (0, 1]")
        if self.n2 < self.flag_links + 1:
            raise ParameterError(f"n2={self.n2} leaves no backward key links")

    @property
    def n1(self) -> int:
        return math.ceil(round(self.lambda1 * self.r, 9))

    @property
    def n2(self) -> int:
        return math.ceil(round(self.lambda2 * self.r, 9))

    @property
    def t(self) -> int:
        return math.floor(round(self.tau * self.r, 9))

    @property
    def m(self) -> int:
        return 1

    @property
    def flag_links(self) -> int:
        return 2 * self.t + 1

    @property
    def key_links(self) -> int:
        return self.n2 - self.flag_links

    @property
    def forward_radius(self) -> int:
        return cbs.decode_radius_for(self.n1, self.xi)

    @property
    def detect_budget(self) -> int:
        """Backward attacks left once Bob has seen too many forward errors."""
        return max(0, self.t - self.forward_radius - 1)

    @property
    def gamma(self) -> float:
        return self.tau - self.lambda1 * self.xi

    def rates(self) -> tuple[float, float, float]:
        """Forward, decoded-branch and detect-branch code rates."""
        b = self.backoff
        return (
            b * binary_I(self.xi),
            b * binary_I(self.tau / self.lambda2),
            b * binary_I(min(0.5, max(0.0, self.gamma) / self.lambda2)),
        )


@dataclass(frozen=True, eq=False)
class EpsCodes:
    forward: cbs.RandomCode
    decoded: cbs.RandomCode
    detect: cbs.RandomCode


DECODED, DETECT = 0, 1


def build_eps_codes(eps: EpsParams, rng: np.random.Generator) -> EpsCodes:
    s_f, s_0, s_1 = eps.rates()
    return EpsCodes(
        forward=cbs.build_random_code(eps.n1, s_f, rng, radius=eps.forward_radius),
        decoded=cbs.build_random_code(eps.key_links, s_0, rng, radius=eps.t),
        detect=cbs.build_random_code(eps.key_links, s_1, rng, radius=eps.detect_budget),
    )


def _bits_tuple(word: int, n: int) -> LinkTuple:
    return LinkTuple(tuple(int(b) for b in cbs.unpack_bits(word, n)), 1)


def _flip_mask(positions, n: int) -> int:
    mask = 0
    for p in positions:
        mask |= 1 << (n - 1 - int(p))
    return mask


def run_eps_protocol(
    eps: EpsParams,
    rng,
    attack_counts: tuple[int, int] = (0, 0),
    codes: EpsCodes | None = None,
) -> Transcript:
    """One run of the random-attack scheme with Eve's per-direction counts.

    Bob's decode-success flag is repeated on the first ``2t+1`` backward
    links and majority-decoded by Alice; the remaining links carry Bob's
    codeword from the decoded-branch or detect-branch random code.
    Attacked positions are uniform and each attacked bit is flipped.
    """
    from .adversary import sample_count_only_attack

    f, b = attack_counts
    if f < 0 or b < 0 or f + b > eps.t:
        raise ParameterError(f"attack counts {attack_counts} exceed budget t={eps.t}")
    rs = _as_streams(rng)
    codes = codes or build_eps_codes(eps, rs.codes)
    n1, n2 = eps.n1, eps.n2
    attack = sample_count_only_attack(n1, n2, eps.t, (f, b), rs.eve)

    i = int(rs.alice.integers(1, len(codes.forward) + 1))
    x = int(codes.forward.codewords[i - 1])
    x_hat = x ^ _flip_mask(attack.forward_links, n1)
    i_hat = cbs.bd_decode_random(codes.forward, x_hat)
    branch = DECODED if i_hat else DETECT
    book = codes.decoded if branch == DECODED else codes.detect
    j = int(rs.bob.integers(1, len(book) + 1))
    key_part = int(book.codewords[j - 1])
    y = ((branch * ((1 << eps.flag_links) - 1)) << eps.key_links) | key_part
    y_hat = y ^ _flip_mask(attack.backward_links, n2)

    flags = y_hat >> eps.key_links
    alice_branch = int(bin(flags).count("1") > eps.flag_links // 2)
    alice_book = codes.decoded if alice_branch == DECODED else codes.detect
    j_hat = cbs.bd_decode_random(alice_book, y_hat & ((1 << eps.key_links) - 1))

    x_t = _bits_tuple(x, n1)
    y_t = _bits_tuple(y, n2)
    bob_part = _bits_tuple(int(codes.forward.codewords[i_hat - 1]), n1) if i_hat else SENTINEL
    key_bob = KeyTriple(branch, bob_part, y_t)
    key_alice = None
    failure = None
    if j_hat:
        y_dec = ((alice_branch * ((1 << eps.flag_links) - 1)) << eps.key_links) | int(
            alice_book.codewords[j_hat - 1]
        )
        alice_part = x_t if alice_branch == DECODED else SENTINEL
        key_alice = KeyTriple(alice_branch, alice_part, _bits_tuple(y_dec, n2))
    else:
        failure = "Alice could not decode the backward codeword"
    key_bits = book.num_bits + (codes.forward.num_bits if branch == DECODED else 0)
    return Transcript(
        x_t, _bits_tuple(x_hat, n1), y_t, _bits_tuple(y_hat, n2), branch,
        key_alice, key_bob, key_bits, scheme="eps", failure=failure,
    )


def sweep_count_pairs(t: int) -> list[tuple[int, int]]:
    """Every ``(forward, backward)`` count pair within budget, sorted."""
    return [(f, b) for f in range(t + 1) for b in range(t + 1 - f)]


@dataclass
class EpsCell:
    r: int
    counts: tuple[int, int]
    trials: int
    disagreements: int
    key_entropy: float
    mean_key_bits: float

    @property
    def disagreement_rate(self) -> float:
        return self.disagreements / self.trials


def plug_in_entropy(samples: Sequence) -> float:
    """Empirical entropy (bits) of a list of hashable outcomes."""
    if not samples:
        return 0.0
    counts = np.array(list(Counter(samples).values()), dtype=float)
    p = counts / counts.sum()
    return float(-(p * np.log2(p)).sum())


def simulate_eps_cell(eps: EpsParams, counts: tuple[int, int], trials: int, seed: int) -> EpsCell:
    """Monte Carlo over ``trials`` independent runs (fresh codes each run)."""
    bad = 0
    keys = []
    bits = 0.0
    for k in range(trials):
        tr = run_eps_protocol(eps, streams((seed, eps.r, counts[0], counts[1], k)), counts)
        if tr.agreed:
            keys.append(tr.key_alice)
        else:
            bad += 1
        bits += tr.key_bits
    return EpsCell(eps.r, tuple(counts), trials, bad, plug_in_entropy(keys), bits / trials)
