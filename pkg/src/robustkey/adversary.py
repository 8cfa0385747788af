"""Attack profiles, exhaustive verification and worst-case key entropy.

An attack is stored as XOR error patterns per attacked link.  For a fixed
transcript, replacing message ``v`` by ``w != v`` is the same as applying
the nonzero pattern ``v ^ w``, so enumerating nonzero patterns enumerates
exactly the value-changing replacements.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .codes import LinkTuple, bounded_distance_decode
from .errors import CapacityError, ParameterError, ProtocolFailure
from .protocol import (
    SENTINEL,
    DirectScheme,
    EpsParams,
    KeyTriple,
    SchemeParams,
    Theorem2Scheme,
    Transcript,
    _direct_transcript,
    alice_finalize,
    bob_key,
    bob_round2,
    build_scheme,
    plug_in_entropy,
    run_eps_protocol,
    streams,
    sweep_count_pairs,
)

ENUMERATION_CAP = 10**7
STRATEGY_CAP = 10**5


@dataclass(frozen=True)
class AttackProfile:
    """Per-link error patterns applied by Eve in each direction."""

    forward: tuple[tuple[int, int], ...] = ()
    backward: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        for name in ("forward", "backward"):
            entries = tuple(sorted((int(i), int(e)) for i, e in getattr(self, name)))
            links = [i for i, _ in entries]
            if len(set(links)) != len(links):
                raise ParameterError(f"{name} attack hits a link twice")
            if any(i < 0 for i in links) or any(e <= 0 for _, e in entries):
                raise ParameterError("link indices must be >= 0 and patterns nonzero")
            object.__setattr__(self, name, entries)

    @property
    def cost(self) -> int:
        return len(self.forward) + len(self.backward)

    @property
    def forward_links(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.forward)

    @property
    def backward_links(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.backward)

    def within(self, t: int) -> bool:
        return self.cost <= t

    def apply_forward(self, x: LinkTuple) -> LinkTuple:
        return _apply(x, self.forward)

    def apply_backward(self, y: LinkTuple) -> LinkTuple:
        return _apply(y, self.backward)

    def replacements(self, x: LinkTuple, y: LinkTuple):
        """The replacement messages this profile writes onto ``x`` and ``y``."""
        return (
            {i: x.messages[i] ^ e for i, e in self.forward},
            {i: y.messages[i] ^ e for i, e in self.backward},
        )

    @classmethod
    def from_replacements(cls, x: LinkTuple, y: LinkTuple, forward=None, backward=None):
        """Profile that overwrites links with the given messages (no-ops dropped)."""
        fwd = [(i, x.messages[i] ^ v) for i, v in (forward or {}).items() if v != x.messages[i]]
        bwd = [(i, y.messages[i] ^ v) for i, v in (backward or {}).items() if v != y.messages[i]]
        return cls(tuple(fwd), tuple(bwd))


EMPTY_ATTACK = AttackProfile()


def _apply(word: LinkTuple, entries) -> LinkTuple:
    if not entries:
        return word
    msgs = list(word.messages)
    for i, e in entries:
        if i >= len(msgs) or e >> word.m:
            raise ParameterError(f"attack on link {i} does not fit a ({word.n},{word.m}) tuple")
        msgs[i] ^= e
    return LinkTuple(tuple(msgs), word.m)


def link_attacks(n: int, m: int, budget: int) -> Iterator[tuple[tuple[int, int], ...]]:
    """Every set of at most ``budget`` value-changing link replacements."""
    q = (1 << m) - 1
    for size in range(min(budget, n) + 1):
        for links in itertools.combinations(range(n), size):
            for pats in itertools.product(range(1, q + 1), repeat=size):
                yield tuple(zip(links, pats))


def count_attacks(n1: int, n2: int, m: int, t: int) -> int:
    """Closed-form number of effective attack profiles."""
    q = (1 << m) - 1
    return sum(
        math.comb(n1, f) * math.comb(n2, b) * q ** (f + b)
        for f in range(t + 1)
        for b in range(t + 1 - f)
    )


def enumerate_attacks(
    n1: int,
    n2: int,
    m: int,
    t: int,
    x_sent: LinkTuple | None = None,
    y_sent: LinkTuple | None = None,
    cap: int = ENUMERATION_CAP,
) -> Iterator[AttackProfile]:
    """All effective attacks within budget ``t``, empty attack first."""
    for w, n in ((x_sent, n1), (y_sent, n2)):
        if w is not None and (w.n, w.m) != (n, m):
            raise ParameterError("sent tuple does not match (n, m)")
    if count_attacks(n1, n2, m, t) > cap:
        raise CapacityError(f"{count_attacks(n1, n2, m, t)} attack profiles exceed cap {cap}")
    for fwd in link_attacks(n1, m, t):
        for bwd in link_attacks(n2, m, t - len(fwd)):
            yield AttackProfile(fwd, bwd)


def sample_count_only_attack(
    n1: int, n2: int, t: int, counts: tuple[int, int], rng: np.random.Generator
) -> AttackProfile:
    """Flip ``counts`` = (f, b) uniformly chosen bits in each direction."""
    f, b = counts
    if f < 0 or b < 0 or f + b > t:
        raise ParameterError(f"counts {counts} exceed budget t={t}")
    if f > n1 or b > n2:
        raise ParameterError("cannot attack more links than exist")
    fwd = rng.choice(n1, size=f, replace=False) if f else []
    bwd = rng.choice(n2, size=b, replace=False) if b else []
    return AttackProfile(tuple((int(i), 1) for i in fwd), tuple((int(i), 1) for i in bwd))


# ------------------------------------------------------------ verification


@dataclass
class VerificationReport:
    scheme: str
    params: SchemeParams
    total_cases: int = 0
    disagreements: int = 0
    protocol_failures: int = 0
    branch_histogram: dict = field(default_factory=dict)
    key_bits_by_branch: dict = field(default_factory=dict)
    counterexample: Transcript | None = None
    max_attack_cost: int = 0

    @property
    def ok(self) -> bool:
        return self.disagreements == 0

    def to_record(self) -> dict:
        return {
            "scheme": self.scheme,
            "params": vars(self.params).copy(),
            "total_cases": self.total_cases,
            "disagreements": self.disagreements,
            "protocol_failures": self.protocol_failures,
            "branch_histogram": {str(k): v for k, v in sorted(self.branch_histogram.items())},
            "key_bits_by_branch": {str(k): v for k, v in sorted(self.key_bits_by_branch.items())},
            "max_attack_cost": self.max_attack_cost,
            "ok": self.ok,
            "counterexample": None if self.counterexample is None else self.counterexample.to_record(),
        }


def _case_count(scheme, params: SchemeParams) -> int:
    n_y = max(len(b) for b in _backward_books(scheme).values())
    return len(scheme.cb_a) * count_attacks(params.n1, params.n2, params.m, params.t) * n_y


def _backward_books(scheme) -> dict:
    if isinstance(scheme, DirectScheme):
        return {0: scheme.cb_b}
    return scheme.backward_books


def verify_zero_error(
    params: SchemeParams,
    scheme: str = "theorem2",
    cap: int = ENUMERATION_CAP,
    built=None,
    observer=None,
) -> VerificationReport:
    """Run the scheme on every codeword, Bob draw and in-budget attack.

    Eve's backward attack is enumerated after Bob's codeword is fixed, so
    attacks that depend on everything sent so far are all covered.
    ``observer(transcript)``, if given, sees every transcript.
    """
    built = built or build_scheme(scheme, params)
    if _case_count(built, params) > cap:
        raise CapacityError(f"exhaustive space exceeds cap {cap}")
    report = VerificationReport(scheme, params)
    books = _backward_books(built)
    for x in built.cb_a.codewords:
        for fwd in link_attacks(params.n1, params.m, params.t):
            x_hat = AttackProfile(fwd).apply_forward(x)
            if isinstance(built, DirectScheme):
                branch, x_dec, book = 0, None, built.cb_b
            else:
                try:
                    branch, _, x_dec = bob_round2(params, x_hat, books, np.random.default_rng(0), built.cb_a)
                except ProtocolFailure:
                    report.protocol_failures += 1
                    continue
                book = books[branch]
            budget = params.t - len(fwd)
            for y in book.codewords:
                for bwd in link_attacks(params.n2, params.m, budget):
                    attack = AttackProfile(fwd, bwd)
                    y_hat = attack.apply_backward(y)
                    report.total_cases += 1
                    report.max_attack_cost = max(report.max_attack_cost, attack.cost)
                    tr = _transcript(built, params, x, x_hat, y, y_hat, branch, x_dec)
                    if observer is not None:
                        observer(tr)
                    if tr.failure:
                        report.protocol_failures += 1
                    if not tr.agreed:
                        report.disagreements += 1
                        if report.counterexample is None:
                            report.counterexample = tr
                        continue
                    report.branch_histogram[branch] = report.branch_histogram.get(branch, 0) + 1
                    report.key_bits_by_branch[branch] = tr.key_bits
    return report


def _transcript(built, params, x, x_hat, y, y_hat, branch, x_dec) -> Transcript:
    if isinstance(built, DirectScheme):
        return _direct_transcript(built, x, x_hat, y, y_hat)
    key_bob = bob_key(params, branch, x_dec, y)
    try:
        key_alice = alice_finalize(params, x, y_hat, built.backward_books)
        failure = None
    except ProtocolFailure as exc:
        key_alice, failure = None, str(exc)
    return Transcript(x, x_hat, y, y_hat, branch, key_alice, key_bob, built.key_bits(branch),
                      failure=failure)


# ---------------------------------------------------------- key entropy

FAMILIES = ("exhaustive-deterministic", "constant-oblivious", "count-only-random")


@dataclass(frozen=True)
class StrategyFamily:
    """A set of Eve strategies over which key entropy is minimized.

    ``constant-oblivious``
        one fixed attack profile applied whatever is sent.
    ``exhaustive-deterministic``
        the constant profiles plus every assignment of a forward attack to
        each of Alice's codewords (enumerated up to ``strategy_cap``).
    ``count-only-random``
        every in-budget ``(forward, backward)`` count pair of the
        random-attack model, ``trials`` runs each.
    """

    kind: str
    trials: int = 1000
    strategy_cap: int = STRATEGY_CAP

    def __post_init__(self):
        if self.kind not in FAMILIES:
            raise ParameterError(f"unknown strategy family {self.kind!r}")
        if self.trials < 1 or self.strategy_cap < 1:
            raise ParameterError("trials and strategy_cap must be positive")


def _entropy(dist: dict) -> float:
    total = sum(dist.values())
    if total == 0:
        return 0.0
    p = np.array(list(dist.values()), dtype=float) / total
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def _key_distribution(built, params, forward_of, backward) -> dict:
    """Exact law of Alice's key on agreeing runs.

    ``forward_of(x)`` gives the forward attack for codeword ``x``;
    ``backward`` is a fixed backward pattern, truncated to what the budget
    leaves.
    """
    dist: dict = defaultdict(float)
    xs = built.cb_a.codewords
    books = _backward_books(built)
    for x in xs:
        fwd = forward_of(x)
        x_hat = AttackProfile(fwd).apply_forward(x)
        if isinstance(built, DirectScheme):
            branch, x_dec = 0, None
        else:
            try:
                branch, _, x_dec = bob_round2(params, x_hat, books, np.random.default_rng(0), built.cb_a)
            except ProtocolFailure:
                continue
        book = books[branch]
        bwd = backward[: max(0, params.t - len(fwd))]
        ys = book.codewords
        w = 1.0 / (len(xs) * len(ys))
        for y in ys:
            y_hat = AttackProfile((), bwd).apply_backward(y)
            tr = _transcript(built, params, x, x_hat, y, y_hat, branch, x_dec)
            if tr.agreed:
                dist[tr.key_alice] += w
    return dist


def worst_case_entropy(params, scheme: str, family: StrategyFamily, seed: int = 0) -> float:
    """Minimum over the family of H(K_alice | keys agree), in bits."""
    if scheme == "eps":
        if family.kind != "count-only-random":
            raise ParameterError("the random-attack scheme only admits count-only strategies")
        return _eps_entropy(params, family, seed)
    if family.kind == "count-only-random":
        raise ParameterError("count-only strategies apply to the random-attack scheme")
    built = build_scheme(scheme, params)
    profiles = list(enumerate_attacks(params.n1, params.n2, params.m, params.t))
    best = math.inf
    for prof in profiles:
        dist = _key_distribution(built, params, lambda x, f=prof.forward: f, prof.backward)
        best = min(best, _entropy(dist))
    if family.kind == "exhaustive-deterministic":
        fwd_choices = list(link_attacks(params.n1, params.m, params.t))
        xs = built.cb_a.codewords
        if len(fwd_choices) ** len(xs) > family.strategy_cap:
            raise CapacityError(
                f"{len(fwd_choices)}^{len(xs)} adaptive strategies exceed cap {family.strategy_cap}"
            )
        for assignment in itertools.product(fwd_choices, repeat=len(xs)):
            table = dict(zip(xs, assignment))
            dist = _key_distribution(built, params, table.__getitem__, ())
            best = min(best, _entropy(dist))
    return best


def _eps_entropy(eps: EpsParams, family: StrategyFamily, seed: int) -> float:
    best = math.inf
    for counts in sweep_count_pairs(eps.t):
        keys = []
        for k in range(family.trials):
            tr = run_eps_protocol(eps, streams((seed, counts[0], counts[1], k)), counts)
            if tr.agreed:
                keys.append(tr.key_alice)
        best = min(best, plug_in_entropy(keys))
    return best


def branch_forcing_attack(params: SchemeParams, branch: int) -> AttackProfile:
    """Constant profile that attacks the first ``branch`` forward links."""
    if not 0 <= branch <= min(params.t, params.n1):
        raise ParameterError(f"cannot force branch {branch} with budget {params.t}")
    return AttackProfile(tuple((i, 1) for i in range(branch)))


def key_depends_only_on_branch(params: SchemeParams, scheme: str = "theorem2") -> bool:
    """Check that every constant attack leaves a uniform key law on its branch.

    For each constant profile the agreed-key entropy must equal the
    branch's key-space size, so the attack matters only through the branch.
    """
    built = build_scheme(scheme, params)
    for prof in enumerate_attacks(params.n1, params.n2, params.m, params.t):
        dist = _key_distribution(built, params, lambda x, f=prof.forward: f, prof.backward)
        branches = Counter(k.k_o for k in dist)
        expected = 0.0
        total = sum(dist.values())
        for b in branches:
            mass = sum(v for k, v in dist.items() if k.k_o == b) / total
            bits = built.key_bits(b) if not isinstance(built, DirectScheme) else built.key_bits()
            expected += mass * bits - (mass * math.log2(mass) if mass > 0 else 0.0)
        if not math.isclose(_entropy(dist), expected, abs_tol=1e-9):
            return False
    return True
