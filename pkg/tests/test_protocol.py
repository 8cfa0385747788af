from __future__ import annotations

import itertools

import numpy as np
import pytest
from scipy.stats import chisquare

from robustkey.adversary import AttackProfile, enumerate_attacks
from robustkey.codes import (
    build_repetition,
    codebook_log2_size,
    link_distance,
    max_code,
)
from robustkey.errors import ConfigurationError, ParameterError, ProtocolFailure
from robustkey.protocol import (
    DECODED,
    DETECT,
    SENTINEL,
    EpsParams,
    KeyTriple,
    SchemeParams,
    alice_finalize,
    alice_round1,
    bob_key,
    bob_round2,
    build_direct_scheme,
    build_eps_codes,
    build_theorem2_scheme,
    check_backward_books,
    plug_in_entropy,
    preset,
    run_direct_transmission,
    run_eps_protocol,
    run_theorem2,
    simulate_eps_cell,
    streams,
    sweep_count_pairs,
)
from robustkey.rates import omega

EX2 = SchemeParams(m=2, n1=3, n2=3, t=1, d=2)
EX3 = SchemeParams(m=2, n1=2, n2=2, t=1, d=2)
D3 = SchemeParams(m=2, n1=3, n2=3, t=1, d=3)


def flip(x, i, e=1):
    return x.replace(i, x.messages[i] ^ e)


# ---------------------------------------------------------------- params


def test_scheme_params_validation():
    with pytest.raises(ParameterError):
        SchemeParams(m=2, n1=3, n2=3, t=1, d=4)
    with pytest.raises(ParameterError):
        SchemeParams(m=0, n1=3, n2=3, t=1, d=2)
    with pytest.raises(ConfigurationError):
        build_theorem2_scheme(SchemeParams(m=2, n1=3, n2=1, t=1, d=2))
    with pytest.raises(ConfigurationError):
        build_theorem2_scheme(SchemeParams(m=1, n1=3, n2=3, t=1, d=2))


def test_branch_sets():
    assert EX2.branches == (0, 1) and EX2.bucket == 1
    assert D3.branches == (0, 1) and D3.bucket is None
    assert SchemeParams(4, 5, 5, 2, 3).branches == (0, 1)
    assert SchemeParams(4, 5, 5, 2, 4).branches == (0, 1, 2)
    assert not SchemeParams(2, 3, 3, 1, 1).guaranteed


def test_presets():
    assert preset("example1", 4) == ("direct", SchemeParams(4, 3, 3, 1, 3))
    assert preset("example2", 4)[1] == SchemeParams(4, 3, 3, 1, 2)
    assert preset("example3", 4)[1] == SchemeParams(4, 2, 2, 1, 2)
    with pytest.raises(ParameterError):
        preset("example4", 2)


def test_sentinel_is_not_a_tuple():
    scheme = build_theorem2_scheme(EX2)
    zero = scheme.cb_a.codeword(0)
    assert all(v == 0 for v in zero.messages)
    assert SENTINEL != zero and SENTINEL is type(SENTINEL)()


def test_streams_are_reproducible_and_distinct():
    a, b = streams(7), streams(7)
    assert a.alice.integers(1 << 30) == b.alice.integers(1 << 30)
    s = streams(7)
    draws = [g.integers(1 << 62) for g in s]
    assert len(set(draws)) == len(draws)


# ---------------------------------------------------------------- round 1


def test_alice_draws_codewords():
    cb = build_repetition(3, 2)
    x = alice_round1(cb, np.random.default_rng(3))
    assert x in cb and len(set(x.messages)) == 1
    assert alice_round1(cb, np.random.default_rng(3)) == x


def test_alice_draws_uniformly():
    cb = build_repetition(3, 2)
    rng = np.random.default_rng(11)
    counts = np.zeros(4)
    for _ in range(10**5):
        counts[alice_round1(cb, rng).messages[0]] += 1
    assert chisquare(counts).pvalue > 1e-3


def test_alice_support_over_seed_sweep():
    cb = build_theorem2_scheme(EX2).cb_a
    seen = {alice_round1(cb, np.random.default_rng(s)) for s in range(400)}
    assert len(seen) == cb.size


# ---------------------------------------------------------------- round 2


def test_bob_clean_channel_branch_zero():
    scheme = build_theorem2_scheme(EX2)
    x = scheme.cb_a.codeword(9)
    branch, y, x_dec = bob_round2(EX2, x, scheme.backward_books, np.random.default_rng(0), scheme.cb_a)
    assert branch == 0 and x_dec == x and y in scheme.backward_books[0]


def test_bob_detection_uses_bucket():
    scheme = build_theorem2_scheme(EX2)
    x = scheme.cb_a.codeword(9)
    branch, y, x_dec = bob_round2(EX2, flip(x, 1, 3), scheme.backward_books, np.random.default_rng(0), scheme.cb_a)
    assert branch == 1 and x_dec is SENTINEL and y in scheme.backward_books[1]


def test_bob_corrects_with_distance_three():
    scheme = build_theorem2_scheme(D3)
    for x in scheme.cb_a.codewords:
        for i, e in itertools.product(range(3), range(1, 4)):
            branch, _, x_dec = bob_round2(D3, flip(x, i, e), scheme.backward_books, np.random.default_rng(0), scheme.cb_a)
            assert branch == 1 and x_dec == x


def test_malformed_backward_books_rejected():
    scheme = build_theorem2_scheme(EX2)
    books = dict(scheme.backward_books)
    books[0], books[1] = books[1], books[0]
    with pytest.raises(ConfigurationError):
        check_backward_books(EX2, books)
    books = dict(scheme.backward_books)
    books[0] = max_code(3, 1, 1).with_prefix(0, 1)  # distance 1 < 3
    with pytest.raises(ConfigurationError):
        check_backward_books(EX2, books)
    with pytest.raises(ConfigurationError):
        check_backward_books(EX2, {0: scheme.backward_books[0]})


def test_backward_prefix_is_branch_index():
    p = SchemeParams(5, 5, 5, 2, 4)
    scheme = build_theorem2_scheme(p)
    for i, book in scheme.backward_books.items():
        y = book.draw(np.random.default_rng(i))
        assert all(v >> (p.m - p.ell) == i for v in y.messages)


# -------------------------------------------------------------- finalize


def test_alice_finalize_clean():
    scheme = build_theorem2_scheme(EX2)
    x = scheme.cb_a.codeword(3)
    y = scheme.backward_books[0].codeword(1)
    assert alice_finalize(EX2, x, y, scheme.backward_books) == KeyTriple(0, x, y)


def test_alice_finalize_after_forward_attack():
    scheme = build_theorem2_scheme(EX2)
    x = scheme.cb_a.codeword(3)
    tr = run_theorem2(EX2, 5, AttackProfile(((0, 2),)), scheme)
    assert tr.y_received == tr.y_sent
    assert tr.key_alice == KeyTriple(1, SENTINEL, tr.y_sent) == tr.key_bob
    assert tr.bob_branch == 1


def test_alice_finalize_corrects_backward_attack():
    scheme = build_theorem2_scheme(EX2)
    x = scheme.cb_a.codeword(3)
    for y in scheme.backward_books[0].codewords:
        for i, e in itertools.product(range(3), range(1, 4)):
            assert alice_finalize(EX2, x, flip(y, i, e), scheme.backward_books) == KeyTriple(0, x, y)


def test_alice_finalize_fails_loudly_over_budget():
    scheme = build_theorem2_scheme(EX2)
    x = scheme.cb_a.codeword(3)
    y = scheme.backward_books[0].codeword(0)
    hits = 0
    for a, b in itertools.combinations(range(3), 2):
        try:
            alice_finalize(EX2, x, flip(flip(y, a, 3), b, 3), scheme.backward_books)
        except ProtocolFailure:
            hits += 1
    assert hits > 0


def test_bob_key_assembly():
    scheme = build_theorem2_scheme(EX2)
    x = scheme.cb_a.codeword(1)
    y = scheme.backward_books[0].codeword(0)
    assert bob_key(EX2, 0, x, y) == KeyTriple(0, x, y)
    assert bob_key(EX2, 1, SENTINEL, y) == KeyTriple(1, SENTINEL, y)
    with pytest.raises(ParameterError):
        bob_key(EX2, 1, x, y)
    with pytest.raises(ParameterError):
        bob_key(EX2, 0, SENTINEL, y)


# ------------------------------------------------------------ properties


@pytest.mark.parametrize("p", [EX2, EX3, D3, SchemeParams(3, 3, 3, 1, 2), SchemeParams(3, 4, 3, 1, 3)])
def test_branch_balls_disjoint(p):
    scheme = build_theorem2_scheme(p)
    books = scheme.backward_books
    space = np.array(list(itertools.product(range(1 << p.m), repeat=p.n2)))
    near = {}
    for i, book in books.items():
        d = (space[:, None, :] != book.words[None, :, :]).sum(axis=2).min(axis=1)
        near[i] = d <= p.t - i
    for i, j in itertools.combinations(books, 2):
        assert not (near[i] & near[j]).any()


@pytest.mark.parametrize("p", [D3, SchemeParams(3, 4, 3, 1, 3), SchemeParams(3, 4, 3, 1, 4)])
def test_branch_counts_forward_attacks(p):
    scheme = build_theorem2_scheme(p)
    rng = np.random.default_rng(0)
    for x in scheme.cb_a.codewords[:16]:
        for t1 in range(min(p.t, p.forward_radius) + 1):
            for links in itertools.combinations(range(p.n1), t1):
                x_hat = x
                for i in links:
                    x_hat = flip(x_hat, i)
                branch, _, _ = bob_round2(p, x_hat, scheme.backward_books, rng, scheme.cb_a)
                assert branch == t1 == link_distance(x, x_hat)


@pytest.mark.parametrize("p", [EX2, EX3, D3, SchemeParams(3, 3, 3, 1, 2), SchemeParams(5, 5, 5, 2, 4)])
def test_key_size_law(p):
    scheme = build_theorem2_scheme(p)
    for b in p.branches:
        om = omega(p.m, p.n1, p.n2, p.t, p.d, b)
        if b == 0 or b == p.bucket:
            assert scheme.key_bits(b) == om
        else:
            # intermediate branches protect against fewer attacks and carry more
            assert scheme.key_bits(b) >= om


# ------------------------------------------------------------ full runs


@pytest.mark.parametrize("p", [EX2, EX3, D3, SchemeParams(3, 4, 3, 1, 3), SchemeParams(5, 6, 5, 2, 4)])
def test_clean_run_key_size(p):
    scheme = build_theorem2_scheme(p)
    tr = run_theorem2(p, 1, None, scheme)
    assert tr.agreed and tr.bob_branch == 0
    inner = max_code(p.n2, 2 * p.t + 1, p.m - p.ell)
    assert tr.key_bits == codebook_log2_size(scheme.cb_a) + codebook_log2_size(inner)


def test_run_is_deterministic():
    a = run_theorem2(EX2, 42, AttackProfile(((2, 1),)))
    b = run_theorem2(EX2, 42, AttackProfile(((2, 1),)))
    assert a.to_record() == b.to_record()


def test_transcript_budget_accounting():
    scheme = build_theorem2_scheme(EX2)
    for k, att in enumerate(enumerate_attacks(3, 3, 2, 1)):
        tr = run_theorem2(EX2, k, att, scheme)
        assert tr.forward_attacks + tr.backward_attacks <= EX2.t
        assert tr.forward_attacks == len(att.forward) and tr.backward_attacks == len(att.backward)
        assert tr.agreed


def test_transcript_record_fields():
    rec = run_theorem2(EX2, 3, AttackProfile(((0, 1),))).to_record()
    assert rec["bob_branch"] == 1 and rec["key_alice"]["k_a"] is None
    assert rec["forward_attacks"] == 1 and rec["agreed"] is True
    assert len(rec["x_sent"]) == 2  # 6 bits -> 2 hex digits


# ---------------------------------------------------------------- direct


def test_direct_transmission_example1():
    _, p = preset("example1", 2)
    scheme = build_direct_scheme(p)
    assert run_direct_transmission(p, 0, None, scheme).agreed
    for k, att in enumerate(enumerate_attacks(3, 3, 2, 1)):
        tr = run_direct_transmission(p, k, att, scheme)
        assert tr.agreed and tr.key_bits == 2 * p.m


def test_direct_transmission_needs_room():
    with pytest.raises(ConfigurationError):
        build_direct_scheme(SchemeParams(2, 2, 3, 1, 2))


# ------------------------------------------------------------- eps scheme

EPS = EpsParams(1.0, 1.0, 0.1, 32, 0.05)


def test_eps_params_derived_sizes():
    p = EpsParams(1.0, 1.5, 0.1, 24, 0.05)
    assert (p.n1, p.n2, p.t, p.m) == (24, 36, 2, 1)
    assert p.flag_links == 5 and p.key_links == 31
    with pytest.raises(ParameterError):
        EpsParams(1.0, 0.2, 0.1, 24, 0.05)
    with pytest.raises(ParameterError):
        EpsParams(1.0, 1.0, 0.1, 24, 0.2)  # xi > tau / lambda1


def test_eps_clean_run():
    for seed in range(20):
        rs = streams(seed)
        codes = build_eps_codes(EPS, rs.codes)
        tr = run_eps_protocol(EPS, rs, (0, 0), codes)
        assert tr.agreed and tr.bob_branch == DECODED
        assert tr.key_bits == codes.forward.num_bits + codes.decoded.num_bits


def test_eps_over_budget():
    with pytest.raises(ParameterError):
        run_eps_protocol(EPS, 0, (EPS.t, 1))


def test_eps_forced_detection_uses_detect_book():
    detected = 0
    for seed in range(200):
        rs = streams(seed)
        codes = build_eps_codes(EPS, rs.codes)
        tr = run_eps_protocol(EPS, rs, (EPS.t, 0), codes)
        if tr.bob_branch == DETECT:
            detected += 1
            assert tr.key_bits == codes.detect.num_bits
            assert tr.key_bob.k_a is SENTINEL
    assert detected >= 190


def test_eps_run_reproducible():
    assert run_eps_protocol(EPS, 9, (1, 1)).to_record() == run_eps_protocol(EPS, 9, (1, 1)).to_record()


def test_count_pairs_and_entropy():
    assert sweep_count_pairs(1) == [(0, 0), (0, 1), (1, 0)]
    assert len(sweep_count_pairs(3)) == 10
    assert plug_in_entropy(list("abcd" * 5)) == pytest.approx(2.0)
    assert plug_in_entropy([]) == 0.0


def test_zero_attack_cell_never_disagrees():
    cell = simulate_eps_cell(EpsParams(1.0, 1.0, 0.1, 16, 0.05), (0, 0), 300, 0)
    assert cell.disagreements == 0 and cell.key_entropy > 0
