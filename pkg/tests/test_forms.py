from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridtrace.forms import (
    BQForm,
    GammaElem,
    act,
    automorph,
    canonical_rep,
    class_census,
    class_count,
    form_classes,
    generators,
    same_splitting_field,
)
from hybridtrace.qfield import FieldError, FieldSpec, Place, fundamental_unit, is_square_mod4
from hybridtrace.relorder import MixedDisc, mixed_discs, solve_pell, unit_power


def rand_elem(spec, rng, h):
    p, q = rng.randint(-h, h), rng.randint(-h, h)
    return spec.from_basis(p, q)


def rand_form(spec, rng, h=6, even_b=False):
    while True:
        a, b, c = (rand_elem(spec, rng, h) for _ in range(3))
        if even_b:
            b = b + b
        try:
            return BQForm(a, b, c)
        except FieldError:
            pass


def rand_word(spec, rng, n):
    g = GammaElem.identity(spec)
    gens = generators(spec)
    for _ in range(n):
        g = g @ rng.choice(gens)
    return g


def test_gamma_det_checked(q2):
    with pytest.raises(FieldError):
        GammaElem(q2.one, q2.one, q2.one, q2.one)


def test_generators_are_invertible(q2, q5):
    for spec in (q2, q5):
        ident = GammaElem.identity(spec)
        for g in generators(spec):
            assert (g @ g.inverse()).psl_eq(ident)


def test_psl_key_ignores_sign(q2):
    g = generators(q2)[1]
    assert g.psl_eq(-g)


def test_degenerate_forms_rejected(q2):
    with pytest.raises(FieldError):
        BQForm(q2.zero, q2.zero, q2.zero)
    with pytest.raises(FieldError):
        BQForm(q2.one, q2.integer(2), q2.one)  # disc 0


def test_act_examples(q2):
    q = BQForm(q2.integer(2), q2.elem(1, 1), q2.integer(-3))
    assert act(q, q2.one, GammaElem.identity(q2)) == q
    S = GammaElem(q2.zero, -q2.one, q2.one, q2.zero)
    assert act(q, q2.one, S) == BQForm(q.c, -q.b, q.a)
    with pytest.raises(FieldError):
        act(q, q2.zero, S)


def test_act_is_an_action(q2):
    rng = random.Random(1)
    for _ in range(50):
        q = rand_form(q2, rng)
        g, h = rand_word(q2, rng, 3), rand_word(q2, rng, 3)
        # column action: (q . g) . h = q . (g h)
        assert act(act(q, q2.one, g), q2.one, h) == act(q, q2.one, g @ h)


@given(st.integers(0, 10_000))
@settings(max_examples=150, deadline=None)
def test_invariants_of_act(seed):
    rng = random.Random(seed)
    spec = FieldSpec(rng.choice([2, 3, 5]))
    q = rand_form(spec, rng)
    t = rand_elem(spec, rng, 3)
    if t.is_zero():
        return
    q2 = act(q, t, rand_word(spec, rng, 5))
    assert q2.disc == t * t * q.disc
    assert same_splitting_field(q.disc, q2.disc)
    assert q2.primitive_disc == q.primitive_disc


def test_automorph_identity(q2):
    q = BQForm(q2.integer(2), q2.elem(1, 1), q2.integer(-3))
    assert automorph(q, q2.integer(2), q2.zero) == GammaElem.identity(q2)


def test_automorph_rejects_non_solution(q2):
    q = BQForm(q2.integer(2), q2.elem(1, 1), q2.integer(-3))
    with pytest.raises(FieldError):
        automorph(q, q2.integer(3), q2.one)


def test_automorph_fixes_form_and_has_trace_t():
    rng = random.Random(7)
    done = 0
    for spec in (FieldSpec(2), FieldSpec(5)):
        while done < (100 if spec.delta == 2 else 200):
            q = rand_form(spec, rng, 4, even_b=True)
            D = q.disc
            if not D.sign(Place.P1) < 0 < D.sign(Place.P2):
                continue
            e = solve_pell(MixedDisc.from_D(D), 1e4)
            if not e:
                continue
            g = automorph(q, e.t, e.u)
            assert act(q, spec.one, g) == q
            assert g.trace() == e.t
            done += 1


def test_automorph_homomorphism():
    """automorph(eps) automorph(eps') = automorph(eps eps') in PSL_2."""
    rng = random.Random(3)
    spec = FieldSpec(2)
    pairs = 0
    while pairs < 100:
        q = rand_form(spec, rng, 4, even_b=True)
        D = q.disc
        if not D.sign(Place.P1) < 0 < D.sign(Place.P2):
            continue
        e = solve_pell(MixedDisc.from_D(D), 1e4)
        if not e:
            continue
        k, l = rng.randint(1, 3), rng.randint(1, 3)
        tk, uk = unit_power(e, k)
        tl, ul = unit_power(e, l)
        tkl, ukl = unit_power(e, k + l)
        lhs = automorph(q, tk, uk) @ automorph(q, tl, ul)
        assert lhs.psl_eq(automorph(q, tkl, ukl))
        pairs += 1


def test_canonical_rep_idempotent_and_one_step(q2):
    rng = random.Random(11)
    S = GammaElem(q2.zero, -q2.one, q2.one, q2.zero)
    for _ in range(30):
        q = rand_form(q2, rng)
        r, _ = canonical_rep(q)
        assert canonical_rep(r)[0] == r
        assert canonical_rep(act(q, q2.one, S))[0] == r


def test_canonical_rep_orbit_agreement(q2):
    """act(q, eps, random word of length 5) reaches the same representative in >= 99% of trials."""
    rng = random.Random(5)
    eps = fundamental_unit(q2)
    agree = 0
    for _ in range(200):
        q = rand_form(q2, rng, 6)
        r, _ = canonical_rep(q)
        r2, _ = canonical_rep(act(q, eps, rand_word(q2, rng, 5)))
        agree += r == r2
    assert agree >= 198, agree


def test_canonical_rep_budget(q2):
    with pytest.raises(FieldError):
        canonical_rep(BQForm(q2.one, q2.one, -q2.one), budget=0)


@pytest.mark.parametrize("delta", [2, 5])
def test_class_count_stable_under_bounds(delta):
    spec = FieldSpec(delta)
    for md in mixed_discs(spec, 3):
        if not is_square_mod4(md.D):
            assert class_count(md).h == 0  # not a discriminant: no forms at all
            continue
        base = class_count(md)
        big = form_classes(md.D, height=8 * base.seed_bound, flip=True)
        assert base.h == big.h >= 1
        assert base.certified


def test_class_count_single_orbit(q2):
    md = MixedDisc.from_D(q2.elem(-1, 2))
    assert class_count(md).h == 1


def test_class_census_records(q2):
    md = MixedDisc.from_D(q2.elem(2, 4))
    recs = class_census(md)
    assert len(recs) == recs[0]["h"]
    for r in recs:
        q = BQForm.from_json(r["representative"], q2)
        assert q.disc == md.D


def test_canonical_rep_separates_classes(q2):
    """Distinct classes of one discriminant get distinct representatives."""
    D = q2.elem(2, 4)
    cc = form_classes(D)
    assert cc.h >= 2
    reps = {canonical_rep(q)[0] for q in cc.representatives}
    assert len(reps) == cc.h
