import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_any_term
from dlecorr import classify
from dlecorr.classify import (
    ABSENT, BOTH, DELTA, NEGATIVE, POSITIVE, SLR, SRA, branches,
    is_inductive, is_meta_inductive, is_sahlqvist, polarity, signed_tree,
)
from dlecorr.language import (
    ANTI, MONO, DotBox, DotDia, Inequality, Layer, Nominal, OrderType,
    Var, TOP, join, meet,
)
from dlecorr.parsing import parse_inequality, parse_signature, parse_term


def test_polarity_examples(classical_sig):
    pi = parse_term("dia(box(dia(p)))", classical_sig, Layer.DLE)
    assert polarity(pi, "p") == POSITIVE
    sig = parse_signature("conn rhd G 1 (d)")
    t1 = parse_term("rhd(p)", sig, Layer.DLE)
    assert polarity(t1, "p") == NEGATIVE
    t3 = parse_term("rhd(rhd(rhd(p)))", sig, Layer.DLE)
    assert polarity(t3, "p") == NEGATIVE
    assert polarity(t3, "q") == ABSENT
    both = meet(Var("p"), parse_term("rhd(p)", sig, Layer.DLE))
    assert polarity(both, "p") == BOTH


def test_signed_tree_classes(bare_sig):
    t = parse_term("dia(box(p))", bare_sig, Layer.DLE)
    root = signed_tree(t, MONO)
    assert SLR in root.classes            # positive F-connective
    inner = root.children[0]
    assert SRA in inner.classes           # positive unary G-connective
    leaf = inner.children[0]
    assert leaf.sign == MONO and isinstance(leaf.term, Var)

    neg_join = signed_tree(join(Var("p"), Var("q")), ANTI)
    assert DELTA in neg_join.classes

    const = signed_tree(TOP, MONO)
    assert classify.CONSTANT in const.classes


def test_signed_tree_rejects_expanded_layers(classical_sig):
    with pytest.raises(classify.ClassifyError):
        signed_tree(Nominal("i0"), MONO)


def test_polarity_matches_leaf_signs(mixed_sig):
    rng = random.Random(11)
    for _ in range(200):
        t = random_any_term(rng, mixed_sig, Layer.DLESTAR, 4)
        tree = signed_tree(t, MONO)
        signs = {}
        def collect(node):
            if isinstance(node.term, Var):
                signs.setdefault(node.term.name, set()).add(node.sign)
            for c in node.children:
                collect(c)
        collect(tree)
        for v in "pqr":
            pol = polarity(t, v)
            got = signs.get(v, set())
            if pol == POSITIVE:
                assert got == {MONO}
            elif pol == NEGATIVE:
                assert got == {ANTI}
            elif pol == ABSENT:
                assert got == set()
            else:
                assert got == {MONO, ANTI}


def test_sahlqvist_classical(bare_sig):
    iq = parse_inequality("dia(box(p)) <= box(dia(p))", bare_sig, Layer.DLE)
    assert is_sahlqvist(iq) == OrderType(("1",))


def test_sahlqvist_dotted_geach(mixed_sig):
    star = Inequality(DotDia((DotBox((Var("p"),)),)),
                      DotBox((DotDia((Var("p"),)),)))
    assert is_sahlqvist(star) is not None


def test_mckinsey_shape_rejected(bare_sig):
    iq = parse_inequality("dia(box(dia(box(p)))) <= box(dia(box(dia(p))))",
                          bare_sig, Layer.DLE)
    assert is_sahlqvist(iq) is None
    assert is_inductive(iq) is None


def test_trivial_classifications(bare_sig):
    iq = parse_inequality("p <= p", bare_sig, Layer.DLE)
    w = is_inductive(iq)
    assert w is not None
    assert w.epsilon == OrderType(("1",))
    assert w.omega == frozenset()
    assert is_inductive(parse_inequality("top <= bot", bare_sig, Layer.DLE))


def test_every_sahlqvist_witness_is_inductive(mixed_sig):
    rng = random.Random(23)
    found = 0
    for _ in range(400):
        lhs = random_any_term(rng, mixed_sig, Layer.DLESTAR, 3)
        rhs = random_any_term(rng, mixed_sig, Layer.DLESTAR, 3)
        iq = Inequality(lhs, rhs)
        eps = is_sahlqvist(iq)
        if eps is None:
            continue
        found += 1
        variables = classify.variables_of(iq)
        w = classify._check_eps(iq, variables, eps.entries, require_excellent=False)
        assert w is not None and w.omega == frozenset()
    assert found > 20


def test_branch_analysis_of_dotted_additivity():
    # dotted additivity: the -rhs branches have a one-node PIA block
    star = Inequality(DotDia((join(Var("p"), Var("q")),)),
                      join(DotDia((Var("p"),)), DotDia((Var("q"),))))
    tree = signed_tree(star.rhs, ANTI)
    for br in branches(tree):
        assert br.is_good and br.is_excellent
        assert len(br.p1) == 1 and SRA in br.p1[0].classes
        assert len(br.p2) == 1 and DELTA in br.p2[0].classes


def test_srr_obligations_force_dependency_order():
    sig = parse_signature("conn g2 G 2 (1,1)\nconn dia F 1 (1)")
    # g2(q,p) <= dia(q): solving p through the SRR node g2 forces the
    # sibling variable below it in the dependency order
    iq = parse_inequality("g2(q, p) <= dia(q)", sig, Layer.DLE)
    w = is_inductive(iq)
    assert w is not None
    assert w.epsilon == OrderType(("1", "d"))
    assert ("q", "p") in w.omega


def test_srr_cycle_is_rejected():
    sig = parse_signature("conn g3 G 2 (d,1)")
    # two SRR nodes guarding each other: every order type either fails
    # the side-term agreement or forces a cyclic dependency order
    iq = parse_inequality("g3(q, p) & g3(p, q) <= top", sig, Layer.DLE)
    assert is_inductive(iq) is None


def test_meta_inductive_mckinsey(classical_sig):
    iq = parse_inequality("dia(box(dia(box(p)))) <= box(dia(box(dia(p))))",
                          classical_sig, Layer.DLE)
    found = is_meta_inductive(iq, classical_sig)
    assert found is not None
    pre, w = found
    assert pre == Inequality(DotDia((DotBox((Var("p"),)),)),
                             DotBox((DotDia((Var("p"),)),)))


def test_meta_inductive_additivity(classical_sig):
    pi = lambda t: classical_sig.role_instance("pi", t)
    iq = Inequality(pi(join(Var("p"), Var("q"))),
                    join(pi(Var("p")), pi(Var("q"))))
    found = is_meta_inductive(iq, classical_sig)
    assert found is not None
    pre, w = found
    expected = Inequality(DotDia((join(Var("p"), Var("q")),)),
                          join(DotDia((Var("p"),)), DotDia((Var("q"),))))
    assert pre == expected
    assert is_inductive(expected) is not None


def test_meta_inductive_identity_fallback(classical_sig):
    # no registered-term occurrence: the only preimage is the input itself
    iq = parse_inequality("p <= p", classical_sig, Layer.DLE)
    found = is_meta_inductive(iq, classical_sig)
    assert found is not None
    assert found[0] == iq

    bad = parse_inequality("dia(box(dia(box(p)))) <= box(dia(box(dia(p))))",
                           classical_sig, Layer.DLE)
    no_roles = parse_signature("conn dia F 1 (1)\nconn box G 1 (1)")
    assert is_meta_inductive(bad, no_roles) is None


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10 ** 9))
def test_meta_inductive_recovers_random_images(seed, classical_sig):
    from dlecorr import generators
    rng = random.Random(seed)
    star = generators.random_inductive(rng, classical_sig, star=True, max_depth=3)
    img = generators.phi_image(star, classical_sig)
    assert is_meta_inductive(img, classical_sig) is not None


def test_variable_cap():
    sig = parse_signature("conn dia F 1 (1)")
    big = Var("x0")
    for i in range(1, 13):
        big = join(big, Var(f"x{i}"))
    with pytest.raises(classify.ClassifyError):
        is_inductive(Inequality(big, TOP))
