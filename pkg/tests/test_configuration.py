import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from levelconf import config as cf
from levelconf.extractor import extract


def figure_eight(H=1.0, child_H=None):
    m = cf.graph_member(H, [math.pi], [(0, 0), (0, 0)], [((0, 0), (0, 1), (1, 0), (1, 1))], [1, 1])
    kid = cf.single(1) if child_H is None else cf.Configuration(cf.loop_member(child_H, 1),
                                                                  (cf.single(1),), (0,))
    return cf.Configuration(m, (kid, cf.single(1)), (0, 0))


def test_single_point_valid():
    c = cf.single(3)
    assert cf.validate(c) == []
    assert cf.total_degree(c) == 3
    assert c.H == 0


def test_figure_eight_valid():
    c = figure_eight()
    assert cf.validate(c) == []
    assert cf.total_degree(c) == 2
    assert [f.z for f in c.member.faces] == [1, 1]


def test_h_monotonicity_violation():
    problems = cf.validate(figure_eight(1.0, child_H=2.0))
    assert any(p.startswith("H monotonicity") for p in problems)


def test_handmade_matches_extracted():
    inner = extract("z^2-1", 2.0).children[0]
    assert cf.canonical_form(inner) == cf.canonical_form(figure_eight())


def test_child_degree_violation():
    c = figure_eight()
    bad = cf.Configuration(c.member, (cf.single(2), cf.single(1)), (0, 0))
    assert any(p.startswith("child degree") for p in cf.validate(bad))


def test_vertex_with_arg_zero_is_a_mark():
    # marks are derived from the data, so arg 0 at a vertex makes it distinguished
    m = cf.graph_member(1.0, [0.0], [(0, 0), (0, 0)], [((0, 0), (0, 1), (1, 0), (1, 1))], [1, 1])
    assert all(("vertex", 0) in f.marks for f in m.faces)
    c = cf.Configuration(m, (cf.single(1), cf.single(1)), (0, 0))
    assert any(p.startswith("child degree") for p in cf.validate(c))


def test_relabel_invariance():
    c = extract("z^2-1", 2.0)
    rng = np.random.default_rng(0)
    assert cf.canonical_form(cf.relabel(c, rng=rng)) == cf.canonical_form(c)


def test_reflection_is_distinguished():
    c = extract("z^3 - (1+2*i)*z + 0.5", 4.0)
    assert cf.validate(cf.reflect(c)) == []
    assert cf.canonical_form(cf.reflect(c)) != cf.canonical_form(c)


def test_reflection_is_the_conjugate_function():
    # mirror image of f is conj(f(conj z)); its configuration is the reflection
    c = extract("z^3 - (1+2*i)*z + 0.5", 4.0)
    d = extract("z^3 - (1-2*i)*z + 0.5", 4.0)
    assert cf.config_equal(cf.reflect(c), d)


def test_h_distinguishes():
    a, b = figure_eight(1.0), figure_eight(0.25)
    assert cf.canonical_form(a) != cf.canonical_form(b)
    assert cf.config_equal(a, b, ordinal_h=True)


def test_equal_examples():
    c = extract("z^2-1", 1.5)
    assert cf.config_equal(c, c)
    shifted = extract("(z-3)^2-1", 1.5)
    assert cf.config_equal(c, shifted)
    other = extract("z^2-z", 1.5)  # critical value -1/4
    assert not cf.config_equal(c, other)


def test_total_degree_random_quintic():
    rng = np.random.default_rng(5)
    roots = rng.normal(size=5) + 1j * rng.normal(size=5)
    c = np.poly(roots)
    crit = np.roots(np.polyder(c))
    eps = 2 * max(abs(np.polyval(c, crit)))
    from levelconf.expr import AnalyticFunction
    assert cf.total_degree(extract(AnalyticFunction.from_coefficients(c[::-1]), eps)) == 5


def test_corpus_valid(corpus):
    for name, c in corpus.items():
        assert cf.validate(c) == [], name


@given(st.integers(0, 2**32 - 1))
def test_relabel_round_trips(corpus, seed):
    rng = np.random.default_rng(seed)
    for c in corpus.values():
        assert cf.canonical_form(cf.relabel(c, rng=rng)) == cf.canonical_form(c)


def test_equality_is_equivalence(corpus):
    pool = list(corpus.values()) + [cf.relabel(c, rng=np.random.default_rng(1)) for c in corpus.values()]
    assert len(pool) >= 20
    eq = [[cf.config_equal(a, b) for b in pool] for a in pool]
    n = len(pool)
    for i in range(n):
        assert eq[i][i]
        for j in range(n):
            assert eq[i][j] == eq[j][i]
    for i, j, k in itertools.product(range(n), repeat=3):
        if eq[i][j] and eq[j][k]:
            assert eq[i][k]


def test_nesting_chains_decrease(corpus):
    def chains(c, above):
        assert c.H < above
        if isinstance(c.member, cf.SinglePoint):
            assert c.H == 0 and not c.children
        for k in c.children:
            chains(k, c.H if c.H > 0 else above)

    for c in corpus.values():
        chains(c, math.inf)


def test_json_round_trip(corpus):
    for name, c in corpus.items():
        back = cf.from_json(cf.to_json(c))
        assert cf.canonical_form(back) == cf.canonical_form(c), name
        assert cf.to_json(back) == cf.to_json(cf.from_json(cf.to_json(back)))


def test_json_version_checked():
    import json
    d = json.loads(cf.to_json(cf.single(2)))
    d["pca_version"] = 7
    with pytest.raises(cf.ConfigError):
        cf.from_json(json.dumps(d))
