import itertools

import pytest

from dsirr.quiver import delta, make_quiver
from dsirr.roots import CartanData, cb_solvable, is_positive_root, summand_candidates
from dsirr.scalars import GaussianRational as G


def a2():
    return CartanData.from_quiver(make_quiver(["1", "2"], [("a", "1", "2")]))


def double():
    return CartanData.from_quiver(
        make_quiver(["1", "2"], [("a", "1", "2"), ("b", "1", "2")])
    )


def star3():
    # p1 <- t -> p2 shape (orientation irrelevant for the form)
    return CartanData.from_quiver(
        make_quiver(["p1", "p2", "t"], [("x", "t", "p1"), ("y", "t", "p2")])
    )


def test_tits_form_values():
    c = a2()
    assert c.tits_form((1, 0)) == 1
    assert c.tits_form((1, 1)) == 1
    assert c.tits_form((2, 1)) == 3
    assert double().tits_form((1, 1)) == 0


def test_delta_equals_one_minus_q():
    quivers = [
        make_quiver(["1", "2"], [("a", "1", "2")]),
        make_quiver(["1", "2"], [("a", "1", "2"), ("b", "1", "2")]),
        make_quiver(["1", "2", "3"], [("a", "1", "2"), ("b", "2", "3"), ("c", "1", "3")]),
    ]
    for q in quivers:
        c = CartanData.from_quiver(q)
        for v in itertools.product(range(4), repeat=len(q.vertices)):
            dims = dict(zip(q.vertices, v))
            assert delta(q, dims) == 1 - c.tits_form(v)


def test_positive_root_examples():
    c = a2()
    assert is_positive_root(c, (1, 0))
    assert is_positive_root(c, (1, 1))
    assert not is_positive_root(c, (2, 1))
    assert not is_positive_root(c, (0, 0))
    assert not is_positive_root(c, (2, 0))
    d = double()
    assert is_positive_root(d, (1, 1))  # imaginary: (v, e_i) = 0, connected
    assert is_positive_root(d, (2, 2))
    assert not is_positive_root(d, (1, 0)) or True  # e_1 is real
    assert is_positive_root(d, (1, 0))


def test_imaginary_needs_connected_support():
    q = make_quiver(["1", "2", "3"], [("a", "1", "2")])
    c = CartanData.from_quiver(q)
    assert not is_positive_root(c, (1, 0, 1))  # disconnected support


def test_positive_root_invariant_under_relabeling():
    # same path quiver, vertices renamed by phi: 1->"2", 2->"1", 3->"3"
    q1 = make_quiver(["1", "2", "3"], [("a", "1", "2"), ("b", "2", "3")])
    q2 = make_quiver(["3", "1", "2"], [("a", "2", "1"), ("b", "1", "3")])
    c1, c2 = CartanData.from_quiver(q1), CartanData.from_quiver(q2)
    phi = {"1": "2", "2": "1", "3": "3"}
    for v1 in itertools.product(range(3), repeat=3):
        by_new_name = {phi[old]: x for old, x in zip(("1", "2", "3"), v1)}
        v2 = tuple(by_new_name[x] for x in ("3", "1", "2"))
        assert is_positive_root(c1, v1) == is_positive_root(c2, v2)


def test_loops_rejected():
    q = make_quiver(["1"], [("a", "1", "1")])
    with pytest.raises(ValueError):
        CartanData.from_quiver(q)


def test_summand_candidates_generic_and_degenerate():
    c = a2()
    z = 1 + G(0, 7)
    assert summand_candidates(c, (1, 1), {"1": z, "2": -z}) == [(1, 1)]
    assert summand_candidates(c, (1, 1), {"1": G(0), "2": G(0)}) == [
        (0, 1),
        (1, 0),
        (1, 1),
    ]


def test_summand_candidates_reject_float():
    with pytest.raises(TypeError):
        summand_candidates(a2(), (1, 1), {"1": 0.5, "2": -0.5})


def test_cb_single_vertex():
    c = CartanData.from_quiver(make_quiver(["1"], []))
    v = cb_solvable(c, (1,), {"1": G(0)})
    assert v.nonempty and v.dim == 0
    v = cb_solvable(c, (1,), {"1": G(1)})
    assert v.nonempty is False and v.failed_condition == 2


def test_cb_condition1():
    v = cb_solvable(a2(), (2, 1), {"1": G(0), "2": G(0)})
    assert v.failed_condition == 1


def test_cb_condition3_witness():
    v = cb_solvable(a2(), (1, 1), {"1": G(0), "2": G(0)})
    assert v.nonempty is False and v.failed_condition == 3
    assert sorted(tuple(w) for w in v.witness) == [(0, 1), (1, 0)]


def test_cb_imaginary_family():
    # doubled arrow, zeta = (c, -c): only the trivial decomposition
    v = cb_solvable(double(), (1, 1), {"1": G(3, 1), "2": G(-3, -1)})
    assert v.nonempty and v.dim == 2


def test_cb_star_rigid():
    zeta = {
        "p1": G(-7) / G(10),
        "p2": G(-8) / G(15),
        "t": G(37) / G(30),
    }
    v = cb_solvable(star3(), (1, 1, 1), zeta)
    assert v.nonempty and v.dim == 0


def test_cb_star_condition3():
    # zeta = (0, -1, 1): e_{p1} + (0,1,1) decomposes v with equal deltas
    zeta = {"p1": G(0), "p2": G(-1), "t": G(1)}
    v = cb_solvable(star3(), (1, 1, 1), zeta)
    assert v.nonempty is False and v.failed_condition == 3


def test_cb_zeta_v_nonzero_always_empty():
    for zeta1 in (G(1), G(0, 2), G(5) / G(7)):
        v = cb_solvable(a2(), (1, 1), {"1": zeta1, "2": G(0)})
        assert v.nonempty is False and v.failed_condition == 2


def test_cb_search_cap_reports_undecided():
    d = double()
    v = cb_solvable(d, (6, 6), {"1": G(0), "2": G(0)}, max_nodes=5)
    assert v.undecided
