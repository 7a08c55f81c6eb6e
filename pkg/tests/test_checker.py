import numpy as np
import pytest

from geoconvex import (
    Bifunction,
    CheckConfig,
    DomainSet,
    EndoMap,
    Instance,
    ProductSet,
    ScalarFn,
    Verdict,
    check_geodesic_E_convex_set,
    check_geodesic_phiE_convex_fn,
    check_geodesic_phiE_convex_set,
    check_phiE_convex_interval,
    check_slope_inequality,
    epigraph_membership,
    euclidean,
    poincare_ball,
    search_counterexample,
    sphere,
)
from geoconvex.errors import InverseSearchFailedError
from geoconvex.exprlang import parse, point_vars

CFG = CheckConfig(seed=42, samples=3000)
E1 = euclidean(1)


def _inst1d(h, phi, box, E=None, membership=None):
    dom = DomainSet(E1, (box,), membership)
    Emap = EndoMap.from_source(E, 1) if E else EndoMap.identity(1)
    return Instance(E1, ScalarFn.from_source(h, 1), Emap,
                    Bifunction.from_source(phi), dom)


def test_piecewise_constant_remap_holds():
    inst = _inst1d("if(x1 >= 0, 1, -(x1^2))", "a - 2*b", (-2.0, 2.0), E="-1")
    rep = check_phiE_convex_interval(inst, CFG)
    assert rep.holds
    assert rep.max_violation <= 1e-9


def test_affine_equality_case():
    inst = _inst1d("x1", "a - b", (-1.0, 1.0))
    rep = check_phiE_convex_interval(inst, CFG)
    assert rep.holds
    assert rep.max_violation <= 1e-12


def test_piecewise_identity_remap_violated():
    inst = _inst1d("if(x1 >= 0, 1, -(x1^2))", "a - 2*b", (0.5, 2.0))
    rep = check_phiE_convex_interval(inst, CFG)
    assert rep.verdict is Verdict.VIOLATED
    assert rep.witness.violation >= 0.5 - 1e-9
    # hand value at u1 = u2 = 1, t = 0.5: lhs 1, rhs 0.5
    h = inst.h
    assert h((1.0,)) == 1.0
    assert h((1.0,)) + 0.5 * inst.phi(h((1.0,)), h((1.0,))) == 0.5


def test_slope_inequality_examples():
    conv = _inst1d("x1^2", "a - b", (0.0, 1.0))
    assert check_slope_inequality(conv, CFG).holds
    aff = _inst1d("3*x1 + 1", "a - b", (0.0, 1.0))
    rep = check_slope_inequality(aff, CFG)
    assert rep.holds and rep.max_violation <= 1e-9
    conc = _inst1d("-(x1^2)", "a - b", (0.0, 1.0))
    rep2 = check_slope_inequality(conc, CFG)
    assert rep2.verdict is Verdict.VIOLATED
    # hand triple (0, 0.5, 1): quotient -1.5 against gap ratio -1
    assert rep2.witness.violation > 1e-9


def test_slope_premise_failed_for_constant_remap():
    inst = _inst1d("x1^2", "a - b", (0.0, 1.0), E="0.25")
    rep = check_slope_inequality(inst, CFG)
    assert rep.verdict is Verdict.PREMISE_FAILED


def test_set_check_identity_box():
    dom = DomainSet(euclidean(2), ((-1.0, 1.0), (-1.0, 1.0)))
    rep = check_geodesic_E_convex_set(euclidean(2), EndoMap.identity(2), dom, CFG)
    assert rep.holds
    assert rep.flags["length_matches_base_distance"] is True


def test_set_check_square_remap_length_flag():
    dom = DomainSet(E1, ((-1.0, 1.0),))
    rep = check_geodesic_E_convex_set(E1, EndoMap.from_source("x1^2", 1), dom, CFG)
    assert rep.holds  # containment: images and segments stay in [0, 1]
    assert rep.flags["length_matches_base_distance"] is False


def test_set_check_sphere_cap():
    cap = DomainSet(sphere(2), ((-1.0, 1.0),) * 3, parse("x3 - 0.5", point_vars(3)))
    rep = check_geodesic_E_convex_set(sphere(2), EndoMap.identity(3), cap, CFG)
    assert rep.holds


def test_set_check_violated_for_nonconvex_membership():
    # two disjoint lobes: segments between them leave the set
    dom = DomainSet(E1, ((-2.0, 2.0),), parse("x1^2 - 1", point_vars(1)))
    rep = check_geodesic_E_convex_set(E1, EndoMap.identity(1), dom, CFG)
    assert rep.verdict is Verdict.VIOLATED
    assert rep.witness.violation > 1e-9


def test_fn_check_requires_set_premise():
    dom = DomainSet(E1, ((-2.0, 2.0),), parse("x1^2 - 1", point_vars(1)))
    inst = Instance(E1, ScalarFn.from_source("x1^2", 1), EndoMap.identity(1),
                    Bifunction.from_source("a - b"), dom)
    rep = check_geodesic_phiE_convex_fn(inst, CFG)
    assert rep.verdict is Verdict.PREMISE_FAILED


def test_fn_check_reduces_to_interval_on_flat_line():
    from geoconvex.instances import interval_instance

    for seed in range(12):
        inst = interval_instance(seed)
        a = check_geodesic_phiE_convex_fn(inst, CFG)
        b = check_phiE_convex_interval(inst, CFG)
        assert a.verdict == b.verdict
        if a.witness is not None:
            assert a.witness == b.witness


def test_constant_function_strict_mode():
    inst = _inst1d("2", "a - b", (-1.0, 1.0))
    plain = check_geodesic_phiE_convex_fn(inst, CFG)
    assert plain.holds and plain.max_violation <= 1e-12
    strict = check_geodesic_phiE_convex_fn(inst, CFG, strict=True)
    assert strict.verdict is Verdict.VIOLATED  # equality is never strict


def test_strictly_convex_passes_strict_mode():
    inst = _inst1d("x1^2", "a - b", (-1.0, 1.0))
    rep = check_geodesic_phiE_convex_fn(inst, CFG, strict=True)
    assert rep.holds


def test_sphere_cap_distance_function():
    cap = DomainSet(sphere(2), ((-1.0, 1.0),) * 3, parse("x3 - 0.5", point_vars(3)))
    inst = Instance(sphere(2), ScalarFn.from_source("2 - 2*x3", 3),
                    EndoMap.identity(3), Bifunction.from_source("a - b"), cap)
    rep = check_geodesic_phiE_convex_fn(inst, CFG)
    assert rep.holds


def test_ball_hyperbolic_distance_function():
    dom = DomainSet(poincare_ball(2), ((-0.7, 0.7), (-0.7, 0.7)))
    h = ScalarFn.from_source("(2*artanh(sqrt(x1^2 + x2^2 + 1e-30)))^2", 2)
    inst = Instance(poincare_ball(2), h, EndoMap.identity(2),
                    Bifunction.from_source("a - b"), dom)
    rep = check_geodesic_phiE_convex_fn(inst, CFG)
    assert rep.holds


def test_product_set_epigraph_of_square():
    dom = DomainSet(E1, ((-1.0, 1.0),))
    graph = parse("v - x1^2", point_vars(1) + ("v",))
    S = ProductSet(dom, graph, (0.0, 3.0))
    rep = check_geodesic_phiE_convex_set(
        E1, EndoMap.identity(1), Bifunction.from_source("a - b"), S, CFG
    )
    assert rep.holds


def test_product_set_hypograph_violated():
    dom = DomainSet(E1, ((-1.0, 1.0),))
    graph = parse("v - (-(x1^2))", point_vars(1) + ("v",))  # epigraph of -x^2
    S = ProductSet(dom, graph, (-1.0, 2.0))
    rep = check_geodesic_phiE_convex_set(
        E1, EndoMap.identity(1), Bifunction.from_source("a - b"), S, CFG
    )
    assert rep.verdict is Verdict.VIOLATED
    assert rep.witness.violation > 1e-9


def test_product_set_unconstrained_v_holds():
    dom = DomainSet(E1, ((-1.0, 1.0),))
    graph = parse("1", point_vars(1) + ("v",))
    S = ProductSet(dom, graph, (-1.0, 1.0))
    rep = check_geodesic_phiE_convex_set(
        E1, EndoMap.identity(1), Bifunction.from_source("a - b"), S, CFG
    )
    assert rep.holds


def test_product_set_vacuous_when_empty():
    dom = DomainSet(E1, ((-1.0, 1.0),))
    graph = parse("-1", point_vars(1) + ("v",))  # never a member
    S = ProductSet(dom, graph, (0.0, 1.0))
    rep = check_geodesic_phiE_convex_set(
        E1, EndoMap.identity(1), Bifunction.from_source("a - b"), S, CFG
    )
    assert rep.holds and rep.samples_used == 0
    assert any("vacuous" in n for n in rep.notes)


def test_epigraph_membership():
    inst = _inst1d("x1^2", "a - b", (-1.0, 1.0))
    member = epigraph_membership(inst, CFG)
    assert member((0.5,), 0.25) is True
    assert member((0.5,), 0.2) is False


def test_epigraph_membership_constant_remap():
    inst = _inst1d("if(x1 >= 0, 1, -(x1^2))", "a - 2*b", (-2.0, 2.0), E="-1")
    member = epigraph_membership(inst, CFG)
    assert member((-1.0,), -1.0) is True
    with pytest.raises(InverseSearchFailedError):
        member((0.5,), 10.0)


def test_epigraph_membership_square_remap_image():
    inst = _inst1d("x1", "a - b", (-1.0, 1.0), E="x1^2")
    member = epigraph_membership(inst, CFG)
    with pytest.raises(InverseSearchFailedError):
        member((-0.5,), 10.0)
    assert member((0.25,), 1.0) is True


def test_witness_revalidates():
    inst = _inst1d("if(x1 >= 0, 1, -(x1^2))", "a - 2*b", (0.5, 2.0))
    rep = check_phiE_convex_interval(inst, CFG)
    w = rep.witness
    u1, u2, t = w.points[0].coords[0], w.points[1].coords[0], w.t
    e1 = inst.E((u1,))[0]
    e2 = inst.E((u2,))[0]
    lhs = inst.h((t * e1 + (1 - t) * e2,))
    rhs = inst.h((e2,)) + t * inst.phi(inst.h((e1,)), inst.h((e2,)))
    assert lhs - rhs == pytest.approx(w.violation, abs=1e-12)
    assert w.violation > CFG.threshold(rhs)


def test_determinism_across_workers_and_runs():
    inst = _inst1d("x1^2 - 0.05*x1^4", "a - b", (-1.5, 1.5))
    base = check_geodesic_phiE_convex_fn(inst, CFG)
    again = check_geodesic_phiE_convex_fn(inst, CFG)
    assert base == again
    par = check_geodesic_phiE_convex_fn(inst, CFG.replace(workers=8))
    assert base.to_dict() == par.to_dict()


def test_search_counterexample_forces_refinement():
    inst = _inst1d("-(x1^2)", "a - b", (-1.0, 1.0))
    rep = search_counterexample(inst, CFG)
    assert rep.verdict is Verdict.VIOLATED
    assert len(rep.refined) >= 1
    for w in rep.refined:
        assert w.violation > 1e-9
        assert w.origin_index is not None


def test_domain_error_reported():
    inst = _inst1d("log(x1)", "a - b", (0.5, 2.0), E="x1 - 1")
    rep = check_phiE_convex_interval(inst, CFG)
    assert rep.verdict is Verdict.DOMAIN_ERROR
    assert rep.notes


def test_restriction_to_curve_equivalence():
    # the inequality along a curve equals the 1-D combination inequality of
    # the pullback K(t) = h(curve(t)) with endpoints K(1), K(0)
    from geoconvex.manifold import GeodesicSpec, Point, geodesic
    from geoconvex.instances import sphere_cap_instance

    inst = sphere_cap_instance(3)
    rngen = np.random.default_rng(13)
    for _ in range(10):
        pts = []
        while len(pts) < 2:
            v = rngen.standard_normal(3)
            v = v / np.linalg.norm(v)
            if v[2] > 0.55:
                pts.append(Point(tuple(v)))
        mu1, mu2 = pts
        w1 = Point(inst.E(mu1.coords))
        w2 = Point(inst.E(mu2.coords))
        spec = GeodesicSpec(inst.manifold, w1, w2)

        def K(t):
            return inst.h(geodesic(spec, t).coords)

        for t in np.linspace(0, 1, 9):
            direct_lhs = inst.h(geodesic(spec, float(t)).coords)
            direct_rhs = inst.h(w2.coords) + t * inst.phi(
                inst.h(w1.coords), inst.h(w2.coords)
            )
            pulled_lhs = K(float(t))
            pulled_rhs = K(0.0) + t * inst.phi(K(1.0), K(0.0))
            assert pulled_lhs == direct_lhs
            assert pulled_rhs == pytest.approx(direct_rhs, abs=1e-12)
