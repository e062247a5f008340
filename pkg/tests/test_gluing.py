from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import rationals
from oracles import central_difference
from weilglue.corners import AtlasManifold, BoxRegion, Chart, CornerModel, check_atlas
from weilglue.gluing import (
    Collar,
    CollarOverlapTooSmall,
    FaceIdentification,
    NotOnFace,
    borel_expand,
    check_gluable,
    collar_jet_of_wpoint,
    glue,
    rescale_collar,
    wpoint_classify,
    wpoints_identified,
)
from weilglue.harness import load_scenario
from weilglue.prolong import WeilPoint
from weilglue.sampling import rng_for
from weilglue.smoothexpr import (
    Const,
    DomainViolation,
    SmoothMapTuple,
    Var,
    evaluate,
    exp,
    log,
    parse_sexpr,
    polynomial_coefficients,
)
from weilglue.suites import (
    SuiteConfig,
    borel_multiplicativity,
    classification_completeness,
    collar_independence,
    pushout_probe,
    reference_agreement,
    restriction_compatibility,
    twist_blindness,
)
from weilglue.weil import dual_numbers, make_weil, scalars

F = Fraction
s, t = Var(0), Var(1)
D1, D2 = dual_numbers(1), dual_numbers(2)
I = CornerModel(1, 1)
POINT = CornerModel(0, 0)


def interval(name, hi=2):
    return AtlasManifold(name, {"c": Chart("c", I, BoxRegion(I, (((-1, hi),),)))}, {}, {"end": (("c", 0),)})


def interval_data(forward=None, inverse=None, thickness=1):
    M, N = interval("M"), interval("N")
    pt = AtlasManifold("pt", {"s": Chart("s", POINT, BoxRegion(POINT, ((),)))})
    zero = SmoothMapTuple(0, (Const(F(0)),))
    fi = FaceIdentification("iv", M, N, pt, "end", "end", {"s": ("c", zero)}, {"s": ("c", zero)})
    ident = SmoothMapTuple.identity(1)
    U = BoxRegion(I, (((-1, 1),),))
    cM = Collar(M, "end", "c", pt, "s", U, F(thickness), forward or ident, inverse or ident)
    cN = Collar(N, "end", "c", pt, "s", U, F(1), ident, ident)
    return fi, cM, cN


@pytest.fixture(scope="module")
def halfplane():
    return load_scenario("halfplane_glue").gluings["seam"]


@pytest.fixture(scope="module")
def interval_fixture():
    return load_scenario("interval_glue").gluings["join"]


class TestBorel:
    def test_polynomial_truncation(self):
        f = s + t * s * s + t ** 3 * s
        jet = borel_expand(f, 2, 1)
        assert [polynomial_coefficients(c, 1) for c in jet.coefficients] == [{(1,): 1}, {(2,): 1}, {}]

    @given(st.integers(0, 4))
    def test_independent_of_t(self, k):
        f = s * s + 3
        jet = borel_expand(f, k, 1)
        assert polynomial_coefficients(jet.coefficients[0], 1) == {(2,): 1, (0,): 3}
        assert all(c.is_zero() for c in jet.coefficients[1:])

    def test_exponential(self):
        f = exp(t) * s
        jet = borel_expand(f, 2, 1)
        assert jet((F(3),)) == (3, 3, F(3, 2))
        along_t = lambda tv: float(evaluate(f, [3.0, tv]))
        assert central_difference(along_t, 0.0) == pytest.approx(3, abs=1e-6)
        assert central_difference(along_t, 0.0, order=2) / 2 == pytest.approx(1.5, abs=1e-5)

    def test_singular_at_face(self):
        with pytest.raises(DomainViolation):
            borel_expand(log(t), 2, 1)

    @given(st.integers(0, 2**31))
    def test_multiplicative_seeded(self, seed):
        assert borel_multiplicativity(rng_for(seed, "b"), 5).passed


class TestCollarJet:
    @given(rationals)
    def test_identity_collar(self, a):
        fi, cM, _ = interval_data()
        wp = WeilPoint(D1, fi.M.charts["c"], (F(0),), (a * D1.gen(0),))
        jet = collar_jet_of_wpoint(wp, cM)
        assert jet.base == (0,)
        assert jet.nilpotents == (a * D1.gen(0),)

    def test_off_face(self):
        fi, cM, _ = interval_data()
        wp = WeilPoint(D1, fi.M.charts["c"], (F(1, 2),), (D1.gen(0),))
        with pytest.raises(NotOnFace):
            collar_jet_of_wpoint(wp, cM)

    @given(rationals, rationals)
    def test_quadratic_collar(self, c, b):
        H = CornerModel(2, 1)
        M = AtlasManifold("H", {"h": Chart("h", H, BoxRegion.whole(H))}, {}, {"edge": (("h", 1),)})
        line = AtlasManifold("L", {"s": Chart.whole(CornerModel(1, 0))})
        fwd = SmoothMapTuple(2, (s, t + t * t))
        collar = Collar(M, "edge", "h", line, "s", BoxRegion.whole(H), F(1), fwd, fwd)
        Y = D1.gen(0)
        wp = WeilPoint(D1, M.charts["h"], (c, F(0)), (D1.zero(), b * Y))
        jet = collar_jet_of_wpoint(wp, collar)
        assert jet.nilpotents[collar.t_index] == b * Y
        assert jet.base == (c, 0)


class TestCheckGluable:
    def test_identity_collars(self):
        fi, cM, cN = interval_data()
        assert all(r.passed for r in check_gluable(fi, cM, cN, rng_for(0, "g"), 30))

    def test_broken_collar(self):
        shift = SmoothMapTuple(1, (Var(0) + F(1, 8),))
        back = SmoothMapTuple(1, (Var(0) - F(1, 8),))
        fi, cM, cN = interval_data(shift, back)
        res = {r.check_id: r for r in check_gluable(fi, cM, cN, rng_for(0, "g"), 30)}
        bad = res["iv/collar_M"]
        assert not bad.passed
        assert "(x, 0)" in bad.detail
        assert bad.witness is not None

    def test_sheared_halfplane(self, halfplane):
        sheared = halfplane.alternates["sheared"]
        assert all(r.passed for r in check_gluable(halfplane.fi, sheared, halfplane.collar_N, rng_for(0, "g"), 50))


class TestGlue:
    def test_interval_three_charts(self):
        fi, cM, cN = interval_data()
        g = glue(fi, cM, cN)
        assert sorted(g.atlas.charts) == ["M:c", "N:c", "collar"]
        collar = g.atlas.charts["collar"]
        assert collar.region.boxes == (((-1, 1),),)
        assert g.atlas.transition("collar", "M:c").map((F(1, 2),)) == (F(1, 2),)
        assert g.atlas.transition("collar", "N:c").map((F(-1, 2),)) == (F(1, 2),)
        assert all(r.passed for r in check_atlas(g.atlas, rng_for(0, "a"), 50, 0.0))

    def test_interval_matches_real_line(self):
        fi, cM, cN = interval_data()
        g = glue(fi, cM, cN)
        ref = {"M:c": SmoothMapTuple(1, (s,)), "N:c": SmoothMapTuple(1, (-s,)), "collar": SmoothMapTuple(1, (s,))}
        res = reference_agreement(g, ref, rng_for(0, "r"), 50, SuiteConfig())
        assert res.passed and res.samples > 0

    def test_wrong_reference_detected(self):
        fi, cM, cN = interval_data()
        g = glue(fi, cM, cN)
        ref = {"M:c": SmoothMapTuple(1, (s,)), "N:c": SmoothMapTuple(1, (s,)), "collar": SmoothMapTuple(1, (s,))}
        assert not reference_agreement(g, ref, rng_for(0, "r"), 50, SuiteConfig()).passed

    def test_halfplane_is_plane(self, halfplane):
        g = glue(halfplane.fi, halfplane.collar_M, halfplane.collar_N)
        assert all(r.passed for r in check_atlas(g.atlas, rng_for(0, "a"), 50, 0.0))
        assert reference_agreement(g, halfplane.reference, rng_for(0, "r"), 50, SuiteConfig()).passed
        assert g.atlas.charts["collar"].model == CornerModel(2, 0)

    def test_sheared_cocycle(self, halfplane):
        g = glue(halfplane.fi, halfplane.alternates["sheared"], halfplane.collar_N)
        res = check_atlas(g.atlas, rng_for(0, "a"), 60, 0.0)
        assert all(r.passed for r in res)

    def test_collar_too_small(self, halfplane):
        narrow = Collar(
            halfplane.fi.M, "edge", "h", halfplane.fi.sigma, "s",
            BoxRegion(CornerModel(2, 1), (((-1, 1), (-1, 1)),)), F(1),
            halfplane.collar_M.forward, halfplane.collar_M.inverse,
        )
        with pytest.raises(CollarOverlapTooSmall):
            glue(halfplane.fi, narrow, halfplane.collar_N)

    def test_zero_thickness(self):
        with pytest.raises(CollarOverlapTooSmall):
            interval_data(thickness=0)


class TestIdentified:
    @given(rationals)
    def test_reflection_matches(self, a):
        fi, cM, cN = interval_data()
        Y = D1.gen(0)
        wpM = WeilPoint(D1, fi.M.charts["c"], (F(0),), (a * Y,))
        wpN = WeilPoint(D1, fi.N.charts["c"], (F(0),), (-a * Y,))
        assert wpoints_identified(wpM, wpN, fi, cM, cN)

    @given(rationals.filter(lambda v: v != 0))
    def test_same_sign_differs(self, a):
        fi, cM, cN = interval_data()
        Y = D1.gen(0)
        wpM = WeilPoint(D1, fi.M.charts["c"], (F(0),), (a * Y,))
        wpN = WeilPoint(D1, fi.N.charts["c"], (F(0),), (a * Y,))
        assert not wpoints_identified(wpM, wpN, fi, cM, cN)

    def test_milnor_level(self):
        fi, cM, cN = interval_data()
        R = scalars()
        wpM = WeilPoint(R, fi.M.charts["c"], (F(0),), (R.zero(),))
        wpN = WeilPoint(R, fi.N.charts["c"], (F(0),), (R.zero(),))
        assert wpoints_identified(wpM, wpN, fi, cM, cN)

    def test_not_on_face_propagates(self):
        fi, cM, cN = interval_data()
        wpM = WeilPoint(D1, fi.M.charts["c"], (F(1, 2),), (D1.zero(),))
        wpN = WeilPoint(D1, fi.N.charts["c"], (F(0),), (D1.zero(),))
        with pytest.raises(NotOnFace):
            wpoints_identified(wpM, wpN, fi, cM, cN)


class TestClassify:
    def setup_method(self):
        fi, cM, cN = interval_data()
        self.glued = glue(fi, cM, cN)
        self.chart = self.glued.atlas.charts["collar"]

    def test_positive(self):
        wp = WeilPoint(D1, self.chart, (F(1, 2),), (D1.gen(0),))
        cls = wpoint_classify(wp, self.glued)
        assert cls.side == "M-interior"
        assert cls.preimage_M.base == (F(1, 2),)

    def test_negative(self):
        wp = WeilPoint(D1, self.chart, (F(-1, 2),), (D1.gen(0),))
        cls = wpoint_classify(wp, self.glued)
        assert cls.side == "N-interior"
        assert cls.preimage_N.base == (F(1, 2),)
        assert cls.preimage_N.nilpotents == (-D1.gen(0),)

    @given(rationals)
    def test_face(self, b):
        Y = D1.gen(0)
        wp = WeilPoint(D1, self.chart, (F(0),), (b * Y,))
        cls = wpoint_classify(wp, self.glued)
        assert cls.side == "face"
        assert cls.jet.nilpotents == (b * Y,)
        assert collar_jet_of_wpoint(cls.preimage_M, self.glued.collar_M).isclose(wp, 0.0)

    def test_interior_chart(self):
        wp = WeilPoint(D1, self.glued.atlas.charts["N:c"], (F(3, 2),), (D1.gen(0),))
        assert wpoint_classify(wp, self.glued).side == "N-interior"


class TestRescale:
    def test_constant_scales_thickness(self):
        _, cM, _ = interval_data()
        r = rescale_collar(cM, Const(F(3)))
        assert r.thickness == 3
        assert r.forward((F(1, 2),)) == (F(3, 2),)
        assert r.inverse((F(3, 2),)) == (F(1, 2),)


W_PROBES = [scalars(), D1, D2, make_weil(2, [(2, 0), (0, 2)])]


@pytest.mark.parametrize("w", W_PROBES, ids=["R", "D1", "D2", "D1xD1"])
@pytest.mark.parametrize("which", ["interval", "halfplane"])
def test_probe_families(w, which, halfplane, interval_fixture):
    g = interval_fixture if which == "interval" else halfplane
    glued = glue(g.fi, g.collar_M, g.collar_N)
    cfg = SuiteConfig()
    assert pushout_probe(glued, w, rng_for(1, "p"), 40, cfg).passed
    assert classification_completeness(glued, w, rng_for(1, "c"), 40, cfg).passed
    assert restriction_compatibility(glued, w, rng_for(1, "r"), 20, cfg).passed
    assert twist_blindness(glued, w, rng_for(1, "t"), 20, cfg).passed
    alt = g.alternates["sheared"]
    assert collar_independence(g.fi, g.collar_M, alt, g.collar_N, w, rng_for(1, "i"), 20, cfg).passed


def test_probe_detects_wrong_orientation(interval_fixture):
    """Gluing N without the reflection would identify (0; aY) with (0; aY); the brute force notices."""
    g = interval_fixture
    glued = glue(g.fi, g.collar_M, g.collar_N)
    Y = D1.gen(0)
    wpM = WeilPoint(D1, g.fi.M.charts["c"], (F(0),), (Y,))
    wpN = WeilPoint(D1, g.fi.N.charts["c"], (F(0),), (Y,))
    assert not wpoints_identified(wpM, wpN, g.fi, glued.collar_M, glued.collar_N)
    from weilglue.prolong import pushforward

    assert pushforward(glued.inclusion_M, wpM).images != pushforward(glued.inclusion_N, wpN).images


def test_parsed_collar_sexpr():
    assert str(parse_sexpr("(div (var 0) (add 1 (var 0)))")) == "(div (var 0) (add 1 (var 0)))"
