"""Seeded property families.

Each function returns one ``CheckResult`` (or a list of them) and draws all of
its randomness from the generator it is handed.  The scenario runner and the
acceptance tests call the same functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Sequence

from .corners import Chart, CornerModel, atlas_map_check
from .gluing import (
    Collar,
    FaceIdentification,
    GluedManifold,
    borel_expand,
    collar_change,
    face_wpoint,
    glue,
    matching_wpoint,
    rescale_collar,
    wpoint_classify,
    wpoints_identified,
)
from .prolong import (
    OutsideCorner,
    RawWeilMap,
    WeilPoint,
    exponential_bijection_check,
    factorize_through_corner,
    prolong_chart,
    prolong_map,
    pushforward,
)
from .report import CheckResult
from .sampling import random_polynomial, random_rational, random_transcendental, random_weil_element, rng_for
from .smoothexpr import (
    Const,
    SmoothExpr,
    SmoothMapTuple,
    Var,
    compose,
    polynomial_coefficients,
    power,
)
from .weil import (
    WeilAlgebra,
    WeilElement,
    close,
    dual_numbers,
    make_weil,
    mul,
    nilpotence_degree,
    tensor,
    weil_algebra_map_monic,
)


@dataclass(frozen=True)
class SuiteConfig:
    seed: int = 42
    samples: int = 100
    probes: int = 500
    mode: str = "rational"
    tolerance: float = 1e-9

    @property
    def exact(self) -> bool:
        return self.mode == "rational"

    @property
    def tol(self) -> float:
        return 0.0 if self.exact else self.tolerance

    def num(self, x):
        return float(x) if self.mode == "float" else x

    def rng(self, check_id: str):
        return rng_for(self.seed, check_id)


def _element(w: WeilAlgebra, rng, cfg: SuiteConfig, nilpotent: bool = True) -> WeilElement:
    e = random_weil_element(w, rng, nilpotent)
    return w.element([cfg.num(c) for c in e.coeffs]) if not cfg.exact else e


def _fail(cid, anchor, count, witness, detail):
    return CheckResult(cid, anchor, False, count, witness, detail)


# -- Weil algebras


def weil_axioms(w: WeilAlgebra, rng, count: int, cid: str = "weil/axioms") -> CheckResult:
    """Ring axioms, multiplicative augmentation, downward closure and the nilpotence bound."""
    anchor = "ring axioms; pi multiplicative; ker(pi)^(k+1) = 0"
    for mono in w.basis:
        for i, e in enumerate(mono):
            if e and tuple(m - (q == i) for q, m in enumerate(mono)) not in w.index:
                return _fail(cid, anchor, 0, {"monomial": mono}, "basis is not downward closed")
    k = nilpotence_degree(w)
    kernel = [w.monomial(m) for m in w.basis[1:]]
    for combo in combinations_with_replacement(kernel, k + 1):
        p = w.one()
        for e in combo:
            p = p * e
        if not p.is_zero():
            return _fail(cid, anchor, 0, None, "a (k+1)-fold kernel product is nonzero")
    top = next(m for m in w.basis if sum(m) == k)
    p = w.one()
    for g, e in zip(w.gens(), top):
        p = p * g ** e
    if p.is_zero():
        return _fail(cid, anchor, 0, {"monomial": top}, "no k-fold product of generators survives")
    for n in range(count):
        a, b, c = (random_weil_element(w, rng, nilpotent=False) for _ in range(3))
        ok = (
            (a * b) * c == a * (b * c)
            and a * b == b * a
            and a * (b + c) == a * b + a * c
            and a * w.one() == a
            and (a * b).augment() == a.augment() * b.augment()
            and (a + b).augment() == a.augment() + b.augment()
        )
        if not ok:
            return _fail(cid, anchor, n + 1, {"a": a, "b": b, "c": c}, "ring axiom or augmentation law fails")
    return CheckResult(cid, anchor, True, count)


def tensor_dimension(algebras: Sequence[WeilAlgebra], cid: str = "weil/tensor") -> CheckResult:
    anchor = "dim(A (x) W) = dim A * dim W"
    count = 0
    for w1 in algebras:
        for w2 in algebras:
            count += 1
            if tensor(w1, w2).dimension != w1.dimension * w2.dimension:
                return _fail(cid, anchor, count, {"W1": str(w1), "W2": str(w2)}, "dimension is not multiplicative")
    return CheckResult(cid, anchor, True, count)


def monic_squaring(k_max: int = 5, cid: str = "weil/squaring_monic") -> CheckResult:
    """``Y -> Z^2`` from ``R[Y]/(Y^(k+1))`` to ``R[Z]/(Z^(2k+2))`` is injective."""
    anchor = "Y -> Z^2 : D_k -> R[Z]/(Z^(2k+2)) has trivial kernel"
    for k in range(k_max + 1):
        source = dual_numbers(k)
        target = make_weil(1, [(2 * k + 2,)])
        if not weil_algebra_map_monic([target.gen(0) ** 2], source, target):
            return _fail(cid, anchor, k + 1, {"k": k}, "squaring jet map has a kernel")
    return CheckResult(cid, anchor, True, k_max + 1)


# -- jets


def dimension_law(max_n: int = 4, max_k: int = 3, cid: str = "prolong/dimension_law") -> CheckResult:
    anchor = "prolong_chart(H^n_m, D_k) has model H^(n(k+1))_m"
    count = 0
    for n in range(max_n + 1):
        for m in range(n + 1):
            for k in range(max_k + 1):
                w = dual_numbers(k)
                chart = prolong_chart(Chart.whole(CornerModel(n, m)), w)
                count += 1
                if chart.model != CornerModel(n * (k + 1), m):
                    return _fail(cid, anchor, count, {"n": n, "m": m, "k": k, "model": str(chart.model)},
                                 "wrong prolonged model")
                wp = WeilPoint(w, Chart.whole(CornerModel(n, m)), (Fraction(0),) * n, (w.zero(),) * n)
                if wp.free_scalars + n != chart.model.n:
                    return _fail(cid, anchor, count, {"n": n, "m": m, "k": k}, "free scalar count mismatch")
    return CheckResult(cid, anchor, True, count)


def _random_raw(model: CornerModel, w: WeilAlgebra, rng, cfg: SuiteConfig) -> RawWeilMap:
    images = []
    for _ in range(model.n):
        r = rng.random()
        base = Fraction(0) if r < 0.25 else random_rational(rng, 2)
        images.append(_element(w, rng, cfg) + cfg.num(base))
    return RawWeilMap(w, tuple(images))


def factorization_iff(model: CornerModel, w: WeilAlgebra, rng, count: int, cfg: SuiteConfig,
                      cid: str | None = None) -> CheckResult:
    """Factorization through the corner succeeds exactly when every constrained base is ``>= 0``."""
    cid = cid or f"prolong/factorization/{model}/{w}"
    anchor = "factorization succeeds <=> constrained augmentations >= 0"
    for n in range(count):
        raw = _random_raw(model, w, rng, cfg)
        expected = all(raw.images[i].augment() >= 0 for i in model.constrained)
        try:
            wp = factorize_through_corner(raw, model)
            got = True
        except OutsideCorner:
            got = False
        if got != expected:
            return _fail(cid, anchor, n + 1, {"bases": raw.bases()}, "factorization verdict disagrees")
        if got and not wp.raw().isclose(raw, cfg.tol):
            return _fail(cid, anchor, n + 1, {"bases": raw.bases()}, "Weil point does not reproduce the map")
    return CheckResult(cid, anchor, True, count)


def _random_map(n: int, p: int, rng, transcendental: bool = False) -> SmoothMapTuple:
    if transcendental:
        return SmoothMapTuple(n, tuple(random_transcendental(n, rng) for _ in range(p)))
    return SmoothMapTuple(n, tuple(random_polynomial(n, rng, max_degree=3, terms=3) for _ in range(p)))


def _random_wpoint(w: WeilAlgebra, n: int, rng, cfg: SuiteConfig) -> WeilPoint:
    chart = Chart.whole(CornerModel(n, 0))
    base = tuple(cfg.num(random_rational(rng, 2)) for _ in range(n))
    return WeilPoint(w, chart, base, tuple(_element(w, rng, cfg) for _ in range(n)))


def jet_functoriality(w: WeilAlgebra, rng, count: int, cfg: SuiteConfig, transcendental: bool = False,
                      cid: str | None = None) -> CheckResult:
    """``T^W(g o f) = T^W g o T^W f`` and ``T^W(f g) = T^W f * T^W g``."""
    kind = "transcendental" if transcendental else "polynomial"
    cid = cid or f"prolong/functoriality/{kind}/{w}"
    anchor = "T^W(g o f) = T^W g o T^W f; T^W(f g) = T^W f * T^W g"
    tol = cfg.tolerance if transcendental else cfg.tol
    for trial in range(count):
        n, p, q = (int(rng.integers(1, 3)) for _ in range(3))
        f = _random_map(n, p, rng)
        g = _random_map(p, q, rng, transcendental)
        wp = _random_wpoint(w, n, rng, cfg)
        direct = pushforward(compose(g, f), wp)
        stepwise = pushforward(g, factorize_through_corner(pushforward(f, wp), CornerModel(p, 0)))
        if not direct.isclose(stepwise, tol):
            return _fail(cid, anchor, trial + 1, {"f": f.to_sexprs(), "g": g.to_sexprs(), "base": wp.base},
                         "pushforward does not respect composition")
        if not all(close(img.augment(), v, tol) for img, v in zip(direct.images, compose(g, f)(wp.base))):
            return _fail(cid, anchor, trial + 1, {"base": wp.base}, "augmentation differs from evaluation")
        a = g.components[0].substitute(list(f.components))
        b = _random_map(n, 1, rng, transcendental).components[0]
        prod = pushforward(SmoothMapTuple(n, (a * b,)), wp).images[0]
        separate = mul(pushforward(SmoothMapTuple(n, (a,)), wp).images[0],
                       pushforward(SmoothMapTuple(n, (b,)), wp).images[0])
        if not prod.isclose(separate, tol):
            return _fail(cid, anchor, trial + 1, {"f": str(a), "g": str(b), "base": wp.base},
                         "pushforward is not multiplicative")
    return CheckResult(cid, anchor, True, count)


def borel_multiplicativity(rng, count: int, max_sigma: int = 2, max_order: int = 3,
                           cid: str = "gluing/borel_multiplicative") -> CheckResult:
    """``expand(f g) = expand(f) expand(g)`` in ``C(Sigma)[eps]/(eps^(k+1))``, compared as polynomials."""
    anchor = "expand(f g) = expand(f) * expand(g) mod eps^(k+1)"
    for trial in range(count):
        s = int(rng.integers(1, max_sigma + 1))
        k = int(rng.integers(1, max_order + 1))
        f = random_polynomial(s + 1, rng, max_degree=4, terms=4)
        g = random_polynomial(s + 1, rng, max_degree=4, terms=4)
        lhs = borel_expand(f * g, k, s)
        rhs = borel_expand(f, k, s) * borel_expand(g, k, s)
        for a, b in zip(lhs.coefficients, rhs.coefficients):
            if polynomial_coefficients(a, s) != polynomial_coefficients(b, s):
                return _fail(cid, anchor, trial + 1, {"f": str(f), "g": str(g), "k": k},
                             "Borel expansion is not multiplicative")
        fd = borel_expand(f, k, s)
        for j, c in enumerate(fd.coefficients):
            # coefficient j is the t^j part of f with t set aside
            expected = {m[:s]: v for m, v in polynomial_coefficients(f, s + 1).items() if m[s] == j}
            if polynomial_coefficients(c, s) != expected:
                return _fail(cid, anchor, trial + 1, {"f": str(f), "j": j}, "Borel coefficient is wrong")
    return CheckResult(cid, anchor, True, count)


def exponential_law(model: CornerModel, a: WeilAlgebra, w: WeilAlgebra, rng, count: int, cfg: SuiteConfig,
                    cid: str | None = None) -> CheckResult:
    cid = cid or f"prolong/exponential/{model}/{a}/{w}"
    anchor = "A-points of T^W H^n_m <-> (A (x) W)-points of H^n_m, round trip"
    aw = tensor(a, w)
    for n in range(count):
        raw = _random_raw(model, aw, rng, cfg)
        rep = exponential_bijection_check(raw, model, a, w)
        expected = all(raw.images[i].augment() >= 0 for i in model.constrained)
        if not rep.ok or rep.factorizes_tensor_side != expected:
            return _fail(cid, anchor, n + 1, {"bases": raw.bases(), "report": vars(rep)},
                         "exponential bijection or corner condition fails")
    return CheckResult(cid, anchor, True, count)


# -- gluing probes


def _face_point(fi: FaceIdentification, collar: Collar, side: str, w: WeilAlgebra, sigma, rng, cfg):
    nils = [_element(w, rng, cfg) for _ in range(fi.M.dimension)]
    return face_wpoint(fi, collar, side, w, [cfg.num(s) for s in sigma], nils)


def _sigma_sample(glued: GluedManifold, rng):
    fi, c = glued.fi, glued.collar_M
    return fi.sigma.charts[c.sigma_chart].region.sample(rng, face_bias=0.2)


def _perturb(wp: WeilPoint, rng, cfg) -> WeilPoint:
    """Change one top-degree nilpotent coefficient of one coordinate."""
    w = wp.algebra
    k = nilpotence_degree(w)
    tops = [b for b, m in enumerate(w.basis) if sum(m) == k]
    i = int(rng.integers(len(wp.nilpotents)))
    b = tops[int(rng.integers(len(tops)))]
    delta = random_rational(rng, 2) or Fraction(1)
    nils = list(wp.nilpotents)
    nils[i] = nils[i] + w.monomial(w.basis[b], cfg.num(delta))
    return WeilPoint(w, wp.chart, wp.base, tuple(nils))


def probe_pairs(glued: GluedManifold, w: WeilAlgebra, rng, count: int, cfg: SuiteConfig):
    """Pairs of face-based Weil points of M and N, a quarter of them identified by construction."""
    fi = glued.fi
    for n in range(count):
        sigma = _sigma_sample(glued, rng)
        wpM = _face_point(fi, glued.collar_M, "M", w, sigma, rng, cfg)
        mode = n % 4
        if mode == 0:
            wpN = matching_wpoint(wpM, glued, cfg.tol)
        elif mode == 1:
            wpN = _face_point(fi, glued.collar_N, "N", w, sigma, rng, cfg)
        elif mode == 2:
            wpN = _face_point(fi, glued.collar_N, "N", w, _sigma_sample(glued, rng), rng, cfg)
        else:
            wpN = matching_wpoint(wpM, glued, cfg.tol)
            if w.dimension > 1:
                wpN = _perturb(wpN, rng, cfg)
        yield wpM, wpN


def _glued_image(glued: GluedManifold, side: str, wp: WeilPoint) -> tuple:
    """Prolonged coordinates of ``wp`` in the collar chart, via the materialized prolonged inclusion."""
    collar = glued.collar_M if side == "M" else glued.collar_N
    incl = glued.inclusion_M if side == "M" else glued.inclusion_N
    source = (glued.fi.M if side == "M" else glued.fi.N).charts[collar.chart].model
    target = glued.atlas.charts[glued.collar_chart].model
    return prolong_map(incl, source, target, wp.algebra)(wp.coordinates())


def pushout_probe(glued: GluedManifold, w: WeilAlgebra, rng, count: int, cfg: SuiteConfig,
                  cid: str | None = None) -> CheckResult:
    """``wpoints_identified`` agrees with equality of the glued-chart images, on every pair."""
    cid = cid or f"gluing/pushout/{glued.fi.name}/{w}"
    anchor = "identified(wpM, wpN) <=> equal images in the glued chart"
    verdicts = {True: 0, False: 0}
    for n, (wpM, wpN) in enumerate(probe_pairs(glued, w, rng, count, cfg)):
        verdict = wpoints_identified(wpM, wpN, glued.fi, glued.collar_M, glued.collar_N, cfg.tol)
        a, b = _glued_image(glued, "M", wpM), _glued_image(glued, "N", wpN)
        brute = all(close(x, y, cfg.tol) for x, y in zip(a, b))
        verdicts[verdict] += 1
        if verdict != brute:
            return _fail(cid, anchor, n + 1, {"wpM": wpM.coordinates(), "wpN": wpN.coordinates(),
                                              "verdict": verdict}, "identification disagrees with brute force")
    if count >= 4 and not verdicts[True]:
        return _fail(cid, anchor, count, verdicts, "no identified pair was generated")
    sigma_dim = glued.fi.sigma.dimension
    if count >= 4 and not verdicts[False] and (w.dimension > 1 or sigma_dim > 0):
        return _fail(cid, anchor, count, verdicts, "no separated pair was generated")
    return CheckResult(cid, anchor, True, count, detail=f"identified {verdicts[True]}, separated {verdicts[False]}")


def glued_wpoint(glued: GluedManifold, w: WeilAlgebra, rng, cfg: SuiteConfig) -> WeilPoint:
    ids = sorted(glued.atlas.charts)
    chart = glued.atlas.charts[ids[int(rng.integers(len(ids)))]]
    base = list(chart.region.sample(rng, face_bias=0.3))
    if chart.id == glued.collar_chart and rng.random() < 0.4:
        base[glued.collar_M.t_index] = Fraction(0)
    base = tuple(cfg.num(x) for x in base)
    return WeilPoint(w, chart, base, tuple(_element(w, rng, cfg) for _ in base))


def classification_completeness(glued: GluedManifold, w: WeilAlgebra, rng, count: int, cfg: SuiteConfig,
                                cid: str | None = None) -> CheckResult:
    """Every glued Weil point is an M point, an N point, or a face jet, and maps back to itself."""
    cid = cid or f"gluing/classification/{glued.fi.name}/{w}"
    anchor = "each glued W-point has exactly one side and maps back to itself"
    fi = glued.fi
    sides = {"M-interior": 0, "N-interior": 0, "face": 0}
    for n in range(count):
        wp = glued_wpoint(glued, w, rng, cfg)
        cls = wpoint_classify(wp, glued, cfg.tol)
        sides[cls.side] += 1
        ok = True
        if wp.chart.id == glued.collar_chart:
            raw = wp.raw()
            if cls.preimage_M is not None:
                ok = ok and pushforward(glued.inclusion_M, cls.preimage_M).isclose(raw, cfg.tol)
            if cls.preimage_N is not None:
                ok = ok and pushforward(glued.inclusion_N, cls.preimage_N).isclose(raw, cfg.tol)
            if cls.side == "face":
                ok = ok and wpoints_identified(cls.preimage_M, cls.preimage_N, fi, glued.collar_M,
                                               glued.collar_N, cfg.tol)
        else:
            pre = cls.preimage_M if cls.side == "M-interior" else cls.preimage_N
            ok = pre is not None and pre.isclose(wp, cfg.tol) and pre.chart.region.contains(pre.base, cfg.tol)
        if not ok:
            return _fail(cid, anchor, n + 1, {"chart": wp.chart.id, "coords": wp.coordinates(), "side": cls.side},
                         "classified preimage does not map back to the point")
    return CheckResult(cid, anchor, True, count, detail=", ".join(f"{k} {v}" for k, v in sides.items()))


def collar_independence(fi: FaceIdentification, collarM: Collar, alternate: Collar, collarN: Collar,
                        w: WeilAlgebra, rng, count: int, cfg: SuiteConfig, cid: str | None = None) -> CheckResult:
    """Regluing with another M collar gives the same verdicts after the collar change near Sigma."""
    cid = cid or f"gluing/collar_independence/{fi.name}/{w}"
    anchor = "verdicts agree after the collar change h = g^-1 o f, h|Sigma = id"
    first = glue(fi, collarM, collarN)
    glue(fi, alternate, collarN)
    h = collar_change(collarM, alternate)
    back = collar_change(alternate, collarM)
    chart = fi.M.charts[collarM.chart]
    for n, (wpM, wpN) in enumerate(probe_pairs(first, w, rng, count, cfg)):
        moved = factorize_through_corner(pushforward(h, wpM), chart.model, chart, cfg.tol)
        if not all(close(a, b, cfg.tol) for a, b in zip(moved.base, wpM.base)):
            return _fail(cid, anchor, n + 1, {"base": wpM.base}, "collar change moves Sigma")
        if not pushforward(back, moved).isclose(wpM.raw(), cfg.tol):
            return _fail(cid, anchor, n + 1, {"base": wpM.base}, "collar change is not invertible on jets")
        v1 = wpoints_identified(wpM, wpN, fi, collarM, collarN, cfg.tol)
        v2 = wpoints_identified(moved, wpN, fi, alternate, collarN, cfg.tol)
        if v1 != v2:
            return _fail(cid, anchor, n + 1, {"wpM": wpM.coordinates(), "wpN": wpN.coordinates()},
                         "verdicts differ between the two gluings")
    return CheckResult(cid, anchor, True, count)


def random_rescaling(sigma_dim: int, rng) -> SmoothExpr:
    """A positive rational function of Sigma coordinates."""
    c = Fraction(int(rng.integers(1, 17)), int(rng.integers(1, 9)))
    if sigma_dim == 0 or rng.random() < 0.4:
        return Const(c)
    s = Var(int(rng.integers(sigma_dim)))
    if rng.random() < 0.5:
        return Const(c) * (Const(Fraction(1)) + power(s, 2))
    return Const(c) / (Const(Fraction(2)) + power(s, 2))


def twist_blindness(glued: GluedManifold, w: WeilAlgebra, rng, count: int, cfg: SuiteConfig,
                    cid: str | None = None) -> CheckResult:
    """Verdicts do not change when both collars are rescaled by one positive ``lambda(sigma)``."""
    cid = cid or f"gluing/twist_blindness/{glued.fi.name}/{w}"
    anchor = "verdicts invariant under t -> lambda(sigma) t on both collars"
    fi = glued.fi
    for n, (wpM, wpN) in enumerate(probe_pairs(glued, w, rng, count, cfg)):
        lam = random_rescaling(fi.sigma.dimension, rng)
        cM, cN = rescale_collar(glued.collar_M, lam), rescale_collar(glued.collar_N, lam)
        v1 = wpoints_identified(wpM, wpN, fi, glued.collar_M, glued.collar_N, cfg.tol)
        v2 = wpoints_identified(wpM, wpN, fi, cM, cN, cfg.tol)
        if v1 != v2:
            return _fail(cid, anchor, n + 1, {"lambda": str(lam), "wpM": wpM.coordinates(),
                                              "wpN": wpN.coordinates()}, "rescaling changed a verdict")
    return CheckResult(cid, anchor, True, count)


def reference_agreement(glued: GluedManifold, chart_maps: dict[str, SmoothMapTuple], rng, samples: int,
                        cfg: SuiteConfig, cid: str | None = None) -> CheckResult:
    return atlas_map_check(glued.atlas, chart_maps, rng, samples, cfg.tol, name=cid or f"gluing/reference/{glued.fi.name}")


def restriction_compatibility(glued: GluedManifold, w: WeilAlgebra, rng, count: int, cfg: SuiteConfig,
                              cid: str | None = None) -> CheckResult:
    """The glued atlas restricted to ``t >= 0`` gives back M's Weil points, bijectively."""
    cid = cid or f"gluing/restriction/{glued.fi.name}/{w}"
    anchor = "glued atlas on t >= 0 returns M's W-points"
    collar = glued.collar_M
    chart = glued.fi.M.charts[collar.chart]
    fwd = glued.inclusion_M
    for n in range(count):
        base = list(collar.region.sample(rng, face_bias=0.4))
        base = tuple(cfg.num(x) for x in base)
        wp = WeilPoint(w, chart, base, tuple(_element(w, rng, cfg) for _ in base))
        image = pushforward(fwd, wp)
        glued_chart = glued.atlas.charts[glued.collar_chart]
        try:
            gp = factorize_through_corner(image, glued_chart.model, glued_chart, cfg.tol)
        except ValueError:
            return _fail(cid, anchor, n + 1, {"base": base}, "M point leaves the collar chart")
        cls = wpoint_classify(gp, glued, cfg.tol)
        if cls.side == "N-interior" or cls.preimage_M is None or not cls.preimage_M.isclose(wp, cfg.tol):
            return _fail(cid, anchor, n + 1, {"base": base, "side": cls.side}, "restriction does not return M")
    return CheckResult(cid, anchor, True, count)


def atlas_samples_ok(records: Sequence[CheckResult], minimum: int) -> bool:
    return all(r.passed for r in records) and all(r.samples >= minimum for r in records if r.check_id.endswith("cocycle"))

