"""Collars, infinitesimal-collar jets and gluing along a face.

Conventions used throughout:

* A collar map sends chart coordinates near the face to ``(sigma..., t)`` with
  ``t >= 0`` the collar coordinate (last).
* The collar chart of a glued manifold is ``Sigma x R`` with coordinates
  ``(sigma_free..., t, sigma_constrained...)`` so the corner coordinates of
  ``Sigma`` stay last.  The M side sits at ``t >= 0``; the N side is attached
  through ``t -> -t``.
* Every jet computation truncates at the nilpotence degree of the probing
  Weil algebra, which is all a Weil point can see of the infinite-order
  transverse series.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

from .corners import INF, AtlasManifold, BoxRegion, Chart, CornerModel, Transition, is_zero_coord
from .prolong import RawWeilMap, WeilPoint, factorize_through_corner, pushforward
from .report import CheckResult
from .sampling import rational_between
from .smoothexpr import (
    Const,
    SmoothExpr,
    SmoothMapTuple,
    Var,
    as_series,
    compose,
    evaluate,
    lift,
    series_close,
    series_variables,
)
from .weil import WeilAlgebra, close, dual_numbers


class NotOnFace(ValueError):
    pass


class CollarOverlapTooSmall(ValueError):
    pass


class GluingError(ValueError):
    pass


# -- Borel expansion


@dataclass(frozen=True)
class CollarJet:
    """``sum_n c_n(sigma) eps^n`` truncated at order ``k``; coefficients are expressions on Sigma."""

    sigma_dim: int
    coefficients: tuple[SmoothExpr, ...]

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def __mul__(self, other: CollarJet) -> CollarJet:
        if self.sigma_dim != other.sigma_dim or self.order != other.order:
            raise ValueError("collar jets of different shape")
        k = self.order
        out = []
        for n in range(k + 1):
            acc: SmoothExpr = Const(Fraction(0))
            for i in range(n + 1):
                acc = acc + self.coefficients[i] * other.coefficients[n - i]
            out.append(acc)
        return CollarJet(self.sigma_dim, tuple(out))

    def __call__(self, sigma: Sequence) -> tuple:
        return tuple(evaluate(c, list(sigma)) for c in self.coefficients)


def borel_expand(f: SmoothExpr, k: int, sigma_dim: int) -> CollarJet:
    """Transverse Taylor expansion of ``f(sigma, t)`` at ``t = 0`` up to ``eps^k``.

    ``f`` lives on ``Sigma x R`` with ``t`` the last variable (index ``sigma_dim``).
    The result is computed by evaluating ``f`` over ``C(Sigma)[eps]/(eps^(k+1))``.
    """
    dk = dual_numbers(k)
    inputs = [dk.scalar(Var(i)) for i in range(sigma_dim)] + [dk.gen(0)]
    value = evaluate(lift(f), inputs)
    coeffs = value.coeffs if hasattr(value, "coeffs") else (value,) + (Fraction(0),) * k
    return CollarJet(sigma_dim, tuple(lift(c) for c in coeffs))


# -- collars and face identifications


@dataclass(frozen=True, eq=False)
class Collar:
    """Collar of ``face`` inside one chart of ``manifold``.

    ``forward`` maps ``region`` (chart coordinates) into
    ``Sigma-chart region x [0, thickness)`` and ``inverse`` undoes it.
    """

    manifold: AtlasManifold
    face: str
    chart: str
    sigma: AtlasManifold
    sigma_chart: str
    region: BoxRegion
    thickness: object
    forward: SmoothMapTuple
    inverse: SmoothMapTuple

    def __post_init__(self):
        n = self.manifold.dimension
        if self.sigma.dimension != n - 1:
            raise GluingError("Sigma must have codimension one")
        if self.forward.domain_dim != n or self.forward.codomain_dim != n:
            raise GluingError("collar map has wrong dimensions")
        if self.inverse.domain_dim != n or self.inverse.codomain_dim != n:
            raise GluingError("inverse collar map has wrong dimensions")
        if not self.thickness > 0:
            raise CollarOverlapTooSmall("collar thickness must be positive")
        coords = self.manifold.face_coords(self.face, self.chart)
        if len(coords) != 1:
            raise GluingError(f"face {self.face} must be marked once in chart {self.chart}")

    @property
    def dimension(self) -> int:
        return self.manifold.dimension

    @property
    def face_coord(self) -> int:
        return self.manifold.face_coords(self.face, self.chart)[0]

    @property
    def sigma_model(self) -> CornerModel:
        return self.sigma.charts[self.sigma_chart].model

    @property
    def t_index(self) -> int:
        """Position of ``t`` in collar-chart coordinates."""
        return self.sigma_model.n - self.sigma_model.m

    def to_chart_order(self, values: Sequence) -> list:
        values = list(values)
        sigma, t = values[:-1], values[-1]
        return sigma[: self.t_index] + [t] + sigma[self.t_index :]

    def from_chart_order(self, values: Sequence) -> list:
        values = list(values)
        t = values[self.t_index]
        return values[: self.t_index] + values[self.t_index + 1 :] + [t]

    def collar_model(self) -> CornerModel:
        return CornerModel(self.dimension, self.sigma_model.m)

    def collar_region(self, t_lo, t_hi) -> BoxRegion:
        boxes = []
        for box in self.sigma.charts[self.sigma_chart].region.boxes:
            boxes.append(tuple(self.to_chart_order(list(box) + [(t_lo, t_hi)])))
        return BoxRegion(self.collar_model(), tuple(boxes))

    def collar_chart(self, t_lo=None, t_hi=None, id: str = "collar") -> Chart:
        t_lo = -self.thickness if t_lo is None else t_lo
        t_hi = self.thickness if t_hi is None else t_hi
        return Chart(id, self.collar_model(), self.collar_region(t_lo, t_hi))

    def forward_chart(self, reflect: bool = False) -> SmoothMapTuple:
        """Chart coordinates -> collar-chart coordinates (``t`` negated when ``reflect``)."""
        comps = list(self.forward.components)
        if reflect:
            comps[-1] = -comps[-1]
        return SmoothMapTuple(self.dimension, tuple(self.to_chart_order(comps)))

    def inverse_chart(self, reflect: bool = False) -> SmoothMapTuple:
        """Collar-chart coordinates -> chart coordinates."""
        args = self.from_chart_order([Var(i) for i in range(self.dimension)])
        if reflect:
            args[-1] = -args[-1]
        return SmoothMapTuple(self.dimension, tuple(c.substitute(args) for c in self.inverse.components))


@dataclass(frozen=True, eq=False)
class FaceIdentification:
    """``(M, N, Sigma, f, g)`` with ``f``/``g`` given chartwise: Sigma chart -> (chart id, map)."""

    name: str
    M: AtlasManifold
    N: AtlasManifold
    sigma: AtlasManifold
    face_M: str
    face_N: str
    incl_M: dict[str, tuple[str, SmoothMapTuple]] = field(default_factory=dict)
    incl_N: dict[str, tuple[str, SmoothMapTuple]] = field(default_factory=dict)

    def inclusion(self, side: str, sigma_chart: str) -> tuple[str, SmoothMapTuple]:
        table = self.incl_M if side == "M" else self.incl_N
        if sigma_chart not in table:
            raise GluingError(f"no inclusion of Sigma chart {sigma_chart} into {side}")
        return table[sigma_chart]


def rescale_collar(collar: Collar, lam: SmoothExpr, thickness=None) -> Collar:
    """Precompose with the fibre rescaling ``t -> lam(sigma) t``, ``lam > 0``.

    For constant ``lam`` the thickness scales with it; otherwise the caller
    supplies one (or it is left unchanged and only jet-level use is sound).
    """
    lam = lift(lam)
    n = collar.dimension
    fwd = list(collar.forward.components)
    sigma_fwd = fwd[:-1]
    fwd[-1] = lam.substitute(sigma_fwd) * fwd[-1]
    sigma_vars = [Var(i) for i in range(n - 1)]
    inv_args = sigma_vars + [Var(n - 1) / lam]
    inverse = SmoothMapTuple(n, tuple(c.substitute(inv_args) for c in collar.inverse.components))
    if thickness is None:
        thickness = collar.thickness * lam.value if isinstance(lam, Const) else collar.thickness
    return replace(collar, forward=SmoothMapTuple(n, tuple(fwd)), inverse=inverse, thickness=thickness)


def collar_change(old: Collar, new: Collar) -> SmoothMapTuple:
    """``new.inverse o old.forward``: a diffeomorphism near the face fixing Sigma."""
    if old.manifold is not new.manifold or old.chart != new.chart:
        raise GluingError("collars live in different charts")
    return compose(new.inverse, old.forward)


# -- infinitesimal collar of a Weil point


def collar_jet_of_wpoint(wp: WeilPoint, collar: Collar, tol: float = 0.0) -> WeilPoint:
    """Push a Weil point based on the face through the collar; the ``t`` part is nilpotent."""
    if wp.chart.id != collar.chart:
        raise GluingError(f"Weil point lives in chart {wp.chart.id}, collar in {collar.chart}")
    raw = pushforward(collar.forward, wp)
    t = raw.images[-1].augment()
    if not is_zero_coord(t, tol):
        raise NotOnFace(f"collar coordinate has augmentation {t}")
    ordered = RawWeilMap(raw.algebra, tuple(collar.to_chart_order(raw.images)))
    chart = collar.collar_chart()
    return factorize_through_corner(ordered, chart.model, chart, tol)


def reflect(wp: WeilPoint, collar: Collar) -> WeilPoint:
    i = collar.t_index
    base = list(wp.base)
    nils = list(wp.nilpotents)
    base[i] = -base[i]
    nils[i] = -nils[i]
    return WeilPoint(wp.algebra, wp.chart, tuple(base), tuple(nils))


def wpoints_identified(
    wpM: WeilPoint,
    wpN: WeilPoint,
    fi: FaceIdentification,
    collarM: Collar,
    collarN: Collar,
    tol: float = 0.0,
) -> bool:
    """Whether two face-based Weil points of M and N become the same point of the glued manifold."""
    if collarM.manifold is not fi.M or collarN.manifold is not fi.N:
        raise GluingError("collars do not belong to this face identification")
    if wpM.algebra != wpN.algebra:
        return False
    jM = collar_jet_of_wpoint(wpM, collarM, tol)
    jN = reflect(collar_jet_of_wpoint(wpN, collarN, tol), collarN)
    return jM.isclose(jN, tol)


# -- checks on the gluing data


def _sample_sigma_t(collar: Collar, rng, t_max=None):
    sigma = collar.sigma.charts[collar.sigma_chart].region.sample(rng, face_bias=0.2)
    hi = collar.thickness if t_max is None else t_max
    hi = min(hi, Fraction(4))
    t = Fraction(0) if rng.random() < 0.3 else rational_between(rng, Fraction(0), hi)
    return list(sigma) + [t]


def _jets_close(f: SmoothMapTuple, g: SmoothMapTuple, x, tol, order=2) -> bool:
    series = series_variables(x, order)
    return all(
        series_close(as_series(evaluate(a, series), len(x), order), as_series(evaluate(b, series), len(x), order), tol)
        for a, b in zip(f.components, g.components)
    )


def check_inclusion(fi: FaceIdentification, side: str, rng, samples: int, tol: float) -> CheckResult:
    manifold = fi.M if side == "M" else fi.N
    face = fi.face_M if side == "M" else fi.face_N
    cid = f"{fi.name}/inclusion_{side}"
    anchor = "inclusion lands on the face, injective on samples"
    if fi.sigma.dimension != manifold.dimension - 1:
        return CheckResult(cid, anchor, False, 0, None, "Sigma must have codimension one")
    count = 0
    for s_chart, (m_chart, incl) in sorted((fi.incl_M if side == "M" else fi.incl_N).items()):
        region = fi.sigma.charts[s_chart].region
        chart = manifold.charts[m_chart]
        coords = manifold.face_coords(face, m_chart)
        previous = None
        for _ in range(samples):
            sigma = region.sample(rng, face_bias=0.2)
            x = incl(sigma)
            count += 1
            if not chart.region.contains(x, tol) or not any(is_zero_coord(x[c], tol) for c in coords):
                return CheckResult(cid, anchor, False, count, {"sigma": sigma, "x": x},
                                   "inclusion misses the face")
            if previous is not None and previous[0] != sigma:
                if all(close(a, b, tol) for a, b in zip(previous[1], x)):
                    return CheckResult(cid, anchor, False, count, {"sigma": [previous[0], sigma]},
                                       "inclusion is not injective")
            previous = (sigma, x)
    return CheckResult(cid, anchor, True, count)


def check_collar(fi: FaceIdentification, collar: Collar, side: str, rng, samples: int, tol: float) -> CheckResult:
    cid = f"{fi.name}/collar_{side}"
    anchor = "f(x) = (x, 0) on the face; f^-1 o f = id; f o f^-1 = id"
    manifold = fi.M if side == "M" else fi.N
    face = fi.face_M if side == "M" else fi.face_N
    if collar.manifold is not manifold or collar.face != face:
        return CheckResult(cid, anchor, False, 0, None, "collar is attached to the wrong face")
    count = 0
    m_chart, incl = fi.inclusion(side, collar.sigma_chart)
    if m_chart != collar.chart:
        return CheckResult(cid, anchor, False, 0, None, "collar chart differs from the inclusion chart")
    sigma_region = fi.sigma.charts[collar.sigma_chart].region
    chart_region = manifold.charts[collar.chart].region
    n = collar.dimension
    for _ in range(samples):
        sigma = sigma_region.sample(rng, face_bias=0.2)
        image = collar.forward(incl(sigma))
        count += 1
        if not all(close(a, b, tol) for a, b in zip(image, list(sigma) + [0])):
            return CheckResult(cid, anchor, False, count, {"sigma": sigma, "f(x)": image},
                               "collar does not restrict to x -> (x, 0) on the face")
    identity = SmoothMapTuple.identity(n)
    there_and_back = compose(collar.inverse, collar.forward)
    back_and_there = compose(collar.forward, collar.inverse)
    for _ in range(samples):
        x = collar.region.sample(rng, face_bias=0.3)
        y = collar.forward(x)
        count += 1
        sigma, t = y[:-1], y[-1]
        inside = (
            sigma_region.contains(sigma, tol)
            and (t >= 0 or is_zero_coord(t, tol))
            and t < collar.thickness
        )
        if not inside:
            return CheckResult(cid, anchor, False, count, {"x": x, "f(x)": y},
                               "collar image leaves Sigma x [0, thickness)")
        if not _jets_close(there_and_back, identity, x, tol):
            return CheckResult(cid, anchor, False, count, {"x": x}, "inverse o collar != id")
    for _ in range(samples):
        st = _sample_sigma_t(collar, rng)
        x = collar.inverse(st)
        count += 1
        if not collar.region.contains(x, tol) or not chart_region.contains(x, tol):
            return CheckResult(cid, anchor, False, count, {"(sigma,t)": st, "x": x},
                               "inverse collar leaves the collar region")
        if not _jets_close(back_and_there, identity, st, tol):
            return CheckResult(cid, anchor, False, count, {"(sigma,t)": st}, "collar o inverse != id")
    return CheckResult(cid, anchor, True, count)


def check_gluable(
    fi: FaceIdentification, collarM: Collar, collarN: Collar, rng, samples: int = 50, tol: float = 0.0
) -> list[CheckResult]:
    """Both collars trivialize the normal bundles; face matching and collar invariants on samples."""
    return [
        check_inclusion(fi, "M", rng, samples, tol),
        check_inclusion(fi, "N", rng, samples, tol),
        check_collar(fi, collarM, "M", rng, samples, tol),
        check_collar(fi, collarN, "N", rng, samples, tol),
    ]


# -- the glued atlas


@dataclass(eq=False)
class GluedManifold:
    atlas: AtlasManifold
    fi: FaceIdentification
    collar_M: Collar
    collar_N: Collar
    collar_chart: str
    m_charts: dict[str, str]
    n_charts: dict[str, str]

    @property
    def inclusion_M(self) -> SmoothMapTuple:
        """Collar chart of M -> collar chart of the glued manifold (defined on the face too)."""
        return self.collar_M.forward_chart()

    @property
    def inclusion_N(self) -> SmoothMapTuple:
        return self.collar_N.forward_chart(reflect=True)

    def chart(self, cid: str) -> Chart:
        return self.atlas.charts[cid]


def _cover_check(collar: Collar):
    chart_region = collar.manifold.charts[collar.chart].region
    fc = collar.face_coord
    for box in chart_region.nonempty_boxes():
        if not box[fc][0] < 0:
            continue
        covered = any(
            ubox[fc][0] < 0 < ubox[fc][1]
            and all(ubox[p][0] <= box[p][0] and box[p][1] <= ubox[p][1] for p in range(len(box)) if p != fc)
            for ubox in collar.region.nonempty_boxes()
        )
        if not covered:
            raise CollarOverlapTooSmall(
                f"collar region of {collar.manifold.name} does not cover the face in chart {collar.chart}"
            )
    for cid in collar.manifold.charts:
        if cid != collar.chart and collar.manifold.face_coords(collar.face, cid):
            raise GluingError(f"face {collar.face} must lie in the single chart {collar.chart}")
        t = collar.manifold.transitions.get((collar.chart, cid))
        if cid != collar.chart and t is not None and not t.domain.intersect(collar.region).is_empty():
            raise GluingError(f"chart {cid} meets the collar region; collars must lie in one chart")


def glue(fi: FaceIdentification, collarM: Collar, collarN: Collar, collar_chart: str = "collar") -> GluedManifold:
    """Atlas of ``M u_Sigma N`` from charts of ``M - Sigma``, ``N - Sigma`` and ``Sigma x R``."""
    if collarM.sigma_chart != collarN.sigma_chart:
        raise GluingError("both collars must use the same chart of Sigma")
    _cover_check(collarM)
    _cover_check(collarN)

    charts: dict[str, Chart] = {}
    transitions: dict[tuple[str, str], Transition] = {}
    faces: dict[str, tuple] = {}
    names: dict[str, dict[str, str]] = {"M": {}, "N": {}}
    n = fi.M.dimension

    for side, manifold, face in (("M", fi.M, fi.face_M), ("N", fi.N, fi.face_N)):
        for cid, chart in manifold.charts.items():
            region = chart.region
            for c in manifold.face_coords(face, cid):
                region = region.restrict(c, Fraction(0), INF)
            if region.is_empty():
                continue
            new_id = f"{side}:{cid}"
            names[side][cid] = new_id
            charts[new_id] = Chart(new_id, chart.model, region)
        for (i, j), t in manifold.transitions.items():
            if i in names[side] and j in names[side]:
                domain = t.domain.intersect(charts[names[side][i]].region)
                transitions[(names[side][i], names[side][j])] = Transition(
                    names[side][i], names[side][j], domain, t.map
                )
        for fname, marks in manifold.faces.items():
            if fname == face:
                continue
            faces[f"{side}:{fname}"] = tuple((names[side][cid], c) for cid, c in marks if cid in names[side])

    collar_t = collarM.t_index
    charts[collar_chart] = collarM.collar_chart(-collarN.thickness, collarM.thickness, collar_chart)
    collar_region = charts[collar_chart].region
    for side, collar in (("M", collarM), ("N", collarN)):
        reflect_side = side == "N"
        cid = names[side].get(collar.chart)
        if cid is None:
            raise CollarOverlapTooSmall(f"collar chart {collar.chart} vanishes once the face is removed")
        off_face = collar.region.restrict(collar.face_coord, Fraction(0), INF)
        transitions[(cid, collar_chart)] = Transition(cid, collar_chart, off_face, collar.forward_chart(reflect_side))
        if reflect_side:
            domain = collar_region.restrict(collar_t, -collar.thickness, Fraction(0))
        else:
            domain = collar_region.restrict(collar_t, Fraction(0), collar.thickness)
        transitions[(collar_chart, cid)] = Transition(collar_chart, cid, domain, collar.inverse_chart(reflect_side))

    atlas = AtlasManifold(f"{fi.M.name} u_{fi.sigma.name} {fi.N.name}", charts, transitions, faces)
    if atlas.dimension != n:
        raise GluingError("glued atlas has the wrong dimension")
    return GluedManifold(atlas, fi, collarM, collarN, collar_chart, names["M"], names["N"])


# -- classification of Weil points of the glued manifold


@dataclass
class Classification:
    side: str  # "M-interior" | "N-interior" | "face"
    point: WeilPoint
    preimage_M: WeilPoint | None = None
    preimage_N: WeilPoint | None = None

    @property
    def jet(self) -> WeilPoint | None:
        return self.point if self.side == "face" else None


def _pull_back(glued: GluedManifold, side: str, wp: WeilPoint, tol: float) -> WeilPoint:
    collar = glued.collar_M if side == "M" else glued.collar_N
    manifold = glued.fi.M if side == "M" else glued.fi.N
    chart = manifold.charts[collar.chart]
    raw = pushforward(collar.inverse_chart(reflect=side == "N"), wp)
    return factorize_through_corner(raw, chart.model, chart, tol)


def wpoint_classify(wp: WeilPoint, glued: GluedManifold, tol: float = 0.0) -> Classification:
    """Which piece of the pushout a Weil point of the glued manifold comes from."""
    cid = wp.chart.id
    for side, table, manifold in (("M", glued.m_charts, glued.fi.M), ("N", glued.n_charts, glued.fi.N)):
        for orig, new in table.items():
            if new == cid:
                pre = WeilPoint(wp.algebra, manifold.charts[orig], wp.base, wp.nilpotents)
                return Classification(f"{side}-interior", wp, **{f"preimage_{side}": pre})
    if cid != glued.collar_chart:
        raise GluingError(f"unknown chart {cid}")
    t = wp.base[glued.collar_M.t_index]
    if is_zero_coord(t, tol):
        return Classification(
            "face", wp, _pull_back(glued, "M", wp, tol), _pull_back(glued, "N", wp, tol)
        )
    if t > 0:
        return Classification("M-interior", wp, preimage_M=_pull_back(glued, "M", wp, tol))
    return Classification("N-interior", wp, preimage_N=_pull_back(glued, "N", wp, tol))


def face_wpoint(
    fi: FaceIdentification, collar: Collar, side: str, w: WeilAlgebra, sigma: Sequence, nilpotents
) -> WeilPoint:
    """The Weil point of M (or N) based at the image of ``sigma``, with given nilpotent parts."""
    m_chart, incl = fi.inclusion(side, collar.sigma_chart)
    manifold = fi.M if side == "M" else fi.N
    return WeilPoint(w, manifold.charts[m_chart], tuple(incl(sigma)), tuple(nilpotents))


def matching_wpoint(wpM: WeilPoint, glued: GluedManifold, tol: float = 0.0) -> WeilPoint:
    """The Weil point of N identified with ``wpM``: pull its collar jet back through the N collar."""
    jet = collar_jet_of_wpoint(wpM, glued.collar_M, tol)
    return _pull_back(glued, "N", jet, tol)
