"""Weil points, the corner factorization criterion and Weil prolongation.

A Weil point of a chart on ``H^n_m`` is a base point together with one
nilpotent element of ``W`` per coordinate.  Prolonged charts live on
``H^(n*dim W)_m`` with coordinates laid out as::

    [free base coords (n-m) | nilpotent coefficients (n*(dim W - 1)) | constrained base coords (m)]

so that the constrained coordinates stay last, as the corner model requires.
Inside the nilpotent block, coordinate ``i`` owns a contiguous run of
``dim W - 1`` coefficients in the algebra's basis order.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .corners import INF, AtlasManifold, BoxRegion, Chart, CornerModel, Transition
from .report import CheckResult
from .smoothexpr import DimensionMismatch, SmoothMapTuple, Var, evaluate
from .weil import WeilAlgebra, WeilElement, close, is_zero, tensor, tensor_element


class OutsideCorner(ValueError):
    def __init__(self, coordinate: int, value=None):
        self.coordinate = coordinate  # 0-based index
        self.position = coordinate + 1  # 1-based, as in x_1..x_n
        self.value = value
        super().__init__(f"coordinate x_{self.position} is constrained but has base value {value}")


class OutsideChart(ValueError):
    pass


def _as_element(w: WeilAlgebra, value) -> WeilElement:
    if isinstance(value, WeilElement):
        return value
    return w.scalar(value)


@dataclass(frozen=True)
class RawWeilMap:
    """Images of the coordinate functions under an algebra map ``C(R^n) -> W``; base unconstrained."""

    algebra: WeilAlgebra
    images: tuple[WeilElement, ...]

    def __post_init__(self):
        images = tuple(_as_element(self.algebra, v) for v in self.images)
        for img in images:
            if img.parent != self.algebra:
                raise ValueError("image outside the declared algebra")
        object.__setattr__(self, "images", images)

    @property
    def codomain_dim(self) -> int:
        return len(self.images)

    def bases(self) -> tuple:
        return tuple(img.augment() for img in self.images)

    def isclose(self, other: RawWeilMap, tol: float = 1e-9) -> bool:
        return (
            self.algebra == other.algebra
            and self.codomain_dim == other.codomain_dim
            and all(a.isclose(b, tol) for a, b in zip(self.images, other.images))
        )


@dataclass(frozen=True)
class WeilPoint:
    algebra: WeilAlgebra
    chart: Chart
    base: tuple
    nilpotents: tuple[WeilElement, ...]

    def __post_init__(self):
        n = self.chart.model.n
        if len(self.base) != n or len(self.nilpotents) != n:
            raise DimensionMismatch(f"Weil point needs {n} base values and {n} nilpotents")
        for i, nil in enumerate(self.nilpotents):
            if nil.parent != self.algebra:
                raise ValueError("nilpotent outside the declared algebra")
            if not is_zero(nil.augment()):
                raise ValueError(f"nilpotent {i} has nonzero augmentation")
        if not self.chart.model.contains(self.base):
            raise OutsideCorner(
                next(i for i in self.chart.model.constrained if self.base[i] < 0),
                None,
            )

    def elements(self) -> list[WeilElement]:
        """The images ``x_i + x~_i`` of the coordinate functions."""
        return [nil + b for nil, b in zip(self.nilpotents, self.base)]

    def raw(self) -> RawWeilMap:
        return RawWeilMap(self.algebra, tuple(self.elements()))

    def coordinates(self) -> tuple:
        """Coordinates of this point in the prolonged chart."""
        layout = ProlongLayout(self.chart.model, self.algebra)
        out = [Fraction(0)] * layout.size
        for i, (b, nil) in enumerate(zip(self.base, self.nilpotents)):
            out[layout.base_index(i)] = b
            for k in range(1, self.algebra.dimension):
                out[layout.nil_index(i, k)] = nil.coeffs[k]
        return tuple(out)

    @property
    def free_scalars(self) -> int:
        return self.chart.model.n * (self.algebra.dimension - 1)

    def isclose(self, other: WeilPoint, tol: float = 1e-9) -> bool:
        return (
            self.algebra == other.algebra
            and len(self.base) == len(other.base)
            and all(close(a, b, tol) for a, b in zip(self.base, other.base))
            and all(a.isclose(b, tol) for a, b in zip(self.nilpotents, other.nilpotents))
        )


@dataclass(frozen=True)
class ProlongLayout:
    model: CornerModel
    algebra: WeilAlgebra

    @property
    def k(self) -> int:
        return self.algebra.dimension - 1

    @property
    def size(self) -> int:
        return self.model.n * self.algebra.dimension

    def base_index(self, i: int) -> int:
        free = self.model.n - self.model.m
        if i < free:
            return i
        return free + self.model.n * self.k + (i - free)

    def nil_index(self, i: int, b: int) -> int:
        """Position of the coefficient of basis element ``b >= 1`` of coordinate ``i``."""
        return self.model.n - self.model.m + i * self.k + (b - 1)

    def prolonged_model(self) -> CornerModel:
        return CornerModel(self.size, self.model.m)

    def prolong_region(self, region: BoxRegion) -> BoxRegion:
        boxes = []
        for box in region.boxes:
            new = [(-INF, INF)] * self.size
            for i, bounds in enumerate(box):
                new[self.base_index(i)] = bounds
            boxes.append(tuple(new))
        return BoxRegion(self.prolonged_model(), tuple(boxes))

    def point_from_coordinates(self, chart: Chart, coords: Sequence) -> WeilPoint:
        w = self.algebra
        base, nils = [], []
        for i in range(self.model.n):
            base.append(coords[self.base_index(i)])
            c = [Fraction(0)] + [coords[self.nil_index(i, b)] for b in range(1, w.dimension)]
            nils.append(w.element(c))
        return WeilPoint(w, chart, tuple(base), tuple(nils))

    def base_projection(self) -> SmoothMapTuple:
        return SmoothMapTuple(self.size, tuple(Var(self.base_index(i)) for i in range(self.model.n)))


def factorize_through_corner(
    raw: RawWeilMap, model: CornerModel, chart: Chart | None = None, tol: float = 0.0
) -> WeilPoint:
    """Turn a raw map into a Weil point of ``model`` iff every constrained base is ``>= 0``.

    Bases within ``tol`` below zero are snapped to zero (float mode only).
    """
    if raw.codomain_dim != model.n:
        raise DimensionMismatch(f"{raw.codomain_dim} images for {model}")
    chart = chart or Chart.whole(model)
    if chart.model != model:
        raise ValueError("chart lives on a different model")
    base = list(raw.bases())
    for i in model.constrained:
        if base[i] < 0:
            if isinstance(base[i], float) and base[i] >= -tol:
                base[i] = 0.0
            else:
                raise OutsideCorner(i, base[i])
    if chart.region is not None and not chart.region.contains(base, tol):
        raise OutsideChart(f"base {tuple(base)} is outside chart {chart.id}")
    nils = tuple(img.nilpotent_part() for img in raw.images)
    return WeilPoint(raw.algebra, chart, tuple(base), nils)


def prolong_chart(chart: Chart, w: WeilAlgebra) -> Chart:
    layout = ProlongLayout(chart.model, w)
    return Chart(chart.id, layout.prolonged_model(), layout.prolong_region(chart.region))


def pushforward(f: SmoothMapTuple, wp: WeilPoint | RawWeilMap) -> RawWeilMap:
    """Jet of ``f`` at a Weil point: ``f_i`` evaluated on the coordinate images."""
    if isinstance(wp, WeilPoint):
        elements, w = wp.elements(), wp.algebra
    else:
        elements, w = list(wp.images), wp.algebra
    if f.domain_dim != len(elements):
        raise DimensionMismatch(f"map on R^{f.domain_dim} applied to a {len(elements)}-point")
    return RawWeilMap(w, tuple(_as_element(w, evaluate(c, elements)) for c in f.components))


def prolong_map(f: SmoothMapTuple, source: CornerModel, target: CornerModel, w: WeilAlgebra) -> SmoothMapTuple:
    """Materialize ``T^W f`` in prolonged coordinates (polynomial in the nilpotent block)."""
    lin, lout = ProlongLayout(source, w), ProlongLayout(target, w)
    if f.domain_dim != source.n or f.codomain_dim != target.n:
        raise DimensionMismatch("map does not match the given models")
    inputs = []
    for i in range(source.n):
        coeffs = [Var(lin.base_index(i))] + [Var(lin.nil_index(i, b)) for b in range(1, w.dimension)]
        inputs.append(WeilElement(w, coeffs))
    out = [None] * lout.size
    for q, comp in enumerate(f.components):
        value = _as_element(w, evaluate(comp, inputs))
        out[lout.base_index(q)] = value.coeffs[0]
        for b in range(1, w.dimension):
            out[lout.nil_index(q, b)] = value.coeffs[b]
    return SmoothMapTuple(lin.size, tuple(out))


def prolong_atlas(atlas: AtlasManifold, w: WeilAlgebra) -> AtlasManifold:
    charts = {cid: prolong_chart(c, w) for cid, c in atlas.charts.items()}
    transitions = {}
    for (i, j), t in atlas.transitions.items():
        src, tgt = atlas.charts[i].model, atlas.charts[j].model
        transitions[(i, j)] = Transition(
            i, j, ProlongLayout(src, w).prolong_region(t.domain), prolong_map(t.map, src, tgt, w)
        )
    faces = {
        name: tuple((cid, ProlongLayout(atlas.charts[cid].model, w).base_index(c)) for cid, c in marks)
        for name, marks in atlas.faces.items()
    }
    return AtlasManifold(f"T^W({atlas.name})", charts, transitions, faces)


def check_prolonged_atlas(atlas: AtlasManifold, w: WeilAlgebra, rng, samples: int, tol: float) -> CheckResult:
    """Materialized prolonged transitions agree with jet propagation and commute with projection."""
    prolonged = prolong_atlas(atlas, w)
    count = 0
    anchor = "prolonged transitions = jets of transitions; projection commutes"
    for (i, j), t in sorted(prolonged.transitions.items()):
        if t.domain.is_empty():
            continue
        src, tgt = atlas.charts[i], atlas.charts[j]
        lin, lout = ProlongLayout(src.model, w), ProlongLayout(tgt.model, w)
        base_t = atlas.transition(i, j)
        for _ in range(samples):
            coords = t.domain.sample(rng, face_bias=0.3)
            wp = lin.point_from_coordinates(src, coords)
            image = t.map(coords)
            direct = pushforward(base_t.map, wp)
            count += 1
            projected = lout.base_projection()(image)
            expected_coords = [Fraction(0)] * lout.size
            for q, img in enumerate(direct.images):
                expected_coords[lout.base_index(q)] = img.coeffs[0]
                for b in range(1, w.dimension):
                    expected_coords[lout.nil_index(q, b)] = img.coeffs[b]
            ok = all(close(a, b, tol) for a, b in zip(image, expected_coords))
            ok = ok and all(close(a, b, tol) for a, b in zip(projected, base_t.map(wp.base)))
            if not ok:
                return CheckResult(f"{atlas.name}/prolonged_transitions", anchor, False, count,
                                   {"transition": f"{i}->{j}", "coords": coords},
                                   "prolonged transition disagrees with jet propagation")
    return CheckResult(f"{atlas.name}/prolonged_transitions", anchor, True, count)


# -- exponential law at the level of points


def split_tensor(alpha: WeilElement, a: WeilAlgebra, w: WeilAlgebra) -> list[WeilElement]:
    """Coefficients ``a_b`` in ``A`` with ``alpha = sum_b a_b (x) eta_b`` over the basis of ``W``."""
    ga = a.generator_count
    parts = [dict() for _ in w.basis]
    for mono, c in alpha.terms().items():
        parts[w.index[mono[ga:]]][mono[:ga]] = c
    return [a.element(p) for p in parts]


def join_tensor(parts: Sequence[WeilElement], a: WeilAlgebra, w: WeilAlgebra) -> WeilElement:
    aw = tensor(a, w)
    out = aw.zero()
    for part, mono in zip(parts, w.basis):
        out = out + tensor_element(part, w.monomial(mono), aw)
    return out


def exponential_split(raw: RawWeilMap, a: WeilAlgebra, w: WeilAlgebra, model: CornerModel) -> RawWeilMap:
    """``C(H^n_m) -> A (x) W`` data as ``C(T^W H^n_m) -> A`` data: ``beta_ij = a_ij``."""
    layout = ProlongLayout(model, w)
    images = [None] * layout.size
    for i, alpha in enumerate(raw.images):
        parts = split_tensor(alpha, a, w)
        images[layout.base_index(i)] = parts[0]
        for b in range(1, w.dimension):
            images[layout.nil_index(i, b)] = parts[b]
    return RawWeilMap(a, tuple(images))


def exponential_join(beta: RawWeilMap, a: WeilAlgebra, w: WeilAlgebra, model: CornerModel) -> RawWeilMap:
    layout = ProlongLayout(model, w)
    images = []
    for i in range(model.n):
        parts = [beta.images[layout.base_index(i)]] + [
            beta.images[layout.nil_index(i, b)] for b in range(1, w.dimension)
        ]
        images.append(join_tensor(parts, a, w))
    return RawWeilMap(tensor(a, w), tuple(images))


@dataclass
class ExponentialReport:
    alpha_round_trip: bool
    beta_round_trip: bool
    factorizes_tensor_side: bool
    factorizes_prolonged_side: bool

    @property
    def corner_condition_agrees(self) -> bool:
        return self.factorizes_tensor_side == self.factorizes_prolonged_side

    @property
    def ok(self) -> bool:
        return self.alpha_round_trip and self.beta_round_trip and self.corner_condition_agrees


def _factorizes(raw: RawWeilMap, model: CornerModel) -> bool:
    try:
        factorize_through_corner(raw, model)
    except OutsideCorner:
        return False
    return True


def exponential_bijection_check(
    raw: RawWeilMap, model: CornerModel, a: WeilAlgebra, w: WeilAlgebra
) -> ExponentialReport:
    """Round-trip ``A (x) W``-points of ``H^n_m`` through ``A``-points of ``T^W H^n_m``."""
    if raw.algebra != tensor(a, w):
        raise ValueError("raw map must take values in A (x) W")
    beta = exponential_split(raw, a, w, model)
    alpha_back = exponential_join(beta, a, w, model)
    beta_back = exponential_split(alpha_back, a, w, model)
    return ExponentialReport(
        alpha_round_trip=alpha_back.images == raw.images,
        beta_round_trip=beta_back.images == beta.images,
        factorizes_tensor_side=_factorizes(raw, model),
        factorizes_prolonged_side=_factorizes(beta, ProlongLayout(model, w).prolonged_model()),
    )
