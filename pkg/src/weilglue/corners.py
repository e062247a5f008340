"""Corner models, box-union regions, charts and atlases of manifolds with corners.

``H^n_m = R^(n-m) x [0, inf)^m``: the last ``m`` coordinates are the
constrained (corner) ones.  Open sets are finite unions of open boxes with
rational or infinite bounds, intersected with the model, so a box with lower
bound below zero in a constrained coordinate reaches the face ``x_i = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .report import CheckResult
from .sampling import rational_between
from .smoothexpr import SmoothMapTuple, Var, as_series, evaluate, series_close, series_variables
from .weil import close, matrix_rank

INF = math.inf


class OutsideModel(ValueError):
    pass


def parse_bound(value) -> Fraction | float:
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, float):
        return value if math.isinf(value) else Fraction(value)
    text = str(value).strip().lower()
    if text in ("inf", "+inf", "infinity"):
        return INF
    if text in ("-inf", "-infinity"):
        return -INF
    return Fraction(text)


def format_bound(value) -> str:
    if value == INF:
        return "inf"
    if value == -INF:
        return "-inf"
    return str(value)


def is_zero_coord(x, tol: float = 0.0) -> bool:
    if isinstance(x, (int, Fraction)):
        return x == 0
    return abs(x) <= tol


@dataclass(frozen=True)
class CornerModel:
    n: int
    m: int

    def __post_init__(self):
        if not 0 <= self.m <= self.n:
            raise ValueError(f"need 0 <= m <= n, got n={self.n}, m={self.m}")

    @property
    def constrained(self) -> range:
        return range(self.n - self.m, self.n)

    def is_constrained(self, i: int) -> bool:
        return i >= self.n - self.m

    def contains(self, x: Sequence, tol: float = 0.0) -> bool:
        return len(x) == self.n and all(x[i] >= -tol for i in self.constrained)

    def __str__(self):
        return f"H^{self.n}_{self.m}"


def depth(model: CornerModel, x: Sequence, tol: float = 0.0) -> int:
    """Number of constrained coordinates of ``x`` that vanish."""
    if len(x) != model.n:
        raise OutsideModel(f"{len(x)}-point in {model}")
    for i in model.constrained:
        if x[i] < 0 and not is_zero_coord(x[i], tol):
            raise OutsideModel(f"coordinate {i} is negative in {model}")
    return sum(1 for i in model.constrained if is_zero_coord(x[i], tol))


def stratum_member(model: CornerModel, x: Sequence, k: int, tol: float = 0.0) -> bool:
    return depth(model, x, tol) == k


def squaring_map(model: CornerModel) -> SmoothMapTuple:
    """``(p, q_1..q_m) -> (p, q_1^2..q_m^2)``, a surjection ``R^n -> H^n_m``."""
    comps = [Var(i) ** 2 if model.is_constrained(i) else Var(i) for i in range(model.n)]
    return SmoothMapTuple(model.n, tuple(comps))


Box = tuple[tuple[object, object], ...]


@dataclass(frozen=True)
class BoxRegion:
    model: CornerModel
    boxes: tuple[Box, ...]

    def __post_init__(self):
        boxes = tuple(tuple((parse_bound(lo), parse_bound(hi)) for lo, hi in box) for box in self.boxes)
        for box in boxes:
            if len(box) != self.model.n:
                raise ValueError(f"box of dimension {len(box)} in {self.model}")
        object.__setattr__(self, "boxes", boxes)

    @classmethod
    def whole(cls, model: CornerModel) -> BoxRegion:
        return cls(model, (((-INF, INF),) * model.n,))

    def _box_nonempty(self, box: Box) -> bool:
        for i, (lo, hi) in enumerate(box):
            if not lo < hi:
                return False
            if self.model.is_constrained(i) and not hi > 0:
                return False
        return True

    def nonempty_boxes(self) -> list[Box]:
        return [b for b in self.boxes if self._box_nonempty(b)]

    def is_empty(self) -> bool:
        return not self.nonempty_boxes()

    def contains(self, x: Sequence, tol: float = 0.0) -> bool:
        if not self.model.contains(x, tol):
            return False
        for box in self.nonempty_boxes():
            if all(lo - tol < xi < hi + tol for xi, (lo, hi) in zip(x, box)):
                return True
        return False

    def intersect(self, other: BoxRegion) -> BoxRegion:
        if other.model != self.model:
            raise ValueError("regions live in different models")
        out = []
        for a in self.nonempty_boxes():
            for b in other.nonempty_boxes():
                box = tuple((max(la, lb), min(ha, hb)) for (la, ha), (lb, hb) in zip(a, b))
                if self._box_nonempty(box):
                    out.append(box)
        return BoxRegion(self.model, tuple(out))

    def restrict(self, coord: int, lo=-INF, hi=INF) -> BoxRegion:
        slab = tuple((lo, hi) if i == coord else (-INF, INF) for i in range(self.model.n))
        return self.intersect(BoxRegion(self.model, (slab,)))

    def minimal_boxes(self) -> list[Box]:
        """Nonempty boxes with those contained in another box dropped."""
        boxes = list(dict.fromkeys(self.nonempty_boxes()))
        keep = []
        for i, a in enumerate(boxes):
            inside = any(
                j != i and all(lb <= la and ha <= hb for (la, ha), (lb, hb) in zip(a, b))
                for j, b in enumerate(boxes)
            )
            if not inside:
                keep.append(a)
        return keep

    def is_single_box(self) -> bool:
        return len(self.minimal_boxes()) == 1

    def reaches_face(self, coord: int) -> bool:
        return any(box[coord][0] < 0 < box[coord][1] for box in self.nonempty_boxes())

    def witness(self):
        boxes = self.nonempty_boxes()
        if not boxes:
            return None
        return tuple(_interior_value(lo, hi, self.model.is_constrained(i), Fraction(1, 2))
                     for i, (lo, hi) in enumerate(boxes[0]))

    def sample(self, rng: np.random.Generator, face_bias: float = 0.0) -> tuple:
        """Rational point of the region; constrained coordinates hit ``0`` with prob. ``face_bias``."""
        boxes = self.nonempty_boxes()
        if not boxes:
            raise ValueError("cannot sample an empty region")
        box = boxes[int(rng.integers(len(boxes)))]
        point = []
        for i, (lo, hi) in enumerate(box):
            constrained = self.model.is_constrained(i)
            if constrained and lo < 0 and face_bias > 0 and rng.random() < face_bias:
                point.append(Fraction(0))
                continue
            a, b = _finite_range(lo, hi, constrained)
            point.append(rational_between(rng, a, b))
        return tuple(point)

    def to_data(self) -> list:
        return [[[format_bound(lo), format_bound(hi)] for lo, hi in box] for box in self.boxes]


def _finite_range(lo, hi, constrained: bool):
    if constrained:
        lo = max(lo, Fraction(0))
    if lo == -INF and hi == INF:
        return Fraction(-2), Fraction(2)
    if lo == -INF:
        return hi - 4, hi
    if hi == INF:
        return lo, lo + 4
    return lo, hi


def _interior_value(lo, hi, constrained, t):
    a, b = _finite_range(lo, hi, constrained)
    return a + (b - a) * t


@dataclass(frozen=True)
class Chart:
    id: str
    model: CornerModel
    region: BoxRegion

    def __post_init__(self):
        if self.region.model != self.model:
            raise ValueError(f"chart {self.id}: region model differs from chart model")

    @classmethod
    def whole(cls, model: CornerModel, id: str = "model") -> Chart:
        return cls(id, model, BoxRegion.whole(model))


@dataclass(frozen=True)
class Transition:
    """Coordinate change from chart ``source`` to ``target`` on ``domain`` (source coordinates)."""

    source: str
    target: str
    domain: BoxRegion
    map: SmoothMapTuple


@dataclass
class AtlasManifold:
    name: str
    charts: dict[str, Chart]
    transitions: dict[tuple[str, str], Transition] = field(default_factory=dict)
    faces: dict[str, tuple[tuple[str, int], ...]] = field(default_factory=dict)

    def __post_init__(self):
        dims = {c.model.n for c in self.charts.values()}
        if len(dims) > 1:
            raise ValueError(f"{self.name}: charts of different dimensions {sorted(dims)}")
        for (i, j), t in self.transitions.items():
            if i not in self.charts or j not in self.charts:
                raise ValueError(f"{self.name}: transition {i}->{j} names an unknown chart")
            if t.map.domain_dim != self.dimension or t.map.codomain_dim != self.dimension:
                raise ValueError(f"{self.name}: transition {i}->{j} has wrong dimensions")
        for face, marks in self.faces.items():
            for chart_id, coord in marks:
                chart = self.charts.get(chart_id)
                if chart is None or not chart.model.is_constrained(coord):
                    raise ValueError(f"{self.name}: face {face} marks ({chart_id}, {coord})")

    @property
    def dimension(self) -> int:
        return next(iter(self.charts.values())).model.n if self.charts else 0

    def transition(self, i: str, j: str) -> Transition | None:
        if (i, j) in self.transitions:
            return self.transitions[(i, j)]
        if i == j:
            c = self.charts[i]
            return Transition(i, i, c.region, SmoothMapTuple.identity(c.model.n))
        return None

    def face_coords(self, face: str, chart_id: str) -> list[int]:
        return [c for cid, c in self.faces.get(face, ()) if cid == chart_id]


# -- atlas checks


def good_cover_check(atlas: AtlasManifold) -> CheckResult:
    """Every declared overlap is empty or a single box."""
    bad = []
    for (i, j), t in sorted(atlas.transitions.items()):
        if i == j:
            continue
        if not t.domain.is_empty() and not t.domain.is_single_box():
            bad.append({"transition": f"{i}->{j}", "boxes": len(t.domain.minimal_boxes())})
    return CheckResult(
        f"{atlas.name}/good_cover",
        "every pairwise intersection is either empty or basic",
        not bad,
        samples=len(atlas.transitions),
        witness=bad or None,
        detail="overlaps that are not a single box" if bad else "",
    )


def _point_close(a, b, tol):
    return len(a) == len(b) and all(close(x, y, tol) for x, y in zip(a, b))


def check_identity_transitions(atlas: AtlasManifold, rng, samples: int, tol: float) -> CheckResult:
    count = 0
    for i in sorted(atlas.charts):
        t = atlas.transition(i, i)
        if t.domain.is_empty():
            continue
        for _ in range(samples):
            x = t.domain.sample(rng, face_bias=0.3)
            count += 1
            if not _point_close(t.map(x), x, tol):
                return CheckResult(f"{atlas.name}/identity", "tau_ii = id", False, count,
                                   {"chart": i, "x": x}, "self-transition is not the identity")
    return CheckResult(f"{atlas.name}/identity", "tau_ii = id", True, count)


def _triples(atlas: AtlasManifold):
    for (i, j) in sorted(atlas.transitions):
        if i == j:
            continue
        for k in atlas.charts:
            if k == j:
                continue
            if atlas.transition(j, k) is None or atlas.transition(i, k) is None:
                continue
            yield i, j, k


def check_cocycle(atlas: AtlasManifold, rng, samples: int, tol: float, order: int = 2) -> CheckResult:
    """``tau_kj o tau_ji = tau_ki`` on triple overlaps, as jets of order ``order``."""
    count = 0
    anchor = "transition maps compose (cocycle), compared as order-2 jets"
    for i, j, k in _triples(atlas):
        t_ji, t_kj, t_ki = atlas.transition(i, j), atlas.transition(j, k), atlas.transition(i, k)
        domain = t_ji.domain.intersect(t_ki.domain)
        if domain.is_empty():
            continue
        found = 0
        for _ in range(20 * samples):
            if found >= samples:
                break
            x = domain.sample(rng, face_bias=0.3)
            y = t_ji.map(x)
            if not t_kj.domain.contains(y, tol):
                continue
            found += 1
            series = series_variables(x, order)
            via_j = [evaluate(c, [evaluate(c1, series) for c1 in t_ji.map.components])
                     for c in t_kj.map.components]
            direct = [evaluate(c, series) for c in t_ki.map.components]
            for a, b in zip(via_j, direct):
                if not _series_pair_close(a, b, len(x), order, tol):
                    return CheckResult(f"{atlas.name}/cocycle", anchor, False, count + found,
                                       {"triple": [i, j, k], "x": x}, "cocycle jets differ")
        count += found
    return CheckResult(f"{atlas.name}/cocycle", anchor, True, count)


def _series_pair_close(a, b, nvars, order, tol):
    return series_close(as_series(a, nvars, order), as_series(b, nvars, order), tol)


def check_depth_invariance(atlas: AtlasManifold, rng, samples: int, tol: float) -> CheckResult:
    """Transitions land in the target chart and preserve depth."""
    count = 0
    anchor = "depth(tau(x)) = depth(x)"
    for (i, j), t in sorted(atlas.transitions.items()):
        if t.domain.is_empty():
            continue
        src, tgt = atlas.charts[i], atlas.charts[j]
        for _ in range(samples):
            x = t.domain.sample(rng, face_bias=0.5)
            y = t.map(x)
            count += 1
            ok = tgt.region.contains(y, tol)
            if ok:
                ok = depth(src.model, x, tol) == depth(tgt.model, y, tol)
            if not ok:
                return CheckResult(f"{atlas.name}/depth", anchor, False, count,
                                   {"transition": f"{i}->{j}", "x": x, "y": y},
                                   "transition leaves the target chart or changes depth")
    return CheckResult(f"{atlas.name}/depth", anchor, True, count)


def check_faces(atlas: AtlasManifold, rng, samples: int, tol: float) -> CheckResult:
    """Face markings are carried to face markings of the same name by transitions."""
    count = 0
    anchor = "transitions carry face marks to marks of the same face"
    for face, marks in sorted(atlas.faces.items()):
        for (i, j), t in sorted(atlas.transitions.items()):
            coords_i = [c for cid, c in marks if cid == i]
            coords_j = [c for cid, c in marks if cid == j]
            if not coords_i or not coords_j:
                continue
            for c in coords_i:
                if not t.domain.reaches_face(c):
                    continue
                for _ in range(samples):
                    x = list(t.domain.sample(rng))
                    x[c] = Fraction(0)
                    x = tuple(x)
                    if not t.domain.contains(x, tol):
                        continue
                    y = t.map(x)
                    count += 1
                    if not any(is_zero_coord(y[cj], tol) for cj in coords_j):
                        return CheckResult(f"{atlas.name}/faces", anchor, False, count,
                                           {"face": face, "transition": f"{i}->{j}", "x": x, "y": y},
                                           "face point leaves the face")
    return CheckResult(f"{atlas.name}/faces", anchor, True, count)


def check_atlas(atlas: AtlasManifold, rng, samples: int, tol: float) -> list[CheckResult]:
    return [
        check_identity_transitions(atlas, rng, samples, tol),
        check_cocycle(atlas, rng, samples, tol),
        check_depth_invariance(atlas, rng, samples, tol),
        check_faces(atlas, rng, samples, tol),
    ]


def atlas_map_check(
    atlas: AtlasManifold,
    chart_maps: dict[str, SmoothMapTuple],
    rng,
    samples: int,
    tol: float,
    name: str = "reference",
) -> CheckResult:
    """Chartwise maps into one fixed coordinate space agree across every transition.

    This is a sample-level comparison of ``atlas`` with a one-chart reference
    atlas: ``phi_j(tau_ij(x)) = phi_i(x)`` as order-2 jets, and every ``phi_i``
    has invertible Jacobian at the samples.
    """
    count = 0
    anchor = "glued atlas agrees with the standard atlas on samples"
    for (i, j), t in sorted(atlas.transitions.items()):
        if t.domain.is_empty() or i not in chart_maps or j not in chart_maps:
            continue
        for _ in range(samples):
            x = t.domain.sample(rng, face_bias=0.3)
            series = series_variables(x, 2)
            y_series = [evaluate(c, series) for c in t.map.components]
            lhs = [evaluate(c, y_series) for c in chart_maps[j].components]
            rhs = [evaluate(c, series) for c in chart_maps[i].components]
            count += 1
            n = len(x)
            if not all(_series_pair_close(a, b, n, 2, tol) for a, b in zip(lhs, rhs)):
                return CheckResult(f"{name}/agrees", anchor, False, count,
                                   {"transition": f"{i}->{j}", "x": x}, "chart maps disagree")
            jac = []
            for comp in rhs:
                s = as_series(comp, n, 2)
                jac.append([s.coefficient(tuple(1 if q == p else 0 for q in range(n))) for p in range(n)])
            if n and matrix_rank(jac) < n:
                return CheckResult(f"{name}/agrees", anchor, False, count,
                                   {"chart": i, "x": x}, "chart map is not a local diffeomorphism")
    return CheckResult(f"{name}/agrees", anchor, True, count)
