"""Scenario files, the suite runner and the ``verify`` command line.

The scenario format is documented in ``docs/scenario_schema.md``; bundled
fixtures live in ``weilglue/scenarios`` and can be named without a path.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable

import yaml

from .corners import (
    AtlasManifold,
    BoxRegion,
    Chart,
    CornerModel,
    Transition,
    check_atlas,
    good_cover_check,
    parse_bound,
)
from .gluing import Collar, FaceIdentification, GluedManifold, check_collar, check_gluable, glue
from .prolong import check_prolonged_atlas
from .report import CheckResult, Report
from .smoothexpr import Const, ExprParseError, Fn, SmoothExpr, SmoothMapTuple, _walk, parse_sexpr
from .suites import (
    SuiteConfig,
    borel_multiplicativity,
    classification_completeness,
    collar_independence,
    dimension_law,
    exponential_law,
    factorization_iff,
    jet_functoriality,
    monic_squaring,
    pushout_probe,
    reference_agreement,
    restriction_compatibility,
    tensor_dimension,
    twist_blindness,
    weil_axioms,
)
from .weil import WeilAlgebra, WeilError, make_weil

SUITES = (
    "weil",
    "squaring",
    "factorization",
    "jets",
    "prolongation",
    "exponential",
    "borel",
    "atlas",
    "gluable",
    "glued_atlas",
    "pushout",
    "classification",
    "restriction",
    "collar_independence",
    "twist",
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = ".".join(field.split(".")) if field else "<root>"
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{where}: {message}")


class UnresolvedReference(ParseError):
    pass


@dataclass
class Gluing:
    fi: FaceIdentification
    collar_M: Collar
    collar_N: Collar
    alternates: dict[str, Collar] = field(default_factory=dict)
    reference: dict[str, SmoothMapTuple] = field(default_factory=dict)


@dataclass
class Scenario:
    name: str
    mode: str
    tolerance: float
    seed: int
    samples: int
    probes: int
    algebras: dict[str, WeilAlgebra]
    manifolds: dict[str, AtlasManifold]
    gluings: dict[str, Gluing]
    suites: list[str]
    probe_algebras: list[str]
    exact: bool
    path: str = ""

    def config(self, seed=None, mode=None, tolerance=None) -> SuiteConfig:
        return SuiteConfig(
            seed=self.seed if seed is None else seed,
            samples=self.samples,
            probes=self.probes,
            mode=mode or self.mode,
            tolerance=self.tolerance if tolerance is None else tolerance,
        )


# -- loading


class _Doc:
    """Parsed YAML plus the node tree, so errors can name a line."""

    def __init__(self, text: str):
        try:
            self.node = yaml.compose(text)
            self.data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise ParseError(str(exc).splitlines()[0], mark.line + 1 if mark else None) from None
        if not isinstance(self.data, dict):
            raise ParseError("scenario must be a mapping", 1)

    def line(self, path: tuple) -> int | None:
        node = self.node
        best = node.start_mark.line + 1 if node is not None else None
        for key in path:
            if isinstance(node, yaml.MappingNode):
                match = next((v for k, v in node.value if k.value == str(key)), None)
            elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
                match = node.value[key]
            else:
                match = None
            if match is None:
                break
            node = match
            best = node.start_mark.line + 1
        return best

    def error(self, path: tuple, message: str, cls=ParseError):
        return cls(message, self.line(path), ".".join(map(str, path)))


def _get(doc: _Doc, data, path: tuple, key, kind=None, default=dataclasses.MISSING):
    if not isinstance(data, dict) or key not in data:
        if default is not dataclasses.MISSING:
            return default
        raise doc.error(path, f"missing field {key!r}")
    value = data[key]
    if kind is not None and not isinstance(value, kind):
        raise doc.error(path + (key,), f"expected {getattr(kind, '__name__', kind)}")
    return value


def _scalar(doc: _Doc, value, path):
    try:
        return parse_bound(value)
    except (ValueError, TypeError, ZeroDivisionError):
        raise doc.error(path, f"not a number: {value!r}") from None


def _floatify(expr: SmoothExpr) -> SmoothExpr:
    if isinstance(expr, Const):
        return Const(float(expr.value))
    changes = {}
    for f in dataclasses.fields(expr):
        v = getattr(expr, f.name)
        if isinstance(v, SmoothExpr):
            changes[f.name] = _floatify(v)
        elif isinstance(v, tuple) and v and isinstance(v[0], SmoothExpr):
            changes[f.name] = tuple(_floatify(x) for x in v)
    return dataclasses.replace(expr, **changes) if changes else expr


class _Builder:
    def __init__(self, doc: _Doc, mode: str):
        self.doc = doc
        self.mode = mode
        self.transcendental = False

    def exprs(self, items, dim: int, path: tuple) -> SmoothMapTuple:
        if not isinstance(items, list):
            raise self.doc.error(path, "expected a list of s-expressions")
        comps = []
        for i, text in enumerate(items):
            try:
                e = parse_sexpr(str(text))
            except ExprParseError as exc:
                raise self.doc.error(path + (i,), str(exc)) from None
            if any(isinstance(node, Fn) for node in _walk(e)):
                self.transcendental = True
            comps.append(_floatify(e) if self.mode == "float" else e)
        try:
            return SmoothMapTuple(dim, tuple(comps))
        except ValueError as exc:
            raise self.doc.error(path, str(exc)) from None

    def region(self, model: CornerModel, data, path: tuple) -> BoxRegion:
        if data is None:
            return BoxRegion.whole(model)
        if not isinstance(data, list):
            raise self.doc.error(path, "region must be a list of boxes")
        boxes = []
        for b, box in enumerate(data):
            if not isinstance(box, list) or len(box) != model.n:
                raise self.doc.error(path + (b,), f"box needs {model.n} intervals")
            ivs = []
            for c, iv in enumerate(box):
                if not isinstance(iv, list) or len(iv) != 2:
                    raise self.doc.error(path + (b, c), "interval must be [lo, hi]")
                ivs.append((_scalar(self.doc, iv[0], path + (b, c)), _scalar(self.doc, iv[1], path + (b, c))))
            boxes.append(tuple(ivs))
        return BoxRegion(model, tuple(boxes))

    def algebra(self, data, path) -> WeilAlgebra:
        gens = _get(self.doc, data, path, "generators", int)
        ideal = _get(self.doc, data, path, "ideal", list)
        try:
            return make_weil(gens, [tuple(m) for m in ideal])
        except (WeilError, TypeError, ValueError) as exc:
            raise self.doc.error(path, str(exc)) from None

    def manifold(self, name: str, data, path) -> AtlasManifold:
        charts = {}
        for cid, cdata in _get(self.doc, data, path, "charts", dict).items():
            cpath = path + ("charts", cid)
            model = _get(self.doc, cdata, cpath, "model", list)
            if len(model) != 2 or not all(isinstance(v, int) for v in model):
                raise self.doc.error(cpath + ("model",), "model must be [n, m]")
            try:
                cm = CornerModel(*model)
            except ValueError as exc:
                raise self.doc.error(cpath + ("model",), str(exc)) from None
            charts[str(cid)] = Chart(str(cid), cm, self.region(cm, cdata.get("region"), cpath + ("region",)))
        transitions = {}
        for t, tdata in enumerate(_get(self.doc, data, path, "transitions", list, [])):
            tpath = path + ("transitions", t)
            src, tgt = str(_get(self.doc, tdata, tpath, "source")), str(_get(self.doc, tdata, tpath, "target"))
            for ref in (src, tgt):
                if ref not in charts:
                    raise self.doc.error(tpath, f"unknown chart {ref!r}", UnresolvedReference)
            model = charts[src].model
            domain = self.region(model, tdata.get("domain"), tpath + ("domain",))
            fmap = self.exprs(_get(self.doc, tdata, tpath, "map", list), model.n, tpath + ("map",))
            transitions[(src, tgt)] = Transition(src, tgt, domain, fmap)
        faces = {}
        for fname, marks in _get(self.doc, data, path, "faces", dict, {}).items():
            out = []
            for k, mark in enumerate(marks):
                if not isinstance(mark, list) or len(mark) != 2 or str(mark[0]) not in charts:
                    raise self.doc.error(path + ("faces", fname, k), f"bad face mark {mark!r}", UnresolvedReference)
                out.append((str(mark[0]), int(mark[1])))
            faces[str(fname)] = tuple(out)
        try:
            return AtlasManifold(name, charts, transitions, faces)
        except ValueError as exc:
            raise self.doc.error(path, str(exc)) from None

    def collar(self, data, manifold, face, sigma, path) -> Collar:
        chart = str(_get(self.doc, data, path, "chart"))
        s_chart = str(_get(self.doc, data, path, "sigma_chart"))
        if chart not in manifold.charts:
            raise self.doc.error(path + ("chart",), f"unknown chart {chart!r}", UnresolvedReference)
        if s_chart not in sigma.charts:
            raise self.doc.error(path + ("sigma_chart",), f"unknown chart {s_chart!r}", UnresolvedReference)
        model = manifold.charts[chart].model
        n = model.n
        try:
            return Collar(
                manifold,
                face,
                chart,
                sigma,
                s_chart,
                self.region(model, data.get("region"), path + ("region",)),
                _scalar(self.doc, _get(self.doc, data, path, "thickness"), path + ("thickness",)),
                self.exprs(_get(self.doc, data, path, "forward", list), n, path + ("forward",)),
                self.exprs(_get(self.doc, data, path, "inverse", list), n, path + ("inverse",)),
            )
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise self.doc.error(path, str(exc)) from None


def _resolve(doc: _Doc, table: dict, name, path: tuple, what: str):
    if name not in table:
        raise doc.error(path, f"undefined {what} {name!r}", UnresolvedReference)
    return table[name]


def load_scenario(source: str | Path) -> Scenario:
    """Parse and resolve a scenario file (or the name of a bundled fixture)."""
    path = find_scenario(source)
    doc = _Doc(path.read_text())
    data = doc.data
    mode = _get(doc, data, (), "mode", str, "rational")
    if mode not in ("rational", "float"):
        raise doc.error(("mode",), "mode must be 'rational' or 'float'")
    build = _Builder(doc, mode)
    sampling = _get(doc, data, (), "sampling", dict, {})
    seed = _get(doc, sampling, ("sampling",), "seed", int, 42)
    samples = _get(doc, sampling, ("sampling",), "samples", int, 100)
    probes = _get(doc, sampling, ("sampling",), "probes", int, 500)
    if seed < 0 or samples <= 0 or probes <= 0:
        raise doc.error(("sampling",), "seed must be nonnegative and counts positive")

    algebras = {
        str(k): build.algebra(v, ("algebras", k)) for k, v in _get(doc, data, (), "algebras", dict, {}).items()
    }
    manifolds = {
        str(k): build.manifold(str(k), v, ("manifolds", k))
        for k, v in _get(doc, data, (), "manifolds", dict, {}).items()
    }
    gluings = {}
    for name, g in _get(doc, data, (), "face_identifications", dict, {}).items():
        p = ("face_identifications", name)
        M = _resolve(doc, manifolds, _get(doc, g, p, "M"), p + ("M",), "manifold")
        N = _resolve(doc, manifolds, _get(doc, g, p, "N"), p + ("N",), "manifold")
        sigma = _resolve(doc, manifolds, _get(doc, g, p, "sigma"), p + ("sigma",), "manifold")
        face_M, face_N = str(_get(doc, g, p, "face_M")), str(_get(doc, g, p, "face_N"))
        for side, man, face in (("face_M", M, face_M), ("face_N", N, face_N)):
            if face not in man.faces:
                raise doc.error(p + (side,), f"undefined face {face!r}", UnresolvedReference)
        incl = {}
        for side, man in (("incl_M", M), ("incl_N", N)):
            incl[side] = {}
            for s_chart, spec in _get(doc, g, p, side, dict).items():
                ip = p + (side, s_chart)
                if s_chart not in sigma.charts:
                    raise doc.error(ip, f"unknown Sigma chart {s_chart!r}", UnresolvedReference)
                chart = str(_get(doc, spec, ip, "chart"))
                if chart not in man.charts:
                    raise doc.error(ip + ("chart",), f"unknown chart {chart!r}", UnresolvedReference)
                fmap = build.exprs(_get(doc, spec, ip, "map", list), sigma.dimension, ip + ("map",))
                incl[side][str(s_chart)] = (chart, fmap)
        fi = FaceIdentification(str(name), M, N, sigma, face_M, face_N, incl["incl_M"], incl["incl_N"])
        cM = build.collar(_get(doc, g, p, "collar_M", dict), M, face_M, sigma, p + ("collar_M",))
        cN = build.collar(_get(doc, g, p, "collar_N", dict), N, face_N, sigma, p + ("collar_N",))
        alternates = {
            str(k): build.collar(v, M, face_M, sigma, p + ("alternate_collars_M", k))
            for k, v in _get(doc, g, p, "alternate_collars_M", dict, {}).items()
        }
        reference = {
            str(k): build.exprs(v, M.dimension, p + ("reference", k))
            for k, v in _get(doc, g, p, "reference", dict, {}).items()
        }
        gluings[str(name)] = Gluing(fi, cM, cN, alternates, reference)

    suites = [str(s) for s in _get(doc, data, (), "suites", list, list(SUITES))]
    for i, s in enumerate(suites):
        if s not in SUITES:
            raise doc.error(("suites", i), f"unknown suite {s!r}", UnresolvedReference)
    probe_algebras = [str(a) for a in _get(doc, data, (), "probe_algebras", list, list(algebras))]
    for i, a in enumerate(probe_algebras):
        _resolve(doc, algebras, a, ("probe_algebras", i), "algebra")
    if not probe_algebras:
        raise doc.error(("probe_algebras",), "at least one probe algebra is required")

    return Scenario(
        name=str(_get(doc, data, (), "name", str, path.stem)),
        mode=mode,
        tolerance=float(_get(doc, data, (), "tolerance", (int, float), 1e-9)),
        seed=seed,
        samples=samples,
        probes=probes,
        algebras=algebras,
        manifolds=manifolds,
        gluings=gluings,
        suites=suites,
        probe_algebras=probe_algebras,
        exact=mode == "rational" and not build.transcendental,
        path=str(path),
    )


def bundled_scenarios() -> list[str]:
    root = resources.files("weilglue") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def find_scenario(source: str | Path) -> Path:
    path = Path(source)
    if path.exists():
        return path
    bundled = resources.files("weilglue") / "scenarios" / f"{source}.yaml"
    if bundled.is_file():
        return Path(str(bundled))
    raise FileNotFoundError(f"no scenario file or bundled fixture named {source!r}")


# -- running


def _tasks(sc: Scenario, cfg: SuiteConfig, suites: list[str]) -> list[tuple[str, Callable]]:
    """``(check id, thunk)`` pairs; each thunk receives its own generator."""
    tasks: list[tuple[str, Callable]] = []
    add = tasks.append
    probes = [(a, sc.algebras[a]) for a in sc.probe_algebras]
    glued: dict[str, GluedManifold] = {}

    def glued_for(name):
        if name not in glued:
            g = sc.gluings[name]
            glued[name] = glue(g.fi, g.collar_M, g.collar_N)
        return glued[name]

    models = sorted({c.model for m in sc.manifolds.values() for c in m.charts.values()}, key=lambda m: (m.n, m.m))
    for suite in suites:
        if suite == "weil":
            for a, w in sorted(sc.algebras.items()):
                add((f"weil/axioms/{a}", lambda rng, w=w, a=a: weil_axioms(w, rng, cfg.samples, f"weil/axioms/{a}")))
            add(("weil/tensor", lambda rng: tensor_dimension(list(sc.algebras.values()))))
        elif suite == "squaring":
            add(("weil/squaring_monic", lambda rng: monic_squaring(5)))
        elif suite == "factorization":
            for model in models:
                for a, w in probes:
                    cid = f"prolong/factorization/{model}/{a}"
                    add((cid, lambda rng, model=model, w=w, cid=cid: factorization_iff(model, w, rng, cfg.samples, cfg, cid)))
        elif suite == "jets":
            for a, w in probes:
                for trans in (False, True):
                    cid = f"prolong/functoriality/{'transcendental' if trans else 'polynomial'}/{a}"
                    add((cid, lambda rng, w=w, trans=trans, cid=cid: jet_functoriality(w, rng, cfg.samples, cfg, trans, cid)))
        elif suite == "prolongation":
            add(("prolong/dimension_law", lambda rng: dimension_law()))
            for mname, man in sorted(sc.manifolds.items()):
                for a, w in probes:
                    cid = f"prolong/atlas/{mname}/{a}"

                    def run_prolonged(rng, man=man, w=w, cid=cid):
                        res = check_prolonged_atlas(man, w, rng, max(1, cfg.samples // 10), cfg.tol)
                        res.check_id = cid
                        return res

                    add((cid, run_prolonged))
        elif suite == "exponential":
            for model in models:
                for a_name, a in probes:
                    for w_name, w in probes:
                        if a.dimension * w.dimension > 9:
                            continue
                        cid = f"prolong/exponential/{model}/{a_name}/{w_name}"
                        add((cid, lambda rng, model=model, a=a, w=w, cid=cid:
                             exponential_law(model, a, w, rng, max(1, cfg.samples // 5), cfg, cid)))
        elif suite == "borel":
            add(("gluing/borel_multiplicative", lambda rng: borel_multiplicativity(rng, cfg.samples)))
        elif suite == "atlas":
            for mname, man in sorted(sc.manifolds.items()):
                add((f"atlas/{mname}", lambda rng, man=man, mname=mname: _renamed(
                    [good_cover_check(man)] + check_atlas(man, rng, cfg.samples, cfg.tol), f"atlas/{mname}")))
        elif suite == "gluable":
            for gname, g in sorted(sc.gluings.items()):
                def run_gluable(rng, g=g, gname=gname):
                    out = check_gluable(g.fi, g.collar_M, g.collar_N, rng, cfg.samples, cfg.tol)
                    for alt_name, alt in sorted(g.alternates.items()):
                        r = check_collar(g.fi, alt, "M", rng, cfg.samples, cfg.tol)
                        r.check_id = f"{r.check_id}/{alt_name}"
                        out.append(r)
                    return _renamed(out, f"gluable/{gname}")

                add((f"gluable/{gname}", run_gluable))
        elif suite == "glued_atlas":
            for gname, g in sorted(sc.gluings.items()):
                def run_glued(rng, g=g, gname=gname):
                    gm = glued_for(gname)
                    out = [good_cover_check(gm.atlas)] + check_atlas(gm.atlas, rng, cfg.samples, cfg.tol)
                    if g.reference:
                        out.append(reference_agreement(gm, g.reference, rng, cfg.samples, cfg, "reference"))
                    for alt_name, alt in sorted(g.alternates.items()):
                        other = glue(g.fi, alt, g.collar_N)
                        for r in check_atlas(other.atlas, rng, cfg.samples, cfg.tol):
                            r.check_id = f"x/{alt_name}/{r.check_id.rsplit('/', 1)[-1]}"
                            out.append(r)
                    return _renamed(out, f"glued/{gname}")

                add((f"glued/{gname}", run_glued))
        elif suite in ("pushout", "classification", "restriction", "twist"):
            fn = {
                "pushout": pushout_probe,
                "classification": classification_completeness,
                "restriction": restriction_compatibility,
                "twist": twist_blindness,
            }[suite]
            count = cfg.samples if suite == "restriction" else cfg.probes
            for gname in sorted(sc.gluings):
                for a, w in probes:
                    cid = f"gluing/{suite}/{gname}/{a}"
                    add((cid, lambda rng, gname=gname, w=w, cid=cid, fn=fn, count=count:
                         fn(glued_for(gname), w, rng, count, cfg, cid)))
        elif suite == "collar_independence":
            for gname, g in sorted(sc.gluings.items()):
                for alt_name, alt in sorted(g.alternates.items()):
                    for a, w in probes:
                        cid = f"gluing/collar_independence/{gname}/{alt_name}/{a}"
                        add((cid, lambda rng, g=g, alt=alt, w=w, cid=cid: collar_independence(
                            g.fi, g.collar_M, alt, g.collar_N, w, rng, cfg.probes, cfg, cid)))
    return tasks


def _renamed(records: list[CheckResult], prefix: str) -> list[CheckResult]:
    for r in records:
        r.check_id = f"{prefix}/{r.check_id.split('/', 1)[-1]}"
    return records


def run(
    scenario: Scenario,
    seed: int | None = None,
    mode: str | None = None,
    tolerance: float | None = None,
    suites: list[str] | None = None,
) -> Report:
    """Run the selected suites; deterministic given scenario, seed and mode."""
    cfg = scenario.config(seed, mode, tolerance)
    selected = suites or scenario.suites
    start = time.perf_counter()
    records: list[CheckResult] = []
    for suite in selected:
        if suite not in SUITES:
            raise ValueError(f"unknown suite {suite!r}")
        produced = []
        for cid, thunk in _tasks(scenario, cfg, [suite]):
            t0 = time.perf_counter()
            try:
                out = thunk(cfg.rng(cid))
            except Exception as exc:  # noqa: BLE001 - a crashing check is a failing check
                out = CheckResult(cid, "check raised", False, 0, None, f"{type(exc).__name__}: {exc}")
            out = out if isinstance(out, list) else [out]
            elapsed = time.perf_counter() - t0
            for r in out:
                r.elapsed = elapsed / len(out)
                if r.passed and not r.samples and not r.detail:
                    r.detail = "nothing to sample"
            produced.extend(out)
        if not produced:
            produced.append(CheckResult(f"{suite}/empty", "suite selected", False, 0, None,
                                        "suite has nothing to check in this scenario"))
        records.extend(produced)
    return Report(scenario.name, cfg.seed, cfg.mode, cfg.tolerance, records, time.perf_counter() - start)


# -- command line


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="verify", description="Run a weilglue verification scenario.")
    parser.add_argument("scenario", nargs="?", help="scenario file, or the name of a bundled fixture")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--mode", choices=["rational", "float"])
    parser.add_argument("--tolerance", type=float)
    parser.add_argument("--suites", help="comma-separated suite names (default: the scenario's list)")
    parser.add_argument("--report", help="write the JSON report here")
    parser.add_argument("--no-timing", action="store_true", help="omit timing fields from the JSON report")
    parser.add_argument("--list", action="store_true", help="list bundled fixtures and suites, then exit")
    args = parser.parse_args(argv)
    if args.list:
        print("fixtures:", " ".join(bundled_scenarios()))
        print("suites:  ", " ".join(SUITES))
        return 0
    if args.scenario is None:
        parser.error("a scenario is required")
    try:
        scenario = load_scenario(args.scenario)
    except (ParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    suites = [s.strip() for s in args.suites.split(",")] if args.suites else None
    if suites:
        unknown = [s for s in suites if s not in SUITES]
        if unknown:
            print(f"error: unknown suites {', '.join(unknown)}", file=sys.stderr)
            return 2
    report = run(scenario, args.seed, args.mode, args.tolerance, suites)
    print(report.to_text())
    if args.report:
        Path(args.report).write_text(report.to_json(timing=not args.no_timing) + "\n")
    return 0 if report.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
