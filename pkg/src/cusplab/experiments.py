"""Registered experiments: each reproduces a group of checks and returns verdicts.

An experiment takes a parameter dict (defaults merged with overrides), a
seed and a job count, and returns result records, verdicts and optional
tables.  The CLI wraps these into JSON/CSV reports; the acceptance tests
call them directly.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import asymptotics as asy
from . import cat0, geodesics, metrics, quotient, strata
from .errors import CuspLabError, InputError

SCHEMA_VERSION = 1
PI3 = np.pi**3


@dataclass
class Verdict:
    id: str
    passed: bool
    measured: Any
    threshold: Any

    def to_dict(self) -> dict:
        return {"id": self.id, "pass": bool(self.passed), "measured": _plain(self.measured), "threshold": _plain(self.threshold)}


@dataclass
class Outcome:
    results: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)

    def check(self, id: str, passed, measured, threshold) -> bool:
        self.verdicts.append(Verdict(id, bool(passed), measured, threshold))
        return bool(passed)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)


@dataclass(frozen=True)
class Experiment:
    group: str
    name: str
    citation: str
    defaults: dict
    run: Callable[[dict, int, int], Outcome]

    @property
    def key(self) -> str:
        return f"{self.group}/{self.name}"


REGISTRY: dict[str, Experiment] = {}


def register(group: str, name: str, citation: str, **defaults):
    def wrap(fn):
        REGISTRY[f"{group}/{name}"] = Experiment(group, name, citation, defaults, fn)
        return fn

    return wrap


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else str(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("CUSPLAB_JOBS", "1")))
    except ValueError:
        return 1


def pmap(fn, items, jobs: int = 1) -> list:
    """Ordered map, in worker processes when ``jobs > 1``."""
    items = list(items)
    if jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def run_experiment(key: str, overrides: dict | None = None, seed: int = 0, jobs: int = 1) -> tuple[dict, Outcome]:
    if key not in REGISTRY:
        raise InputError(f"unknown experiment {key!r}")
    exp = REGISTRY[key]
    params = dict(exp.defaults)
    for k, v in (overrides or {}).items():
        if k not in params:
            raise InputError(f"{key} has no parameter {k!r}")
        params[k] = v
    return params, exp.run(params, seed, jobs)


# ---------------------------------------------------------------------------
# metrics


@register("metrics", "series", "small-angle expansion of the collar density", lo=0.01, hi=0.3, count=30)
def _series(p, seed, jobs):
    out = Outcome()
    thetas = np.linspace(p["lo"], p["hi"], int(p["count"]))
    rows = []
    for th in thetas:
        exact, trunc, res = metrics.density_series_check(float(th))
        rows.append({"Theta": th, "exact": exact, "truncated": trunc, "residual": res, "bound": 2 * th**6})
    worst = max(abs(r["residual"]) / r["bound"] for r in rows)
    out.tables["series"] = rows
    out.results = rows
    out.check("AC1", worst <= 1.0, worst, "max |residual| / (2 Theta^6) <= 1")
    return out


def christoffel_gap(r_grid, theta: float = 0.4) -> float:
    worst = 0.0
    models = [metrics.CuspidalPlane(1.0), metrics.CuspidalPlane(PI3), metrics.ProductCuspidal(1, 2, 1.0)]
    for model in models:
        for r in r_grid:
            q = np.zeros(model.dim)
            q[: model.m2] = 0.3
            q[model.r_slice] = r * np.linspace(1.0, 1.3, model.n)
            q[model.theta_slice] = theta
            a = metrics.christoffel(model, q)
            b = metrics.christoffel(model, q, method="fd")
            worst = max(worst, float(np.max(np.abs(a - b))))
    return worst


@register("metrics", "christoffel", "Christoffel symbols and curvature of the cuspidal factor", r_lo=0.05, r_hi=2.0, count=40)
def _christoffel(p, seed, jobs):
    out = Outcome()
    rs = np.geomspace(p["r_lo"], p["r_hi"], int(p["count"]))
    gap = christoffel_gap(rs)
    out.check("AC6.christoffel", gap <= 1e-6, gap, 1e-6)
    rows, worst_scale, worst_closed = [], 0.0, 0.0
    for r in rs[:: max(1, rs.size // 10)]:
        k1 = metrics.gaussian_curvature(metrics.CuspidalPlane(1.0), [r, 0.3])
        ks = metrics.gaussian_curvature(metrics.CuspidalPlane(PI3), [r, 0.3])
        worst_scale = max(worst_scale, abs(ks * PI3 / k1 - 1))
        worst_closed = max(worst_closed, abs(k1 / (-1.5 / r**2) - 1))
        rows.append({"r": r, "K": k1, "K_scaled": ks})
    out.tables["curvature"] = rows
    out.results = [{"christoffel_gap": gap}] + rows
    out.check("INV.metric.curvature-scaling", worst_scale <= 1e-8, worst_scale, 1e-8)
    out.check("INV.metric.curvature-closed-form", worst_closed <= 1e-6, worst_closed, 1e-6)
    return out


@register("metrics", "invariants", "model metrics, annulus density and the revolution surface", points=1000)
def _metric_invariants(p, seed, jobs):
    out = Outcome()
    rng = np.random.default_rng(seed)
    npts = int(p["points"])
    base = metrics.ProductCuspidal(1, 2, 1.0)
    pert = metrics.PerturbedProduct(base, 0.1)
    models = [metrics.EuclideanBlock(1), metrics.CuspidalPlane(1.0), base, pert, metrics.SpherePatch(1.0)]
    min_eig, asym = np.inf, 0.0
    for model in models:
        for _ in range(npts):
            q = rng.uniform(-1, 1, model.dim)
            q[model.r_slice] = rng.uniform(0.05, 2.0, model.n) if not isinstance(model, metrics.SpherePatch) else rng.uniform(0.1, 3.0)
            G = metrics.eval_metric(model, q)
            asym = max(asym, float(np.max(np.abs(G - G.T))))
            min_eig = min(min_eig, float(np.linalg.eigvalsh(G).min()))
    out.check("INV.metric.symmetric", asym == 0.0, asym, 0.0)
    out.check("INV.metric.positive-definite", min_eig > 0, min_eig, "> 0")
    worst = 0.0
    for _ in range(npts):
        q = np.concatenate([rng.uniform(-1, 1, 2), rng.uniform(0.0, 0.8, 2), rng.uniform(-4, 4, 2)])
        ratio = pert.diag(q) / base.diag(q)
        bound = pert.epsilon * pert.bound * np.linalg.norm(q[base.r_slice]) ** 3
        worst = max(worst, float(np.max(np.abs(ratio - 1)) - bound))
    out.check("INV.metric.perturbation-bound", worst <= 1e-15, worst, "<= 0")
    z = np.exp(-1.0)
    dens = [metrics.annulus_density(np.exp(-k), z) for k in (4.0, 8.0, 16.0, 32.0, 64.0)]
    cusp = metrics.annulus_density(0.0, z)
    mono = bool(np.all(np.diff(dens) < 0) and dens[-1] > cusp)
    out.check("INV.metric.annulus-limit", mono and abs(dens[-1] / cusp - 1) < 1e-3, dens[-1] - cusp, "decreasing to the cusp density")
    rr, tt = metrics.revolution_surface_compare(0.1)
    out.check("INV.metric.revolution", abs(rr - 1.000225) < 1e-12 and tt == 1.0, [rr, tt], [1.000225, 1.0])
    out.results = [{"min_eigenvalue": min_eig, "annulus": dens, "cusp_density": cusp}]
    return out


# ---------------------------------------------------------------------------
# geodesic engine


def _random_interior(rng, model, r_lo=0.3, r_hi=1.2, th=3.0):
    q = np.zeros(model.dim)
    q[: model.m2] = rng.uniform(-1, 1, model.m2)
    q[model.r_slice] = rng.uniform(r_lo, r_hi, model.n)
    q[model.theta_slice] = rng.uniform(-th, th, model.n)
    return q


def metric_sup(model, a, b, samples: int = 257) -> float:
    """Max over equal parameters of the local metric norm of the chart gap."""
    f = np.linspace(0.0, 1.0, samples)
    A, B = a.at(f), b.at(f)
    D = A - B
    return float(np.sqrt(np.max(np.sum(model.diag(0.5 * (A + B)) * D**2, axis=-1))))


def _ab_problem(args):
    p, q = args
    model = metrics.PerturbedProduct(metrics.ProductCuspidal(1, 1, 1.0), 0.1)
    a = geodesics.connect(model, p, q, strategy="energy")
    b = geodesics.connect(model, p, q, strategy="shooting")
    return a.length, b.length, metric_sup(model, a, b)


@register("geodesic", "engine", "geodesic ODE, Clairaut constants and the two boundary-value strategies",
          problems=50, inits=20, conservation=20, r_lo=0.05, r_hi=2.0)
def _engine(p, seed, jobs):
    out = Outcome()
    rng = np.random.default_rng(seed)
    gap = christoffel_gap(np.geomspace(p["r_lo"], p["r_hi"], 25))
    out.check("AC6.christoffel", gap <= 1e-6, gap, 1e-6)

    worst_c, worst_speed = 0.0, 0.0
    for model in (metrics.CuspidalPlane(1.0), metrics.ProductCuspidal(1, 2, 1.0)):
        for _ in range(int(p["conservation"])):
            q = _random_interior(rng, model, 0.5, 1.5)
            v = rng.normal(size=model.dim)
            c = geodesics.integrate_geodesic(model, q, v, 1.0)
            C = geodesics.clairaut_constants(model, c)
            rel = np.max(np.abs(C - C[0]), axis=0) / np.maximum(np.abs(C[0]), 1e-300)
            worst_c = max(worst_c, float(rel.max()))
            sp = geodesics.speeds(model, c)
            worst_speed = max(worst_speed, float(np.max(np.abs(sp / sp[0] - 1))))
    out.check("AC6.clairaut", worst_c <= 1e-8, worst_c, 1e-8)
    out.check("INV.geodesic.constant-speed", worst_speed <= 1e-6, worst_speed, 1e-6)

    model = metrics.PerturbedProduct(metrics.ProductCuspidal(1, 1, 1.0), 0.1)
    probs = [(_random_interior(rng, model), _random_interior(rng, model)) for _ in range(int(p["problems"]))]
    res = pmap(_ab_problem, probs, jobs)
    rows = [{"energy": a, "shooting": b, "rel_gap": abs(a - b) / b, "sup_distance": s} for a, b, s in res]
    out.tables["strategies"] = rows
    worst_len = max(r["rel_gap"] for r in rows)
    worst_sup = max(r["sup_distance"] for r in rows)
    out.check("AC6.strategies", worst_len <= 1e-6, worst_len, 1e-6)
    out.check("INV.geodesic.strategies-sup", worst_sup <= 1e-4, worst_sup, 1e-4)

    pq = probs[0]
    ref = geodesics.energy_connect(model, *pq)
    sups = []
    for i in range(int(p["inits"])):
        c = geodesics.energy_connect(model, *pq, perturbation=0.3, seed=seed * 1000 + i)
        sups.append(geodesics.sup_distance(ref, c))
    out.check("AC6.uniqueness", max(sups) <= 1e-4, max(sups), 1e-4)
    out.results = [{"christoffel_gap": gap, "clairaut": worst_c, "speed": worst_speed,
                    "strategy_gap": worst_len, "uniqueness_sup": max(sups)}]
    return out


@register("geodesic", "second-variation", "classical second variation of length", h=1e-2)
def _second_variation(p, seed, jobs):
    out = Outcome()
    cases = [
        ("euclidean-parallel", metrics.EuclideanBlock(1), [0, 0], [1, 0], [0, 1], [0, 1]),
        ("cusp-common-start", metrics.CuspidalPlane(1.0), [1.0, 0.0], [0.8, 2.0], [0, 0], [0.2, 1.0]),
        ("cusp-transversal", metrics.CuspidalPlane(1.0), [1.0, 0.0], [0.7, 3.0], [0.1, 0.5], [0.2, -1.0]),
        ("product", metrics.ProductCuspidal(1, 1, 1.0), [0, 0, 1.0, 0.0], [1, 0.5, 0.8, 2.0], [0, 0.3, 0, 0], [0.2, 0, 0.1, 1.0]),
    ]
    worst = 0.0
    for name, model, a, b, w0, w1 in cases:
        d2, formula = geodesics.second_variation_check(model, a, b, w0, w1, h=p["h"])
        err = abs(d2 - formula) / max(abs(formula), 1e-12) if abs(formula) > 1e-12 else abs(d2)
        worst = max(worst, err)
        out.results.append({"case": name, "second_difference": d2, "formula": formula, "error": err})
    out.check("INV.geodesic.second-variation", worst <= 1e-3, worst, 1e-3)
    return out


# ---------------------------------------------------------------------------
# strata


@register("strata", "refraction", "geodesics do not refract through a stratum; corners are shortcut", configs=200)
def _refraction(p, seed, jobs):
    out = Outcome()
    rng = np.random.default_rng(seed)
    model = metrics.ProductCuspidal(1, 1, 1.0)
    flag = strata.refraction_experiment(model, [0, 0, 0.25, 0.3], [2, 0, 0, 0], [1, 0, 0, 0])
    err = max(abs(flag.through - (np.sqrt(1.25) + 1)), abs(flag.shortcut - np.sqrt(4.25)))
    out.check("AC7.flagship", err <= 1e-8, [flag.through, flag.shortcut], [np.sqrt(1.25) + 1, np.sqrt(4.25)])

    rows, strict, worst = [], True, 0.0
    for _ in range(int(p["configs"])):
        varrho = rng.uniform(0.0, 0.5)
        while varrho == 0.0:
            varrho = rng.uniform(0.0, 0.5)
        ax, ox, bx = rng.uniform(-2, 2, (3, 2))
        a = np.r_[ax, varrho / 2.0, rng.uniform(-4, 4)]
        res = strata.refraction_experiment(model, a, np.r_[bx, 0, 0], np.r_[ox, 0, 0])
        predicted = np.hypot(np.linalg.norm(ax - ox), varrho) + np.linalg.norm(ox - bx) - np.hypot(np.linalg.norm(ax - bx), varrho)
        strict &= res.gap > 0
        worst = max(worst, abs(res.gap - predicted))
        rows.append({"varrho": varrho, "through": res.through, "shortcut": res.shortcut, "gap": res.gap, "predicted": predicted})
    out.tables["refraction"] = rows
    out.check("AC7.strict", strict, min(r["gap"] for r in rows), "> 0")
    out.check("AC7.closed-form", worst <= 1e-8, worst, 1e-8)

    corner = metrics.ProductCuspidal(0, 2, PI3)
    worst_c, crow = 0.0, []
    for _ in range(int(p["configs"])):
        r1, r2 = rng.uniform(0.01, 0.5, 2)
        res = strata.corner_experiment(corner, [r1, 0, 0.3, 0], [0, r2, 0, -0.7])
        v1, v2 = 2 * np.pi**1.5 * r1, 2 * np.pi**1.5 * r2
        predicted = v1 + v2 - np.hypot(v1, v2)
        worst_c = max(worst_c, abs(res.gap - predicted))
        crow.append({"varrho_minus": v1, "varrho_plus": v2, "gap": res.gap, "predicted": predicted})
    out.tables["corner"] = crow
    out.check("AC7.corner", worst_c <= 1e-8 and all(r["gap"] > 0 for r in crow), worst_c, 1e-8)
    out.results = [{"flagship_through": flag.through, "flagship_shortcut": flag.shortcut,
                    "refraction_worst": worst, "corner_worst": worst_c}]
    return out


@register("strata", "distance", "distance to a stratum from the length functions; normal flow",
          r_lo=0.03, r_hi=0.3, grid=6, epsilon=0.1, points=50)
def _stratum_distance(p, seed, jobs):
    out = Outcome()
    rng = np.random.default_rng(seed)
    pure = metrics.ProductCuspidal(1, 2, PI3)
    worst, worst_solver = 0.0, 0.0
    for i in range(int(p["points"])):
        q = _random_interior(rng, pure, 0.05, 0.5)
        ells = [strata.LengthProxy.from_r(r).ell for r in q[pure.r_slice]]
        target = np.sqrt(2 * np.pi * sum(ells))
        worst = max(worst, abs(strata.stratum_distance(pure, q, [1, 2]) - target))
        if i < 5:
            d = strata.stratum_distance(pure, q, [1, 2], strategy="energy", tol=1e-11)
            worst_solver = max(worst_solver, abs(d - target) / target)
    out.check("AC9.pure-product", worst <= 1e-8, worst, 1e-8)
    out.check("INV.strata.solver-cross-check", worst_solver <= 1e-6, worst_solver, 1e-6)

    model = metrics.PerturbedProduct(metrics.ProductCuspidal(1, 1, PI3), p["epsilon"])
    grid = np.geomspace(p["r_lo"], p["r_hi"], int(p["grid"]))
    probe = strata.perturbation_scaling_probe(model, grid)
    out.tables["scaling"] = [{"r": r, "distance_deviation": a, "ratio_deviation": b}
                             for r, a, b in zip(grid, probe.distance_deviation, probe.ratio_deviation)]
    out.check("AC9.distance-slope", abs(probe.distance_slope - 4) <= 0.5, probe.distance_slope, "4 +- 0.5")
    out.check("AC9.ratio-slope", probe.ratio_slope >= 2.7, probe.ratio_slope, ">= 2.7")

    cs = np.array([0.05, 0.1, 0.2, 0.4])
    ends = []
    for c in cs:
        r0 = c / strata.TWO_PI_32
        start = np.array([0.3, 0.3, r0, 0.7])
        ends.append(strata.integral_curve_probe(model, start, [c]).endpoint_distance)
    slope = strata.loglog_slope(cs, ends)
    out.tables["flow"] = [{"c": c, "endpoint_distance": d} for c, d in zip(cs, ends)]
    out.check("INV.strata.flow-slope", abs(slope - 4) <= 0.5, slope, "4 +- 0.5")
    pp = strata.integral_curve_probe(metrics.ProductCuspidal(0, 2, PI3), [0.3 / strata.TWO_PI_32, 0.4 / strata.TWO_PI_32, 0, 0], [0.3, 0.4])
    out.check("INV.strata.flow-pure", abs(pp.length - 0.5) <= 1e-8 and pp.endpoint_distance == 0.0, pp.length, 0.5)
    out.results = [{"pure_worst": worst, "distance_slope": probe.distance_slope, "ratio_slope": probe.ratio_slope, "flow_slope": slope}]
    return out


# ---------------------------------------------------------------------------
# comparison geometry


def _triangle_model(name: str):
    models = {
        "euclidean": metrics.EuclideanBlock(1),
        "cuspidal": metrics.CuspidalPlane(1.0),
        "product": metrics.ProductCuspidal(1, 1, 1.0),
        "sphere": metrics.SpherePatch(1.0),
    }
    if name not in models:
        raise InputError(f"unknown triangle model {name!r}; choose from {sorted(models)}")
    return models[name]


def _triangle_vertices(rng, name: str, model):
    if name == "sphere":
        while True:
            V = np.column_stack([rng.uniform(0.4, np.pi - 0.4, 3), rng.uniform(-1.5, 1.5, 3)])
            xyz = np.stack([np.sin(V[:, 0]) * np.cos(V[:, 1]), np.sin(V[:, 0]) * np.sin(V[:, 1]), np.cos(V[:, 0])], -1)
            ang = np.arccos(np.clip([xyz[0] @ xyz[1], xyz[1] @ xyz[2], xyz[2] @ xyz[0]], -1, 1))
            if ang.min() >= 1.0:
                return V
    if name == "euclidean":
        return rng.uniform(-1, 1, (3, 2))
    return np.stack([_random_interior(rng, model, 0.5, 1.5, 4.0) for _ in range(3)])


def _triangle_job(args):
    name, V, grid = args
    model = _triangle_model(name)
    tri = cat0.geodesic_triangle(model, *V)
    res = cat0.cat0_check(model, tri, grid=grid)
    return res.min_slack, res.skipped


@register("cat0", "triangles", "CAT(0) comparison inequality for geodesic triangles", model="cuspidal", count=50, grid=9)
def _triangles(p, seed, jobs):
    out = Outcome()
    name = p["model"]
    model = _triangle_model(name)
    rng = np.random.default_rng(seed)
    jobs_in = [(name, _triangle_vertices(rng, name, model), int(p["grid"])) for _ in range(int(p["count"]))]
    res = pmap(_triangle_job, jobs_in, jobs)
    rows = [{"triangle": i, "min_slack": s, "skipped": k} for i, (s, k) in enumerate(res)]
    out.tables["slack"] = rows
    worst = min(r["min_slack"] for r in rows)
    skipped = sum(r["skipped"] for r in rows)
    if name == "sphere":
        count = sum(r["min_slack"] < -1e-6 for r in rows)
        out.check("AC8.sphere-control", count >= 1, count, ">= 1 violating triangle")
    else:
        out.check(f"AC8.slack.{name}", worst >= -1e-6 and skipped == 0, worst, -1e-6)
    out.results = [{"model": name, "min_slack": worst, "skipped": skipped}]
    return out


@register("cat0", "convexity", "strict convexity of distance between geodesics", pairs=10, samples=17)
def _convexity(p, seed, jobs):
    out = Outcome()
    rng = np.random.default_rng(seed)
    model = metrics.CuspidalPlane(1.0)
    rows = []
    for _ in range(int(p["pairs"])):
        a, b, c, d = (_random_interior(rng, model, 0.5, 1.5, 4.0) for _ in range(4))
        g1, g2 = geodesics.connect(model, a, b), geodesics.connect(model, c, d)
        res = cat0.convexity_check(model, g1, g2, samples=int(p["samples"]))
        rows.append({"min_second_difference": res.min_second_difference, "max_second_difference": float(res.second_differences.max())})
    out.tables["convexity"] = rows
    worst = min(r["min_second_difference"] for r in rows)
    witness = max(r["min_second_difference"] for r in rows)
    out.check("AC8.convexity", worst >= -1e-6, worst, -1e-6)
    out.check("AC8.strict-witness", witness > 0, witness, "> 0")
    sphere = metrics.SpherePatch(1.0)
    g1 = geodesics.connect(sphere, [0.3, 0.0], [np.pi - 0.3, 0.2])
    g2 = geodesics.connect(sphere, [0.3, np.pi], [np.pi - 0.3, np.pi + 0.2])
    neg = cat0.convexity_check(sphere, g1, g2).min_second_difference
    out.check("INV.cat0.sphere-concave", neg < 0, neg, "< 0")
    out.results = [{"min": worst, "witness": witness, "sphere": neg}]
    return out


@register("cat0", "flats", "flat subspaces, maximal flat rank and failure of thinness", delta=1.0)
def _flats(p, seed, jobs):
    out = Outcome()
    rows, agree = [], True
    for g in range(0, 4):
        for n in range(0, 10):
            if not 1 <= 3 * g - 3 + n <= 6:
                continue
            closed = cat0.max_flat_rank(g, n)
            brute, witness = cat0.max_flat_rank_search(g, n)
            agree &= closed == brute
            rows.append({"g": g, "n": n, "closed_form": closed, "search": brute, "witness": str(witness)})
    out.tables["flat_rank"] = rows
    out.check("AC10.flat-rank", agree, sum(r["closed_form"] == r["search"] for r in rows), len(rows))
    thin = cat0.thinness_probe(metrics.EuclideanBlock(1), delta=p["delta"])
    target = 2 * np.sqrt(3) * p["delta"]
    out.check("AC10.thinness", abs(thin.threshold - target) <= 1e-8, thin.threshold, target)
    model = metrics.EuclideanBlock(2)
    flat = cat0.flat_triangle_check(model, cat0.geodesic_triangle(model, [0, 0, 0, 0], [1, 0, 0, 1], [0, 2, 1, 0]))
    cusp = metrics.CuspidalPlane(1.0)
    bent = cat0.flat_triangle_check(cusp, cat0.geodesic_triangle(cusp, [1.0, 0.0], [0.6, 2.0], [1.4, -3.0]))
    out.check("INV.cat0.flat-detection", flat.flat and not bent.flat, [flat.deviation, bent.deviation], "flat / not flat")
    out.results = [{"threshold": thin.threshold, "slim_unit": thin.slim_unit, "flat_deviation": flat.deviation,
                    "cusp_deviation": bent.deviation}]
    return out


@register("cat0", "angles", "Alexandrov angles and monotone comparison angles", count=5)
def _angles(p, seed, jobs):
    out = Outcome()
    rng = np.random.default_rng(seed)
    model = metrics.CuspidalPlane(1.0)
    mono, rows = True, []
    for _ in range(int(p["count"])):
        a, b, c = (_random_interior(rng, model, 0.5, 1.5, 4.0) for _ in range(3))
        res = cat0.alexandrov_angle(model, geodesics.connect(model, a, b), geodesics.connect(model, a, c))
        mono &= res.monotone
        rows.append({"angle": res.angle, "levels": len(res.params), "monotone": res.monotone})
    e = metrics.EuclideanBlock(1)
    right = cat0.alexandrov_angle(e, geodesics.connect(e, [0, 0], [1, 0]), geodesics.connect(e, [0, 0], [0, 1])).angle
    out.tables["angles"] = rows
    out.check("INV.cat0.angle-monotone", mono, sum(r["monotone"] for r in rows), len(rows))
    out.check("INV.cat0.right-angle", abs(right - np.pi / 2) <= 1e-10, right, np.pi / 2)
    out.results = rows
    return out


# ---------------------------------------------------------------------------
# quotient and limits


@register("limits", "polygonal-limit", "Dehn-twist quotient geodesics and their polygonal limit", r0=1.0, r1=1.0, theta0=0.0, theta1=0.0, nmax=64)
def _polygonal_limit(p, seed, jobs):
    out = Outcome()
    p0, p1 = (p["r0"], p["theta0"]), (p["r1"], p["theta1"])
    table = quotient.geodesic_limit_experiment(p0, p1, int(p["nmax"]))
    out.tables["gamma_n"] = table.rows()
    out.results = table.rows()
    out.check("AC11.solved", not table.failures, len(table.failures), 0)
    out.check("AC11.increasing", table.increasing, float(np.min(np.diff(table.length))), "> 0")
    out.check("AC11.bounded", table.bounded, float(table.length.max()), table.limit_length)
    out.check("AC11.slope", abs(table.deficit_slope + 0.5) <= 0.1, table.deficit_slope, "-0.5 +- 0.1")
    out.check("AC11.first-deviation", table.first_monotone, float(table.first_deviation[-1]), "strictly decreasing")
    out.check("AC11.twists-unbounded", table.twists.classify() == ["trivial", "unbounded"], table.twists.classify(),
              ["trivial", "unbounded"])
    out.check("INV.limits.second-deviation", bool(np.all(np.diff(table.second_deviation) < 0)),
              float(table.second_deviation[-1]), "strictly decreasing")
    out.check("INV.limits.clairaut", float(table.residual.max()) <= 1e-8, float(table.residual.max()), 1e-8)
    defects = table.path.length_defects()
    out.check("INV.limits.path-lengths", float(np.abs(defects).max()) <= 1e-6, float(np.abs(defects).max()), 1e-6)
    return out


@register("limits", "concatenation", "twisted concatenations of polygonal segments", r0=1.0, r1=1.0, nmax=64, samples=257)
def _concatenation(p, seed, jobs):
    out = Outcome()
    r0, r1 = p["r0"], p["r1"]
    path = quotient.PolygonalPath(np.array([[r0, 0.0], [0.0, 0.0], [r1, 0.0]]), np.array([0.0, r0, r0 + r1]))
    ns = np.arange(1, int(p["nmax"]) + 1)
    twists = quotient.TwistSequence(ns, np.stack([np.zeros_like(ns), -ns], axis=1))
    curves = quotient.approximating_concatenation(path, twists)
    f = np.linspace(0.0, 1.0, int(p["samples"]))
    sups = []
    for n, c in zip(ns, curves):
        g = quotient.clairaut_connect((r0, 0.0), (r1, float(n)))
        sups.append(float(quotient.deviation_bound(c.at(f), g.curve.at(f)).max()))
    out.tables["concatenation"] = [{"n": int(n), "sup_distance": s} for n, s in zip(ns, sups)]
    out.results = out.tables["concatenation"]
    out.check("INV.limits.concatenation-decreasing", bool(np.all(np.diff(sups) < 0)), sups[-1], "strictly decreasing")
    plain = quotient.approximating_concatenation(path, quotient.TwistSequence([1], [[0, 0]]))[0]
    end = quotient.approximating_concatenation(path, quotient.TwistSequence([5], [[0, 5]]))[0].end
    ok = np.allclose(plain.end, path.vertices[-1]) and np.allclose(end, quotient.deck(path.vertices[-1], -5))
    out.check("INV.limits.concatenation-endpoints", ok, end, "T^-n p1")
    return out


@register("limits", "nonunique", "non-unique geodesics near the cusp of the twist quotient", r=0.2, theta=0.0, perturbations=20)
def _nonunique(p, seed, jobs):
    out = Outcome()
    r = p["r"]
    res = quotient.nonunique_geodesics((r, p["theta"]), perturbations=int(p["perturbations"]), seed=seed)
    h1, h2 = res.halves
    same_ends = np.array_equal(h1.start, h2.start) and quotient.QuotientPoint(*h1.end) == quotient.QuotientPoint(*h2.end)
    # the ends agree as quotient points, up to the trajectory integration
    end_gap = quotient.quotient_distance(h1.end, h2.end)
    rel = abs(res.lengths[0] - res.lengths[1]) / max(res.lengths)
    out.check("AC12.endpoints", np.array_equal(h1.start, h2.start) and end_gap <= 1e-10, end_gap, 1e-10)
    out.check("AC12.lengths", rel <= 1e-6, rel, 1e-6)
    out.check("AC12.separation", res.separation > res.threshold, res.separation, res.threshold)
    out.check("AC12.certified", all(res.certified), list(res.margins), "> 0 for every perturbation")
    out.check("AC12.resolve", max(res.resolve_gap) <= 1e-6, max(res.resolve_gap), 1e-6)
    loop = quotient.minimal_linking_loop((r, p["theta"]))
    out.check("AC12.loop-bound", loop.length <= loop.upper_bound and loop.length >= loop.lower_bound,
              loop.length, [loop.lower_bound, loop.upper_bound])
    out.check("INV.limits.loop-class", abs(loop.linking) == 1, loop.linking, "+-1")
    sym = abs(loop.lengths[1] - loop.lengths[-1])
    out.check("INV.limits.loop-symmetry", sym <= 1e-8, sym, 1e-8)
    out.results = [{"lengths": list(res.lengths), "separation": res.separation, "threshold": res.threshold,
                    "margins": list(res.margins), "resolve_gap": list(res.resolve_gap), "verdict": res.verdict,
                    "exact_endpoint_match": bool(same_ends), "loop_length": loop.length, "loop_lengths": loop.lengths}]
    return out


# ---------------------------------------------------------------------------
# asymptotics


@register("asymptotics", "collar", "collar norm integral behind the metric expansion", k=(5.0, 10.0, 20.0, 40.0), alpha=0, quad_tol=1e-10)
def _collar(p, seed, jobs):
    out = Outcome()
    if not p["quad_tol"] > 0:
        raise InputError("quad_tol must be positive")
    ks = [float(k) for k in p["k"]]
    rep0 = asy.collar_report(ks, 0)
    rep1 = asy.collar_report(ks, 1)
    exact = [k**3 / np.pi * (1 - 2 / k) + k**3 * np.sin(2 * np.pi / k) / np.pi**2 for k in ks]
    q_err = max(abs(m - e) / (1e-3 * k**3 * p["quad_tol"]) for m, e, k in zip(rep0.measured, exact, ks))
    out.tables["collar"] = [{"k": k, "I0": a, "I1": b, "exact_I0": e, "residual": a - k**3 / np.pi}
                            for k, a, b, e in zip(ks, rep0.measured, rep1.measured, exact)]
    out.results = [rep0.to_dict(), rep1.to_dict()] if int(p["alpha"]) == 0 else [rep1.to_dict()]
    out.check("AC2.quadrature", q_err <= 1.0, q_err, "|I - closed form| / (1e-3 k^3 tol) <= 1")
    out.check("AC2.leading", rep0.fitted["max_abs_residual"] <= 5.0, rep0.fitted["max_abs_residual"], 5.0)
    out.check("AC2.alpha1", max(rep1.measured) <= 5.0, max(rep1.measured), 5.0)
    literal = max(abs(m - k**3 / np.pi + 4 * np.pi / 3) / (1e-3 * k**3 * p["quad_tol"]) for m, k in zip(rep0.measured, ks))
    out.results.append({"asymptotic_target_ratio": literal})
    return out


@register("asymptotics", "pairing", "pairing of a quadratic differential with the plumbing Beltrami field", t=(0.1, 0.05, 0.01))
def _pairing(p, seed, jobs):
    out = Outcome()
    prof2 = asy.smooth_profile(0.1, 0.6)
    rows, w0, w_other, w_prof = [], 0.0, 0.0, 0.0
    for t in p["t"]:
        v0 = asy.plumbing_pairing(t, 0)
        rel = abs(v0 + np.pi / t) / (np.pi / abs(t))
        others = max(abs(asy.plumbing_pairing(t, a)) * abs(t) for a in (1, 2))
        prof = abs(asy.plumbing_pairing(t, 0, prof2) - v0) / abs(v0)
        w0, w_other, w_prof = max(w0, rel), max(w_other, others), max(w_prof, prof)
        rows.append({"t": t, "value_real": v0.real, "value_imag": v0.imag, "rel_error": rel, "alpha12_scaled": others, "profile_gap": prof})
    out.tables["pairing"] = rows
    out.results = rows
    out.check("AC3.alpha0", w0 <= 1e-6, w0, 1e-6)
    out.check("AC3.alpha12", w_other <= 1e-8, w_other, "|value| <= 1e-8 / |t|")
    out.check("AC3.profiles", w_prof <= 1e-6, w_prof, 1e-6)
    return out


@register("asymptotics", "blocks", "determinant and inverse of a large-diagonal block matrix", count=10_000, calibration_seed=101)
def _blocks(p, seed, jobs):
    out = Outcome()
    check = asy.block_bounds_check(calibration_seed=int(p["calibration_seed"]), test_seed=seed + 1, count=int(p["count"]))
    out.results = [{"constants": check.constants, "maxima": check.maxima, "violations": check.violations, "count": check.count}]
    total = sum(check.violations.values())
    out.check("AC4", total == 0, check.violations, "zero violations")
    A = asy.BlockMatrix.assemble([1e3, 2e3], [[0, 0.5], [0.5, 0]], np.zeros((0, 0)))
    ratio = asy.block_det_asymptotics(A)
    out.check("INV.blocks.two-by-two", abs(ratio - (1 - 0.25 / 2e6)) <= 1e-15, ratio, 1 - 0.25 / 2e6)
    return out


@register("asymptotics", "normal-form", "metric normal form in plumbing coordinates", samples=1000)
def _normal_form(p, seed, jobs):
    out = Outcome()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(int(p["samples"])):
        mod = np.exp(-rng.uniform(0.05, 30.0))
        t = mod * np.exp(1j * rng.uniform(-np.pi, np.pi))
        dt = complex(*rng.normal(size=2))
        worst = max(worst, asy.normal_form_check(t, dt).residual)
    out.check("AC5.normal-form", worst <= 1e-10, worst, 1e-10)
    ts = np.exp(-rng.uniform(0.05, 30.0, 5)) * np.exp(1j * rng.uniform(-np.pi, np.pi, 5))
    a, b = asy.rho_metric(ts), asy.rho_from_r(asy.r_from_t(ts))
    gap = abs(a - b) / a
    out.check("AC5.rho", gap <= 4 * np.finfo(float).eps, gap, "rounding")
    out.results = [{"worst_residual": worst, "rho_metric": a, "rho_r": b}]
    return out


ACCEPTANCE = {
    "AC1": ["metrics/series"],
    "AC2": ["asymptotics/collar"],
    "AC3": ["asymptotics/pairing"],
    "AC4": ["asymptotics/blocks"],
    "AC5": ["asymptotics/normal-form"],
    "AC6": ["geodesic/engine"],
    "AC7": ["strata/refraction"],
    "AC8": ["cat0/triangles", "cat0/convexity"],
    "AC9": ["strata/distance"],
    "AC10": ["cat0/flats"],
    "AC11": ["limits/polygonal-limit"],
    "AC12": ["limits/nonunique"],
}
