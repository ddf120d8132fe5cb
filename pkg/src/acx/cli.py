"""Batch experiment driver: one subcommand per experiment, one run per process.

Exit status is 0 when every certificate of the run passed, 2 when some
certificate failed and 1 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import math
import sys

import jax.numpy as jnp
import numpy as np

from . import __version__
from .config import COMMANDS, ConfigError, build_box, load, resolve
from .dirichlet import PreconditionError
from .core import (GridJets, ScalarField, StructureError, evaluate, ja_structure,
                   random_similarity, standard_structure)
from .expr import ExpressionError, parse_expression
from .forms import FormCalculus
from .table import ResultTable

PAIRS = [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2), (2, 1), (1, 2)]


# ---------------------------------------------------------------------------
# shared helpers


def _structure(cfg, box):
    spec = cfg["structure"]
    if spec == "jst":
        return standard_structure(box), None
    kind, _, arg = spec.partition(":")
    if kind == "ja" and arg:
        a = parse_expression(arg)
        return ja_structure(a, box, name=spec), a
    if kind == "similarity" and arg:
        try:
            seed = int(arg)
        except ValueError:
            raise ConfigError(f"similarity seed must be an integer, got {arg!r}") from None
        return random_similarity(seed, box), None
    raise ConfigError(f"structure must be jst, ja:<expr> or similarity:<seed>, got {spec!r}")


def _calc(cfg, box, h=None):
    J, a = _structure(cfg, box)
    jets = None
    if cfg["jets"] == "grid":
        jets = GridJets(box.h if h is None else h)
    return FormCalculus.for_structure(J, box, jets=jets), J, a


def _field(expr, name):
    return ScalarField(parse_expression(expr), "C2", name)


def _sample_points(cfg, box, n):
    """Seeded points in the middle 80% of the box."""
    rng = np.random.default_rng(cfg["seed"])
    lo, hi = np.array(box.lower), np.array(box.upper)
    mid, half = 0.5 * (lo + hi), 0.4 * (hi - lo)
    return mid + half * rng.uniform(-1.0, 1.0, size=(n, 4))


def _ratio(a, b):
    return float(a / b) if b != 0 else math.inf


# ---------------------------------------------------------------------------
# subcommands


def cmd_identities(cfg) -> ResultTable:
    from .families import form_coefficients, identity_study

    box = build_box(cfg)
    tol = cfg["tolerances"]
    J, _ = _structure(cfg, box)
    matrix = lambda y, c: J.matrix(y) + 0.0 * c[0]
    P = _sample_points(cfg, box, cfg["points"])
    cases = [(*PAIRS[i % len(PAIRS)],
              form_coefficients(*PAIRS[i % len(PAIRS)], 1000 * cfg["seed"] + i, cfg["degree"]))
             for i in range(cfg["forms"])]
    t = ResultTable("identities", ["identity", "h", "sup_residual", "ratio_vs_prev_h"])
    if cfg["jets"] == "analytic":
        for r in identity_study(matrix, cases, P):
            t.add(identity=r["identity"], h=None, sup_residual=r["sup_residual"])
            t.certify(f"residual[{r['identity']}]", r["sup_residual"] <= tol["residual"],
                      r["sup_residual"], tol["residual"])
        return t
    prev = {}
    for h in cfg["steps"]:
        for r in identity_study(matrix, cases, P, h=h):
            name = r["identity"]
            ratio = _ratio(prev[name], r["sup_residual"]) if name in prev else None
            t.add(identity=name, h=h, sup_residual=r["sup_residual"], ratio_vs_prev_h=ratio)
            if ratio is not None:
                exact = max(prev[name], r["sup_residual"]) <= tol["residual"]
                ok = exact or tol["ratio_low"] <= ratio <= tol["ratio_high"]
                t.certify(f"halving_ratio[{name}@h={h:g}]", ok, ratio,
                          [tol["ratio_low"], tol["ratio_high"]],
                          "exact at both steps" if exact else "")
            prev[name] = r["sup_residual"]
    return t


def cmd_integrability(cfg) -> ResultTable:
    from .hessian import integrability_check

    box = build_box(cfg)
    tol = cfg["tolerances"]
    calc, J, a = _calc(cfg, box)
    P = _sample_points(cfg, box, cfg["points"])
    rep = integrability_check(calc, P, tol["integrable"] if cfg["jets"] == "analytic" else None)
    t = ResultTable("integrability", ["structure", "sup_norm", "tolerance", "integrable",
                                      "expected", "witness"])
    expected = None
    if a is not None:
        import jax

        grad = jax.grad(a)
        z1 = np.array([1.0, 1.0j, 0.0, 0.0])
        z1a = np.abs(evaluate(lambda x: grad(x).astype(complex) @ z1, P))
        expected = bool(z1a.max() <= tol["zeta1_a"])
    elif cfg["structure"] == "jst":
        expected = True
    t.add(structure=cfg["structure"], sup_norm=rep.sup_norm, tolerance=rep.tolerance,
          integrable=rep.integrable, expected=expected, witness=rep.witness_point)
    if expected is not None:
        t.certify("verdict_matches_criterion", rep.integrable == expected, rep.integrable,
                  expected, "J_a is integrable iff zeta1 a vanishes")
    return t


def cmd_tj(cfg) -> ResultTable:
    from .hessian import (integrability_check, tj_field, tj_ja_closed_form_fn,
                          tj_ja_derived_fn)

    box = build_box(cfg)
    tol = cfg["tolerances"]
    calc, J, a = _calc(cfg, box)
    P = _sample_points(cfg, box, cfg["points"])
    T = tj_field(calc, P).components
    cols = ["point", "T1", "T2", "T3", "T4", "C1", "C2", "C3", "C4", "abs_diff"]
    t = ResultTable("tj", cols)
    C = None
    if a is not None:
        variant = cfg["closed_form"]
        if variant == "derived":
            fn = tj_ja_derived_fn(a)
        elif variant in ("printed", "corrected"):
            fn = tj_ja_closed_form_fn(a, corrected=variant == "corrected")
        else:
            raise ConfigError("closed_form must be printed, corrected or derived")
        C = np.real(evaluate(fn, P))
    for i, p in enumerate(P):
        row = {"point": p.tolist(), **{f"T{k + 1}": T[i, k] for k in range(4)}}
        if C is not None:
            row.update({f"C{k + 1}": C[i, k] for k in range(4)})
            row["abs_diff"] = float(np.abs(T[i] - C[i]).max())
        t.add(**row)
    if C is not None:
        d = float(np.abs(T - C).max())
        t.certify(f"closed_form[{cfg['closed_form']}]", d <= tol["closed_form"], d,
                  tol["closed_form"])
    if integrability_check(calc, P).integrable:
        m = float(np.abs(T).max())
        t.certify("vanishes_when_integrable", m <= tol["zero"], m, tol["zero"])
    return t


def cmd_pointmass(cfg) -> ResultTable:
    from .ma import pointmass_mass

    if cfg["structure"] != "jst":
        raise ConfigError("pointmass closed forms are for the standard structure only")
    tol = cfg["tolerances"]
    A = cfg["A"]
    t = ResultTable("pointmass", ["k", "A", "mass", "closed_form", "rel_err", "bracket_low",
                                  "bracket_high"])
    calc = FormCalculus.for_structure(standard_structure())
    masses = []
    for k in cfg["ks"]:
        m = pointmass_mass(float(k), A, calc, panels=cfg["panels"], order=cfg["order"],
                           sphere=tuple(cfg["sphere"]))
        cf = math.pi ** 2 * (k + A) ** 2 / k ** 2
        # bracket (k+A)^2/(8k^2) pi^2 [min f, max f] with f = 8 on the cap
        br = (k + A) ** 2 / (8.0 * k ** 2) * math.pi ** 2 * 8.0
        lo, hi = br * (1 - tol["closed_form"]), br * (1 + tol["closed_form"])
        t.add(k=k, A=A, mass=m, closed_form=cf, rel_err=abs(m - cf) / cf, bracket_low=lo,
              bracket_high=hi)
        t.certify(f"closed_form[k={k}]", abs(m - cf) <= tol["closed_form"] * cf, abs(m - cf) / cf,
                  tol["closed_form"])
        t.certify(f"bracket[k={k}]", lo <= m <= hi, m, [lo, hi])
        if A == 0:
            e = abs(m - math.pi ** 2) / math.pi ** 2
            t.certify(f"pi2[k={k}]", e <= tol["each"], e, tol["each"])
        masses.append(m)
    e = abs(masses[-1] - math.pi ** 2) / math.pi ** 2
    t.add(k="inf", A=A, mass=masses[-1], closed_form=math.pi ** 2, rel_err=e)
    if A == 0:
        t.certify("limit", e <= tol["limit"], e, tol["limit"])
    return t


def cmd_wedge(cfg) -> ResultTable:
    from .families import pairing_study, polynomial_coefficients

    box = build_box(cfg)
    tol = cfg["tolerances"]
    J, _ = _structure(cfg, box)
    steps = [float(h) for h in cfg["steps"]]
    if len(steps) < 2 or any(b >= a for a, b in zip(steps, steps[1:])):
        raise ConfigError("wedge steps must be at least two decreasing values")
    cases = []
    for i in range(cfg["pairs"]):
        k = 2 * (1000 * cfg["seed"] + i)
        cases.append((np.zeros(1), polynomial_coefficients(k, cfg["degree"], cfg["scale"]),
                      polynomial_coefficients(k + 1, cfg["degree"], cfg["scale"])))
    rows = pairing_study(lambda p, c: J.matrix(p) + 0.0 * c[0], cases, steps, cfg["degree"],
                         cfg["radius"], cfg["power"])
    t = ResultTable("wedge", ["pair", "h", "weak", "weak_swapped", "smooth", "error",
                              "ratio_vs_prev_h", "symmetry_gap", "symmetry_tolerance"])
    for i in range(cfg["pairs"]):
        recs = [r for r in rows if r["case"] == i]
        wedge_certificates(t, i, recs, tol)
    return t


def wedge_certificates(t: ResultTable, i: int, recs: list, tol: dict):
    """Rows and certificates for one pair: halving ratios and swap symmetry.

    The symmetry tolerance is the O(h^2) bound ``C h^2`` with ``C`` fitted
    on the coarsest step from the larger of the two orderings' errors.
    """
    h0 = recs[0]["h"]
    C = max(recs[0]["error"], recs[0]["error_swapped"]) / h0 ** 2
    prev = None
    for r in recs:
        ratio = _ratio(prev, r["error"]) if prev is not None else None
        sym_tol = tol["symmetry_factor"] * C * r["h"] ** 2
        gap = abs(r["weak"] - r["weak_swapped"])
        t.add(pair=i, h=r["h"], weak=r["weak"], weak_swapped=r["weak_swapped"],
              smooth=r["smooth"], error=r["error"], ratio_vs_prev_h=ratio, symmetry_gap=gap,
              symmetry_tolerance=sym_tol)
        if ratio is not None:
            t.certify(f"ratio[pair={i},h={r['h']:g}]",
                      tol["ratio_low"] <= ratio <= tol["ratio_high"], ratio,
                      [tol["ratio_low"], tol["ratio_high"]])
        prev = r["error"]
    t.certify(f"symmetry[pair={i}]", gap <= sym_tol, gap, sym_tol)


def _radial_breakpoints(fns, R, center):
    """Radii where a fold of ``m_s`` switches branch, for radial fields."""
    from scipy.optimize import brentq

    from .smoothing import m_s

    c = np.asarray(center, float)
    rng = np.random.default_rng(0)
    dirs = rng.normal(size=(6, 4))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    rs = np.linspace(0.0, R, 41)
    for f in fns:
        V = np.array([[float(f(jnp.asarray(c + r * d))) for r in rs] for d in dirs])
        if np.abs(V - V[0]).max() > 1e-9 * max(1.0, np.abs(V).max()):
            raise ConfigError("radial breakpoints need fields that are radial about the centre")
    e = np.zeros(4)
    e[0] = 1.0
    on_ray = [lambda r, f=f: float(f(jnp.asarray(c + r * e))) for f in fns]

    def breakpoints(s):
        out = []
        grid = np.linspace(0.0, R, 2001)

        def running(r, k):
            v = on_ray[0](r)
            for g in on_ray[1:k]:
                v = float(m_s(v, g(r), s))
            return v

        for k in range(1, len(on_ray)):
            for target in (-s, s):
                d = lambda r: running(r, k) - on_ray[k](r) - target
                vals = np.array([d(r) for r in grid])
                for j in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
                    out.append(brentq(d, grid[j], grid[j + 1], xtol=1e-15))
        return sorted(out)

    return breakpoints


def cmd_mameasure(cfg) -> ResultTable:
    from .ma import Region, cauchy_deltas, ma_measure
    from .smoothing import smoothmax_schedule

    box = build_box(cfg)
    tol = cfg["tolerances"]
    calc, _, _ = _calc(cfg, box)
    fns = [parse_expression(e) for e in cfg["fields"]]
    widths = [float(w) for w in cfg["widths"]]
    mode = cfg["breakpoints"]
    if mode == "radial":
        bp = _radial_breakpoints(fns, cfg["radius"], np.zeros(4))
    elif mode == "none":
        bp = None
    else:
        raise ConfigError("breakpoints must be 'radial' or 'none'")
    try:
        sched = smoothmax_schedule(fns, widths, bp)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    res = ma_measure(sched, calc, Region.ball(cfg["radius"]), method="radial",
                     neg_tol=tol["negative"])
    t = ResultTable("mameasure", ["step", "s", "total_mass", "delta", "cauchy_delta",
                                  "sup_gap"])
    cd = cauchy_deltas(res.log)
    for r, s in zip(res.log, widths):
        j = r["step"]
        t.add(step=j, s=s, total_mass=r["total_mass"], delta=r["delta"],
              cauchy_delta=None if j == 0 else float(cd[j - 1]), sup_gap=r["sup_gap"])
    tail = cd[cfg["burn_in"]:]
    mono = bool(np.all(np.diff(tail) < 0)) if len(tail) > 1 else False
    t.certify("cauchy_monotone_after_burn_in", mono, tail.tolist(), cfg["burn_in"])
    final = res.log[-1]["delta"]
    t.certify("final_relative_delta", final is not None and final < tol["final"], final,
              tol["final"])
    t.certify("nonnegative_cells", res.negative_mass >= -tol["negative"], res.negative_mass,
              -tol["negative"])
    return t


SMOOTH_COLUMNS = ["resolution", "step", "piece", "s", "binding", "band_min", "band_max",
                  "lambda_min"]


def cmd_smooth(cfg) -> ResultTable:
    from .grid import GridHessian
    from .smoothing import CandidateError, CoverError, SmoothingError, richberg

    tol = cfg["tolerances"]
    runs = []
    boxes = [build_box(cfg)]
    if cfg["refine"]:
        boxes.append(boxes[0].refined())
    for box in boxes:
        calc, _, _ = _calc(cfg, box)
        u = evaluate(parse_expression(cfg["u"]), box.points()).reshape(box.shape)
        try:
            res = richberg(u, cfg["h"], box, calc, cfg["K_lower"], cfg["K_upper"], cfg["r_U"],
                           cfg["r_V"], cfg["sigma"], cfg["backend"], cfg["smooth_profile"],
                           GridHessian(box, calc), tol["band"])
        except (CandidateError, CoverError, SmoothingError) as exc:
            t = ResultTable("smooth", SMOOTH_COLUMNS)
            t.certify(f"construction[n={box.resolution[0]}]", False, None, None, str(exc))
            return t
        runs.append((box, res))
    t = ResultTable("smooth", SMOOTH_COLUMNS)
    for box, res in runs:
        n = box.resolution[0]
        for j, st in enumerate(res.steps):
            t.add(resolution=n, step=j, piece=st["piece"], s=st["s"], binding=st["binding"],
                  band_min=st["band_min"], band_max=st["band_max"], lambda_min=st["lambda_min"])
        c = res.certificates
        t.certify(f"lower_band[n={n}]", c["band_lower"] >= -tol["band"], c["band_lower"],
                  -tol["band"], "u <= psi")
        t.certify(f"upper_band[n={n}]", c["band_upper"] <= tol["band"], c["band_upper"],
                  tol["band"], "psi <= u + h")
        t.certify(f"strict_psh_on_K[n={n}]", c["lambda_min_K"] > 0, c["lambda_min_K"], 0.0)
    if len(runs) == 2:
        d0 = runs[0][1].certificates["second_derivative_K"]
        d1 = runs[1][1].certificates["second_derivative_K"]
        t.certify("second_derivatives_bounded", d1 <= tol["d2_ratio"] * d0, d1 / d0,
                  tol["d2_ratio"], "fine over coarse largest second difference on K")
    return t


def cmd_dirichlet(cfg) -> ResultTable:
    from .dirichlet import (Ball, DirichletProblem, defining_function, recompute_certificates,
                            solution_error, solve_dirichlet)
    from .ma import ma_density_fn

    tol = cfg["tolerances"]
    ball = Ball(cfg["ball"]["center"], cfg["ball"]["radius"])
    exact = parse_expression(cfg["exact"]) if cfg["exact"] else None
    t = ResultTable("dirichlet", ["resolution", "h", "iterations", "residual",
                                  "residual_recomputed", "lambda_min", "boundary_error",
                                  "error", "ratio_vs_prev"])
    prev = None
    for n in cfg["resolutions"]:
        box = build_box(cfg, n)
        calc, _, _ = _calc(cfg, box)
        defining_function(ball, calc, box)
        phi = parse_expression(cfg["phi"]) if isinstance(cfg["phi"], str) else exact
        if phi is None:
            raise ConfigError("dirichlet needs boundary data: set phi or exact")
        f = cfg["f"]
        if f is None:
            if exact is None:
                raise ConfigError("dirichlet needs f or an exact solution")
            f = ma_density_fn(exact, calc)
        elif isinstance(f, str):
            f = parse_expression(f)
        prob = DirichletProblem(ball, phi, f, calc, box)
        U, rep = solve_dirichlet(prob, tol=tol["residual"], psd_tol=tol["psd"],
                                 max_iter=cfg["max_iter"])
        cert = recompute_certificates(prob, U)
        err = solution_error(prob, U, exact) if exact is not None else None
        ratio = _ratio(prev, err) if prev is not None and err is not None else None
        t.add(resolution=n, h=float(np.max(box.h)), iterations=rep.iterations,
              residual=rep.residual, residual_recomputed=cert["residual"],
              lambda_min=cert["lambda_min"], boundary_error=cert["boundary_error"], error=err,
              ratio_vs_prev=ratio)
        t.certify(f"converged[n={n}]", rep.converged, rep.status)
        t.certify(f"residual[n={n}]", cert["residual"] <= tol["residual"], cert["residual"],
                  tol["residual"])
        t.certify(f"residual_matches_recomputation[n={n}]",
                  abs(cert["residual"] - rep.residual) <= tol["match"],
                  abs(cert["residual"] - rep.residual), tol["match"])
        t.certify(f"psh[n={n}]", cert["lambda_min"] >= -tol["psd"], cert["lambda_min"],
                  -tol["psd"])
        t.certify(f"boundary[n={n}]", cert["boundary_error"] <= tol["boundary"],
                  cert["boundary_error"], tol["boundary"])
        if ratio is not None:
            exact_both = max(prev, err) <= tol["exact_floor"]
            t.certify(f"error_ratio[n={n}]",
                      exact_both or tol["ratio_low"] <= ratio <= tol["ratio_high"], ratio,
                      [tol["ratio_low"], tol["ratio_high"]],
                      "exact at both resolutions" if exact_both else "")
        prev = err
    return t


def cmd_compare(cfg) -> ResultTable:
    from .dirichlet import Ball, comparison_check

    box = build_box(cfg)
    tol = cfg["tolerances"]
    calc, _, _ = _calc(cfg, box)
    ball = Ball(cfg["ball"]["center"], cfg["ball"]["radius"])
    u, v = _field(cfg["u"], "u"), _field(cfg["v"], "v")
    H = _field(cfg["H"], "H") if cfg["H"] else None
    verdict = comparison_check(u, v, calc, box, ball, cfg["flavor"], H, tol["comparison"],
                               cfg["modulus_max"])
    t = ResultTable("compare", ["item", "holds", "value", "detail"])
    for name, hv in verdict.hypotheses.items():
        val = next((hv[k] for k in ("max_excess", "lambda_min", "min_margin", "constant")
                    if k in hv), None)
        t.add(item=f"hypothesis:{name}", holds=hv["holds"], value=val,
              detail={k: x for k, x in hv.items() if k not in ("holds",)})
    t.add(item="conclusion", holds=verdict.conclusion_holds, value=verdict.max_excess,
          detail={"worst_cell": verdict.worst_cell, "evaluated": verdict.hypotheses_hold})
    consistent = not (verdict.hypotheses_hold and not verdict.conclusion_holds)
    t.certify("verdict_consistent", consistent,
              {"hypotheses_hold": verdict.hypotheses_hold,
               "conclusion_holds": verdict.conclusion_holds}, None,
              "a conclusion failure under valid hypotheses falsifies the principle")
    return t


def _truncation_radius(j, A):
    """Radius where ``log r + A r = -j`` (the kink of ``max(L, -j)``)."""
    from scipy.optimize import brentq

    if A == 0:
        return math.exp(-j)
    return brentq(lambda r: math.log(r) + A * r + j, 1e-300, math.exp(-j) + 1e-12)


def cmd_sobolev(cfg) -> ResultTable:
    from .ma import Region, scaling_probe, sobolev_norm, truncation_gap

    box = build_box(cfg)
    tol = cfg["tolerances"]
    calc, _, _ = _calc(cfg, box)
    t = ResultTable("sobolev", ["kind", "j", "probe", "norm", "relative", "exponent",
                                "fit_residual"])
    norms = []
    for j in cfg["js"]:
        rj = _truncation_radius(float(j), cfg["A"])
        n = sobolev_norm(truncation_gap(float(j), cfg["A"]), calc, Region.ball(cfg["radius"]),
                         method="radial", breakpoints=[rj])
        norms.append(n)
        t.add(kind="truncation", j=j, norm=n, relative=n / norms[0])
    rel = norms[-1] / norms[0]
    t.certify("truncation_decay", rel < tol["decay"], rel, tol["decay"])
    for expr in cfg["probes"]:
        fit = scaling_probe(_field(expr, expr), calc, np.asarray(cfg["center"], float),
                            cfg["radii"])
        t.add(kind="scaling", probe=expr, exponent=fit.exponent, fit_residual=fit.residual)
        t.certify(f"exponent[{expr}]", fit.exponent >= tol["exponent"], fit.exponent,
                  tol["exponent"])
    return t


COMMAND_FUNCS = {
    "identities": cmd_identities, "integrability": cmd_integrability, "tj": cmd_tj,
    "pointmass": cmd_pointmass, "wedge": cmd_wedge, "mameasure": cmd_mameasure,
    "smooth": cmd_smooth, "dirichlet": cmd_dirichlet, "compare": cmd_compare,
    "sobolev": cmd_sobolev,
}


# ---------------------------------------------------------------------------
# entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="acx", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"acx {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name, help=COMMAND_FUNCS[name].__name__.replace("cmd_", ""))
        s.add_argument("--config", metavar="PATH", help="JSON configuration file")
        s.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
        s.add_argument("--format", choices=("csv", "json"))
        s.add_argument("--seed", type=int)
        s.add_argument("--grid", type=int, metavar="N", help="vertices per axis")
        s.add_argument("--jets", choices=("analytic", "grid"))
    return p


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {k: v for k, v in (("out", args.out), ("format", args.format),
                                   ("seed", args.seed), ("resolution", args.grid),
                                   ("jets", args.jets)) if v is not None}
    try:
        data = load(args.config) if args.config else {}
        cfg = resolve(args.command, data, overrides)
        table = COMMAND_FUNCS[args.command](cfg)
    except (ConfigError, ExpressionError, StructureError, PreconditionError) as exc:
        print(f"acx {args.command}: configuration error: {exc}", file=sys.stderr)
        return 1
    header = {"command": args.command, "version": __version__,
              "config": {k: v for k, v in cfg.items() if k not in ("out", "format")}}
    text = table.render(cfg["format"], header)
    if cfg["out"]:
        with open(cfg["out"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    failed = [c.name for c in table.certificates if not c.passed]
    if failed:
        print(f"acx {args.command}: {len(failed)} certificate(s) failed: {', '.join(failed)}",
              file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
