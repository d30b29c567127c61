"""Command-line drivers: generate immersions, run the checks, dump CSV.

Every command prints a ``key = value`` report to stdout, starting with the
fully resolved configuration.  ``--report`` copies it to a file and ``--csv``
writes the scalar results as a one-row CSV with a header.

Exit codes: 0 pass, 1 a quantitative threshold failed, 2 usage, IO or
domain error.

Configuration is layered: built-in defaults, then an optional INI file
(``--config``, one section per command plus ``[grid]`` and ``[run]``), then
flags.  Unknown sections or keys in the file are rejected.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import logging
import sys
from pathlib import Path

import numpy as np

from . import constrained as cm
from . import moebius as mb
from . import perturbation as pt
from . import variation as vr
from .errors import ContractError, ToriError
from .geometry import codazzi_residual, geometry, liouville_residual
from .immersion import (CurveOnS2, clifford_torus, flat_cmc_torus, hopf_torus_circle,
                        hopf_torus_curve, read_immersion, validate_weak_immersion,
                        write_immersion)

log = logging.getLogger(__name__)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

FAMILIES = ("clifford", "flat-cmc", "hopf-circle", "hopf-curve")
SCHEMES = ("spectral", "fd2")
PLOT_QUANTITIES = ("lam", "H", "two_Q_norm", "ccms_residual", "codazzi_residual",
                   "liouville_residual", "H0_re", "H0_im", "gauss_curvature")

# section -> key -> (parser, default)
SCHEMA = {
    "run": {"seed": (int, 0)},
    "grid": {"n": (int, 64), "n2": (int, None), "scheme": (str, "spectral")},
    "gen": {"a": (float, None), "kappa": (float, None), "curve": (str, None)},
    "geom": {"tol": (float, 1e-8)},
    "fitq": {"tol": (float, 1e-6)},
    "classify": {"tol": (float, 1e-6), "flat_tol": (float, 1e-7), "expect": (str, None)},
    "vc": {"starts_radius": (float, 0.5), "max_iters": (int, 500), "grad_tol": (float, 1e-8),
           "fd_step": (float, 1e-5), "initial_step": (float, 0.05)},
    "secondvar": {"field": (str, "normal-one"), "modes": (int, 3), "amplitude": (float, 0.1),
                  "critical_tol": (float, 1e-5)},
    "mobius-check": {"a": (str, "0.3,0,0,0"), "tol": (float, 1e-6)},
    "descent": {"x0": (str, "0,0"), "epsilon": (float, 0.05), "delta": (float, 0.5),
                "profile": (str, "radial"), "tau": (float, 3.0), "rotation": (float, 0.0),
                "tol": (float, 0.1)},
    "plotdata": {},
}

# keys that must be strictly positive
POSITIVE = {"tol", "flat_tol", "grad_tol", "fd_step", "initial_step", "critical_tol",
            "epsilon", "delta", "starts_radius", "max_iters", "tau", "amplitude", "modes"}


class UsageError(ToriError):
    pass


def load_config(path):
    """Parse an INI file against SCHEMA; unknown sections or keys are errors."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise UsageError(f"malformed config {path}: {exc}") from exc
    out = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise UsageError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise UsageError(f"unknown config key {key!r} in [{section}]")
            typ = SCHEMA[section][key][0]
            try:
                out[(section, key)] = typ(raw)
            except ValueError as exc:
                raise UsageError(f"bad value for {section}.{key}: {raw!r}") from exc
    return out


def resolve(args, command):
    """Defaults < config file < flags, restricted to the sections a command uses."""
    sections = ["run", "grid", command] if command in SCHEMA else ["run", "grid"]
    cfg = {(s, k): d for s in sections for k, (_, d) in SCHEMA[s].items()}
    if args.config:
        for key, value in load_config(args.config).items():
            if key[0] in sections:
                cfg[key] = value
    for (s, k) in list(cfg):
        flag = getattr(args, k, None)
        if flag is not None:
            cfg[(s, k)] = flag
    validate(cfg)
    return cfg


def validate(cfg):
    for (s, k), v in cfg.items():
        if k in POSITIVE and v is not None and not v > 0:
            raise UsageError(f"{s}.{k} must be > 0, got {v}")
    for key in (("grid", "n"), ("grid", "n2")):
        n = cfg.get(key)
        if n is not None and (n < 8 or n % 2):
            raise UsageError(f"{key[0]}.{key[1]} must be even and >= 8, got {n}")
    if cfg[("grid", "scheme")] not in SCHEMES:
        raise UsageError(f"scheme must be one of {SCHEMES}")


def parse_vector(text, size, name):
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"{name} must be {size} comma-separated numbers, got {text!r}") from exc
    if len(vals) != size:
        raise UsageError(f"{name} must have {size} components, got {len(vals)}")
    return np.array(vals)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, complex):
        return f"{v.real!r}{v.imag:+.17g}j"
    if isinstance(v, np.ndarray):
        return ",".join(repr(float(x)) for x in v)
    return str(v)


def emit(args, cfg, results, status):
    buf = io.StringIO()
    buf.write(f"# conftori {args.command}\n[config]\n")
    if getattr(args, "input", None):
        buf.write(f"input = {args.input}\n")
    for (s, k), v in sorted(cfg.items(), key=lambda kv: kv[0]):
        buf.write(f"{s}.{k} = {_fmt(v)}\n")
    buf.write("[result]\n")
    for k, v in results.items():
        buf.write(f"{k} = {_fmt(v)}\n")
    buf.write(f"status = {status}\n")
    text = buf.getvalue()
    sys.stdout.write(text)
    if args.report:
        Path(args.report).write_text(text)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(list(results) + ["status"])
            w.writerow([_fmt(v) for v in results.values()] + [status])


def _load(args, cfg):
    try:
        phi = read_immersion(args.input)
    except OSError as exc:
        raise UsageError(f"cannot read {args.input}: {exc}") from exc
    return phi, cfg[("grid", "scheme")]


def _grid_sizes(cfg):
    n = cfg[("grid", "n")]
    return n, cfg[("grid", "n2")] or n


def cmd_gen(args, cfg):
    n1, n2 = _grid_sizes(cfg)
    fam = args.family
    if fam == "clifford":
        phi, params = clifford_torus(n1, n2), {}
    elif fam == "flat-cmc":
        a = cfg[("gen", "a")]
        if a is None:
            raise UsageError("flat-cmc needs --a")
        phi, params = flat_cmc_torus(a, n1, n2), {"a": a}
    elif fam == "hopf-circle":
        k = cfg[("gen", "kappa")]
        if k is None:
            raise UsageError("hopf-circle needs --kappa")
        phi, params = hopf_torus_circle(k, n1, n2), {"kappa": k}
    else:
        path = cfg[("gen", "curve")]
        if path is None:
            raise UsageError("hopf-curve needs --curve FILE (rows x,y,z on the unit S^2)")
        try:
            pts = np.loadtxt(path, delimiter=",", ndmin=2)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read curve {path}: {exc}") from exc
        if np.linalg.norm(pts[-1] - pts[0]) > 1e-6:
            pts = np.vstack([pts, pts[:1]])
        phi, params = hopf_torus_curve(CurveOnS2(pts), n1, n2), {"curve": path}
    meta = {"family": fam, **params, "n1": n1, "n2": n2}
    write_immersion(args.out, phi, meta)
    results = {"out": args.out, "family": fam, "n1": n1, "n2": n2,
               "omega1": phi.lattice.omega1, "omega2": phi.lattice.omega2}
    return results, True


def cmd_geom(args, cfg):
    phi, scheme = _load(args, cfg)
    tol = cfg[("geom", "tol")]
    geo = geometry(phi, scheme)
    res = {"area": geo.area, "lam_min": float(geo.lam.min()), "lam_max": float(geo.lam.max()),
           "H_min": float(geo.H.min()), "H_max": float(geo.H.max()),
           "conformality_defect": geo.conformality_defect}
    ok = True
    if phi.conformal:
        res["codazzi_residual"] = codazzi_residual(geo)["sup_norm"]
        res["liouville_residual"] = float(np.max(np.abs(liouville_residual(geo))))
        ok = res["codazzi_residual"] <= tol and res["liouville_residual"] <= tol
    weak = validate_weak_immersion(phi, scheme)
    res["min_det_g"] = weak["min_det_g"]
    res["gauss_map_energy"] = weak["gauss_map_energy"]
    return res, ok and weak["nondegenerate"]


def cmd_fitq(args, cfg):
    phi, scheme = _load(args, cfg)
    geo = geometry(phi, scheme)
    fit = cm.fit_Q(geo, cfg[("fitq", "tol")])
    ell = cm.ellipticity(geo, fit.Q)
    res = {"Q1": fit.Q.q1, "Q2": fit.Q.q2, "rel_residual": fit.rel_residual,
           "ccms_residual": cm.ccms_residual(geo, fit.Q), "rank": fit.rank,
           "minimal": fit.minimal, "degenerate": fit.degenerate,
           "two_Q_norm_min": float(ell.two_Q_norm.min()),
           "two_Q_norm_max": float(ell.two_Q_norm.max()),
           "ellipticity": ell.classification,
           "fraction_strictly_elliptic": ell.strictly_elliptic,
           "fraction_hyperbolic": ell.hyperbolic}
    return res, fit.rel_residual <= cfg[("fitq", "tol")]


def cmd_classify(args, cfg):
    phi, scheme = _load(args, cfg)
    geo = geometry(phi, scheme)
    c = cm.classify_theorem_I2(geo, cfg[("classify", "tol")], cfg[("classify", "flat_tol")])
    res = {"bucket": c.bucket, "Q1": c.fit.Q.q1, "Q2": c.fit.Q.q2,
           "rel_residual": c.fit.rel_residual, "ccms_residual": c.ccms_residual,
           "isothermic": c.isothermic.is_isothermic, "isothermic_theta": c.isothermic.theta,
           "isothermic_residual": c.isothermic.residual, "flatness": c.flatness,
           "H_variation": c.h_variation}
    expect = cfg[("classify", "expect")]
    return res, expect is None or expect == c.bucket


def cmd_vc(args, cfg):
    phi, scheme = _load(args, cfg)
    opts = mb.VcOptions(**{k: cfg[("vc", k)] for k in SCHEMA["vc"]})
    r = mb.conformal_volume(phi, opts, scheme)
    res = {"vc": r.vc, "argmax": r.argmax, "argmax_norm": float(np.linalg.norm(r.argmax)),
           "area": mb.AreaFunctional(phi, scheme)(np.zeros(4)), "converged": r.converged,
           "warning": r.warning or ""}
    return res, r.converged


def cmd_secondvar(args, cfg):
    phi, scheme = _load(args, cfg)
    geo = geometry(phi, scheme)
    fit = cm.fit_Q(geo)
    kind = cfg[("secondvar", "field")]
    zero = np.zeros(geo.grid.shape)
    if kind == "normal-one":
        w = vr.compose(geo, zero, zero, np.ones(geo.grid.shape))
    elif kind == "random":
        rng = np.random.default_rng(cfg[("run", "seed")])
        w = vr.random_variation(geo, rng, cfg[("secondvar", "modes")],
                                cfg[("secondvar", "amplitude")])
    else:
        raise UsageError(f"unknown field {kind!r}; expected normal-one or random")
    res = {"Q1": fit.Q.q1, "Q2": fit.Q.q2, "ccms_residual": cm.ccms_residual(geo, fit.Q)}
    try:
        value = vr.second_variation(geo, fit.Q, w, cfg[("secondvar", "critical_tol")])
    except ContractError as exc:
        res["error"] = str(exc)
        return res, False
    res.update(vr.second_variation_terms(geo, fit.Q, w))
    res["second_variation"] = value
    res["unreduced"] = float(vr.second_variation_unreduced(geo, fit.Q, w))
    return res, True


def cmd_mobius_check(args, cfg):
    phi, scheme = _load(args, cfg)
    a = mb.as_param(parse_vector(cfg[("mobius-check", "a")], 4, "a"))
    tol = cfg[("mobius-check", "tol")]
    v1 = mb.check_lemma_V1(a, phi, scheme)
    v2 = mb.check_lemma_V2(a, phi, scheme)
    return {"a": a, "weingarten_discrepancy": v1, "mean_curvature_discrepancy": v2}, \
        v1 <= tol and v2 <= tol


def cmd_descent(args, cfg):
    phi, scheme = _load(args, cfg)
    x0 = parse_vector(cfg[("descent", "x0")], 2, "x0")
    prof = cfg[("descent", "profile")]
    if prof == "radial":
        chi = pt.radial_profile()
    elif prof == "tau":
        chi = pt.chi_tau(cfg[("descent", "tau")])
    else:
        raise UsageError(f"unknown profile {prof!r}; expected radial or tau")
    spec = pt.BumpSpec(complex(*x0), chi, cfg[("descent", "epsilon")],
                       cfg[("descent", "rotation")])
    r = pt.descent_expansion_check(phi, spec, cfg[("descent", "delta")], scheme=scheme)
    res = {"epsilon": r.epsilon, "t": r.t, "area_change": r.lhs, "model": r.model,
           "rel_err": r.rel_err, "F_chi": r.F, "alpha": r.alpha,
           "newton_residual": r.newton_residual}
    return res, r.rel_err <= cfg[("descent", "tol")]


def plot_field(phi, scheme, quantity):
    if quantity not in PLOT_QUANTITIES:
        raise UsageError(f"unknown quantity {quantity!r}; expected one of {PLOT_QUANTITIES}")
    geo = geometry(phi, scheme)
    if quantity in ("lam", "H", "H0_re", "H0_im"):
        return getattr(geo, quantity)
    if quantity == "gauss_curvature":
        return cm.gauss_curvature(geo)
    if quantity == "codazzi_residual":
        c = codazzi_residual(geo)
        return np.hypot(c["field1"], c["field2"])
    if quantity == "liouville_residual":
        return liouville_residual(geo)
    fit = cm.fit_Q(geo)
    if quantity == "two_Q_norm":
        return fit.Q.two_norm(geo.lam)
    return np.abs(fit.residual)


def cmd_plotdata(args, cfg):
    if args.quantity not in PLOT_QUANTITIES:
        raise UsageError(f"unknown quantity {args.quantity!r}; expected one of {PLOT_QUANTITIES}")
    phi, scheme = _load(args, cfg)
    values = plot_field(phi, scheme, args.quantity)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["x1", "x2", args.quantity])
        for x1, x2, v in zip(phi.grid.x1.ravel(), phi.grid.x2.ravel(), values.ravel()):
            w.writerow([repr(float(x1)), repr(float(x2)), repr(float(v))])
    finally:
        if args.out:
            out.close()
    return None, True


COMMANDS = {
    "gen": cmd_gen, "geom": cmd_geom, "fitq": cmd_fitq, "classify": cmd_classify,
    "vc": cmd_vc, "secondvar": cmd_secondvar, "mobius-check": cmd_mobius_check,
    "descent": cmd_descent, "plotdata": cmd_plotdata,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [run], [grid] and per-command sections")
    common.add_argument("--n", type=int, help="grid size (even, >= 8)")
    common.add_argument("--n2", type=int, help="second grid size, defaults to --n")
    common.add_argument("--scheme", choices=SCHEMES)
    common.add_argument("--seed", type=int)
    common.add_argument("--report", help="copy the text report here")
    common.add_argument("--csv", help="write scalar results as one-row CSV")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="conftori", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="write a CTL1 immersion file",
                       description="CSV fields: out, family, n1, n2, omega1, omega2.")
    g.add_argument("family", choices=FAMILIES)
    g.add_argument("--a", type=float, help="flat-cmc radius parameter in (0, 1)")
    g.add_argument("--kappa", type=float, help="geodesic curvature of the hopf-circle base")
    g.add_argument("--curve", help="CSV of unit vectors x,y,z sampling a closed curve on S^2")
    g.add_argument("-o", "--out", default="torus.ctl")

    def with_input(name, helptext, fields):
        sp = sub.add_parser(name, parents=[common], help=helptext,
                            description=f"{helptext}. CSV fields: {fields}, status.")
        sp.add_argument("input", help="CTL1 immersion file")
        return sp

    sp = with_input("geom", "first and second order geometry with residual checks",
                    "area, lam_min, lam_max, H_min, H_max, conformality_defect, "
                    "codazzi_residual, liouville_residual, min_det_g, gauss_map_energy")
    sp.add_argument("--tol", type=float, help="threshold for the Codazzi and Gauss residuals")
    sp = with_input("fitq", "fit the quadratic differential Q",
                    "Q1, Q2, rel_residual, ccms_residual, rank, minimal, degenerate, "
                    "two_Q_norm_min, two_Q_norm_max, ellipticity, fraction_strictly_elliptic, "
                    "fraction_hyperbolic")
    sp.add_argument("--tol", type=float, help="threshold on the relative fit residual")
    sp = with_input("classify", "minimal / flat_cmc / constrained_only / not_constrained",
                    "bucket, Q1, Q2, rel_residual, ccms_residual, isothermic, "
                    "isothermic_theta, isothermic_residual, flatness, H_variation")
    sp.add_argument("--tol", type=float)
    sp.add_argument("--flat-tol", dest="flat_tol", type=float)
    sp.add_argument("--expect", help="fail (exit 1) unless the bucket matches")
    sp = with_input("vc", "conformal volume by multi-start ascent over Moebius maps",
                    "vc, argmax, argmax_norm, area, converged, warning")
    sp.add_argument("--starts-radius", dest="starts_radius", type=float)
    sp.add_argument("--max-iters", dest="max_iters", type=int)
    sp.add_argument("--grad-tol", dest="grad_tol", type=float)
    sp = with_input("secondvar", "constrained second variation at a critical torus",
                    "Q1, Q2, ccms_residual, normal, coupling, curl, second_variation, unreduced")
    sp.add_argument("--field", help="normal-one (w = n) or random (seeded)")
    sp.add_argument("--modes", type=int)
    sp.add_argument("--amplitude", type=float)
    sp.add_argument("--critical-tol", dest="critical_tol", type=float)
    sp = with_input("mobius-check", "transformation laws of h0 and H under Psi_a",
                    "a, weingarten_discrepancy, mean_curvature_discrepancy")
    sp.add_argument("--a", help="Moebius parameter a1,a2,a3,a4 with |a| < 1")
    sp.add_argument("--tol", type=float)
    sp = with_input("descent", "area change of the bump family against its quadratic model",
                    "epsilon, t, area_change, model, rel_err, F_chi, alpha, newton_residual")
    sp.add_argument("--x0", help="bump centre x1,x2 in the chart")
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--profile", help="radial or tau")
    sp.add_argument("--tau", type=float)
    sp.add_argument("--rotation", type=float)
    sp.add_argument("--tol", type=float)
    sp = sub.add_parser("plotdata", parents=[common], help="dump a scalar field as x1,x2,value CSV")
    sp.add_argument("input")
    sp.add_argument("quantity", help=f"one of {', '.join(PLOT_QUANTITIES)}")
    sp.add_argument("-o", "--out", help="CSV path (stdout if omitted)")
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args, args.command)
        results, ok = COMMANDS[args.command](args, cfg)
    except ContractError as exc:
        print(f"conftori: contract failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ToriError, ValueError, OSError) as exc:
        print(f"conftori: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if results is not None:
        emit(args, cfg, results, "pass" if ok else "fail")
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
