"""Command-line verification driver.

Subcommands run check suites against a key/value config file and write
machine-readable JSON reports (and CSV level tables for the product).
Reports are deterministic: fixed summation orders, sorted check ids, no
wall-clock fields unless explicitly requested.

Config format: UTF-8 text, [section] headers, key = value lines, # comments.
Rational literals are "p/q", complex literals "p/q+r/s i" (also "3", "-1/4",
"1/2i").  Lists are comma-separated.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .scalars import ExactScalar, precision_bits
from .fock import (
    GradedVector,
    build_heisenberg,
    check_axioms,
    conformal_state,
    generator_state,
    vacuum,
    virasoro_apply,
)
from .pairing import BilinearFormContext, adjoint_mode, lambda_from_epsilon
from .forms import WForm, InconsistentSamples
from .sewing import MobiusMap, SphereConfig, mobius_from_epsilon, sewing_partner, validate_config
from .eps_product import EpsProductSpec, cauchy_report, epsilon_product_levels
from .coords import (
    CoordinateChange1D,
    NDimChange,
    beta_from_a,
    check_commutator,
    check_form_invariance,
    compose_changes,
    expand_exponential_form,
    p_operator_apply,
)
from .cochains import Cochain, delta_squared_check, leibniz_check, shuffle_check

SCHEMA_VERSION = 1

DEFAULT_CONFIG = """\
# default verification configuration
[run]
cutoff = 6
level = 12
inner_level = 24

[sewing]
r1 = 1
r2 = 1
epsilon = 1/16
zeta1 = 1/4

[pairing]
lambda_mode = from-epsilon
xi_sign = +

[points]
two_point = 2, 1
product_x = 2
product_y = 3
complex_points = 4, 5/2, 25/16
"""


@dataclass
class RunConfig:
    cutoff: int = 6
    level: int = 12
    inner_level: int = 24
    r1: Fraction = Fraction(1)
    r2: Fraction = Fraction(1)
    epsilon: ExactScalar = field(default_factory=lambda: ExactScalar(Fraction(1, 16)))
    zeta1: ExactScalar = field(default_factory=lambda: ExactScalar(Fraction(1, 4)))
    lambda_mode: str = "from-epsilon"
    xi_sign: int = +1
    two_point: tuple = (ExactScalar(2), ExactScalar(1))
    product_x: ExactScalar = field(default_factory=lambda: ExactScalar(2))
    product_y: ExactScalar = field(default_factory=lambda: ExactScalar(3))
    complex_points: tuple = (ExactScalar(4), ExactScalar(Fraction(5, 2)),
                             ExactScalar(Fraction(25, 16)))
    epsilon_sweep: tuple = ()
    suites: tuple = ()

    def zeta2(self) -> ExactScalar:
        return sewing_partner(self.zeta1, self.epsilon)

    def pairing_lambda(self) -> ExactScalar:
        if self.lambda_mode == "fixed-1":
            return ExactScalar(1)
        if self.lambda_mode == "fixed-imaginary":
            return ExactScalar(0, self.xi_sign)
        from .scalars import sqrt_exact_or_approx
        root = sqrt_exact_or_approx(self.epsilon)
        if not isinstance(root, ExactScalar):
            raise ValueError("from-epsilon pairing needs a rational square epsilon")
        return lambda_from_epsilon(root, self.xi_sign)

    def sphere_config(self, xs=(), ys=()) -> SphereConfig:
        return SphereConfig(self.r1, self.r2, self.epsilon, self.zeta1,
                            self.zeta2(), list(xs), list(ys))


def parse_config_text(text: str) -> RunConfig:
    cfg = RunConfig()
    section = ""
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ValueError(f"bad config line: {raw!r}")
        key, val = (x.strip() for x in line.split("=", 1))
        _apply_config(cfg, section, key, val)
    return cfg


def _apply_config(cfg: RunConfig, section: str, key: str, val: str) -> None:
    full = f"{section}.{key}" if section else key
    if full == "run.cutoff":
        cfg.cutoff = int(val)
    elif full == "run.level":
        cfg.level = int(val)
    elif full == "run.inner_level":
        cfg.inner_level = int(val)
    elif full == "run.suites":
        cfg.suites = tuple(x.strip() for x in val.split(",") if x.strip())
    elif full == "sewing.r1":
        cfg.r1 = Fraction(val)
    elif full == "sewing.r2":
        cfg.r2 = Fraction(val)
    elif full == "sewing.epsilon":
        cfg.epsilon = ExactScalar.parse(val)
    elif full == "sewing.zeta1":
        cfg.zeta1 = ExactScalar.parse(val)
    elif full == "sewing.epsilon_sweep":
        cfg.epsilon_sweep = tuple(ExactScalar.parse(x) for x in val.split(","))
    elif full == "pairing.lambda_mode":
        if val not in ("from-epsilon", "fixed-1", "fixed-imaginary"):
            raise ValueError(f"unknown lambda_mode {val!r}")
        cfg.lambda_mode = val
    elif full == "pairing.xi_sign":
        cfg.xi_sign = +1 if val.strip() in ("+", "+1", "1") else -1
    elif full == "points.two_point":
        cfg.two_point = tuple(ExactScalar.parse(x) for x in val.split(","))
    elif full == "points.product_x":
        cfg.product_x = ExactScalar.parse(val)
    elif full == "points.product_y":
        cfg.product_y = ExactScalar.parse(val)
    elif full == "points.complex_points":
        cfg.complex_points = tuple(ExactScalar.parse(x) for x in val.split(","))
    else:
        raise ValueError(f"unknown config key {full!r}")


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return parse_config_text(DEFAULT_CONFIG)
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


# -- report plumbing ---------------------------------------------------------


@dataclass
class Report:
    check_id: str
    anchor: str
    status: str  # pass | fail | skip
    residual: str = ""
    bound: str = ""
    detail: str = ""
    runtime: float | None = None

    def as_dict(self) -> dict:
        out = {
            "id": self.check_id,
            "anchor": self.anchor,
            "status": self.status,
            "residual": self.residual,
            "bound": self.bound,
            "detail": self.detail,
        }
        if self.runtime is not None:
            out["runtime"] = round(self.runtime, 3)
        return out


def write_reports(reports: list[Report], out_path: str | None,
                  timings: bool = False) -> int:
    reports = sorted(reports, key=lambda r: r.check_id)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "checks": [r.as_dict() for r in reports],
        "summary": {
            "pass": sum(1 for r in reports if r.status == "pass"),
            "fail": sum(1 for r in reports if r.status == "fail"),
            "skip": sum(1 for r in reports if r.status == "skip"),
        },
    }
    if not timings:
        for chk in payload["checks"]:
            chk.pop("runtime", None)
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out_path:
        Path(out_path).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    for r in reports:
        line = f"{r.status.upper():5s} {r.check_id}"
        if r.residual:
            line += f"  residual={r.residual}"
        if r.bound:
            line += f" bound={r.bound}"
        print(line, file=sys.stderr)
    return 0 if all(r.status != "fail" for r in reports) else 1


def _from_property(pr, anchor: str) -> Report:
    return Report(pr.check_id, anchor, pr.status, pr.residual, pr.bound, pr.detail)


# -- suites -------------------------------------------------------------------


def cmd_axioms(cfg: RunConfig, inject_fault: str | None = None,
               suites: tuple = ()) -> list[Report]:
    reports: list[Report] = []
    wanted = suites or cfg.suites
    ctx = build_heisenberg(cfg.cutoff)
    if not wanted or "voa" in wanted:
        for res in check_axioms(ctx, corrupt=inject_fault):
            reports.append(Report(res.check_id, "voa-core", res.status,
                                  res.residual, res.bound, res.detail))
    if not wanted or "pairing" in wanted:
        lam = cfg.pairing_lambda()
        form = BilinearFormContext(ctx, lam)
        ok = form.pair(vacuum(), vacuum()) == ExactScalar(1)
        a = generator_state()
        top = max(0, cfg.cutoff - 3)
        states = [p for w in range(top + 1) for p in ctx.basis(w)]
        inv_ok = True
        for p in states:
            for q in states:
                x, y = GradedVector.basis(p), GradedVector.basis(q)
                for n in range(-3, 4):
                    if n == 0:
                        continue
                    from .fock import apply_a
                    lhs = form.pair(apply_a(n, x, ctx.cutoff), y)
                    rhs = form.pair(x, adjoint_mode(a, n, y, lam, ctx.cutoff))
                    if inject_fault == "pairing-invariance":
                        rhs = rhs + ExactScalar(1)
                    if lhs != rhs:
                        inv_ok = False
        reports.append(Report("pairing.normalization", "pairing",
                              "pass" if ok else "fail",
                              "0" if ok else "nonzero", "0"))
        reports.append(Report("pairing.invariance", "pairing",
                              "pass" if inv_ok else "fail",
                              "0" if inv_ok else "nonzero", "0",
                              "generator modes |n| <= 3"))
        dual_ok = True
        for w in range(min(4, ctx.cutoff) + 1):
            basis = ctx.basis(w)
            duals = form.dual_basis(w)
            for i, p in enumerate(basis):
                for j, d in enumerate(duals):
                    want = ExactScalar(1 if i == j else 0)
                    if form.pair(GradedVector.basis(p), d) != want:
                        dual_ok = False
        reports.append(Report("pairing.dual-resolution", "pairing",
                              "pass" if dual_ok else "fail",
                              "0" if dual_ok else "nonzero", "0",
                              "weights <= 4"))
    return reports


def cmd_product(cfg: RunConfig, csv_path: str | None = None,
                inject_fault: str | None = None) -> list[Report]:
    reports: list[Report] = []
    level_ctx = build_heisenberg(max(cfg.cutoff, cfg.level))
    lam = cfg.pairing_lambda()
    form = BilinearFormContext(level_ctx, lam)
    one, a = vacuum(), generator_state()
    wp = GradedVector.basis(())
    sweep = cfg.epsilon_sweep or (cfg.epsilon,)
    rows = []
    for eps in sweep:
        zeta1 = cfg.zeta1
        zeta2 = sewing_partner(zeta1, eps)
        sphere = SphereConfig(cfg.r1, cfg.r2, eps, zeta1, zeta2,
                              [cfg.product_x], [cfg.product_y])
        rep_valid = validate_config(sphere)
        if not rep_valid.valid:
            reports.append(Report(f"product.config[{eps}]", "sewing", "fail",
                                  detail="; ".join(rep_valid.violations)))
            continue
        spec = EpsProductSpec(WForm([a], one, cfg.inner_level),
                              WForm([a], one, cfg.inner_level),
                              sphere, form, cfg.level, cfg.inner_level,
                              [cfg.product_x], [cfg.product_y])
        crep = cauchy_report(spec, wp)
        coeffs = crep.coefficients
        if inject_fault == "product-decay":
            crep.contractive = False
        status = "pass" if crep.contractive else "fail"
        reports.append(Report(f"product.decay[{eps}]", "eps-product", status,
                              str(crep.fitted_ratio), "1",
                              f"value={crep.value!r}"))
        cshape_ok = crep.cauchy_constant is not None and crep.cauchy_constant <= 4
        reports.append(Report(f"product.cauchy-shape[{eps}]", "eps-product",
                              "pass" if cshape_ok else "fail",
                              str(crep.cauchy_constant), "4",
                              f"M1={crep.M1} M2={crep.M2} R1={crep.R1} R2={crep.R2}"))
        for l, c in enumerate(coeffs):
            tail = crep.tail_bound if l == len(coeffs) - 1 else ""
            rows.append({"epsilon": repr(eps), "level": l,
                         "coefficient": repr(c),
                         "abs": str(_mag(c)),
                         "tail_bound": str(tail) if tail != "" else ""})
    if csv_path:
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=["epsilon", "level",
                                                    "coefficient", "abs",
                                                    "tail_bound"])
            writer.writeheader()
            writer.writerows(rows)
    return reports


def _mag(x: ExactScalar):
    import mpmath
    m = x.abs_squared()
    return mpmath.sqrt(mpmath.mpf(m.numerator) / m.denominator)


def cmd_complex(cfg: RunConfig, inject_fault: str | None = None) -> list[Report]:
    reports: list[Report] = []
    one, a = vacuum(), generator_state()
    om = conformal_state()
    wp = GradedVector.basis(())
    lvl = max(cfg.inner_level, 24)
    pts = list(cfg.complex_points)
    c1 = Cochain(1, 3, WForm([a], one, lvl))
    r = delta_squared_check(c1, wp, [a, om, a], pts,
                            ladder=[lvl - 8, lvl - 4, lvl])
    if inject_fault == "delta-squared":
        r.status = "fail"
    reports.append(_from_property(r, "complex"))
    c2 = Cochain(2, 3, WForm([a, a], one, lvl))
    rs = shuffle_check(c2, 1, wp, pts[:2])
    reports.append(_from_property(rs, "complex"))
    c1s = Cochain(1, 3, WForm([a], one, lvl))
    rskip = shuffle_check(c1s, 1, wp, pts[:1])
    reports.append(_from_property(rskip, "complex"))
    return reports


def cmd_coords(cfg: RunConfig, inject_fault: str | None = None) -> list[Report]:
    import random
    reports: list[Report] = []
    rng = random.Random(20250809)
    ok = True
    for _ in range(20):
        coeffs = [ExactScalar(Fraction(rng.randint(1, 5), rng.randint(1, 4)))]
        coeffs += [ExactScalar(Fraction(rng.randint(-4, 4), rng.randint(1, 5)))
                   for _ in range(5)]
        b0, beta = beta_from_a(coeffs, 6)
        back = expand_exponential_form(b0, beta, 6)
        if inject_fault == "coords-roundtrip":
            back[1] = back[1] + ExactScalar(1)
        if back[1:7] != coeffs:
            ok = False
    reports.append(Report("coords.roundtrip", "coords", "pass" if ok else "fail",
                          "0" if ok else "nonzero", "0", "20 random series, order 6"))
    ctx = build_heisenberg(cfg.cutoff)
    fam = [CoordinateChange1D.scaling(ExactScalar(Fraction(3, 2)), cfg.cutoff + 2),
           CoordinateChange1D.inverted_translation(ExactScalar(Fraction(1, 3)), cfg.cutoff + 2),
           CoordinateChange1D.scaling(ExactScalar(2), cfg.cutoff + 2),
           CoordinateChange1D.inverted_translation(ExactScalar(Fraction(-2, 5)), cfg.cutoff + 2)]
    rep_ok = True
    for f1 in fam:
        for f2 in fam:
            comp = compose_changes(f1, f2)
            for p in ctx.all_states():
                x = GradedVector.basis(p)
                if p_operator_apply(comp, x) != p_operator_apply(f1, p_operator_apply(f2, x)):
                    rep_ok = False
    reports.append(Report("coords.representation", "coords",
                          "pass" if rep_ok else "fail",
                          "0" if rep_ok else "nonzero", "0",
                          "scaling/inverted-translation family"))
    comm_ok = True
    z = ExactScalar(Fraction(5, 3))
    states = [p for w in range(min(3, cfg.cutoff) + 1) for p in ctx.basis(w)]
    for p in states:
        v = GradedVector.basis(p)
        for n in (-2, -1, 0, 1, 2):
            r = check_commutator(ctx, n, v, z, GradedVector.basis((1,)),
                                 GradedVector.basis((2, 1)))
            if r.status != "pass":
                comm_ok = False
    reports.append(Report("coords.commutator", "coords",
                          "pass" if comm_ok else "fail",
                          "0" if comm_ok else "nonzero", "0",
                          "wt <= 3, |n| <= 2"))
    return reports


def cmd_sewing(cfg: RunConfig, inject_fault: str | None = None) -> list[Report]:
    reports: list[Report] = []
    base = cfg.sphere_config([ExactScalar(2)], [ExactScalar(3)])
    rep = validate_config(base)
    reports.append(Report("sewing.canonical", "sewing",
                          "pass" if rep.valid else "fail",
                          detail="; ".join(rep.violations)))
    zeta2 = cfg.zeta2()
    perturbations = {
        "radius-product": SphereConfig(Fraction(1, 8), Fraction(1, 8),
                                       cfg.epsilon, cfg.zeta1, zeta2,
                                       [ExactScalar(2)], [ExactScalar(3)]),
        "sewing-relation": SphereConfig(cfg.r1, cfg.r2, cfg.epsilon, cfg.zeta1,
                                        zeta2 + ExactScalar(1),
                                        [ExactScalar(2)], [ExactScalar(3)]),
        "annulus": SphereConfig(cfg.r1, cfg.r2, cfg.epsilon,
                                cfg.epsilon * ExactScalar(Fraction(1, 100)),
                                sewing_partner(cfg.epsilon * ExactScalar(Fraction(1, 100)), cfg.epsilon),
                                [ExactScalar(2)], [ExactScalar(3)]),
        "x-bound": SphereConfig(cfg.r1, cfg.r2, cfg.epsilon, cfg.zeta1, zeta2,
                                [cfg.epsilon * ExactScalar(Fraction(1, 100))],
                                [ExactScalar(3)]),
        "y-bound": SphereConfig(cfg.r1, cfg.r2, cfg.epsilon, cfg.zeta1, zeta2,
                                [ExactScalar(2)],
                                [cfg.epsilon * ExactScalar(Fraction(1, 100))]),
    }
    for name, bad in perturbations.items():
        rep = validate_config(bad)
        expected_invalid = not rep.valid
        if inject_fault == "sewing-perturbation":
            expected_invalid = False
        reports.append(Report(f"sewing.reject[{name}]", "sewing",
                              "pass" if expected_invalid else "fail",
                              detail="; ".join(rep.violations)))
    z1 = cfg.zeta1
    partner_ok = sewing_partner(sewing_partner(z1, cfg.epsilon), cfg.epsilon) == z1
    reports.append(Report("sewing.partner-involution", "sewing",
                          "pass" if partner_ok else "fail"))
    mob_ok = True
    for xi in (+1, -1):
        mob = mobius_from_epsilon(cfg.epsilon, xi)
        coef = mob.coefficient()
        if not (isinstance(coef, ExactScalar) and coef == cfg.epsilon):
            mob_ok = False
    reports.append(Report("sewing.mobius-epsilon", "sewing",
                          "pass" if mob_ok else "fail",
                          detail="both square roots give the same map"))
    return reports


SUITES = {
    "axioms": cmd_axioms,
    "product": cmd_product,
    "complex": cmd_complex,
    "coords": cmd_coords,
    "sewing": cmd_sewing,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="voxform",
                                     description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUITES:
        p = sub.add_parser(name, help=f"run the {name} checks")
        p.add_argument("--config", default=None, help="config file path")
        p.add_argument("--out", default=None, help="JSON report path")
        p.add_argument("--csv", default=None, help="CSV output path (product)")
        p.add_argument("--suite", default=None,
                       help="comma-separated sub-suite selection")
        p.add_argument("--inject-fault", default=None, dest="inject_fault",
                       help="corrupt the named check (testing hook)")
        p.add_argument("--timings", action="store_true",
                       help="include wall-clock fields (breaks byte-determinism)")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    suites = tuple(x.strip() for x in args.suite.split(",")) if args.suite else ()
    if args.suite is not None and args.suite.strip() == "":
        return write_reports([], args.out, args.timings)
    t0 = time.time()
    if args.command == "axioms":
        reports = cmd_axioms(cfg, args.inject_fault, suites)
    elif args.command == "product":
        reports = cmd_product(cfg, args.csv, args.inject_fault)
    elif args.command == "complex":
        reports = cmd_complex(cfg, args.inject_fault)
    elif args.command == "coords":
        reports = cmd_coords(cfg, args.inject_fault)
    else:
        reports = cmd_sewing(cfg, args.inject_fault)
    if args.timings:
        for r in reports:
            r.runtime = time.time() - t0
    return write_reports(reports, args.out, args.timings)


if __name__ == "__main__":
    sys.exit(main())
