"""Command-line front end: plot-ready CSV/JSON tables and a self-test.

Exit status: 0 when every row is ok, 1 when an input or a row is outside
the domain, 2 when any row failed to converge (the table is still
written, with per-row status), 64 on a usage error.
"""

import argparse
import csv
import io
import json
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ueplab import __version__
from ueplab import quadrature as quad
from ueplab.divergence import (df_bound, kl_gaussian_studentt, kl_radial,
                               kl_studentr_gaussian, kl_studentt_gaussian,
                               matched_gaussian, tv_radial)
from ueplab.entropy import (EntropyOrder, renyi_bound, renyi_entropy_radial,
                            usum, usum_closed_exppower)
from ueplab.errors import DomainError, NonConvergenceError, UeplabError
from ueplab.montecarlo import (mc_kl, mc_power_integral, radial_gof,
                               thread_count)
from ueplab.radial import (EllipticalLaw, Family, conj_radial_pdf,
                           existence_threshold, hankel_values, log_pdf_nd,
                           marginal_log_pdf, radial_pdf,
                           radial_power_integral)

EXIT_OK, EXIT_DOMAIN, EXIT_NONCONVERGED, EXIT_USAGE = 0, 1, 2, 64

# status strings, ordered by the exit code they imply
OK, UNDEFINED, NONCONVERGED = "ok", "undefined", "nonconverged"
_SEVERITY = {OK: EXIT_OK, "pass": EXIT_OK, UNDEFINED: EXIT_DOMAIN,
             "fail": EXIT_DOMAIN, NONCONVERGED: EXIT_NONCONVERGED}

PRESETS = {
    "fig1": dict(command="sweep", family="student-t", m="fixed:1", n="1..64",
                 p="2,3,10"),
    "fig2": dict(command="sweep", family="student-r", m="nplus:0", n="1..64",
                 q="2.1,3,10"),
    "fig3": dict(command="sweep", family="student-r", m="nplus:2,times:2",
                 n="1..64", q="2.1,3,10"),
    "fig4": dict(command="marginal", family="student-r", m="nplus:0",
                 n="1,2,5,10", k="1", grid="-3:3:121", unit_variance=True),
}
PRESET_HELP = {
    "fig1": "Cauchy (Student-t, m=1) sums for p = 2, 3, 10 and n = 1..64",
    "fig2": "uniform-ball (Student-r, m=n) sums for q = 2.1, 3, 10",
    "fig3": "Student-r sums for m = n+2 and m = 2n, q = 2.1, 3, 10",
    "fig4": "one-coordinate marginals of the uniform ball, n = 1, 2, 5, 10, "
            "at unit component variance, next to the standard Gaussian",
}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- parsing

def parse_int_list(text):
    """'1..5' or '1,3,8' or a mix like '1..4,16'."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ".." in part:
                lo, hi = part.split("..")
                lo, hi = int(lo), int(hi)
                if hi < lo:
                    raise UsageError(f"empty range {part!r}")
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise UsageError(f"not an integer list: {text!r}") from None
    if not out:
        raise UsageError("empty dimension list")
    return out


def parse_float_list(text):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"not a list of numbers: {text!r}") from None
    if not vals:
        raise UsageError("empty list")
    return vals


@dataclass(frozen=True)
class MRule:
    """How m follows n: fixed:V, nplus:C (m = n + C) or times:C (m = C n)."""

    kind: str
    value: float

    @classmethod
    def parse(cls, text):
        kind, sep, val = text.partition(":")
        if not sep:
            kind, val = "fixed", text
        if kind not in ("fixed", "nplus", "times"):
            raise UsageError(f"unknown m rule {text!r}")
        try:
            return cls(kind, float(val))
        except ValueError:
            raise UsageError(f"bad m rule value in {text!r}") from None

    def __call__(self, n):
        if self.kind == "fixed":
            return self.value
        if self.kind == "nplus":
            return n + self.value
        return self.value * n

    def __str__(self):
        return f"{self.kind}:{_plain(self.value)}"


def parse_m_rules(text):
    return [MRule.parse(t.strip()) for t in text.split(",") if t.strip()]


def _plain(x):
    return str(int(x)) if float(x).is_integer() else repr(float(x))


@dataclass
class SweepSpec:
    family: Family
    m_rules: list
    n_values: list
    orders: list       # (tag, value) with tag "p" or "q"
    rel_tol: float = quad.DEFAULT_REL_TOL

    def points(self):
        for rule in self.m_rules or [None]:
            for tag, val in self.orders:
                for n in self.n_values:
                    yield rule, tag, val, n


def _m_cell(m):
    """m as printed: an integer when it is one."""
    if m is None:
        return None
    return int(m) if float(m).is_integer() else float(m)


def _law(family, n, m, scale=1.0):
    if family is Family.GAUSSIAN:
        return EllipticalLaw.gaussian(n, scale)
    if family is Family.STUDENT_T:
        return EllipticalLaw.student_t(n, m, scale)
    return EllipticalLaw.student_r(n, m, scale)


# ---------------------------------------------------------------- formatting

def format_cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return format(v, ".14e")
    return str(value)


def _json_cell(value):
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    if isinstance(value, np.integer):
        return int(value)
    return value


def render(columns, rows, fmt, meta):
    if fmt == "json":
        body = {"meta": meta,
                "rows": [{c: _json_cell(r.get(c)) for c in columns} for r in rows]}
        return json.dumps(body, indent=1, allow_nan=False) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([format_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def _parallel(fn, items):
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- row builders

BOUND_COLUMNS = ["p", "q", "bound", "method", "err", "status"]


def bound_rows(orders):
    rows = []
    for tag, val in orders:
        order = EntropyOrder(val) if tag == "p" else EntropyOrder.from_q(val)
        rows.append(dict(p=order.p, q=order.q, bound=renyi_bound(order.p),
                         method="closed-form", err=0.0, status=OK))
    return rows


USUM_COLUMNS = ["family", "m_rule", "n", "m", "p", "q", "U", "bound", "gap",
                "method", "err", "h_direct", "h_conjugate", "status", "threshold",
                "threshold_kind"]


def _threshold_columns(law, tag):
    ex = existence_threshold(law)
    if law.family is Family.STUDENT_T:
        return ex.p_min, "p_min"
    if law.family is Family.STUDENT_R:
        if law.m < law.n and ex.p_max < math.inf and tag == "p":
            return ex.p_max, "p_max"
        return ex.q_min, "q_min"
    return None, None


def usum_row(spec, point):
    rule, tag, val, n = point
    fam = spec.family
    m = None if rule is None else rule(n)
    order = EntropyOrder(val) if tag == "p" else EntropyOrder.from_q(val)
    row = dict(family=fam.value, m_rule=None if rule is None else str(rule), n=n,
               m=_m_cell(m),
               p=order.p, q=order.q, bound=renyi_bound(order.p))
    try:
        law = _law(fam, n, m)
    except DomainError as exc:
        # only Student-r's m > n - 2 carries a threshold; a bad n does not
        row.update(status=UNDEFINED, threshold=exc.threshold,
                   threshold_kind=None if exc.threshold is None else "m")
        return row
    try:
        res = usum(law, order, spec.rel_tol)
    except DomainError as exc:
        th, kind = _threshold_columns(law, tag)
        row.update(status=UNDEFINED, threshold=exc.threshold if th is None else th,
                   threshold_kind=kind)
        return row
    except NonConvergenceError:
        row.update(status=NONCONVERGED)
        return row
    row.update(U=res.value, gap=res.gap, method=res.method.value,
               err=res.error_estimate, h_direct=res.entropy_direct / n,
               h_conjugate=res.entropy_conjugate / n,
               status=OK if res.converged else NONCONVERGED)
    return row


KL_COLUMNS = ["family", "n", "m", "forward", "reverse", "rate_forward",
              "rate_reverse", "asymptotic", "j", "j_lower", "j_upper",
              "forward_quadrature", "method", "err", "status", "threshold"]


def kl_row(family, n, m, rel_tol):
    row = dict(family=family.value, n=n, m=_m_cell(m), method="closed-form")
    try:
        law = _law(family, n, m)
        if family is Family.STUDENT_T:
            fwd = kl_studentt_gaussian(n, m)
            rev = kl_gaussian_studentt(n, m)
            row.update(forward=fwd.forward, asymptotic=fwd.asymptotic,
                       reverse=rev.reverse, j=rev.j_integral, j_lower=rev.j_lower,
                       j_upper=rev.j_upper)
        elif family is Family.STUDENT_R:
            fwd = kl_studentr_gaussian(n, m)
            row.update(forward=fwd.forward, asymptotic=fwd.asymptotic)
        else:
            raise DomainError("kl compares Student-t or Student-r with a Gaussian")
        gauss = matched_gaussian(law)
        dy, dz = radial_pdf(law), radial_pdf(gauss)
        check = kl_radial(dy, dz, min(rel_tol, 1e-11))
        if family is Family.STUDENT_R:
            # the Gaussian puts mass outside the ball
            row["reverse"] = kl_radial(dz, dy, min(rel_tol, 1e-11))
    except DomainError as exc:
        row.update(status=UNDEFINED, threshold=exc.threshold)
        return row
    except NonConvergenceError:
        row.update(status=NONCONVERGED)
        return row
    row.update(forward_quadrature=check, err=abs(check - row["forward"]),
               rate_forward=row["forward"] / n,
               rate_reverse=row["reverse"] / n, status=OK)
    return row


TV_COLUMNS = ["family", "n", "m", "tv", "df_bound", "method", "err", "status",
              "threshold"]


def tv_row(family, n, m, rel_tol):
    row = dict(family=family.value, n=n, m=_m_cell(m), method="quadrature")
    try:
        law = _law(family, n, m)
        if family is Family.GAUSSIAN:
            raise DomainError("tv compares a Student law with its matched Gaussian")
        tv = tv_radial(radial_pdf(law), radial_pdf(matched_gaussian(law)),
                       max(rel_tol, 1e-12))
    except DomainError as exc:
        row.update(status=UNDEFINED, threshold=exc.threshold)
        return row
    except NonConvergenceError:
        row.update(status=NONCONVERGED)
        return row
    bound = None
    if (family is Family.STUDENT_R and float(m).is_integer()
            and 1 <= n <= m - 2):
        bound = df_bound(n, int(m))
    row.update(tv=tv, df_bound=bound, err=max(rel_tol, 1e-12) * tv, status=OK)
    return row


MARGINAL_COLUMNS = ["family", "n", "m", "k", "x1", "x2", "pdf", "gaussian_pdf",
                    "method", "err", "status"]


def marginal_rows(family, n, m, k, grid, unit_variance):
    """Marginal density of the first k coordinates on a grid (k = 1 or 2).

    With ``unit_variance`` the law is scaled so each coordinate has variance 1
    and ``gaussian_pdf`` is the standard normal density of the same points.
    """
    if k not in (1, 2):
        raise DomainError("marginal tables are produced for k = 1 or 2")
    scale = 1.0
    if unit_variance and family is not Family.GAUSSIAN:
        var1 = 1.0 / (m - 2.0) if family is Family.STUDENT_T else 1.0 / (m + 2.0)
        if not var1 > 0:
            raise DomainError("unit variance needs a finite covariance")
        scale = 1.0 / math.sqrt(var1)
    elif unit_variance:
        scale = math.sqrt(2.0)
    law = _law(family, n, m, scale)
    if k > n:
        raise DomainError(f"marginal dimension k={k} exceeds n={n}")
    if k == 1:
        pts = grid[:, None]
    else:
        xx, yy = np.meshgrid(grid, grid, indexing="ij")
        pts = np.stack([xx.ravel(), yy.ravel()], axis=-1)
    if k == n:
        lp = log_pdf_nd(law, np.sqrt(np.sum(pts * pts, axis=-1)))
    else:
        lp = marginal_log_pdf(law, k, pts)
    gauss = None
    if unit_variance:
        gauss = np.exp(-0.5 * np.sum(pts * pts, axis=-1)) / (2.0 * math.pi) ** (0.5 * k)
    rows = []
    for i, pt in enumerate(pts):
        rows.append(dict(family=family.value, n=n, m=_m_cell(m), k=k, x1=float(pt[0]),
                         x2=float(pt[1]) if k == 2 else None,
                         pdf=float(np.exp(lp[i])),
                         gaussian_pdf=None if gauss is None else float(gauss[i]),
                         method="closed-form", err=0.0, status=OK))
    return rows


MC_COLUMNS = ["family", "n", "m", "quantity", "order", "estimate", "stderr",
              "reference", "z", "samples", "seed", "method", "status", "note"]


def _mc_status(est, reference, reference_error=0.0, k=4.0):
    if not est.reliable:
        return "unreliable"
    return "pass" if est.within(reference, k, reference_error) else "fail"


def mc_rows(law, samples, seed, orders, rel_tol):
    """Monte-Carlo estimates next to their deterministic references."""
    fam, n, m = law.family.value, law.n, _m_cell(law.m)
    rows = []
    d = radial_pdf(law)
    for lam in orders:
        row = dict(family=fam, n=n, m=m, order=lam, samples=samples, seed=seed,
                   method="mc")
        try:
            h = renyi_entropy_radial(d, lam, rel_tol)
            if lam == 1.0:
                row["quantity"], ref = "shannon_entropy", h
            else:
                row["quantity"], ref = "power_integral", math.exp((1.0 - lam) * h)
            est = mc_power_integral(law, lam, samples, seed)
        except DomainError as exc:
            row.update(quantity="power_integral", status=UNDEFINED, note=str(exc))
            rows.append(row)
            continue
        row.update(estimate=est.mean, stderr=est.stderr, reference=ref,
                   z=(est.mean - ref) / est.stderr if est.stderr > 0 else 0.0,
                   status=_mc_status(est, ref, rel_tol * abs(ref)), note=est.note)
        rows.append(row)
    row = dict(family=fam, n=n, m=m, quantity="kl_to_matched_gaussian",
               samples=samples, seed=seed, method="mc")
    try:
        gauss = matched_gaussian(law)
        if law.family is Family.GAUSSIAN:
            ref = 0.0
        elif law.family is Family.STUDENT_T:
            ref = kl_studentt_gaussian(n, m).forward
        else:
            ref = kl_studentr_gaussian(n, m).forward
        est = mc_kl(law, gauss, samples, seed)
        row.update(estimate=est.mean, stderr=est.stderr, reference=ref,
                   z=(est.mean - ref) / est.stderr if est.stderr > 0 else 0.0,
                   status=_mc_status(est, ref), note=est.note)
    except DomainError as exc:
        row.update(status=UNDEFINED, note=str(exc))
    rows.append(row)
    stat, pval = radial_gof(law, samples, seed)
    rows.append(dict(family=fam, n=n, m=m, quantity="radial_gof_pvalue",
                     estimate=pval, reference=1e-3, z=stat, samples=samples,
                     seed=seed, method="mc",
                     status="pass" if pval >= 1e-3 else "fail",
                     note="chi-square statistic in z"))
    return rows


# ---------------------------------------------------------------- self-test

def _selftest_checks():
    """(name, callable returning (passed, detail)) pairs; about a minute in total."""
    checks = []

    def gaussian_equality():
        worst = max(abs(usum(EllipticalLaw.gaussian(n), p).gap)
                    for n in (1, 7, 50) for p in (1.1, 2.0, 10.0))
        return worst < 1e-10, f"max |gap| {worst:.2e}"
    checks.append(("gaussian equality", gaussian_equality))

    def lower_bound():
        worst = math.inf
        for law in (EllipticalLaw.student_t(3, 1), EllipticalLaw.student_t(8, 10),
                    EllipticalLaw.student_r(3, 3), EllipticalLaw.student_r(6, 12)):
            for p in (1.5, 2.0, 3.0):
                try:
                    res = usum(law, p)
                except DomainError:
                    continue
                worst = min(worst, res.gap + 10 * res.error_estimate)
        return worst >= 0, f"min gap {worst:.3e}"
    checks.append(("lower bound", lower_bound))

    def exppower():
        worst = max(abs(usum(EllipticalLaw.student_t(n, n + 2), p).value
                        / usum_closed_exppower(n, p) - 1.0)
                    for n in (1, 4, 12) for p in (1.5, 2.0, 10.0))
        return worst < 1e-8, f"max rel diff {worst:.2e}"
    checks.append(("exponential-power closed form", exppower))

    def normalisation():
        worst = 0.0
        for law in (EllipticalLaw.student_t(2, 3), EllipticalLaw.student_r(3, 5),
                    EllipticalLaw.student_r(4, 2.5)):
            for d in (radial_pdf(law), conj_radial_pdf(law)):
                res = radial_power_integral(d, 1.0)
                worst = max(worst, abs(res.value - 1.0))
        return worst < 1e-7, f"max |mass - 1| {worst:.2e}"
    checks.append(("radial normalisation", normalisation))

    def hankel():
        law = EllipticalLaw.student_t(3, 4)
        r = np.array([0.3, 1.0, 2.5])
        exact = conj_radial_pdf(law).pdf(r)
        num = hankel_values(radial_pdf(law), r)
        worst = float(np.max(np.abs(num / exact - 1.0)))
        return worst < 1e-6, f"max rel diff {worst:.2e}"
    checks.append(("hankel transform", hankel))

    def existence():
        law = EllipticalLaw.student_t(4, 2)
        th = existence_threshold(law).p_min
        ok = True
        try:
            usum(law, th - 1e-3)
            ok = False
        except DomainError:
            pass
        usum(law, th + 1e-3)
        return ok, f"p_min {th:g}"
    checks.append(("existence threshold", existence))

    def kl_closed():
        law = EllipticalLaw.student_t(3, 7)
        closed = kl_studentt_gaussian(3, 7).forward
        num = kl_radial(radial_pdf(law), radial_pdf(matched_gaussian(law)))
        diff = abs(closed - num)
        return diff < 1e-7, f"|closed - quadrature| {diff:.2e}"
    checks.append(("kl closed form", kl_closed))

    def diaconis_freedman():
        worst = -math.inf
        for n, m in ((1, 3), (4, 10), (8, 40)):
            law = EllipticalLaw.student_r(n, m)
            tv = tv_radial(radial_pdf(law), radial_pdf(matched_gaussian(law)))
            worst = max(worst, tv - df_bound(n, m))
        return worst <= 0, f"max tv - bound {worst:.3e}"
    checks.append(("total-variation bound", diaconis_freedman))

    def monte_carlo():
        law = EllipticalLaw.student_r(2, 4)
        ref = math.exp(-renyi_entropy_radial(radial_pdf(law), 2.0))
        est = mc_power_integral(law, 2.0, 200_000, 12345)
        _, pval = radial_gof(law, 200_000, 12345)
        return est.within(ref) and pval >= 1e-3, f"z {(est.mean - ref) / est.stderr:+.2f}, gof p {pval:.3f}"
    checks.append(("monte-carlo agreement", monte_carlo))
    return checks


def run_selftest(out):
    rows = []
    for name, fn in _selftest_checks():
        try:
            passed, detail = fn()
        except UeplabError as exc:
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        rows.append(dict(check=name, status="pass" if passed else "fail",
                         detail=detail))
    width = max(len(r["check"]) for r in rows)
    for r in rows:
        out.write(f"{r['check']:<{width}}  {r['status'].upper():<4}  {r['detail']}\n")
    failed = sum(r["status"] == "fail" for r in rows)
    out.write(f"{len(rows) - failed}/{len(rows)} checks passed\n")
    return EXIT_OK if failed == 0 else EXIT_DOMAIN


# ---------------------------------------------------------------- argparse

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        raise UsageError(message)


def build_parser():
    parser = _Parser(prog="ueplab", description="Entropic uncertainty sums of "
                     "elliptical laws and their conjugates, as plot-ready tables.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, family=True, grid=True, orders=True):
        if family:
            p.add_argument("--family", choices=[f.value for f in Family
                                                if f is not Family.CUSTOM])
        if grid:
            p.add_argument("--n", help="dimensions: A..B or a comma list")
            p.add_argument("--m", help="degrees of freedom: fixed:V, nplus:C or "
                           "times:C; several rules may be comma-separated")
        if orders:
            group = p.add_mutually_exclusive_group()
            group.add_argument("--p", help="comma list of orders p")
            group.add_argument("--q", help="comma list of conjugate orders q")
        p.add_argument("--tol", type=float, default=quad.DEFAULT_REL_TOL,
                       help="relative quadrature tolerance")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    common(sub.add_parser("bound", help="the lower bound B(p)"), family=False,
           grid=False)
    common(sub.add_parser("usum", help="uncertainty sums at given points"))
    sweep = sub.add_parser("sweep", help="uncertainty sums over a grid or preset",
                           epilog="presets: " + "; ".join(
                               f"{k}: {v}" for k, v in PRESET_HELP.items()
                               if PRESETS[k]["command"] == "sweep"))
    common(sweep)
    sweep.add_argument("--preset", choices=[k for k, v in PRESETS.items()
                                            if v["command"] == "sweep"])
    common(sub.add_parser("kl", help="KL divergences to the matched Gaussian"),
           orders=False)
    common(sub.add_parser("tv", help="total variation to the matched Gaussian"),
           orders=False)
    mc = sub.add_parser("mc-verify", help="Monte-Carlo estimates against "
                        "deterministic values")
    common(mc, orders=False)
    mc.add_argument("--lam", default="0.75,1,1.5,2",
                    help="comma list of powers lam in the integral of f^lam")
    mc.add_argument("--samples", type=int, default=1_000_000)
    mc.add_argument("--seed", type=int, default=20240601)
    marg = sub.add_parser("marginal", help="marginal densities on a grid",
                          epilog="presets: fig4: " + PRESET_HELP["fig4"])
    common(marg, orders=False)
    marg.add_argument("--k", default="1", help="marginal dimension (1 or 2)")
    marg.add_argument("--grid", default="-3:3:121", help="A:B:N points per axis; write --grid=-3:3:121 "
                      "when A is negative")
    marg.add_argument("--unit-variance", action="store_true",
                      help="scale each law to unit component variance")
    marg.add_argument("--preset", choices=["fig4"])
    sub.add_parser("selftest", help="run the invariant suite and print a table")
    return parser


def _apply_preset(args):
    """A preset fixes the family, grid and orders; --out, --format, --tol stay free."""
    preset = getattr(args, "preset", None)
    if not preset:
        return
    values = dict(PRESETS[preset])
    values.pop("command")
    if "p" in values or "q" in values:
        args.p = args.q = None
    for key, val in values.items():
        setattr(args, key, val)


def _need(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise UsageError(f"--{name} is required for '{args.command}'")


def _family(args):
    return Family(args.family)


def _m_rules(args, family):
    if family is Family.GAUSSIAN:
        return [None]
    _need(args, "m")
    return parse_m_rules(args.m)


def _orders(args):
    if args.p is not None:
        return [("p", v) for v in parse_float_list(args.p)]
    if args.q is not None:
        return [("q", v) for v in parse_float_list(args.q)]
    raise UsageError("one of --p or --q is required")


def _grid(text):
    try:
        a, b, count = text.split(":")
        return np.linspace(float(a), float(b), int(count))
    except ValueError:
        raise UsageError(f"grid must be A:B:N, got {text!r}") from None


def execute(args):
    """Compute (columns, rows) for a parsed invocation."""
    cmd = args.command
    if cmd == "bound":
        return BOUND_COLUMNS, bound_rows(_orders(args))
    _need(args, "family", "n")
    family = _family(args)
    ns = parse_int_list(args.n)
    rules = _m_rules(args, family)
    if cmd in ("usum", "sweep"):
        spec = SweepSpec(family, rules, ns, _orders(args), args.tol)
        rows = _parallel(lambda pt: usum_row(spec, pt), list(spec.points()))
        return USUM_COLUMNS, rows
    pairs = [(n, None if r is None else r(n)) for r in rules for n in ns]
    if cmd == "kl":
        return KL_COLUMNS, _parallel(lambda nm: kl_row(family, *nm, args.tol), pairs)
    if cmd == "tv":
        return TV_COLUMNS, _parallel(lambda nm: tv_row(family, *nm, args.tol), pairs)
    if cmd == "marginal":
        grid = _grid(args.grid)
        rows = []
        for n, m in pairs:
            for k in parse_int_list(args.k):
                if k > n:
                    continue
                rows.extend(marginal_rows(family, n, m, k, grid, args.unit_variance))
        return MARGINAL_COLUMNS, rows
    if cmd == "mc-verify":
        lams = parse_float_list(args.lam)
        rows = []
        # unreliable estimates are reported in the status and note columns
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            for n, m in pairs:
                rows.extend(mc_rows(_law(family, n, m), args.samples, args.seed, lams,
                                    args.tol))
        return MC_COLUMNS, rows
    raise UsageError(f"unknown command {cmd!r}")


def exit_status(rows):
    worst = EXIT_OK
    for r in rows:
        worst = max(worst, _SEVERITY.get(r.get("status"), EXIT_OK))
    return worst


def run(argv=None, stdout=None):
    """Entry point returning the exit status; output goes to --out or ``stdout``."""
    stdout = sys.stdout if stdout is None else stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.error("a subcommand is required")
        if args.command == "selftest":
            return run_selftest(stdout)
        _apply_preset(args)
        columns, rows = execute(args)
    except UsageError as exc:
        sys.stderr.write(f"ueplab: usage error: {exc}\n")
        return EXIT_USAGE
    except DomainError as exc:
        sys.stderr.write(f"ueplab: {exc}\n")
        return EXIT_DOMAIN
    except NonConvergenceError as exc:
        sys.stderr.write(f"ueplab: {exc}\n")
        return EXIT_NONCONVERGED
    meta = {"version": __version__, "invocation": ["ueplab"] + list(argv or sys.argv[1:]),
            "tolerances": {"rel_tol": args.tol}}
    text = render(columns, rows, args.format, meta)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return exit_status(rows)


def main():
    try:
        status = run(sys.argv[1:])
        sys.stdout.flush()
    except BrokenPipeError:
        # reader went away (e.g. piped into head); nothing left to report
        sys.stderr.close()
        status = EXIT_OK
    sys.exit(status)


if __name__ == "__main__":
    main()
