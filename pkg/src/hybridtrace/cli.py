"""Command-line driver.  Every ``cmd_*`` returns the exact text it writes, so
identical configurations give byte-identical output."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import random
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import ledger as ledger_mod
from . import stats, traceform, transforms
from .forms import BQForm, GammaElem, act, automorph, generators, same_splitting_field
from .qfield import (
    FieldError,
    FieldSpec,
    Place,
    cusp_regulator,
    cusp_regulator_det,
    dedekind_zeta_minus1,
    field_discriminant,
    fundamental_unit,
    hilbert_volume,
)
from .relorder import MixedDisc, mixed_discs, pell_scan, solve_pell

ANGLE_FUNCTIONS = {
    "one": lambda t: np.ones_like(t),
    "cos": np.cos,
    "cos2": lambda t: np.cos(2 * t),
    "sin": np.sin,
}
STATS_KINDS = ("count", "weyl", "arcs", "units", "geodesic")
CHECKS = ("transforms", "modular", "forms", "pell")


class CliError(RuntimeError):
    pass


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _csv(header: list[str], rows: list[list], comment: dict | None = None) -> str:
    buf = io.StringIO()
    if comment is not None:
        buf.write("# " + json.dumps(comment, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def load_ledger(path: str | Path) -> ledger_mod.Ledger:
    p = Path(path)
    if not p.exists():
        raise CliError(f"ledger file {p} does not exist; create it with `hybridtrace ledger --out {p}`")
    try:
        return ledger_mod.Ledger.from_jsonl(p.read_text())
    except (FieldError, json.JSONDecodeError, KeyError) as exc:
        raise CliError(f"{p}: {exc}; rebuild the ledger with this tool version ({__version__})") from exc


def _ledger_echo(lg: ledger_mod.Ledger) -> dict:
    return {"delta": lg.spec.delta, "T": lg.T, "entries": len(lg)}


# -- field -------------------------------------------------------------------------------------

def cmd_field(delta: int) -> str:
    spec = FieldSpec(delta)
    eps = fundamental_unit(spec)
    z = dedekind_zeta_minus1(spec)
    return _json({
        "config": {"subcommand": "field", "delta": delta},
        "field_discriminant": field_discriminant(spec),
        "fundamental_unit": eps.to_json(),
        "fundamental_unit_str": repr(eps),
        "regulator": cusp_regulator(spec),
        "regulator_det": cusp_regulator_det(spec),
        "zeta_minus1": f"{z.numerator}/{z.denominator}",
        "volume": hilbert_volume(spec),
    })


# -- ledger ------------------------------------------------------------------------------------

def cmd_ledger(delta: int, T: float, disc_height: float | None = None, pell_cap: float | None = None,
               fmt: str = "json") -> str:
    lg = ledger_mod.build(FieldSpec(delta), T, disc_height=disc_height, pell_cap=pell_cap)
    return lg.to_csv() if fmt == "csv" else lg.to_jsonl()


# -- stats -------------------------------------------------------------------------------------

def _t_grid(lg: ledger_mod.Ledger, T: float | None, floor: float = 2.0) -> list[float]:
    top = lg.T if T is None else T
    out = []
    t = top
    while t >= floor:
        out.append(t)
        t /= 2
    return sorted(out)


def cmd_stats(ledger_path: str | Path, which: str, fmt: str = "csv", T: float | None = None,
              fn: str = "cos", arcs: list[tuple[float, float]] | None = None) -> str:
    if which not in STATS_KINDS:
        raise CliError(f"unknown statistic {which!r}; choose one of {', '.join(STATS_KINDS)}")
    if fn not in ANGLE_FUNCTIONS:
        raise CliError(f"unknown angle function {fn!r}; choose one of {', '.join(ANGLE_FUNCTIONS)}")
    lg = load_ledger(ledger_path)
    f = ANGLE_FUNCTIONS[fn]
    config = {"subcommand": "stats", "which": which, "fn": fn, "T": T, "ledger": _ledger_echo(lg)}
    if which == "count":
        header = ["T", "N", "prediction", "ratio"]
        rows = [[r.T, r.N, r.prediction, r.ratio] for r in (stats.count_vs_li(lg, t) for t in _t_grid(lg, T))]
    elif which == "weyl":
        header = ["T", "S", "prediction", "residual", "envelope_C"]
        rows = [[r.T, r.S, r.prediction, r.residual, r.envelope_C]
                for r in (stats.weighted_sum_vs_li(lg, f, t) for t in _t_grid(lg, T))]
    elif which == "geodesic":
        header = ["x", "S", "prediction", "residual", "envelope_C"]
        rows = [[r.x, r.S, r.prediction, r.residual, r.envelope_C]
                for r in (stats.smoothed_geodesic_sum(lg, f, math.log(t)) for t in _t_grid(lg, T))]
    elif which == "units":
        header = ["T", "S", "prediction", "ratio"]
        top = math.sqrt(lg.T if T is None else T)
        rows = [[r.T, r.S, r.prediction, r.ratio]
                for r in (stats.units_sum(lg, f, t) for t in _t_grid(lg, top, floor=math.sqrt(2)))]
    else:
        arcs = arcs or [(0.0, 0.25), (0.25, 0.5), (0.5, 0.75), (0.75, 1.0), (0.0, 0.5)]
        config["arcs"] = [list(a) for a in arcs]
        header = ["start", "end", "empirical", "mu", "discrepancy"]
        rows = [[r.arc[0], r.arc[1], r.empirical, r.mu, r.discrepancy]
                for r in stats.arc_test(lg, arcs, lg.T if T is None else T)]
    if fmt == "json":
        return _json({"config": config, "rows": [dict(zip(header, r)) for r in rows]})
    return _csv(header, rows, config)


# -- trace -------------------------------------------------------------------------------------

def cmd_trace(ledger_path: str | Path, m: int, family: str, a: float, nodes: int = 256,
              vol: float | None = None, regulators: list[float] | None = None,
              elliptic: bool = True, torsion_free: bool = False) -> str:
    lg = load_ledger(ledger_path)
    spec = lg.spec
    tf = transforms.TestFunction(family, a, nodes=nodes)
    cfg = traceform.TraceConfig(
        m=m,
        vol=hilbert_volume(spec) if vol is None else vol,
        regulators=[cusp_regulator(spec)] if not regulators else regulators,
        ledger=lg,
        tf=tf,
        elliptic=ledger_mod.enumerate_elliptic(spec) if elliptic and not torsion_free else None,
        torsion_free=torsion_free,
    )
    report = traceform.spectral_estimate(cfg).to_json()
    report["config"]["subcommand"] = "trace"
    report["config"]["vol_source"] = "user" if vol is not None else "8 pi^2 zeta_F(-1)"
    return _json(report)


# -- zeta --------------------------------------------------------------------------------------

def cmd_zeta(ledger_path: str | Path, m: int, s_grid: list[complex], tail_eps: float = 1e-16) -> str:
    lg = load_ledger(ledger_path)
    rows = []
    for s in s_grid:
        z = traceform.zeta_truncated(s, m, lg, tail_eps)
        d = traceform.zeta_log_derivative(s, m, lg, tail_eps)
        rows.append([s.real, s.imag, z.value.real, z.value.imag, d.value.real, d.value.imag,
                     z.tail_bound, d.tail_bound])
    header = ["re_s", "im_s", "re_Z", "im_Z", "re_dlogZ", "im_dlogZ", "tail_Z", "tail_dlogZ"]
    config = {"subcommand": "zeta", "m": m, "tail_eps": tail_eps, "ledger": _ledger_echo(lg)}
    return _csv(header, rows, config)


# -- checks ------------------------------------------------------------------------------------

def _check_modular() -> tuple[list[str], bool]:
    lines, ok = [], True
    for m in range(1, 101):
        v = traceform.modular_consistency(m)
        ok &= v == -0.5
        lines.append(f"m={m} {v}")
    return lines, ok


def _check_transforms() -> tuple[list[str], bool]:
    lines, ok = [], True
    for fam in ("bump", "coswin"):
        for a in (1.0, 2.0):
            tf = transforms.TestFunction(fam, a)
            for b in (0.5, 1.5, 2.5):
                _, _, err = transforms.cusp_integral_identity_check(tf, b)
                ok &= err < 1e-7
                lines.append(f"cusp integral {fam} a={a} b={b} err={err:.3e}")
    tf = transforms.TestFunction("bump", 2.0)
    for th in (0.5, 1.5, 2.5):
        for m in (1, 2, 3):
            lhs, rhs, err = transforms.elliptic_difference_check(tf, th, m)
            rel = err / max(abs(rhs), 1e-300)
            ok &= rel < 1e-5
            lines.append(f"elliptic difference theta={th} m={m} rel={rel:.3e}")
    for m in (0, 1, 2):
        for t in (0.6, 1.0, 1.5):
            v = abs(transforms.ihp_vanishing_check(tf, m, t * tf.a))
            ok &= v < 1e-8
            lines.append(f"Ihp m={m} t={t}a |I|={v:.3e}")
    return lines, ok


def _random_gamma(gens, rng: random.Random):
    g = GammaElem.identity(gens[0].spec)
    for _ in range(rng.randint(1, 6)):
        g = g @ rng.choice(gens)
    return g


def _random_elem(spec: FieldSpec, rng: random.Random, h: int = 6):
    p, q = rng.randint(-h, h), rng.randint(-h, h)
    return spec.elem(2 * p + q, q) if spec.ring_shift else spec.elem(p, q)


def _random_form(spec: FieldSpec, rng: random.Random) -> BQForm:
    while True:
        co = [_random_elem(spec, rng) for _ in range(3)]
        try:
            return BQForm(*co)
        except FieldError:
            continue


def form_invariance_trials(spec: FieldSpec, n: int, seed: int = 0) -> dict:
    """Random (q, t, gamma): splitting field and primitive discriminant are preserved, and
    automorphs from Pell solutions fix q.  Returns counts of trials and failures."""
    rng = random.Random(seed)
    gens = generators(spec)
    res = {"trials": 0, "failures": 0, "automorphs": 0, "automorph_failures": 0}
    while res["trials"] < n:
        q = _random_form(spec, rng)
        t = spec.elem(0, 0)
        while t.is_zero():
            t = _random_elem(spec, rng, 3)
        q2 = act(q, t, _random_gamma(gens, rng))
        res["trials"] += 1
        if not (same_splitting_field(q.disc, q2.disc) and q.primitive_disc == q2.primitive_disc):
            res["failures"] += 1
        D = q.disc
        if D.sign(Place.P1) < 0 < D.sign(Place.P2):
            e = solve_pell(MixedDisc.from_D(D), 1e4)
            if e:
                try:
                    g = automorph(q, e.t, e.u)
                except FieldError:
                    continue
                res["automorphs"] += 1
                if act(q, spec.one, g) != q:
                    res["automorph_failures"] += 1
    return res


def _check_forms() -> tuple[list[str], bool]:
    lines, ok = [], True
    for delta in (2, 5):
        r = form_invariance_trials(FieldSpec(delta), 200, seed=delta)
        ok &= r["failures"] == 0 and r["automorph_failures"] == 0 and r["automorphs"] > 0
        lines.append(f"delta={delta} " + " ".join(f"{k}={v}" for k, v in sorted(r.items())))
    return lines, ok


def _check_pell() -> tuple[list[str], bool]:
    lines, ok = [], True
    for delta in (2, 5):
        mds = mixed_discs(FieldSpec(delta), 8)
        bad = 0
        for md in mds:
            x, y = solve_pell(md, 50), pell_scan(md, 50)
            if bool(x) != bool(y) or (x and (x.t, x.u) != (y.t, y.u)):
                bad += 1
        ok &= bad == 0
        lines.append(f"delta={delta} discriminants={len(mds)} mismatches={bad}")
    return lines, ok


def cmd_check(which: str) -> tuple[str, bool]:
    runners = {"transforms": _check_transforms, "modular": _check_modular,
               "forms": _check_forms, "pell": _check_pell}
    if which not in runners:
        raise CliError(f"unknown check {which!r}; choose one of {', '.join(CHECKS)}")
    lines, ok = runners[which]()
    lines.append(f"{which}: {'PASS' if ok else 'FAIL'}")
    return "\n".join(lines) + "\n", ok


# -- argparse ----------------------------------------------------------------------------------

def _parse_arcs(text: str | None):
    if not text:
        return None
    out = []
    for part in text.split(","):
        lo, hi = part.split(":")
        out.append((float(lo), float(hi)))
    return out


def _parse_s(text: str) -> list[complex]:
    return [complex(p.replace(" ", "")) for p in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hybridtrace", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, ledger=True):
        sp.add_argument("--out", help="output file (default: stdout)")
        if ledger:
            sp.add_argument("ledger", help="ledger file written by `hybridtrace ledger`")

    sp = sub.add_parser("field", help="fundamental unit, regulator and covolume of Q(sqrt delta)")
    sp.add_argument("--delta", type=int, required=True)
    common(sp, ledger=False)

    sp = sub.add_parser("ledger", help="build the elliptic-hyperbolic class ledger")
    sp.add_argument("--delta", type=int, required=True)
    sp.add_argument("--T", type=float, required=True)
    sp.add_argument("--disc-height", type=float)
    sp.add_argument("--pell-cap", type=float)
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    common(sp, ledger=False)

    sp = sub.add_parser("stats", help="counting and equidistribution statistics")
    sp.add_argument("which", choices=STATS_KINDS)
    sp.add_argument("--T", type=float)
    sp.add_argument("--fn", choices=sorted(ANGLE_FUNCTIONS), default="cos")
    sp.add_argument("--arcs", help="comma-separated start:end pairs in turns, e.g. 0:0.25,0.5:1")
    sp.add_argument("--format", choices=("json", "csv"), default="csv")
    common(sp)

    sp = sub.add_parser("trace", help="geometric side of the trace formula")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--tf-family", choices=transforms.FAMILIES, default="bump")
    sp.add_argument("--tf-a", type=float, required=True)
    sp.add_argument("--nodes", type=int, default=256)
    sp.add_argument("--vol", type=float, help="covolume (default 8 pi^2 zeta_F(-1))")
    sp.add_argument("--regulator", type=float, action="append", help="cusp regulator (repeatable)")
    sp.add_argument("--torsion-free", action="store_true")
    sp.add_argument("--no-elliptic", action="store_true")
    common(sp)

    sp = sub.add_parser("zeta", help="truncated partial zeta function and its log derivative")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--s", default="1.5,2,2.5,3", help="comma-separated complex s values, e.g. 1.5+2j,2")
    sp.add_argument("--tail-eps", type=float, default=1e-16)
    common(sp)

    sp = sub.add_parser("check", help="run an identity or oracle suite")
    sp.add_argument("which", choices=CHECKS)
    common(sp, ledger=False)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    ok = True
    try:
        if args.command == "field":
            text = cmd_field(args.delta)
        elif args.command == "ledger":
            text = cmd_ledger(args.delta, args.T, args.disc_height, args.pell_cap, args.format)
        elif args.command == "stats":
            text = cmd_stats(args.ledger, args.which, args.format, args.T, args.fn, _parse_arcs(args.arcs))
        elif args.command == "trace":
            text = cmd_trace(args.ledger, args.m, args.tf_family, args.tf_a, args.nodes, args.vol,
                             args.regulator, not args.no_elliptic, args.torsion_free)
        elif args.command == "zeta":
            text = cmd_zeta(args.ledger, args.m, _parse_s(args.s), args.tail_eps)
        else:
            text, ok = cmd_check(args.which)
    except (CliError, FieldError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
