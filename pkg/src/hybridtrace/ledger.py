"""Census of primitive elliptic-hyperbolic conjugacy classes of PSL_2(O_F).

Conventions (see the project notes for the reasoning):

* a class with Pell unit eps = (t + u sqrt D)/2 has hyperbolic eigenvalue
  iota_2(eps) at P2, so gamma ~ diag(sqrt(rho), 1/sqrt(rho)) gives
  ``rho = iota_2(eps)^2`` and ``length = log(rho)``;
* the elliptic eigenvalue is iota_1(eps) = e^{i theta/2} with arg in [0, pi];
* {gamma} and {gamma^-1} are stored once and counted with multiplicity 2h.

The census is driven by traces: every class with rho <= T has a trace t with
|iota_1 t| < 2 and 2 < iota_2 t <= sqrt(T) + 1/sqrt(T), and t^2 - 4 = D u^2.
"""
from __future__ import annotations

import csv
import functools
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import mpmath

from . import __version__
from .forms import GammaElem, class_count, generators
from .qfield import (
    FieldError,
    FieldSpec,
    Place,
    QuadElem,
    balance_by_unit_squares,
    canonical_associate,
    elements_in_box,
    fundamental_unit,
    gcd_many,
    is_square_mod4,
    sqrt_exact,
)
from .relorder import MixedDisc, PellUnit, _unit_value, elliptic_eigenvalue, solve_pell, unit_power

_DPS = 40


def worker_count() -> int:
    """Worker threads, capped by the HTL_THREADS environment variable."""
    cap = os.environ.get("HTL_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise FieldError(f"HTL_THREADS must be an integer, got {cap!r}") from None
    return n


# -- records ------------------------------------------------------------------------------------

@dataclass(frozen=True)
class EHClass:
    md: MixedDisc
    unit: PellUnit
    h: int
    certified: bool
    pair_id: int = 0

    @cached_property
    def rho(self):
        with mpmath.workdps(_DPS):
            return self.unit.iota2 ** 2

    @cached_property
    def length(self):
        with mpmath.workdps(_DPS):
            return mpmath.log(self.rho)

    @cached_property
    def elliptic(self):
        return elliptic_eigenvalue(self.unit, precision=130)

    @property
    def theta(self):
        with mpmath.workdps(_DPS):
            return 2 * mpmath.arg(self.elliptic)

    @property
    def multiplicity(self) -> int:
        return 2 * self.h

    def key(self) -> tuple:
        return self.md.key()

    def to_json(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "D": self.md.D.to_json(),
            "d": self.md.d_gen.to_json(),
            "t": self.unit.t.to_json(),
            "u": self.unit.u.to_json(),
            "rho": mpmath.nstr(self.rho, 25),
            "length": mpmath.nstr(self.length, 25),
            "theta": mpmath.nstr(self.theta, 25),
            "h": self.h,
            "certified": self.certified,
            "multiplicity": self.multiplicity,
        }

    @classmethod
    def from_json(cls, obj: dict, spec: FieldSpec) -> EHClass:
        md = MixedDisc(QuadElem.from_json(obj["D"], spec), QuadElem.from_json(obj["d"], spec))
        unit = PellUnit(QuadElem.from_json(obj["t"], spec), QuadElem.from_json(obj["u"], spec), md)
        return cls(md, unit, int(obj["h"]), bool(obj["certified"]), int(obj["pair_id"]))


@dataclass(frozen=True)
class Ledger:
    spec: FieldSpec
    T: float
    entries: tuple[EHClass, ...]
    bounds: dict = field(default_factory=dict)
    completeness_note: str = ""

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def restrict(self, T: float) -> Ledger:
        if T > self.T:
            raise FieldError(f"cannot restrict a ledger built to T={self.T} up to T={T}")
        kept = tuple(e for e in self.entries if e.rho <= T)
        return Ledger(self.spec, T, kept, dict(self.bounds), self.completeness_note)

    def multiset(self) -> dict[tuple, int]:
        """(D, d) key -> number of G-conjugacy classes (both members of each pair)."""
        return {e.key(): e.multiplicity for e in self.entries}

    def header(self) -> dict:
        return {
            "format": "hybridtrace-ledger",
            "version": 1,
            "tool_version": __version__,
            "delta": self.spec.delta,
            "T": repr(float(self.T)),
            "bounds": self.bounds,
            "completeness_note": self.completeness_note,
            "conventions": "rho=iota2(eps)^2; theta=2*arg(iota1(eps)); pair stored once, multiplicity 2h",
        }

    def to_jsonl(self) -> str:
        lines = [json.dumps(self.header(), sort_keys=True)]
        lines += [json.dumps(e.to_json(), sort_keys=True) for e in self.entries]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> Ledger:
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not rows or rows[0].get("format") != "hybridtrace-ledger":
            raise FieldError("not a ledger file")
        head = rows[0]
        if head.get("version") != 1:
            raise FieldError(f"unsupported ledger version {head.get('version')}")
        spec = FieldSpec(int(head["delta"]))
        entries = tuple(EHClass.from_json(r, spec) for r in rows[1:])
        return cls(spec, float(head["T"]), entries, head.get("bounds", {}), head.get("completeness_note", ""))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rho", "length", "theta", "h", "D", "d"])
        for e in self.entries:
            w.writerow([
                mpmath.nstr(e.rho, 20),
                mpmath.nstr(e.length, 20),
                mpmath.nstr(e.theta, 20),
                e.h,
                str(e.md.D),
                str(e.md.d_gen),
            ])
        return buf.getvalue()


# -- building ---------------------------------------------------------------------------------

def hyperbolic_traces(spec: FieldSpec, lam_max: float) -> list[QuadElem]:
    """Traces t with |iota_1 t| < 2 and 2 < iota_2 t <= lam_max + 1/lam_max."""
    bound = lam_max + 1.0 / lam_max
    out = []
    for t in elements_in_box(spec, 2.0, bound + 1e-9):
        if abs(t.real(Place.P1)) >= 2 or t.real(Place.P2) <= 2:
            continue
        # exact checks: (t-2)(t+2) has iota_1 < 0 iff |iota_1 t| < 2
        if (t * t - spec.integer(4)).sign(Place.P1) >= 0:
            continue
        if (t - spec.integer(2)).sign(Place.P2) <= 0:
            continue
        if t.real(Place.P2) > bound + 1e-12:
            continue
        out.append(t)
    out.sort(key=lambda x: (x.real(Place.P2), x.sort_key()))
    return out


def in_order(t: QuadElem, u: QuadElem, D: QuadElem) -> bool:
    """Does (t + u sqrt D)/2 lie in O_F[(b + sqrt D)/2] for b with b^2 = D mod 4?"""
    spec = D.spec
    two, four = spec.integer(2), spec.integer(4)
    for p in range(2):
        for q in range(2):
            b = spec.from_basis(p, q)
            if four.divides(b * b - D):
                return two.divides(t - b * u)
    return False


def _square_divisors(x: QuadElem) -> list[QuadElem]:
    """Canonical u, positive at P2, with u^2 | x."""
    spec = x.spec
    n = abs(x.inorm())
    eps = fundamental_unit(spec).real(Place.P2)
    # the totally positive preference can cost one unit step beyond the balanced associate
    r = math.sqrt(math.sqrt(n)) * eps * (1 + 1e-9) + 1e-9
    out = []
    for u in elements_in_box(spec, r, r):
        if u.is_zero() or u.inorm() ** 2 > n:
            continue
        if canonical_associate(u) != u:
            continue
        if (u * u).divides(x):
            out.append(u)
    return out


def _candidates_for_trace(t: QuadElem) -> list[tuple[tuple, MixedDisc, QuadElem, QuadElem]]:
    spec = t.spec
    delta = t * t - spec.integer(4)
    eps = fundamental_unit(spec)
    out = []
    for u in _square_divisors(delta):
        D0 = delta.exact_div(u * u)
        assert D0 is not None
        if not is_square_mod4(D0):
            continue
        Db, k = balance_by_unit_squares(D0)
        ub = u * eps ** (-k)
        if ub.sign(Place.P2) < 0:
            ub = -ub
        if not in_order(t, ub, Db):
            continue
        md = MixedDisc.from_D(Db)
        out.append((md.key(), md, t, ub))
    return out


def build(
    spec: FieldSpec,
    T: float,
    disc_height: float | None = None,
    pell_cap: float | None = None,
    class_height: float | None = None,
    class_budget: int = 200_000,
) -> Ledger:
    """All primitive elliptic-hyperbolic classes (pairs) with rho <= T.

    ``disc_height`` optionally drops keys whose D has an embedding larger than
    it (recorded in the completeness note); ``pell_cap`` (default sqrt(T))
    drives an independent :func:`solve_pell` cross-check of each fundamental
    unit.
    """
    if not T > 1:
        raise FieldError("T must exceed 1")
    lam_max = math.sqrt(T)
    cap = pell_cap if pell_cap is not None else lam_max * (1 + 1e-9)
    if cap < lam_max:
        raise FieldError(f"pell_cap={cap} must be at least sqrt(T)={lam_max}")
    traces = hyperbolic_traces(spec, lam_max)
    with ThreadPoolExecutor(max_workers=worker_count()) as ex:
        per_trace = list(ex.map(_candidates_for_trace, traces))
    best: dict[tuple, PellUnit] = {}
    for cands in per_trace:
        for key, md, t, u in cands:
            e = PellUnit(t, u, md)
            cur = best.get(key)
            if cur is None or e.iota2 < cur.iota2:
                best[key] = e
    notes = [f"trace-driven enumeration: {len(traces)} traces with iota2(t) <= {lam_max + 1 / lam_max:.6g}; complete for rho <= T"]
    dropped = 0
    keys = sorted(best)
    if disc_height is not None:
        kept = [k for k in keys if best[k].parent.D.height() <= disc_height]
        dropped = len(keys) - len(kept)
        keys = kept
        if dropped:
            notes.append(f"disc_height={disc_height} dropped {dropped} discriminant classes")
    mismatches = []
    for k in keys:
        e = best[k]
        found = solve_pell(e.parent, cap)
        if not found or found.t != e.t or found.u != e.u:
            mismatches.append(str(e.parent.D))
    if mismatches:
        raise FieldError(f"fundamental unit disagreement with solve_pell for D in {mismatches}")

    def count(k):
        return class_count(best[k].parent, height=class_height, budget=class_budget)

    with ThreadPoolExecutor(max_workers=worker_count()) as ex:
        counts = list(ex.map(count, keys))
    uncertified = sum(1 for c in counts if not c.certified)
    if uncertified:
        notes.append(f"{uncertified} class counts not certified within budget {class_budget}")
    raw = [(best[k], c) for k, c in zip(keys, counts) if best[k].iota2 ** 2 <= T]
    raw.sort(key=lambda ec: (ec[0].iota2, ec[0].parent.key()))
    entries = tuple(
        EHClass(e.parent, e, c.h, c.certified, pair_id=i) for i, (e, c) in enumerate(raw)
    )
    bounds = {
        "disc_height": disc_height,
        "pell_cap": cap,
        "class_height": class_height,
        "class_budget": class_budget,
    }
    return Ledger(spec, float(T), entries, bounds, "; ".join(notes))


def powers_up_to(e: EHClass, X: float) -> list[tuple[int, object, object]]:
    """(l, l*length, eps_gamma^l) for all l >= 1 with l*length <= X."""
    if not X > 0:
        raise FieldError("X must be positive")
    out = []
    with mpmath.workdps(_DPS):
        ell = e.length
        l = 1
        while l * ell <= X:
            out.append((l, l * ell, e.elliptic ** l))
            l += 1
    return out


def power_eigenvalue(e: EHClass, l: int):
    """iota_1(eps^l) from exact unit powers, on the branch matching eps_gamma^l."""
    t, u = unit_power(e.unit, l)
    z = mpmath.mpc(_unit_value(t, u, e.md.D, Place.P1))
    ref = e.elliptic ** l
    return z if abs(z - ref) <= abs(mpmath.conj(z) - ref) else mpmath.conj(z)


# -- matrix-level census --------------------------------------------------------------------

def _entry_bound(g: GammaElem) -> float:
    return max(abs(x.real(p)) for x in g.entries() for p in (Place.P1, Place.P2))


def matrices_with_trace(t: QuadElem, H: float) -> list[GammaElem]:
    """All (alpha, beta; c, t - alpha) in SL_2(O_F) with every |iota_j(entry)| <= H."""
    spec = t.spec
    box = list(elements_in_box(spec, H, H))
    out = []
    for al in box:
        de = t - al
        if max(abs(de.real(Place.P1)), abs(de.real(Place.P2))) > H + 1e-12:
            continue
        n = al * de - spec.one
        if n.is_zero():
            continue
        for be in box:
            if be.is_zero():
                continue
            c = n.exact_div(be)
            if c is None or max(abs(c.real(Place.P1)), abs(c.real(Place.P2))) > H + 1e-12:
                continue
            out.append(GammaElem(al, be, c, de))
    return out


def _conjugacy_classes(nodes: list[GammaElem], explore: float, budget: int) -> tuple[list[list[GammaElem]], bool]:
    """Partition ``nodes`` (modulo +-1) into Gamma-conjugacy classes by BFS over generator conjugates."""
    if not nodes:
        return [], True
    gens = generators(nodes[0].spec)
    pairs = [(g, g.inverse()) for g in gens]
    parent: dict = {}
    rep: dict = {}

    def find(k):
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    certified = True
    visited = 0
    for g in nodes:
        k = g.psl_key()
        if k in parent:
            continue
        parent[k] = k
        rep[k] = g
        stack = [g]
        while stack:
            x = stack.pop()
            for a, ai in pairs:
                y = a @ x @ ai
                if _entry_bound(y) > explore + 1e-12:
                    continue
                ky = y.psl_key()
                if ky in parent:
                    rx, ry = find(k), find(ky)
                    if rx != ry:
                        parent[max(rx, ry)] = min(rx, ry)
                    continue
                visited += 1
                if visited > budget:
                    certified = False
                    continue
                parent[ky] = find(k)
                stack.append(y)
    groups: dict = {}
    for g in nodes:
        groups.setdefault(find(g.psl_key()), {})[g.psl_key()] = g
    return [list(v.values()) for _, v in sorted(groups.items())], certified


def _chebyshev(s: QuadElem, k: int) -> tuple[QuadElem, QuadElem]:
    """(U_{k-2}(s), U_{k-1}(s)) with U_{-1}=0, U_0=1, U_{n+1} = s U_n - U_{n-1}."""
    spec = s.spec
    prev, cur = spec.zero, spec.one
    for _ in range(k - 1):
        prev, cur = cur, s * cur - prev
    return prev, cur


def matrix_root(g: GammaElem, k: int) -> GammaElem | None:
    """A matrix r in SL_2(O_F) with r^k = +-g, if one exists, for elliptic-hyperbolic g
    (any root of such g is again elliptic-hyperbolic, which bounds the trace search)."""
    spec = g.spec
    for sg in (g, -g):
        tr = sg.trace()
        if tr.real(Place.P2) <= 2:
            continue
        lam_g = (tr.real(Place.P2) + math.sqrt(tr.real(Place.P2) ** 2 - 4)) / 2
        lam_r = lam_g ** (1.0 / k)
        target = lam_r + 1 / lam_r
        for s in elements_in_box(spec, 2.0, target + 1e-6):
            if abs(s.real(Place.P2) - target) > 1e-6 * max(1.0, target):
                continue
            if abs(s.real(Place.P1)) >= 2:
                continue
            um2, um1 = _chebyshev(s, k)
            if um1.is_zero():
                continue
            ents = [sg.a + um2, sg.b, sg.c, sg.d + um2]
            q = [x.exact_div(um1) for x in ents]
            if any(x is None for x in q):
                continue
            a, b, c, d = q
            if a * d - b * c != spec.one:
                continue
            r = GammaElem(a, b, c, d)
            p = r
            for _ in range(k - 1):
                p = p @ r
            if p.psl_eq(sg):
                return r
    return None


def is_primitive(g: GammaElem) -> bool:
    """No k >= 2 and r in Gamma with r^k = +-g (exact), for elliptic-hyperbolic g."""
    t2 = abs(g.trace().real(Place.P2))
    lam = (t2 + math.sqrt(t2 * t2 - 4)) / 2
    lam_min = _min_hyperbolic_eigen(g.spec)
    kmax = int(math.log(lam) / math.log(lam_min) + 1e-9)
    return all(matrix_root(g, k) is None for k in range(2, kmax + 1))


@functools.lru_cache(maxsize=None)
def _min_hyperbolic_eigen(spec: FieldSpec) -> float:
    """Smallest iota_2 eigenvalue > 1 among elliptic-hyperbolic traces."""
    lam = 2.0
    while True:
        ts = hyperbolic_traces(spec, lam)
        if ts:
            x = min(t.real(Place.P2) for t in ts)
            return (x + math.sqrt(x * x - 4)) / 2
        lam *= 2


@dataclass
class MatrixCensus:
    classes: dict[tuple, int]
    certified: bool
    representatives: list[GammaElem]


def matrix_census(spec: FieldSpec, T: float, H: float, explore_factor: float = 2.0, budget: int = 2_000_000) -> MatrixCensus:
    """Primitive elliptic-hyperbolic G-classes with rho <= T from a direct matrix scan.

    Every class is keyed by its discriminant class (D, d), read from the
    fixed-point form (c, delta - alpha, -beta) of a representative.
    """
    lam_max = math.sqrt(T)
    out: dict[tuple, int] = {}
    reps = []
    cert = True
    for t in hyperbolic_traces(spec, lam_max):
        nodes = matrices_with_trace(t, H)
        groups, ok = _conjugacy_classes(nodes, explore_factor * H, budget)
        cert = cert and ok
        for grp in groups:
            g = min(grp, key=lambda x: (_entry_bound(x), x.psl_key()))
            if not is_primitive(g):
                continue
            A, B, C = g.c, g.d - g.a, -g.b
            div = gcd_many(A, B, C)
            disc = (t * t - spec.integer(4)).exact_div(div * div)
            D0, _ = balance_by_unit_squares(disc)
            key = MixedDisc.from_D(D0).key()
            out[key] = out.get(key, 0) + 1
            reps.append(g)
    return MatrixCensus(dict(sorted(out.items())), cert, reps)


# -- elliptic torsion ---------------------------------------------------------------------------

def elliptic_traces(spec: FieldSpec) -> list[QuadElem]:
    out = []
    for t in elements_in_box(spec, 2.0, 2.0):
        four = spec.integer(4)
        if (t * t - four).sign(Place.P1) < 0 and (t * t - four).sign(Place.P2) < 0:
            out.append(t)
    return sorted(out, key=lambda x: x.sort_key())


def psl_order(g: GammaElem, kmax: int = 60) -> int | None:
    ident = GammaElem.identity(g.spec)
    p = g
    for k in range(1, kmax + 1):
        if p.psl_eq(ident):
            return k
        p = p @ g
    return None


def rotation_angle(g: GammaElem, place: Place) -> float:
    """theta in [0, 2pi) with iota(g) conjugate in PSL_2(R) to k_theta = (cos, sin; -sin, cos)(theta/2)."""
    x = g.trace().real(place) / 2
    c = g.c.real(place)
    phi = math.acos(max(-1.0, min(1.0, x)))
    theta = -2 * phi if c > 0 else 2 * phi
    return theta % (2 * math.pi)


def centralizer_order(t: QuadElem, g: QuadElem) -> int:
    """Order in PSL_2 of the centralizer of an elliptic element with trace t and content g.

    The centralizer is the group of roots of unity (t' + u' sqrt D)/2 of the
    relative order of discriminant D = (t^2 - 4)/g^2, modulo +-1.
    """
    spec = t.spec
    D = (t * t - spec.integer(4)).exact_div(g * g)
    assert D is not None
    b1 = 2.0 / math.sqrt(-D.real(Place.P1)) + 1e-9
    b2 = 2.0 / math.sqrt(-D.real(Place.P2)) + 1e-9
    n = 0
    for u in elements_in_box(spec, b1, b2):
        tt = sqrt_exact(D * u * u + spec.integer(4))
        if tt is None:
            continue
        roots = {(tt.a, tt.b), (-tt.a, -tt.b)}
        n += sum(1 for x, y in roots if in_order(QuadElem(x, y, spec), u, D))
    return n // 2


def elliptic_matrix(t: QuadElem, g: QuadElem, q) -> GammaElem:
    from .forms import automorph

    return automorph(q, t, g)


def enumerate_elliptic(spec: FieldSpec, height: float | None = None, budget: int = 200_000) -> list[dict]:
    """Elliptic conjugacy classes of Gamma_F, one record per class.

    A class with trace t (up to sign) is the automorph of a form
    (c, delta - alpha, -beta) = g * q with q primitive of discriminant
    (t^2 - 4)/g^2, and conjugation acts on q through SL_2(O_F); for t = 0
    the sign of q is immaterial in PSL_2.  ``height`` bounds the seed forms
    as in :func:`~hybridtrace.forms.form_classes`.
    """
    from .forms import form_classes

    out = []
    for t in elliptic_traces(spec):
        if t.sign(Place.P2) < 0 or (t.is_zero() is False and t.real(Place.P2) == 0):
            continue
        delta = t * t - spec.integer(4)
        for g in _square_divisors(delta):
            D = delta.exact_div(g * g)
            if not is_square_mod4(D) or not in_order(t, g, D):
                continue
            cc = form_classes(D, height=height, budget=budget, flip=t.is_zero())
            M = centralizer_order(t, g)
            for q in cc.representatives:
                gam = elliptic_matrix(t, g, q)
                out.append({
                    "gamma": [e.to_json() for e in gam.entries()],
                    "order": psl_order(gam),
                    "M": M,
                    "theta1": rotation_angle(gam, Place.P1),
                    "theta2": rotation_angle(gam, Place.P2),
                    "certified": cc.certified,
                })
    out.sort(key=lambda r: (r["order"], r["M"], round(r["theta2"], 12), round(r["theta1"], 12)))
    return out


def elliptic_matrix_census(spec: FieldSpec, height: float = 4.0, budget: int = 500_000) -> list[dict]:
    """Brute-force counterpart of :func:`enumerate_elliptic`: matrices in a height box merged by
    conjugation BFS; centralizer orders from box elements.  Best effort only."""
    nodes: dict = {}
    for t in elliptic_traces(spec):
        for g in matrices_with_trace(t, height):
            if g.c.is_zero():
                continue
            nodes.setdefault(g.psl_key(), g)
    allg = list(nodes.values())
    groups, cert = _conjugacy_classes(allg, 2 * height, budget)
    out = []
    for grp in groups:
        g = min(grp, key=lambda x: (_entry_bound(x), x.psl_key()))
        cent = {x.psl_key() for x in allg if (x @ g).psl_eq(g @ x)}
        out.append({
            "gamma": [e.to_json() for e in g.entries()],
            "order": psl_order(g),
            "M": len(cent) + 1,
            "theta1": rotation_angle(g, Place.P1),
            "theta2": rotation_angle(g, Place.P2),
            "certified": cert,
        })
    out.sort(key=lambda r: (r["order"], r["M"], round(r["theta2"], 12), round(r["theta1"], 12)))
    return out
