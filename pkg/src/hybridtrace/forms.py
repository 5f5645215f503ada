"""Binary quadratic forms over O_F, the Gamma_F action, automorphs and class counting.

Class counting works on forms of a fixed primitive discriminant ``D`` (see
:class:`~hybridtrace.relorder.MixedDisc`).  Up to the scaling ``q -> -q`` every
such form is positive definite at ``P1``; a class is an SL_2(O_F)-orbit of
these.  Each form is brought to a normal shape (``a`` balanced by unit squares,
``b`` reduced modulo ``2a``), seeds with small ``|N(a)|`` are enumerated, and
seeds are merged by walking the ``S``-moves of the normal shapes, which is the
analogue of Gauss' reduction cycle.
"""
from __future__ import annotations

import functools
import math
from collections import deque
from dataclasses import dataclass, field

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
    reduce_mod,
    residue_reps,
    residues_mod,
    sqrt_exact,
)
from .relorder import MixedDisc


@dataclass(frozen=True)
class GammaElem:
    a: QuadElem
    b: QuadElem
    c: QuadElem
    d: QuadElem

    def __post_init__(self) -> None:
        if self.a * self.d - self.b * self.c != self.a.spec.one:
            raise FieldError("matrix does not have determinant 1")

    @property
    def spec(self) -> FieldSpec:
        return self.a.spec

    def __matmul__(self, o: GammaElem) -> GammaElem:
        return GammaElem(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )

    def inverse(self) -> GammaElem:
        return GammaElem(self.d, -self.b, -self.c, self.a)

    def __neg__(self) -> GammaElem:
        return GammaElem(-self.a, -self.b, -self.c, -self.d)

    def trace(self) -> QuadElem:
        return self.a + self.d

    def entries(self) -> tuple[QuadElem, ...]:
        return (self.a, self.b, self.c, self.d)

    def psl_key(self) -> tuple[int, ...]:
        """Key identifying the matrix modulo +-1."""
        raw = tuple(v for e in self.entries() for v in (e.a, e.b))
        neg = tuple(-v for v in raw)
        return max(raw, neg)

    def psl_eq(self, o: GammaElem) -> bool:
        return self.psl_key() == o.psl_key()

    @classmethod
    def identity(cls, spec: FieldSpec) -> GammaElem:
        return cls(spec.one, spec.zero, spec.zero, spec.one)


def generators(spec: FieldSpec) -> list[GammaElem]:
    """S, T_1, T_omega, diag(eps, eps^-1) and their inverses."""
    one, zero, w = spec.one, spec.zero, spec.omega
    eps = fundamental_unit(spec)
    base = [
        GammaElem(zero, -one, one, zero),
        GammaElem(one, one, zero, one),
        GammaElem(one, w, zero, one),
        GammaElem(eps, zero, zero, eps.inverse_unit()),
    ]
    return base + [g.inverse() for g in base]


@dataclass(frozen=True)
class BQForm:
    a: QuadElem
    b: QuadElem
    c: QuadElem

    def __post_init__(self) -> None:
        if self.a.is_zero() and self.b.is_zero() and self.c.is_zero():
            raise FieldError("zero form")
        if sqrt_exact(self.disc) is not None:
            raise FieldError(f"degenerate form: discriminant {self.disc} is a square")

    @property
    def spec(self) -> FieldSpec:
        return self.a.spec

    @property
    def disc(self) -> QuadElem:
        return self.b * self.b - 4 * self.a * self.c

    @functools.cached_property
    def divisor(self) -> QuadElem:
        return canonical_associate(gcd_many(self.a, self.b, self.c))

    @property
    def primitive_disc(self) -> QuadElem:
        g = self.divisor
        D = self.disc.exact_div(g * g)
        assert D is not None
        return canonical_associate(D)

    def primitive_part(self) -> BQForm:
        g = self.divisor
        return BQForm(self.a.exact_div(g), self.b.exact_div(g), self.c.exact_div(g))

    def __call__(self, x: QuadElem, y: QuadElem) -> QuadElem:
        return self.a * x * x + self.b * x * y + self.c * y * y

    def coeffs(self) -> tuple[int, ...]:
        return (self.a.a, self.a.b, self.b.a, self.b.b, self.c.a, self.c.b)

    def height(self) -> float:
        return max(
            abs(self.a.real(p)) + abs(self.b.real(p)) + abs(self.c.real(p)) for p in (Place.P1, Place.P2)
        )

    def to_json(self) -> dict:
        return {"a": self.a.to_json(), "b": self.b.to_json(), "c": self.c.to_json()}

    @classmethod
    def from_json(cls, obj: dict, spec: FieldSpec) -> BQForm:
        return cls(*(QuadElem.from_json(obj[k], spec) for k in "abc"))


def same_splitting_field(D1: QuadElem, D2: QuadElem) -> bool:
    """F(sqrt D1) == F(sqrt D2), i.e. D1/D2 is a square in F^*."""
    return sqrt_exact(D1 * D2) is not None


def act(q: BQForm, t: QuadElem, g: GammaElem) -> BQForm:
    """The form (x, y) -> t * q(alpha x + beta y, gamma x + delta y), with g acting on columns.

    This is the action under which :func:`automorph` fixes q; it has the same
    orbits as the row action because the generator set is closed under transposition.
    """
    if t.is_zero():
        raise FieldError("scaling factor t must be nonzero")
    al, be, ga, de = g.a, g.b, g.c, g.d
    a = q(al, ga)
    c = q(be, de)
    b = 2 * q.a * al * be + q.b * (al * de + be * ga) + 2 * q.c * ga * de
    return BQForm(t * a, t * b, t * c)


def automorph(q: BQForm, t: QuadElem, u: QuadElem) -> GammaElem:
    """The automorph ((t-bu)/2, -cu; au, (t+bu)/2) of q attached to a solution of t^2 - D u^2 = 4."""
    spec = q.spec
    if t * t - q.disc * u * u != spec.integer(4):
        raise FieldError("(t, u) does not solve t^2 - D u^2 = 4 for D = disc(q)")
    two = spec.integer(2)
    top = (t - q.b * u).exact_div(two)
    bot = (t + q.b * u).exact_div(two)
    for name, val in (("(t-bu)/2", top), ("(t+bu)/2", bot)):
        if val is None:
            raise FieldError(f"automorph entry {name} is not integral")
    return GammaElem(top, -q.c * u, q.a * u, bot)


# -- deterministic descent ---------------------------------------------------------------

def _component_rep(nz: _Normalizer, a: QuadElem, b: QuadElem, explore_bound: int, budget: int):
    """Least shape (by |N(a)|, then key) of the component of (a, b) in the neighbour graph
    on shapes with |N(a)| <= explore_bound; None when the walk exceeds ``budget``."""
    a, b = nz.normalize(a, b)
    # descend into the bounded region first
    steps = 0
    while abs(a.inorm()) > explore_bound:
        steps += 1
        if steps > budget:
            return None
        a, b = min(nz.neighbours(a, b), key=lambda s: (abs(s[0].inorm()), _key(*s)))
    best = (abs(a.inorm()), _key(a, b), a, b)
    seen = {_key(a, b)}
    queue = deque([(a, b)])
    while queue:
        ca, cb = queue.popleft()
        for na, nb in nz.neighbours(ca, cb):
            n = abs(na.inorm())
            if n > explore_bound:
                continue
            k = _key(na, nb)
            if k in seen:
                continue
            seen.add(k)
            if len(seen) > budget:
                return None
            if (n, k) < best[:2]:
                best = (n, k, na, nb)
            queue.append((na, nb))
    return best[2], best[3]


def canonical_rep(q: BQForm, budget: int = 50_000) -> tuple[BQForm, bool]:
    """Representative of the orbit of q under Gamma_F and unit scaling.

    q = g q0 with g the canonical content; q0 is rescaled by a unit so that its
    discriminant is balanced, and the least normal shape of its component in the
    bounded neighbour graph used by :func:`form_classes` is returned.
    ``certified`` is False when the walk ran past ``budget`` shapes, in which
    case the balanced normal shape of q itself is returned.
    """
    if budget < 1:
        raise FieldError("budget must be >= 1")
    spec = q.spec
    g = q.divisor
    q0 = q.primitive_part()
    D1, k = balance_by_unit_squares(q0.disc)
    eps = fundamental_unit(spec)
    u = eps ** k if k >= 0 else eps.inverse_unit() ** (-k)
    q1 = BQForm(u * q0.a, u * q0.b, u * q0.c)
    nz = _Normalizer(D1, True)
    shape = _component_rep(nz, q1.a, q1.b, 2 * default_seed_bound(D1), budget)
    ok = shape is not None
    if shape is None:
        shape = nz.normalize(q1.a, q1.b)
    a, b = shape
    return BQForm(g * a, g * b, g * nz.c_of(a, b)), ok


# -- class counting ---------------------------------------------------------------------------

@dataclass
class ClassCount:
    h: int
    certified: bool
    representatives: list[BQForm] = field(default_factory=list)
    seed_bound: int = 0
    explore_bound: int = 0


class _Normalizer:
    """Normal shapes of primitive forms of one fixed discriminant.

    With ``flip`` the forms are taken up to sign and normalized to be
    positive at P1; without it SL_2 acts alone.
    """

    def __init__(self, D: QuadElem, flip: bool = True):
        self.D = D
        self.flip = flip
        self.spec = D.spec
        self.four = self.spec.integer(4)
        self._hnf_cache: dict = {}
        # the Gauss step aims b' at 0 where D is negative and at +-sqrt(D) where it is positive
        roots = []
        for p in (Place.P1, Place.P2):
            x = D.real(p)
            roots.append((0.0,) if x < 0 else (math.sqrt(x), -math.sqrt(x)))
        self.targets = [(r1, r2) for r1 in roots[0] for r2 in roots[1]]

    def c_of(self, a: QuadElem, b: QuadElem) -> QuadElem | None:
        return (b * b - self.D).exact_div(self.four * a)

    def normalize(self, a: QuadElem, b: QuadElem) -> tuple[QuadElem, QuadElem]:
        if self.flip and a.sign(Place.P1) < 0:
            a, b = -a, -b
        a2, _ = balance_by_unit_squares(a)
        # diag(u, u^-1) leaves b unchanged
        key = (a2.a, a2.b)
        hnf = self._hnf_cache.get(key)
        if hnf is None:
            hnf = residues_mod(2 * a2)
            self._hnf_cache[key] = hnf
        return a2, reduce_mod(b, hnf)

    def neighbours(self, a: QuadElem, b: QuadElem, radius: int = 1):
        """Normal shapes of S(L_beta q) for beta near the Gauss reduction choice,
        which makes c' = (b'^2 - D)/4a small at both places."""
        out = []
        a1, a2 = a.real(Place.P1), a.real(Place.P2)
        b1, b2 = b.real(Place.P1), b.real(Place.P2)
        seen = set()
        for r1, r2 in self.targets:
            x1 = (r1 - b1) / (2 * a1)
            x2 = (r2 - b2) / (2 * a2)
            for beta in nearest_elements(self.spec, x1, x2, radius):
                k = (beta.a, beta.b)
                if k in seen:
                    continue
                seen.add(k)
                bb = b + 2 * a * beta
                c = self.c_of(a, bb)
                out.append(self.normalize(c, -bb))
        return out


def nearest_elements(spec: FieldSpec, x1: float, x2: float, radius: int = 1) -> list[QuadElem]:
    """Elements of O_F whose basis coordinates are within ``radius`` of the real solution of
    (iota_1, iota_2)(p + q*omega) = (x1, x2)."""
    w = spec.omega
    w1, w2 = w.real(Place.P1), w.real(Place.P2)
    q = (x2 - x1) / (w2 - w1)
    p = x1 - q * w1
    p0, q0 = round(p), round(q)
    return [
        spec.from_basis(p0 + i, q0 + j)
        for i in range(-radius, radius + 1)
        for j in range(-radius, radius + 1)
    ]


def _key(a: QuadElem, b: QuadElem) -> tuple[int, int, int, int]:
    return (a.a, a.b, b.a, b.b)


def seed_forms(D: QuadElem, norm_bound: int, flip: bool = True) -> list[tuple[QuadElem, QuadElem]]:
    """Normal shapes (a, b) of primitive forms of discriminant D with |N(a)| <= norm_bound."""
    spec = D.spec
    nz = _Normalizer(D, flip)
    eps = fundamental_unit(spec)
    e2 = eps.real() ** 2
    box = math.sqrt(norm_bound * e2) + 1e-9
    seeds = {}
    for a in elements_in_box(spec, box, box):
        if a.is_zero() or abs(a.inorm()) > norm_bound:
            continue
        if flip and a.sign(Place.P1) <= 0:
            continue
        a_bal, _ = balance_by_unit_squares(a)
        if a_bal != a:
            continue
        hnf = residues_mod(2 * a)
        for b in residue_reps(hnf, spec):
            c = nz.c_of(a, b)
            if c is None:
                continue
            if not gcd_many(a, b, c).is_unit():
                continue
            seeds[_key(a, b)] = (a, b)
    return [seeds[k] for k in sorted(seeds)]


def default_seed_bound(D: QuadElem, factor: float = 2.0) -> int:
    return max(1, math.ceil(factor * math.sqrt(abs(D.inorm()))))


class _ClassIndex:
    """Union-find over normal shapes of primitive forms of discriminant D, grown from
    the seed forms by neighbour walks (see :func:`form_classes`)."""

    def __init__(self, D: QuadElem, seed_bound: int, explore_bound: int, budget: int, flip: bool):
        self.nz = _Normalizer(D, flip)
        self.parent: dict = {}
        self.certified = True
        seeds = seed_forms(D, seed_bound, flip)
        visited = 0
        for a, b in seeds:
            k = _key(a, b)
            if k in self.parent:
                continue
            self.parent[k] = k
            queue = deque([(a, b)])
            while queue:
                ca, cb = queue.popleft()
                ck = _key(ca, cb)
                for na, nb in self.nz.neighbours(ca, cb):
                    if abs(na.inorm()) > explore_bound:
                        continue
                    nk = _key(na, nb)
                    if nk in self.parent:
                        self._union(ck, nk)
                        continue
                    visited += 1
                    if visited > budget:
                        self.certified = False
                        continue
                    self.parent[nk] = nk
                    self._union(ck, nk)
                    queue.append((na, nb))
        roots: dict = {}
        for a, b in seeds:
            roots.setdefault(self.find(_key(a, b)), (a, b))
        self.rep_of_root = roots
        self.representatives = [BQForm(a, b, self.nz.c_of(a, b)) for a, b in (roots[r] for r in sorted(roots))]

    def find(self, k):
        parent = self.parent
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    def _union(self, x, y) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            if rx < ry:
                self.parent[ry] = rx
            else:
                self.parent[rx] = ry

    def locate(self, a: QuadElem, b: QuadElem, budget: int) -> BQForm | None:
        """Representative of the class of the form with normal shape (a, b), found by
        walking neighbours until an indexed shape is met; None past ``budget``."""
        a, b = self.nz.normalize(a, b)
        seen = {_key(a, b)}
        queue = deque([(a, b)])
        while queue and len(seen) <= budget:
            ca, cb = queue.popleft()
            k = _key(ca, cb)
            if k in self.parent:
                ra, rb = self.rep_of_root[self.find(k)]
                return BQForm(ra, rb, self.nz.c_of(ra, rb))
            for na, nb in self.nz.neighbours(ca, cb):
                nk = _key(na, nb)
                if nk not in seen:
                    seen.add(nk)
                    queue.append((na, nb))
        return None


@functools.lru_cache(maxsize=256)
def _class_index(D: QuadElem, seed_bound: int, explore_bound: int, budget: int, flip: bool) -> _ClassIndex:
    return _ClassIndex(D, seed_bound, explore_bound, budget, flip)


def form_classes(
    D: QuadElem,
    height: float | None = None,
    budget: int = 200_000,
    explore_factor: int = 4,
    flip: bool = True,
) -> ClassCount:
    """SL_2(O_F)-classes (up to sign if ``flip``) of primitive forms of discriminant exactly D.

    ``height`` bounds |N(a)| of the enumerated seed forms (default
    ``2*sqrt|N(D)|``); merging walks may visit forms with |N(a)| up to
    ``explore_factor * height``.  ``certified`` is True iff every walk closed
    within ``budget`` visited nodes.
    """
    seed_bound = int(height) if height is not None else default_seed_bound(D)
    explore_bound = explore_factor * seed_bound
    idx = _class_index(D, seed_bound, explore_bound, budget, flip)
    return ClassCount(len(idx.representatives), idx.certified, list(idx.representatives), seed_bound, explore_bound)


def class_count(
    md: MixedDisc,
    height: float | None = None,
    budget: int = 200_000,
    explore_factor: int = 4,
) -> ClassCount:
    """Number of Gamma_F-classes of forms with splitting field F(sqrt D) and primitive discriminant d.

    Every such class has a primitive member of discriminant exactly ``md.D``
    (units rescale the discriminant by squares), so this counts classes of
    those modulo q -> -q.  See :func:`form_classes` for the bounds.
    """
    return form_classes(md.D, height, budget, explore_factor, flip=True)


def class_census(md: MixedDisc, **kw) -> list[dict]:
    """JSON-lines records, one per class, for the census file."""
    cc = class_count(md, **kw)
    return [
        {
            "representative": q.to_json(),
            "D": md.D.to_json(),
            "d": md.d_gen.to_json(),
            "class_index": i,
            "h": cc.h,
            "certified": cc.certified,
        }
        for i, q in enumerate(cc.representatives)
    ]
