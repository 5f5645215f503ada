"""Exact arithmetic in a real quadratic field F = Q(sqrt(delta)) and its ring of integers.

Elements of O_F are stored as integer pairs ``(a, b)`` standing for
``(a + b*sqrt(delta)) / 2`` when ``delta = 1 (mod 4)`` and ``a + b*sqrt(delta)``
otherwise.  The two real places are labelled ``P1`` (sqrt(delta) -> -sqrt(delta))
and ``P2`` (sqrt(delta) -> +sqrt(delta)); ``P2`` is the hyperbolic place.

All comparisons of embedded values are done exactly: every real number
``iota_j(x)`` is rewritten as ``iota_2(y)`` for ``y = x`` or ``y = conj(x)``,
and the sign of an element at ``P2`` is decided with integer arithmetic.
"""
from __future__ import annotations

import enum
import functools
import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import mpmath

# Norm-Euclidean real quadratic fields; all have class number one.
EUCLIDEAN_DELTAS = frozenset({2, 3, 5, 6, 7, 11, 13, 17, 19, 21, 29, 33, 37, 41, 57, 73})

_IV_LOCK = threading.Lock()


class Place(enum.Enum):
    P1 = 1
    P2 = 2


class FieldError(ValueError):
    """Mixed fields, non-integral results and similar usage errors."""


class SearchBoundExceeded(RuntimeError):
    pass


def _squarefree(n: int) -> bool:
    k = 2
    while k * k <= n:
        if n % (k * k) == 0:
            return False
        k += 1
    return True


@dataclass(frozen=True)
class FieldSpec:
    delta: int

    def __post_init__(self) -> None:
        if not isinstance(self.delta, int) or self.delta <= 1:
            raise FieldError(f"delta must be an integer > 1, got {self.delta!r}")
        if not _squarefree(self.delta):
            raise FieldError(f"delta={self.delta} is not square-free")

    @property
    def ring_shift(self) -> bool:
        return self.delta % 4 == 1

    @property
    def den(self) -> int:
        return 2 if self.ring_shift else 1

    def elem(self, a: int, b: int = 0) -> QuadElem:
        """Element with raw coefficients (a, b) in this field's storage convention."""
        return QuadElem(a, b, self)

    def integer(self, n: int) -> QuadElem:
        return QuadElem(n * self.den, 0, self)

    @property
    def zero(self) -> QuadElem:
        return QuadElem(0, 0, self)

    @property
    def one(self) -> QuadElem:
        return self.integer(1)

    @property
    def omega(self) -> QuadElem:
        """Second integral-basis element: (1+sqrt(delta))/2 or sqrt(delta)."""
        return QuadElem(1, 1, self) if self.ring_shift else QuadElem(0, 1, self)

    @property
    def sqrt_delta(self) -> QuadElem:
        return QuadElem(0, 2, self) if self.ring_shift else QuadElem(0, 1, self)

    def from_basis(self, p: int, q: int) -> QuadElem:
        """p + q*omega."""
        if self.ring_shift:
            return QuadElem(2 * p + q, q, self)
        return QuadElem(p, q, self)

    def to_json(self) -> dict:
        return {"delta": self.delta}

    @classmethod
    def from_json(cls, obj: dict) -> FieldSpec:
        return cls(int(obj["delta"]))


@dataclass(frozen=True)
class QuadElem:
    a: int
    b: int
    spec: FieldSpec

    def __post_init__(self) -> None:
        if self.spec.ring_shift and (self.a - self.b) % 2:
            raise FieldError(f"({self.a} + {self.b}*sqrt{self.spec.delta})/2 is not integral")

    # -- arithmetic ---------------------------------------------------------
    def _check(self, other: QuadElem) -> None:
        if self.spec != other.spec:
            raise FieldError(f"mixed fields: delta={self.spec.delta} vs delta={other.spec.delta}")

    def _coerce(self, other) -> QuadElem:
        if isinstance(other, int):
            return self.spec.integer(other)
        if isinstance(other, QuadElem):
            self._check(other)
            return other
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadElem(self.a + o.a, self.b + o.b, self.spec)

    __radd__ = __add__

    def __neg__(self) -> QuadElem:
        return QuadElem(-self.a, -self.b, self.spec)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadElem(self.a - o.a, self.b - o.b, self.spec)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        d = self.spec.delta
        a = self.a * o.a + d * self.b * o.b
        b = self.a * o.b + self.b * o.a
        if self.spec.ring_shift:
            return QuadElem(a // 2, b // 2, self.spec)
        return QuadElem(a, b, self.spec)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> QuadElem:
        if n < 0:
            inv = self.inverse_unit()
            return inv ** (-n)
        result, base = self.spec.one, self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def conj(self) -> QuadElem:
        return QuadElem(self.a, -self.b, self.spec)

    def norm(self) -> Fraction:
        den = self.spec.den
        return Fraction(self.a * self.a - self.spec.delta * self.b * self.b, den * den)

    def trace(self) -> Fraction:
        return Fraction(2 * self.a, self.spec.den)

    def inorm(self) -> int:
        n = self.norm()
        assert n.denominator == 1
        return n.numerator

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def __bool__(self) -> bool:
        return not self.is_zero()

    def is_unit(self) -> bool:
        return abs(self.norm()) == 1

    def inverse_unit(self) -> QuadElem:
        n = self.inorm()
        if abs(n) != 1:
            raise FieldError(f"{self} is not a unit")
        c = self.conj()
        return c if n == 1 else -c

    def exact_div(self, other: QuadElem) -> QuadElem | None:
        """self / other if it lies in O_F, else None."""
        self._check(other)
        if other.is_zero():
            raise ZeroDivisionError("division by zero in O_F")
        num = self * other.conj()
        n = other.inorm()
        if num.a % n or num.b % n:
            return None
        a, b = num.a // n, num.b // n
        if self.spec.ring_shift and (a - b) % 2:
            return None
        return QuadElem(a, b, self.spec)

    def divides(self, other: QuadElem) -> bool:
        if self.is_zero():
            return other.is_zero()
        return other.exact_div(self) is not None

    # -- basis coordinates ------------------------------------------------------
    def basis_coords(self) -> tuple[int, int]:
        """(p, q) with self = p + q*omega."""
        if self.spec.ring_shift:
            return (self.a - self.b) // 2, self.b
        return self.a, self.b

    # -- embeddings ---------------------------------------------------------------
    def at(self, place: Place) -> QuadElem:
        """Element whose P2-embedding equals this element's embedding at ``place``."""
        return self if place is Place.P2 else self.conj()

    def sign(self, place: Place = Place.P2) -> int:
        y = self.at(place)
        a, b = y.a, y.b
        sa = (a > 0) - (a < 0)
        sb = (b > 0) - (b < 0)
        if sa == sb or sb == 0:
            return sa
        if sa == 0:
            return sb
        lhs, rhs = a * a, self.spec.delta * b * b
        if lhs == rhs:
            return 0
        return sa if lhs > rhs else sb

    def is_totally_positive(self) -> bool:
        return self.sign(Place.P1) > 0 and self.sign(Place.P2) > 0

    def real(self, place: Place = Place.P2) -> float:
        s = -1.0 if place is Place.P1 else 1.0
        return (self.a + s * self.b * math.sqrt(self.spec.delta)) / self.spec.den

    def mpf(self, place: Place = Place.P2):
        s = -1 if place is Place.P1 else 1
        return (self.a + s * self.b * mpmath.sqrt(self.spec.delta)) / self.spec.den

    def height(self) -> float:
        return max(abs(self.real(Place.P1)), abs(self.real(Place.P2)))

    # -- display / serialization ----------------------------------------------------
    def __repr__(self) -> str:
        if self.spec.ring_shift:
            return f"({self.a}{self.b:+d}√{self.spec.delta})/2"
        return f"{self.a}{self.b:+d}√{self.spec.delta}"

    def sort_key(self) -> tuple[int, int, int, int]:
        return (abs(self.a), abs(self.b), self.a, self.b)

    def to_json(self) -> dict:
        return {"a": str(self.a), "b": str(self.b), "half": self.spec.ring_shift}

    @classmethod
    def from_json(cls, obj: dict, spec: FieldSpec) -> QuadElem:
        if bool(obj["half"]) != spec.ring_shift:
            raise FieldError("serialized element does not match the field's integral basis")
        return cls(int(obj["a"]), int(obj["b"]), spec)


# -- exact comparisons of embedded values ---------------------------------------------------

def abs_at(x: QuadElem, place: Place) -> QuadElem:
    """Element y with iota_2(y) = |iota_place(x)|."""
    y = x.at(place)
    return -y if y.sign() < 0 else y


def cmp_p2(x: QuadElem, y: QuadElem) -> int:
    """Sign of iota_2(x) - iota_2(y)."""
    return (x - y).sign()


def max_abs(x: QuadElem) -> QuadElem:
    """Element whose P2 value is max(|iota_1 x|, |iota_2 x|)."""
    u, v = abs_at(x, Place.P1), abs_at(x, Place.P2)
    return u if cmp_p2(u, v) > 0 else v


def embed(x: QuadElem, place: Place, precision: int = 53):
    """Certified interval enclosure (mpmath.iv) of iota_place(x)."""
    if precision < 53:
        raise FieldError("precision must be at least 53 bits")
    with _IV_LOCK:
        old = mpmath.iv.prec
        mpmath.iv.prec = precision + 10
        try:
            if x.is_zero():
                return mpmath.iv.mpf(0)
            s = -1 if place is Place.P1 else 1
            val = (mpmath.iv.mpf(x.a) + s * x.b * mpmath.iv.sqrt(x.spec.delta)) / x.spec.den
        finally:
            mpmath.iv.prec = old
    return val


# -- units ---------------------------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def fundamental_unit(spec: FieldSpec, max_b: int = 2_000_000) -> QuadElem:
    """Unit eps > 1 at P2 of norm +-1 with minimal iota_2.

    A unit eps > 1 has both raw coefficients positive and satisfies
    eps > b*sqrt(delta)/den, so a first solution eps_0 bounds the search box
    for any smaller unit by b < den*eps_0/sqrt(delta).  The box is scanned
    completely before returning.
    """
    d, den = spec.delta, spec.den
    target = den * den

    def unit_at(b: int) -> list[QuadElem]:
        found = []
        for n in (target, -target):
            a2 = d * b * b + n
            if a2 <= 0:
                continue
            a = math.isqrt(a2)
            if a * a == a2 and (not spec.ring_shift or (a - b) % 2 == 0):
                found.append(QuadElem(a, b, spec))
        return found

    first = None
    for b in range(1, max_b + 1):
        if unit_at(b):
            first = b
            break
    if first is None:
        raise SearchBoundExceeded(f"no unit with b <= {max_b} for delta={d}")
    best = min(unit_at(first), key=lambda e: e.real())
    bound = math.ceil(den * best.real() / math.sqrt(d)) + 1
    for b in range(1, bound + 1):
        for e in unit_at(b):
            if cmp_p2(e, best) < 0:
                best = e
    return best


def cusp_regulator(spec: FieldSpec) -> float:
    """|log iota_2(eps)| for the generator of the cusp unit group modulo +-1."""
    return float(abs(mpmath.log(fundamental_unit(spec).mpf(Place.P2))))


def cusp_regulator_det(spec: FieldSpec) -> float:
    """Same regulator as |det| of the 2x2 log-embedding matrix of the cusp unit group."""
    eps = fundamental_unit(spec)
    mat = mpmath.matrix(
        [
            [mpmath.mpf(1) / 2, mpmath.log(abs(eps.mpf(Place.P1)))],
            [mpmath.mpf(1) / 2, mpmath.log(abs(eps.mpf(Place.P2)))],
        ]
    )
    return float(abs(mpmath.det(mat)))


# -- square roots, gcd, associates ---------------------------------------------------------------

def sqrt_exact(x: QuadElem) -> QuadElem | None:
    """y in O_F with y*y == x and iota_2(y) >= 0, or None."""
    if x.is_zero():
        return x
    if x.sign(Place.P1) < 0 or x.sign(Place.P2) < 0:
        return None
    spec, den = x.spec, x.spec.den
    n = x.inorm()
    r = math.isqrt(n)
    if r * r != n:
        return None
    # y = (p + q sqrt d)/den: p^2 + d q^2 = den*a, 2 p q = den*b, p^2 - d q^2 = den^2 * N(y)
    for ny in (r, -r):
        p2 = den * x.a + den * den * ny
        q2d = den * x.a - den * den * ny
        if p2 < 0 or q2d < 0 or p2 % 2 or q2d % (2 * spec.delta):
            continue
        p2 //= 2
        q2 = q2d // (2 * spec.delta)
        p, q = math.isqrt(p2), math.isqrt(q2)
        if p * p != p2 or q * q != q2:
            continue
        for sq in (q, -q):
            if spec.ring_shift and (p - sq) % 2:
                continue
            y = QuadElem(p, sq, spec)
            if y * y == x:
                return y if y.sign() >= 0 else -y
    return None


def _round_quotient(x: QuadElem, y: QuadElem) -> list[QuadElem]:
    """Candidate quotients near x/y in the integral basis."""
    spec = x.spec
    num = x * y.conj()
    n = y.inorm()
    # num/n in basis 1, omega with rational coordinates
    p, q = num.basis_coords()
    fp, fq = Fraction(p, n), Fraction(q, n)
    rp, rq = round(fp), round(fq)
    out = []
    for dp in (0, -1, 1):
        for dq in (0, -1, 1):
            out.append(spec.from_basis(rp + dp, rq + dq))
    return out


def gcd(x: QuadElem, y: QuadElem) -> QuadElem:
    """A generator of the ideal (x, y) via the Euclidean algorithm (not canonicalized)."""
    while not y.is_zero():
        best = None
        for q in _round_quotient(x, y):
            r = x - q * y
            if best is None or abs(r.inorm()) < abs(best.inorm()):
                best = r
        if abs(best.inorm()) >= abs(y.inorm()):
            raise FieldError(f"Euclidean step failed for delta={x.spec.delta}")
        x, y = y, best
    return x


def gcd_many(*xs: QuadElem) -> QuadElem:
    g = xs[0].spec.zero
    for x in xs:
        g = gcd(g, x) if not g.is_zero() else x
    return g


def _associate_cmp(u: QuadElem, v: QuadElem) -> int:
    tu, tv = u.is_totally_positive(), v.is_totally_positive()
    if tu != tv:
        return -1 if tu else 1
    c = cmp_p2(max_abs(u), max_abs(v))
    if c:
        return c
    c = cmp_p2(u, v)
    if c:
        return c
    ku, kv = u.sort_key(), v.sort_key()
    return (ku > kv) - (ku < kv)


def unit_balance_exponent(x: QuadElem, step: int = 1) -> int:
    """k such that eps^(step*k) * x has its two embeddings closest in size."""
    eps = fundamental_unit(x.spec)
    r1, r2 = abs(x.mpf(Place.P1)), abs(x.mpf(Place.P2))
    log_eps = mpmath.log(eps.mpf(Place.P2))
    # |iota_2(eps^j x)| / |iota_1(eps^j x)| = eps^(2j) r2/r1
    return int(mpmath.nint(-mpmath.log(r2 / r1) / (2 * step * log_eps)))


def canonical_associate(x: QuadElem) -> QuadElem:
    """Canonical generator of the principal ideal (x).

    Among +-eps^k x: totally positive preferred, then positive at P2; then
    minimal max(|iota_1|, |iota_2|); then minimal iota_2; then coefficients.
    """
    if x.is_zero():
        return x
    eps = fundamental_unit(x.spec)
    k0 = unit_balance_exponent(x)
    cands = []
    for k in range(k0 - 2, k0 + 3):
        y = x * eps ** k
        if y.sign() < 0:
            y = -y
        cands.append(y)
    return min(cands, key=functools.cmp_to_key(_associate_cmp))


@functools.lru_cache(maxsize=1 << 18)
def balance_by_unit_squares(x: QuadElem) -> tuple[QuadElem, int]:
    """(eps^(2k) x, k) with minimal max-abs embedding; ties to smaller iota_2."""
    eps = fundamental_unit(x.spec)
    k0 = unit_balance_exponent(x, step=2)
    best, best_k = None, 0
    for k in range(k0 - 1, k0 + 2):
        y = x * eps ** (2 * k)
        if best is None:
            best, best_k = y, k
            continue
        c = cmp_p2(max_abs(y), max_abs(best))
        if c < 0 or (c == 0 and (cmp_p2(abs_at(y, Place.P2), abs_at(best, Place.P2)) < 0)):
            best, best_k = y, k
    return best, best_k


# -- enumeration -----------------------------------------------------------------------------

def elements_in_box(spec: FieldSpec, bound1: float, bound2: float) -> Iterator[QuadElem]:
    """All x in O_F with |iota_1 x| <= bound1 and |iota_2 x| <= bound2."""
    sd = math.sqrt(spec.delta)
    den = spec.den
    # iota_2 - iota_1 = 2 b sqrt(d) / den
    bmax = int(math.floor(den * (bound1 + bound2) / (2 * sd))) + 1
    for b in range(-bmax, bmax + 1):
        # iota_2 = (a + b sd)/den in [-bound2, bound2]; iota_1 = (a - b sd)/den in [-bound1, bound1]
        lo = max(-bound2 * den - b * sd, -bound1 * den + b * sd)
        hi = min(bound2 * den - b * sd, bound1 * den + b * sd)
        if lo > hi + 1e-9:
            continue
        for a in range(math.floor(lo) - 1, math.ceil(hi) + 2):
            if spec.ring_shift and (a - b) % 2:
                continue
            x = QuadElem(a, b, spec)
            if abs(x.real(Place.P1)) <= bound1 + 1e-12 and abs(x.real(Place.P2)) <= bound2 + 1e-12:
                yield x


def residues_mod(m: QuadElem) -> tuple[tuple[int, int], tuple[int, int]]:
    """Row-style Hermite normal form ((A, B), (0, C)) of the lattice m*O_F in basis coordinates."""
    v1 = m.basis_coords()
    v2 = (m * m.spec.omega).basis_coords()
    a1, b1 = v1
    a2, b2 = v2
    g, s, t = _xgcd(a1, a2)
    if g == 0:
        raise FieldError("zero modulus")
    r1 = (g, s * b1 + t * b2)
    c = (a2 // g) * b1 - (a1 // g) * b2
    C = abs(c)
    if g < 0:
        r1 = (-r1[0], -r1[1])
    A, B = r1
    if C:
        B %= C
    return (A, B), (0, C)


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def reduce_mod(x: QuadElem, hnf) -> QuadElem:
    (A, B), (_, C) = hnf
    p, q = x.basis_coords()
    k = p // A
    p -= k * A
    q -= k * B
    q %= C
    return x.spec.from_basis(p, q)


def residue_reps(hnf, spec: FieldSpec) -> Iterator[QuadElem]:
    (A, _), (_, C) = hnf
    for p in range(A):
        for q in range(C):
            yield spec.from_basis(p, q)


def is_square_mod4(x: QuadElem) -> bool:
    """Does x = b^2 (mod 4 O_F) for some b in O_F?"""
    spec = x.spec
    four = spec.integer(4)
    for p in range(4):
        for q in range(4):
            b = spec.from_basis(p, q)
            if four.divides(x - b * b):
                return True
    return False


# -- zeta value and covolume -------------------------------------------------------------------

def field_discriminant(spec: FieldSpec) -> int:
    return spec.delta if spec.ring_shift else 4 * spec.delta


def dedekind_zeta_minus1(spec: FieldSpec) -> Fraction:
    """zeta_F(-1) = (1/60) * sum of sigma_1((D - b^2)/4) over b = D mod 2, b^2 < D (D the field discriminant)."""
    D = field_discriminant(spec)
    total = 0
    r = math.isqrt(D)
    for b in range(-r, r + 1):
        if b * b < D and (b - D) % 2 == 0:
            n = (D - b * b) // 4
            total += sum(k for k in range(1, n + 1) if n % k == 0)
    return Fraction(total, 60)


def hilbert_volume(spec: FieldSpec) -> float:
    """Covolume of PSL_2(O_F) in H x H for the product of the measures dx dy / y^2: 8 pi^2 zeta_F(-1)."""
    return 8 * math.pi ** 2 * float(dedekind_zeta_minus1(spec))
