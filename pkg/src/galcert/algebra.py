"""Exact arithmetic over Q(omega), omega = exp(i*pi/3), and univariate polynomials.

Every singular abscissa in this problem (the roots of t*(t^3-8)*(t^3+1)) lies
in the quadratic field Q(sqrt(-3)) = Q(omega), where omega satisfies
omega^2 = omega - 1.  Elements are stored as a + b*omega with ``Fraction``
components, so all arithmetic is exact.  Polynomials are coefficient lists in
ascending degree over this field; rational functions are stored gcd-reduced
with a monic denominator, and equality is structural equality of that
canonical form.

Factorization is deliberately scoped: only linear factors over Q(omega) are
extracted (numerically located, then verified by exact division).  Anything
that leaves an unresolved factor of degree >= 2 raises
:class:`~galcert.errors.IrreducibleOverField`; general number fields are out
of scope by design.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import IrreducibleOverField, NotAPole

Rat = Union[int, Fraction]

# omega = exp(i*pi/3) = (1 + i*sqrt(3)) / 2
OMEGA_COMPLEX = complex(0.5, math.sqrt(3.0) / 2.0)


def _frac(x: Rat) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected int or Fraction, got {type(x).__name__}")


def _rational_sqrt(x: Fraction) -> Optional[Fraction]:
    """Exact square root of a rational, or None if x is not a perfect square."""
    if x < 0:
        return None
    n, d = x.numerator, x.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


@dataclass(frozen=True)
class FieldElement:
    """Element a + b*omega of Q(omega), omega^2 - omega + 1 = 0."""

    a: Fraction
    b: Fraction

    def __post_init__(self):
        object.__setattr__(self, "a", _frac(self.a))
        object.__setattr__(self, "b", _frac(self.b))

    @staticmethod
    def of(a: Rat, b: Rat = 0) -> "FieldElement":
        return FieldElement(_frac(a), _frac(b))

    def __add__(self, o: "FieldElement") -> "FieldElement":
        o = _coerce(o)
        return FieldElement(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __sub__(self, o: "FieldElement") -> "FieldElement":
        o = _coerce(o)
        return FieldElement(self.a - o.a, self.b - o.b)

    def __rsub__(self, o) -> "FieldElement":
        return _coerce(o) - self

    def __neg__(self) -> "FieldElement":
        return FieldElement(-self.a, -self.b)

    def __mul__(self, o) -> "FieldElement":
        o = _coerce(o)
        # (a1 + b1 w)(a2 + b2 w), w^2 = w - 1
        return FieldElement(
            self.a * o.a - self.b * o.b,
            self.a * o.b + self.b * o.a + self.b * o.b,
        )

    __rmul__ = __mul__

    def conjugate(self) -> "FieldElement":
        """Field conjugate omega -> 1 - omega (complex conjugation on C)."""
        return FieldElement(self.a + self.b, -self.b)

    def norm(self) -> Fraction:
        """Multiplicative norm a^2 + a*b + b^2 (a nonneg rational)."""
        return self.a * self.a + self.a * self.b + self.b * self.b

    def inverse(self) -> "FieldElement":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("inverse of zero field element")
        c = self.conjugate()
        return FieldElement(c.a / n, c.b / n)

    def __truediv__(self, o) -> "FieldElement":
        return self * _coerce(o).inverse()

    def __rtruediv__(self, o) -> "FieldElement":
        return _coerce(o) * self.inverse()

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def is_rational(self) -> bool:
        return self.b == 0

    def embed(self) -> complex:
        """Numeric value in C (machine precision)."""
        return complex(self.a) + complex(self.b) * OMEGA_COMPLEX

    def sqrt(self) -> Optional["FieldElement"]:
        """A square root inside Q(omega) if one exists, else None.

        Solves (x + y*omega)^2 = a + b*omega exactly: the y = 0 branch needs a
        to be a rational square; otherwise y^2 solves
        3 y^4 + (2b + 4a) y^2 - b^2 = 0 and x = (b - y^2) / (2y).
        """
        a, b = self.a, self.b
        if b == 0:
            r = _rational_sqrt(a)
            if r is not None:
                return FieldElement(r, Fraction(0))
            # a < 0 rational may still be a square via y != 0 (e.g. -3 = (2w-1)^2)
        disc = (2 * b + 4 * a) ** 2 + 12 * b * b
        rd = _rational_sqrt(Fraction(disc))
        if rd is None:
            return None
        for sign in (1, -1):
            y2 = (-(2 * b + 4 * a) + sign * rd) / 6
            y = _rational_sqrt(y2) if y2 >= 0 else None
            if y is None or y == 0:
                continue
            for ys in (y, -y):
                x = (b - y2) / (2 * ys)
                cand = FieldElement(x, ys)
                if cand * cand == self:
                    return cand
        return None

    def __repr__(self):
        if self.b == 0:
            return f"{self.a}"
        return f"({self.a}+{self.b}w)"


def _coerce(x) -> FieldElement:
    if isinstance(x, FieldElement):
        return x
    if isinstance(x, (int, Fraction)):
        return FieldElement(_frac(x), Fraction(0))
    raise TypeError(f"cannot coerce {type(x).__name__} to FieldElement")


ZERO = FieldElement.of(0)
ONE = FieldElement.of(1)
OMEGA = FieldElement.of(0, 1)


def omega_power(k: int) -> FieldElement:
    """omega^k for any integer k (omega is a primitive 6th root of unity)."""
    out = ONE
    for _ in range(k % 6):
        out = out * OMEGA
    return out


class Polynomial:
    """Dense univariate polynomial over Q(omega), coefficients ascending."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence):
        cs = [_coerce(c) for c in coeffs]
        while cs and cs[-1].is_zero():
            cs.pop()
        self.coeffs: Tuple[FieldElement, ...] = tuple(cs)

    # -- constructors ------------------------------------------------------
    @staticmethod
    def zero() -> "Polynomial":
        return Polynomial([])

    @staticmethod
    def one() -> "Polynomial":
        return Polynomial([ONE])

    @staticmethod
    def x() -> "Polynomial":
        return Polynomial([ZERO, ONE])

    @staticmethod
    def constant(c) -> "Polynomial":
        return Polynomial([c])

    @staticmethod
    def from_int_coeffs(coeffs: Sequence[int]) -> "Polynomial":
        return Polynomial([FieldElement.of(c) for c in coeffs])

    @staticmethod
    def from_roots(roots: Sequence, lead=1) -> "Polynomial":
        out = Polynomial.constant(lead)
        for r in roots:
            out = out * Polynomial([-_coerce(r), ONE])
        return out

    # -- basic structure ---------------------------------------------------
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def degree(self) -> int:
        """Degree; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def lc(self) -> FieldElement:
        if self.is_zero():
            raise ValueError("leading coefficient of zero polynomial")
        return self.coeffs[-1]

    def coeff(self, k: int) -> FieldElement:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else ZERO

    def monic(self) -> "Polynomial":
        if self.is_zero():
            return self
        inv = self.lc().inverse()
        return Polynomial([c * inv for c in self.coeffs])

    def __eq__(self, o):
        if not isinstance(o, Polynomial):
            return NotImplemented
        return self.coeffs == o.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    # -- arithmetic --------------------------------------------------------
    def __add__(self, o: "Polynomial") -> "Polynomial":
        n = max(len(self.coeffs), len(o.coeffs))
        return Polynomial([self.coeff(i) + o.coeff(i) for i in range(n)])

    def __sub__(self, o: "Polynomial") -> "Polynomial":
        n = max(len(self.coeffs), len(o.coeffs))
        return Polynomial([self.coeff(i) - o.coeff(i) for i in range(n)])

    def __neg__(self) -> "Polynomial":
        return Polynomial([-c for c in self.coeffs])

    def __mul__(self, o) -> "Polynomial":
        if isinstance(o, (int, Fraction, FieldElement)):
            c = _coerce(o)
            return Polynomial([ci * c for ci in self.coeffs])
        if self.is_zero() or o.is_zero():
            return Polynomial.zero()
        out = [ZERO] * (len(self.coeffs) + len(o.coeffs) - 1)
        for i, ci in enumerate(self.coeffs):
            if ci.is_zero():
                continue
            for j, cj in enumerate(o.coeffs):
                out[i + j] = out[i + j] + ci * cj
        return Polynomial(out)

    __rmul__ = __mul__

    def divrem(self, d: "Polynomial") -> Tuple["Polynomial", "Polynomial"]:
        """Exact field division with remainder: self = q*d + r, deg r < deg d."""
        if d.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dd, dcs = d.degree, d.coeffs
        inv = d.lc().inverse()
        q = [ZERO] * max(0, len(rem) - dd)
        for i in range(len(rem) - dd - 1, -1, -1):
            c = rem[i + dd] * inv
            if c.is_zero():
                continue
            q[i] = c
            for j in range(dd + 1):
                rem[i + j] = rem[i + j] - c * dcs[j]
        return Polynomial(q), Polynomial(rem[:dd])

    def __floordiv__(self, d: "Polynomial") -> "Polynomial":
        return self.divrem(d)[0]

    def __mod__(self, d: "Polynomial") -> "Polynomial":
        return self.divrem(d)[1]

    def derivative(self) -> "Polynomial":
        return Polynomial([c * k for k, c in enumerate(self.coeffs)][1:])

    def shift(self, c) -> "Polynomial":
        """Coefficients of p(u + c) as a polynomial in u (exact Taylor shift)."""
        c = _coerce(c)
        rem = list(self.coeffs)
        out = []
        # repeated synthetic division by (t - c) collects Taylor coefficients
        for _ in range(len(self.coeffs)):
            carry = ZERO
            for i in range(len(rem) - 1, -1, -1):
                carry = rem[i] + carry * c
                rem[i] = carry
            out.append(rem[0])
            rem = rem[1:]
        return Polynomial(out)

    # -- evaluation --------------------------------------------------------
    def eval_exact(self, x) -> FieldElement:
        x = _coerce(x)
        out = ZERO
        for c in reversed(self.coeffs):
            out = out * x + c
        return out

    def eval_complex(self, z: complex) -> complex:
        out = 0j
        for c in reversed(self.coeffs):
            out = out * z + c.embed()
        return out

    def embed_coeffs(self) -> np.ndarray:
        return np.array([c.embed() for c in self.coeffs], dtype=complex)

    def __repr__(self):
        if self.is_zero():
            return "Poly(0)"
        terms = [f"{c}*t^{k}" for k, c in enumerate(self.coeffs) if not c.is_zero()]
        return "Poly(" + " + ".join(terms) + ")"


def gcd(f: Polynomial, g: Polynomial) -> Polynomial:
    """Monic greatest common divisor; gcd(f, 0) = f/lc(f) and gcd(0, 0) = 0."""
    a, b = f, g
    while not b.is_zero():
        a, b = b, a % b
    return a.monic() if not a.is_zero() else a


@dataclass
class FactorMap:
    """Linear factorization f = constant * prod (t - root)^multiplicity."""

    constant: FieldElement
    roots: Dict[FieldElement, int]

    def expand(self) -> Polynomial:
        out = Polynomial.constant(self.constant)
        for root, mult in self.roots.items():
            lin = Polynomial([-root, ONE])
            for _ in range(mult):
                out = out * lin
        return out


_RECOGNITION_DENOMS = (1, 2, 3, 4, 6, 8, 12, 16, 24, 48, 10**3, 10**6, 10**9)


def _recognize_field_element(z: complex) -> Optional[FieldElement]:
    """Best small a + b*omega candidate near the complex number z."""
    bim = z.imag / OMEGA_COMPLEX.imag
    are = z.real - bim / 2.0
    for dmax in _RECOGNITION_DENOMS:
        a = Fraction(are).limit_denominator(dmax)
        b = Fraction(bim).limit_denominator(dmax)
        cand = FieldElement(a, b)
        if abs(cand.embed() - z) < 1e-8 * (1.0 + abs(z)):
            return cand
    return None


def _roots_quadratic(f: Polynomial) -> Optional[List[FieldElement]]:
    """Exact roots of a degree <= 2 polynomial, if they lie in the field."""
    if f.degree == 1:
        return [-f.coeffs[0] / f.coeffs[1]]
    if f.degree == 2:
        a, b, c = f.coeffs[2], f.coeffs[1], f.coeffs[0]
        disc = b * b - FieldElement.of(4) * a * c
        rd = disc.sqrt()
        if rd is None:
            return None
        two_a = FieldElement.of(2) * a
        return [(-b + rd) / two_a, (-b - rd) / two_a]
    return None


def factor(f: Polynomial) -> FactorMap:
    """Split f into linear factors over Q(omega).

    Candidate roots are located numerically on the exact square-free part
    (where they are simple, so double precision pins them tightly), recognized
    as small field elements, and verified by exact division; multiplicities
    come from repeated exact deflation, so the returned map re-expands to f
    identically.  A residual factor of degree >= 2 with no recognizable root
    raises IrreducibleOverField.
    """
    if f.is_zero():
        raise ValueError("cannot factor the zero polynomial")
    constant = f.lc()
    roots: Dict[FieldElement, int] = {}
    work = f.monic()
    while work.degree >= 1:
        g = gcd(work, work.derivative())
        squarefree = work // g if g.degree >= 1 else work
        exact = _roots_quadratic(squarefree)
        if exact is not None:
            root: Optional[FieldElement] = exact[0]
        else:
            root = _find_one_root(squarefree)
        if root is None:
            raise IrreducibleOverField(
                f"no linear factor over Q(omega) found in degree-{work.degree} remainder"
            )
        lin = Polynomial([-root, ONE])
        mult = 0
        while True:
            q, r = work.divrem(lin)
            if not r.is_zero():
                break
            work = q
            mult += 1
        if mult == 0:
            raise IrreducibleOverField(f"candidate root {root} failed exact verification")
        roots[root] = roots.get(root, 0) + mult
    return FactorMap(constant, roots)


def _find_one_root(f: Polynomial) -> Optional[FieldElement]:
    cs = f.embed_coeffs()
    zs = np.roots(cs[::-1])
    deriv = f.derivative().embed_coeffs()
    for z in sorted(zs, key=lambda w: (round(abs(w), 6), w.real, w.imag)):
        z = complex(z)
        for _ in range(60):  # Newton polish on the embedded polynomial
            pv = _horner(cs, z)
            dv = _horner(deriv, z)
            if dv == 0:
                break
            step = pv / dv
            z -= step
            if abs(step) < 1e-15 * (1 + abs(z)):
                break
        cand = _recognize_field_element(z)
        if cand is None:
            continue
        if f.eval_exact(cand).is_zero():
            return cand
    return None


def _horner(coeffs: np.ndarray, z: complex) -> complex:
    out = 0j
    for c in coeffs[::-1]:
        out = out * z + c
    return out


class RationalFunction:
    """Reduced ratio of polynomials over Q(omega) with monic denominator."""

    __slots__ = ("num", "den")

    def __init__(self, num: Polynomial, den: Polynomial):
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        g = gcd(num, den)
        if not g.is_zero() and g.degree >= 1:
            num = num // g
            den = den // g
        lead = den.lc().inverse()
        self.num = num * lead
        self.den = den * lead

    @staticmethod
    def of(num, den=None) -> "RationalFunction":
        if isinstance(num, RationalFunction):
            return num
        if isinstance(num, (int, Fraction, FieldElement)):
            num = Polynomial.constant(num)
        if den is None:
            den = Polynomial.one()
        elif isinstance(den, (int, Fraction, FieldElement)):
            den = Polynomial.constant(den)
        return RationalFunction(num, den)

    def __eq__(self, o):
        if not isinstance(o, RationalFunction):
            return NotImplemented
        return self.num == o.num and self.den == o.den

    def __hash__(self):
        return hash((self.num, self.den))

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __add__(self, o) -> "RationalFunction":
        o = RationalFunction.of(o)
        return RationalFunction(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __sub__(self, o) -> "RationalFunction":
        o = RationalFunction.of(o)
        return RationalFunction(self.num * o.den - o.num * self.den, self.den * o.den)

    def __rsub__(self, o) -> "RationalFunction":
        return RationalFunction.of(o) - self

    def __neg__(self) -> "RationalFunction":
        return RationalFunction(-self.num, self.den)

    def __mul__(self, o) -> "RationalFunction":
        o = RationalFunction.of(o)
        return RationalFunction(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, o) -> "RationalFunction":
        o = RationalFunction.of(o)
        if o.is_zero():
            raise ZeroDivisionError("division by zero rational function")
        return RationalFunction(self.num * o.den, self.den * o.num)

    def __rtruediv__(self, o) -> "RationalFunction":
        return RationalFunction.of(o) / self

    def derivative(self) -> "RationalFunction":
        return RationalFunction(
            self.num.derivative() * self.den - self.num * self.den.derivative(),
            self.den * self.den,
        )

    def eval_exact(self, x) -> FieldElement:
        dv = self.den.eval_exact(x)
        if dv.is_zero():
            raise ZeroDivisionError(f"evaluation at pole {x}")
        return self.num.eval_exact(x) / dv

    def eval_complex(self, z: complex) -> complex:
        return self.num.eval_complex(z) / self.den.eval_complex(z)

    def __repr__(self):
        return f"({self.num!r})/({self.den!r})"


def laurent_coefficients(f: RationalFunction, pole, order_limit: int = 64) -> Tuple[int, List[FieldElement]]:
    """Pole order m and Laurent coefficients [c_m, ..., c_1] of f at the pole.

    c_j is the exact coefficient of (t - pole)^(-j).  Raises NotAPole when the
    reduced denominator does not vanish there.
    """
    pole = _coerce(pole)
    den = f.den
    if not den.eval_exact(pole).is_zero():
        raise NotAPole(f"{pole} is not a pole")
    lin = Polynomial([-pole, ONE])
    m = 0
    dtilde = den
    while True:
        q, r = dtilde.divrem(lin)
        if not r.is_zero():
            break
        dtilde = q
        m += 1
        if m > order_limit:
            raise NotAPole("pole order exceeds limit; input not in reduced form?")
    # Taylor-expand num / dtilde around the pole up to order m - 1
    nsh = f.num.shift(pole)
    dsh = dtilde.shift(pole)
    inv0 = dsh.coeff(0).inverse()
    g: List[FieldElement] = []
    for j in range(m):
        acc = nsh.coeff(j)
        for i in range(j):
            acc = acc - g[i] * dsh.coeff(j - i)
        g.append(acc * inv0)
    # g[j] is the coefficient of (t-pole)^(j - m): c_{m-j} = g[j]
    return m, [g[j] for j in range(m)]


def residue_at(f: RationalFunction, pole) -> FieldElement:
    """Exact coefficient of 1/(t - pole) in the Laurent expansion of f."""
    m, cs = laurent_coefficients(f, pole)
    return cs[m - 1]


@dataclass
class PartialFractions:
    """f = polynomial part + sum coeff / (t - pole)^order."""

    poly_part: Polynomial
    terms: List[Tuple[FieldElement, int, FieldElement]]

    def recombine(self) -> RationalFunction:
        out = RationalFunction.of(self.poly_part)
        for pole, order, coeff in self.terms:
            lin = Polynomial([-pole, ONE])
            den = Polynomial.one()
            for _ in range(order):
                den = den * lin
            out = out + RationalFunction(Polynomial.constant(coeff), den)
        return out


def partial_fractions(f: RationalFunction) -> PartialFractions:
    """Exact partial-fraction decomposition over Q(omega).

    Propagates IrreducibleOverField when the denominator has a factor with no
    root in the field.
    """
    poly_part, rem = f.num.divrem(f.den)
    proper = RationalFunction(rem, f.den)
    terms: List[Tuple[FieldElement, int, FieldElement]] = []
    if not proper.is_zero():
        fmap = factor(proper.den)
        for pole in sorted(fmap.roots, key=lambda r: (r.embed().real, r.embed().imag)):
            m, cs = laurent_coefficients(proper, pole)
            for j, c in enumerate(cs):
                order = m - j
                if not c.is_zero():
                    terms.append((pole, order, c))
    return PartialFractions(poly_part, terms)
