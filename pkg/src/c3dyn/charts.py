"""Blow-up atlas for the compactified dynamics.

The compactification X is the blow-up of P^3 along the line L = (Y = T = 0).
Four charts cover everything the computations here need:

  Z_XI1 : Z != 0, xi1 != 0   pi(w1,w2,w3) = [w1 : w2  : 1  : w2*w3]
  Z_XI2 : Z != 0, xi2 != 0   pi(w1,w2,w3) = [w1 : w2*w3 : 1 : w3]
  X_XI2 : X != 0, xi2 != 0   pi(w1,w2,w3) = [1  : w1*w3 : w2 : w3]
  Y_AFF : the plain affine chart Y != 0 of P^3 (output-only),
                             pi(w1,w2,w3) = [w1 : 1 : w2 : w3]

where xi = [xi1 : xi2] is the fiber direction of the blow-up, tied to the
base by xi1*T = xi2*Y.  The exceptional divisor E is (w2 = 0) in Z_XI1 and
(w3 = 0) in Z_XI2 / X_XI2; the strict transform of the plane at infinity
meets only Z_XI1, as (w3 = 0).  The superattracting point p-, the image of
that plane, is the origin of Z_XI1.

The lifted map has one honest indeterminacy curve per direction inside E
(CPRIME_PLUS forward, CPRIME_MINUS backward); the curves CPLUS / CMINUS
become indeterminate only for the second iterate.  Chart expressions of the
map carry the denominators

  A = 1 + b*w2*w3 + c*w3 + d*w1*w3 + e*w2*w3^2          (input Z_XI1)
  B = w2 + b*w2*w3 + c + d*w1 + e*w3                    (input Z_XI2)
  C = w1*w2 + b*w1*w3 + c*w2 + d + e*w3                 (input X_XI2)

which reduce to the e = 0 forms when the constant term has been normalized
away.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import Point
from .params import Params, solve_quadratic

# denominators below this (relative to their term scale) fail loudly
NEAR_ZERO = 1e-13


class IndeterminateError(ValueError):
    """The requested evaluation sits on (or too close to) an indeterminacy set."""


class ChartDomainError(ValueError):
    """The image exists but falls outside the requested chart."""


class Chart(enum.Enum):
    Z_XI1 = "z_xi1"
    Z_XI2 = "z_xi2"
    X_XI2 = "x_xi2"
    Y_AFF = "y_aff"


class CurveId(enum.Enum):
    CPLUS = "c_plus"
    CMINUS = "c_minus"
    CPRIME_PLUS = "c_prime_plus"
    CPRIME_MINUS = "c_prime_minus"


class Locus(enum.Enum):
    REGULAR = "regular"
    ON_L = "on_l"
    ON_L_PRIME = "on_l_prime"
    ON_L_DOUBLE_PRIME = "on_l_double_prime"


@dataclass(frozen=True)
class HomPoint:
    """A point of P^3 in homogeneous coordinates [X : Y : Z : T]."""

    X: complex
    Y: complex
    Z: complex
    T: complex

    def __post_init__(self):
        if self.X == 0 and self.Y == 0 and self.Z == 0 and self.T == 0:
            raise ValueError("homogeneous coordinates must not all vanish")

    def coords(self) -> tuple[complex, complex, complex, complex]:
        return (self.X, self.Y, self.Z, self.T)

    def normalize(self) -> "HomPoint":
        """Scale so the largest-modulus coordinate becomes exactly 1."""
        c = self.coords()
        k = max(range(4), key=lambda i: abs(c[i]))
        s = c[k]
        return HomPoint(*(w / s for w in c))

    def at_infinity(self, tol: float = 1e-14) -> bool:
        n = self.normalize()
        return abs(n.T) < tol

    @classmethod
    def from_affine(cls, q: Point) -> "HomPoint":
        return cls(q[0], q[1], q[2], 1.0 + 0j)

    def to_affine(self) -> Point:
        if abs(self.T) == 0:
            raise ChartDomainError("point at infinity has no affine coordinates")
        return (self.X / self.T, self.Y / self.T, self.Z / self.T)


def hom_distance(a: HomPoint, b: HomPoint) -> float:
    """Fubini-Study chordal distance between projective points."""
    va = np.array(a.coords())
    vb = np.array(b.coords())
    va = va / np.linalg.norm(va)
    vb = vb / np.linalg.norm(vb)
    c = abs(np.vdot(va, vb))
    return math.sqrt(max(0.0, 1.0 - c * c))


@dataclass(frozen=True)
class ChartPoint:
    chart: Chart
    w1: complex
    w2: complex
    w3: complex

    def coords(self) -> tuple[complex, complex, complex]:
        return (self.w1, self.w2, self.w3)


P_MINUS_CHART = ChartPoint(Chart.Z_XI1, 0j, 0j, 0j)


def blowdown(cp: ChartPoint) -> HomPoint:
    """The projection pi to P^3."""
    w1, w2, w3 = cp.coords()
    if cp.chart is Chart.Z_XI1:
        return HomPoint(w1, w2, 1.0 + 0j, w2 * w3)
    if cp.chart is Chart.Z_XI2:
        return HomPoint(w1, w2 * w3, 1.0 + 0j, w3)
    if cp.chart is Chart.X_XI2:
        return HomPoint(1.0 + 0j, w1 * w3, w2, w3)
    return HomPoint(w1, 1.0 + 0j, w2, w3)


def _div(num: complex, den: complex, scale: float, exc: type, what: str) -> complex:
    if abs(den) < NEAR_ZERO * max(1.0, scale):
        raise exc(f"denominator {what} vanishes (|{what}| = {abs(den):.3g})")
    return num / den


def exceptional_residual(cp: ChartPoint) -> float:
    """|local equation of E| in the point's chart (E is absent from Y_AFF)."""
    if cp.chart is Chart.Z_XI1:
        return abs(cp.w2)
    if cp.chart in (Chart.Z_XI2, Chart.X_XI2):
        return abs(cp.w3)
    raise ChartDomainError("E does not meet the affine chart Y != 0")


# ---------------------------------------------------------------------------
# Indeterminacy loci at the P^3 level
# ---------------------------------------------------------------------------

def indeterminacy_status(
    p: Params, h: HomPoint, direction: str = "forward", tol: float = 1e-12
) -> Locus:
    """Classify membership in L = (Y=T=0), L' = (Z=T=0), L'' = (X=T=0).

    Forward indeterminacy is L u L'; backward is L u L''.  Points on L are
    reported as ON_L regardless of the other lines through them.
    """
    n = h.normalize()
    on_t = abs(n.T) <= tol
    if on_t and abs(n.Y) <= tol:
        return Locus.ON_L
    if direction == "forward":
        if on_t and abs(n.Z) <= tol:
            return Locus.ON_L_PRIME
    else:
        if on_t and abs(n.X) <= tol:
            return Locus.ON_L_DOUBLE_PRIME
    return Locus.REGULAR


def apply_homogeneous(p: Params, h: HomPoint) -> HomPoint:
    """Degree-2 homogeneous extension [YT : ZT : YZ+bYT+cZT+dXT+eT^2 : T^2]."""
    status = indeterminacy_status(p, h, "forward")
    if status is not Locus.REGULAR:
        raise IndeterminateError(f"point lies on the forward indeterminacy set ({status.value})")
    n = h.normalize()
    X, Y, Z, T = n.coords()
    img = (
        Y * T,
        Z * T,
        Y * Z + p.b * Y * T + p.c * Z * T + p.d * X * T + p.e * T * T,
        T * T,
    )
    if max(abs(w) for w in img) < 1e-20:
        raise IndeterminateError("image collapsed to the zero vector")
    return HomPoint(*img).normalize()


def apply_homogeneous_inverse(p: Params, h: HomPoint) -> HomPoint:
    """Homogeneous extension of the inverse, [ZT-XY-bXT-cYT-eT^2 : dXT : dYT : dT^2]."""
    status = indeterminacy_status(p, h, "backward")
    if status is not Locus.REGULAR:
        raise IndeterminateError(f"point lies on the backward indeterminacy set ({status.value})")
    n = h.normalize()
    X, Y, Z, T = n.coords()
    img = (
        Z * T - X * Y - p.b * X * T - p.c * Y * T - p.e * T * T,
        p.d * X * T,
        p.d * Y * T,
        p.d * T * T,
    )
    if max(abs(w) for w in img) < 1e-20:
        raise IndeterminateError("image collapsed to the zero vector")
    return HomPoint(*img).normalize()


# ---------------------------------------------------------------------------
# Lifted chart maps
# ---------------------------------------------------------------------------

def _denominators(p: Params, cp: ChartPoint) -> tuple[complex, float]:
    """The paper denominator of the input chart and its term scale."""
    w1, w2, w3 = cp.coords()
    if cp.chart is Chart.Z_XI1:
        terms = (1.0, p.b * w2 * w3, p.c * w3, p.d * w1 * w3, p.e * w2 * w3 * w3)
    elif cp.chart is Chart.Z_XI2:
        terms = (w2, p.b * w2 * w3, p.c, p.d * w1, p.e * w3)
    elif cp.chart is Chart.X_XI2:
        terms = (w1 * w2, p.b * w1 * w3, p.c * w2, p.d, p.e * w3)
    else:
        raise ChartDomainError("the affine chart Y != 0 is output-only")
    return sum(terms), sum(abs(t) for t in terms)


def apply_chart(p: Params, cp: ChartPoint, output_chart: Chart) -> ChartPoint:
    """One step of the lifted map, expressed between blow-up charts.

    Raises IndeterminateError when a paper denominator (A, B, C) vanishes
    for the requested route or the input sits on the indeterminacy curve
    inside E, and ChartDomainError when the image is well defined but falls
    outside the requested output chart.
    """
    w1, w2, w3 = cp.coords()
    if cp.chart is Chart.Y_AFF:
        raise ChartDomainError("the affine chart Y != 0 is output-only")
    den, scale = _denominators(p, cp)
    out = output_chart

    if cp.chart is Chart.Z_XI1:
        A = den
        if out is Chart.Z_XI1:
            a = _div(w2 * w3, A, scale, IndeterminateError, "A")
            return ChartPoint(out, a, w3 / A, w2 * w3)
        if out is Chart.Z_XI2:
            a = _div(w2 * w3, A, scale, IndeterminateError, "A")
            t = _div(1.0 + 0j, w2 * w3, abs(w2 * w3), ChartDomainError, "w2*w3")
            return ChartPoint(out, a, t, w2 * w3 * w3 / A)
        if out is Chart.Y_AFF:
            s = abs(w3)
            return ChartPoint(
                out,
                w2,
                _div(A, w3, max(s, abs(A)), ChartDomainError, "w3"),
                w2 * w3,
            )
        if out is Chart.X_XI2:
            t = _div(1.0 + 0j, w2 * w3, abs(w2 * w3), ChartDomainError, "w2*w3")
            return ChartPoint(out, t, A * t, w3)
        raise ChartDomainError(f"unsupported output chart {out}")

    if cp.chart is Chart.Z_XI2:
        B = den
        if out is Chart.Y_AFF:
            return ChartPoint(out, w2 * w3, B, w3)
        if out is Chart.Z_XI1:
            b_inv = _div(1.0 + 0j, B, scale, IndeterminateError, "B")
            return ChartPoint(out, w2 * w3 * b_inv, b_inv, w3)
        if out is Chart.Z_XI2:
            b_inv = _div(1.0 + 0j, B, scale, IndeterminateError, "B")
            t = _div(1.0 + 0j, w3, abs(w3), ChartDomainError, "w3")
            return ChartPoint(out, w2 * w3 * b_inv, t, w3 * b_inv)
        if out is Chart.X_XI2:
            t = _div(1.0 + 0j, w3, abs(w3), ChartDomainError, "w3")
            u = _div(1.0 + 0j, w2, abs(w2), ChartDomainError, "w2")
            return ChartPoint(out, t, B * t * u, u)
        raise ChartDomainError(f"unsupported output chart {out}")

    # input X_XI2
    C = den
    if abs(w2) < NEAR_ZERO and abs(w3) < NEAR_ZERO:
        raise IndeterminateError("point lies on the indeterminacy curve in E")
    if out is Chart.Z_XI2:
        a = _div(w1 * w3, C, scale, IndeterminateError, "C")
        t = _div(w2, w3, max(abs(w2), abs(w3)), ChartDomainError, "w3")
        return ChartPoint(out, a, t, w3 / C)
    if out is Chart.Z_XI1:
        a = _div(w1 * w3, C, scale, IndeterminateError, "C")
        t = _div(w3, w2, max(abs(w2), abs(w3)), ChartDomainError, "w2")
        return ChartPoint(out, a, w2 / C, t)
    if out is Chart.Y_AFF:
        u = _div(1.0 + 0j, w2, abs(w2), ChartDomainError, "w2")
        return ChartPoint(out, w1 * w3 * u, C * u, w3 * u)
    if out is Chart.X_XI2:
        t = _div(w2, w3, max(abs(w2), abs(w3)), ChartDomainError, "w3")
        u = _div(1.0 + 0j, w1, abs(w1), ChartDomainError, "w1")
        a = _div(w3, w1 * C, scale * max(1.0, abs(w1)), IndeterminateError, "C")
        return ChartPoint(out, t, C * u, a * 0 + _div(1.0 + 0j, w1, abs(w1), ChartDomainError, "w1"))
    raise ChartDomainError(f"unsupported output chart {out}")


# ---------------------------------------------------------------------------
# Curves in E and the finite intersection census
# ---------------------------------------------------------------------------

def curve_equation(p: Params, curve: CurveId, cp: ChartPoint) -> complex:
    """Defining equation of the indeterminacy curves, per chart.

    CPLUS in Z_XI2 uses the form w2 + c + d*w1 obtained from the Z_XI1
    equation by the chart transition (the two published forms disagree by
    the w2 term; only this one meets CMINUS in the discriminant locus
    (b-c)^2 - 4d the intersection count is built on).
    """
    w1, w2, w3 = cp.coords()
    table = {
        (CurveId.CPLUS, Chart.Z_XI1): lambda: 1.0 + p.c * w3 + p.d * w1 * w3,
        (CurveId.CPLUS, Chart.Z_XI2): lambda: w2 + p.c + p.d * w1,
        (CurveId.CMINUS, Chart.Z_XI1): lambda: w3 - w1 - p.b * w1 * w3,
        (CurveId.CMINUS, Chart.X_XI2): lambda: w2 - w1 - p.b - p.c * w1 * w3,
        (CurveId.CPRIME_PLUS, Chart.X_XI2): lambda: w2,
        (CurveId.CPRIME_MINUS, Chart.Z_XI2): lambda: w2,
    }
    try:
        return table[(curve, cp.chart)]()
    except KeyError:
        raise ChartDomainError(f"no stored equation for {curve} in chart {cp.chart}")


def curve_residual(p: Params, curve: CurveId, cp: ChartPoint) -> float:
    """|equation| scaled by the local gradient, so steep regions do not
    report spuriously large residuals."""
    w1, w2, w3 = cp.coords()
    val = curve_equation(p, curve, cp)
    h = 1e-6 * max(1.0, abs(w1), abs(w2), abs(w3))
    grads = []
    for i in range(3):
        w = [w1, w2, w3]
        w[i] += h
        grads.append(abs(curve_equation(p, curve, ChartPoint(cp.chart, *w)) - val) / h)
    g = max(grads)
    return abs(val) / max(1.0, g)


def intersection_count(p: Params, tol: float = 1e-12) -> int:
    """Number of points in the finite forward/backward indeterminacy overlap:
    5 generically, 4 on the discriminant locus (b-c)^2 = 4d."""
    disc = (p.b - p.c) ** 2 - 4.0 * p.d
    scale = max(1.0, abs(p.b - p.c) ** 2, 4.0 * abs(p.d))
    return 4 if abs(disc) <= tol * scale else 5


@dataclass(frozen=True)
class SpecialPoints:
    first: ChartPoint
    second: ChartPoint
    coincident: bool


def special_points_B(p: Params, tol: float = 1e-12) -> SpecialPoints:
    """The two points of CPLUS n CMINUS inside E (B and B').

    In chart Z_XI1 with w2 = 0 the two curve equations reduce to
    d*w1^2 + (c-b)*w1 + 1 = 0 and w3 = w1/(1 - b*w1); a root with
    1 - b*w1 = 0 (which happens exactly when d = -b*c) escapes the chart
    and is reported in Z_XI2 instead.
    """
    r1, r2, double = solve_quadratic((p.c - p.b) / p.d, 1.0 / p.d)

    def lift(w1: complex) -> ChartPoint:
        den = 1.0 - p.b * w1
        if abs(den) <= 1e-10 * max(1.0, abs(p.b * w1)):
            return ChartPoint(Chart.Z_XI2, w1, 0j, 0j)
        return ChartPoint(Chart.Z_XI1, w1, 0j, w1 / den)

    return SpecialPoints(lift(r1), lift(r2), double)


# ---------------------------------------------------------------------------
# Flow verification at infinity
# ---------------------------------------------------------------------------

@dataclass
class FlowReport:
    hinf_total: int = 0
    hinf_to_pminus: int = 0
    e_total: int = 0
    e_to_ldoubleprime: int = 0
    ldp_to_pminus: int = 0
    max_residual_hinf: float = 0.0
    max_residual_e: float = 0.0
    max_residual_second: float = 0.0

    @property
    def all_passed(self) -> bool:
        return (
            self.hinf_to_pminus == self.hinf_total
            and self.e_to_ldoubleprime == self.e_total
            and self.ldp_to_pminus == self.e_total
        )


def _rand_complex(rng: np.random.Generator, lo: float = 0.3, hi: float = 2.0) -> complex:
    r = rng.uniform(lo, hi)
    phi = rng.uniform(0.0, 2.0 * math.pi)
    return complex(r * math.cos(phi), r * math.sin(phi))


def verify_infinity_flow(p: Params, samples: int = 100, seed: int = 0) -> FlowReport:
    """Sample the divisor at infinity and check the contraction pattern:
    the strict transform of the plane at infinity lands on p- in one step,
    E lands on the strict transform of (X = T = 0) and then on p-."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    rep = FlowReport()
    tol_point = 1e-8
    tol_curve = 1e-10

    for _ in range(samples):
        cp = ChartPoint(Chart.Z_XI1, _rand_complex(rng), _rand_complex(rng), 0j)
        img = apply_chart(p, cp, Chart.Z_XI1)
        res = max(abs(w) for w in img.coords())
        rep.hinf_total += 1
        rep.max_residual_hinf = max(rep.max_residual_hinf, res)
        if res < tol_point:
            rep.hinf_to_pminus += 1

    for k in range(samples):
        # alternate between the two charts that slice E transversally
        for _ in range(100):
            if k % 2 == 0:
                cp = ChartPoint(Chart.Z_XI1, _rand_complex(rng), 0j, _rand_complex(rng))
            else:
                cp = ChartPoint(Chart.X_XI2, _rand_complex(rng), _rand_complex(rng), 0j)
            den, scale = _denominators(p, cp)
            if abs(den) > 0.1 * max(1.0, scale):
                break
        img = apply_chart(p, cp, Chart.Z_XI1)
        # strict transform of (X=T=0) is (w1 = 0, w3 = 0) in Z_XI1
        res = max(abs(img.w1), abs(img.w3))
        rep.e_total += 1
        rep.max_residual_e = max(rep.max_residual_e, res)
        if res < tol_curve:
            rep.e_to_ldoubleprime += 1
        img2 = apply_chart(p, img, Chart.Z_XI1)
        res2 = max(abs(w) for w in img2.coords())
        rep.max_residual_second = max(rep.max_residual_second, res2)
        if res2 < tol_point:
            rep.ldp_to_pminus += 1

    return rep
