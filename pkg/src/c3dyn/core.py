"""Exact evaluation of the map, its inverse, and bounded-horizon orbits.

Points of C^3 are plain tuples ``(x, y, z)`` of Python complex numbers.
Every operation here is a pure function; failure modes of iteration are
encoded in ``OrbitRecord.status`` rather than raised, while single-step
evaluations raise ``OverflowGuardError`` past the representable threshold.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .params import OVERFLOW_GUARD_NORM, OverflowGuardError, Params, solve_quadratic

Point = tuple[complex, complex, complex]


def as_point(x, y, z) -> Point:
    pt = (complex(x), complex(y), complex(z))
    for w in pt:
        if not (math.isfinite(w.real) and math.isfinite(w.imag)):
            raise ValueError("point components must be finite")
    return pt


def max_norm(q: Point) -> float:
    return max(abs(q[0]), abs(q[1]), abs(q[2]))


def tau(q: Point) -> Point:
    """The involution (x, y, z) -> (z, y, x)."""
    return (q[2], q[1], q[0])


def _guard(q: Point, step: int = 0) -> Point:
    if max_norm(q) > OVERFLOW_GUARD_NORM:
        raise OverflowGuardError(step)
    return q


def apply(p: Params, q: Point) -> Point:
    """One forward step (y, z, yz + by + cz + dx + e)."""
    x, y, z = q
    return _guard((y, z, y * z + p.b * y + p.c * z + p.d * x + p.e))


def apply_inverse(p: Params, q: Point) -> Point:
    """One backward step ((z - xy - bx - cy - e)/d, x, y)."""
    x, y, z = q
    return _guard(((z - x * y - p.b * x - p.c * y - p.e) / p.d, x, y))


def conjugate_by_tau(p: Params, q: Point) -> Point:
    """(tau o f o tau)(q); closed form (xy + by + cx + dz + e, x, y)."""
    return tau(apply(p, tau(q)))


def jacobian_det(p: Params) -> complex:
    """Constant determinant of Df.

    Cofactor expansion of [[0,1,0],[0,0,1],[d, z+b, y+c]] gives d at every
    point; its modulus is |d|.
    """
    return p.d


def fixed_points(p: Params) -> list[tuple[Point, int]]:
    """All fixed points, as (point, multiplicity) pairs.

    Fixed points are diagonal: x = y = z with
    x^2 + (b + c + d - 1) x + e = 0.
    """
    r1, r2, double = solve_quadratic(p.b + p.c + p.d - 1.0, p.e)
    if double:
        r = (r1 + r2) / 2.0
        return [((r, r, r), 2)]
    return [((r1, r1, r1), 1), ((r2, r2, r2), 1)]


class OrbitStatus(enum.Enum):
    BOUNDED = "bounded"
    ESCAPED = "escaped"
    OVERFLOW_GUARD = "overflow_guard"


@dataclass
class OrbitRecord:
    """A finite orbit with per-step max-norms and a terminal status.

    ``step`` is the number of completed steps for BOUNDED, or the index of
    the first offending point for ESCAPED / OVERFLOW_GUARD.
    """

    points: list[Point] = field(default_factory=list)
    norms: list[float] = field(default_factory=list)
    status: OrbitStatus = OrbitStatus.BOUNDED
    step: int = 0


def orbit(
    p: Params,
    q: Point,
    max_steps: int,
    escape_radius: float,
    direction: str = "forward",
) -> OrbitRecord:
    """Iterate f (or f^{-1}) until escape, overflow, or max_steps."""
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    if escape_radius <= 1.0:
        raise ValueError("escape_radius must exceed 1")
    step_fn = apply if direction == "forward" else apply_inverse
    rec = OrbitRecord(points=[q], norms=[max_norm(q)])
    if rec.norms[0] > escape_radius:
        rec.status, rec.step = OrbitStatus.ESCAPED, 0
        return rec
    for n in range(1, max_steps + 1):
        try:
            q = step_fn(p, q)
        except OverflowGuardError:
            rec.status, rec.step = OrbitStatus.OVERFLOW_GUARD, n
            return rec
        rec.points.append(q)
        rec.norms.append(max_norm(q))
        if rec.norms[-1] > escape_radius:
            rec.status, rec.step = OrbitStatus.ESCAPED, n
            return rec
    rec.status, rec.step = OrbitStatus.BOUNDED, max_steps
    return rec
