"""Parameter bundle for the quadratic shift-like family of C^3 automorphisms.

The map under study is

    f(x, y, z) = (y, z, y*z + b*y + c*z + d*x + e),        d != 0,

together with its inverse

    f^{-1}(x, y, z) = ((z - x*y - b*x - c*y - e)/d, x, y).

All derived constants used throughout the package (the golden mean and
log|d|) are precomputed here.  ``Params`` is immutable and safe to share
across workers.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

SIGMA = (1.0 + math.sqrt(5.0)) / 2.0
LOG_SIGMA = math.log(SIGMA)

# Beyond this max-norm, map evaluations refuse to continue in doubles and an
# explicit guard fires instead of returning inf/NaN.
OVERFLOW_GUARD_NORM = 1e150


class OverflowGuardError(ArithmeticError):
    """Raised when an evaluation would leave the representable range."""

    def __init__(self, step: int = 0, message: str = "overflow guard tripped"):
        super().__init__(message)
        self.step = step


@dataclass(frozen=True)
class Params:
    """Coefficients (b, c, d, e) plus derived constants.

    sigma is the golden mean (1+sqrt(5))/2; log_abs_d = log|d|.  d must be
    nonzero for the map to be an automorphism.  |d| > 1 is *not* required
    here; operations that need it (the renormalized potential machinery)
    check at call time.
    """

    b: complex
    c: complex
    d: complex
    e: complex
    sigma: float = SIGMA
    log_abs_d: float = 0.0

    def __post_init__(self):
        if self.d == 0:
            raise ValueError("d must be nonzero")
        object.__setattr__(self, "sigma", SIGMA)
        object.__setattr__(self, "log_abs_d", math.log(abs(self.d)))

    @property
    def coeff_sum(self) -> float:
        """1 + |b| + |c| + |d| + |e|; the scale entering absorbing radii."""
        return 1.0 + abs(self.b) + abs(self.c) + abs(self.d) + abs(self.e)

    @property
    def bounded_radius(self) -> float:
        """Conservative absorbing radius: orbits of the filled-in set stay
        well inside this ball (validated by the bounded-set sweep tests)."""
        return 10.0 * self.coeff_sum


def make_params(b: complex, c: complex, d: complex, e: complex = 0j) -> Params:
    """Validate coefficients and fill in derived constants."""
    return Params(complex(b), complex(c), complex(d), complex(e))


def solve_quadratic(B: complex, C: complex) -> tuple[complex, complex, bool]:
    """Roots of ``x^2 + B x + C`` with a cancellation-safe branch.

    Returns (r1, r2, is_double) where is_double flags |discriminant| below
    1e-12 relative to the coefficient scale.
    """
    disc = B * B - 4.0 * C
    scale = max(1.0, abs(B) ** 2, 4.0 * abs(C))
    s = cmath.sqrt(disc)
    # pick the sign that avoids subtracting nearly equal quantities
    if (B.conjugate() * s).real >= 0.0:
        q = -(B + s) / 2.0
    else:
        q = -(B - s) / 2.0
    if q != 0:
        r1, r2 = q, C / q
    else:
        r1 = r2 = -B / 2.0
    return r1, r2, abs(disc) <= 1e-12 * scale


def e_normalizing_shift(p: Params) -> tuple[complex, Params]:
    """Affine conjugation killing the constant term.

    Conjugating by the translation q -> q + (t, t, t) turns (b, c, d, e)
    into (b + t, c + t, d, 0) whenever t solves
    t^2 + (b + c + d - 1) t + e = 0 (the diagonal fixed-point equation).
    Returns (t, conjugated params); t is the root of smaller modulus.
    """
    r1, r2, _ = solve_quadratic(p.b + p.c + p.d - 1.0, p.e)
    t = r1 if abs(r1) <= abs(r2) else r2
    return t, make_params(p.b + t, p.c + t, p.d, 0j)
