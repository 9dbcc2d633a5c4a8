"""Overflow-safe iteration kernel for shift-like triangular maps.

Both the forward map and (after conjugating by the coordinate swap
tau(x,y,z) = (z,y,x)) the inverse belong to the family

    F(x, y, z) = (y, z, alpha*y*z + beta*y + gamma*z + delta*x + eps),

so a single stepper serves forward and backward escape-rate computations.
Orbits in the super-escape regime grow double-exponentially and leave the
range of doubles within a dozen steps; once the quadratic term dominates
the tail terms by a wide margin the stepper hands off to a log-magnitude
surrogate

    (lx, ly, lz)  ->  (ly, lz, log|alpha| + ly + lz)

carrying certified half-width error bounds for the neglected phase
information (interval arithmetic on the lower-order terms).  The surrogate
refuses to engage, and the stepper reports failure, when the dominance
margin is too thin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import Point, max_norm, tau
from .params import OVERFLOW_GUARD_NORM, Params, SIGMA

# Hand off to log magnitudes beyond this max-norm; doubles still have ~50
# orders of magnitude of headroom for the final exact products.
SURROGATE_SWITCH_NORM = 1e100

# Largest admissible relative size of the non-quadratic terms at handoff
# (margin of log(1e4) between log|yz| and the rest).
DOMINANCE_MARGIN = 1e-4


@dataclass(frozen=True)
class ShiftCoeffs:
    """Coefficients of the third component alpha*yz + beta*y + gamma*z + delta*x + eps."""

    alpha: complex
    beta: complex
    gamma: complex
    delta: complex
    eps: complex

    @classmethod
    def forward(cls, p: Params) -> "ShiftCoeffs":
        return cls(1.0 + 0j, p.b, p.c, p.d, p.e)

    @classmethod
    def backward(cls, p: Params) -> "ShiftCoeffs":
        """tau o f^{-1} o tau, which is again shift-like.

        Iterating it from tau(q) reproduces the backward orbit of q up to
        the x/z swap, which all norms and potentials here ignore.
        """
        d = p.d
        return cls(-1.0 / d, -p.c / d, -p.b / d, 1.0 / d, -p.e / d)


def _safe_log(v: float) -> float:
    return math.log(v) if v > 0.0 else -math.inf


def _softplus2(l: float) -> float:
    """log(1 + exp(2l)), stable for any l."""
    if l > 25.0:
        return 2.0 * l + math.log1p(math.exp(-2.0 * l))
    return math.log1p(math.exp(2.0 * l))


def _logsum4(l1: float, l2: float, l3: float) -> float:
    """log(1 + e^{2 l1} + e^{2 l2} + e^{2 l3}), stable."""
    m = max(0.0, l1, l2, l3)
    s = math.exp(-2.0 * m)
    for l in (l1, l2, l3):
        s += math.exp(2.0 * (l - m))
    return 2.0 * m + math.log(s)


class ShiftIterator:
    """Stateful orbit of a shift-like map with log-surrogate handoff.

    Attributes after each ``step()``:
      mode          "exact" or "log"
      failed        True once a step could not be carried out safely
      steps         number of completed steps
    """

    def __init__(self, coeffs: ShiftCoeffs, q: Point):
        self.c = coeffs
        self.mode = "exact"
        self.failed = False
        self.steps = 0
        self.x, self.y, self.z = q
        self.lx = self.ly = self.lz = 0.0
        self.ex = self.ey = self.ez = 0.0
        self._la = _safe_log(abs(coeffs.alpha))
        self._lb = _safe_log(abs(coeffs.beta)) - self._la
        self._lc = _safe_log(abs(coeffs.gamma)) - self._la
        self._ld = _safe_log(abs(coeffs.delta)) - self._la
        self._le = _safe_log(abs(coeffs.eps)) - self._la

    # -- state inspection ---------------------------------------------------

    def max_norm(self) -> float:
        if self.mode == "exact":
            return max_norm((self.x, self.y, self.z))
        return math.inf

    def log_max_norm(self) -> tuple[float, float]:
        """(log of the max-norm, certified half-width)."""
        if self.mode == "exact":
            n = self.max_norm()
            return (_safe_log(n), 0.0)
        lm = max(self.lx, self.ly, self.lz)
        return (lm, max(self.ex, self.ey, self.ez))

    def potential(self) -> tuple[float, float]:
        """(u + v, error) with u = log(1+|y|^2)/(2 sigma), v = log(1+|q|_2^2)/2."""
        if self.mode == "exact":
            ay2 = abs(self.y) ** 2
            r2 = abs(self.x) ** 2 + ay2 + abs(self.z) ** 2
            return (math.log1p(ay2) / (2.0 * SIGMA) + 0.5 * math.log1p(r2), 0.0)
        u = _softplus2(self.ly) / (2.0 * SIGMA)
        v = 0.5 * _logsum4(self.lx, self.ly, self.lz)
        err = self.ey / SIGMA + max(self.ex, self.ey, self.ez)
        return (u + v, err)

    # -- stepping -----------------------------------------------------------

    def _dominance_defect(self) -> float:
        """Upper bound on |h/(alpha*y*z) - 1| at the current state."""
        if self.mode == "exact":
            ay, az, ax = abs(self.y), abs(self.z), abs(self.x)
            if ay == 0.0 or az == 0.0:
                return math.inf
            c = self.c
            aa = abs(c.alpha)
            return (
                abs(c.beta) / (aa * az)
                + abs(c.gamma) / (aa * ay)
                + abs(c.delta) * ax / (aa * ay * az)
                + abs(c.eps) / (aa * ay * az)
            )
        # worst case over the certified intervals
        lx = self.lx + self.ex
        ly = self.ly - self.ey
        lz = self.lz - self.ez
        return (
            math.exp(min(700.0, self._lb - lz))
            + math.exp(min(700.0, self._lc - ly))
            + math.exp(min(700.0, self._ld + lx - ly - lz))
            + math.exp(min(700.0, self._le - ly - lz))
        )

    def step(self) -> bool:
        """Advance one step; returns False (and sets .failed) on failure."""
        if self.failed:
            return False
        if self.mode == "log":
            d = self._dominance_defect()
            if not d < DOMINANCE_MARGIN:
                self.failed = True
                return False
            corr = -math.log1p(-d)
            self.lx, self.ly, self.lz = (
                self.ly,
                self.lz,
                self._la + self.ly + self.lz,
            )
            self.ex, self.ey, self.ez = (
                self.ey,
                self.ez,
                self.ey + self.ez + corr,
            )
            self.steps += 1
            return True
        c = self.c
        x, y, z = self.x, self.y, self.z
        h = c.alpha * y * z + c.beta * y + c.gamma * z + c.delta * x + c.eps
        self.x, self.y, self.z = y, z, h
        self.steps += 1
        n = self.max_norm()
        if n > SURROGATE_SWITCH_NORM:
            if self._dominance_defect() < DOMINANCE_MARGIN:
                self.lx = _safe_log(abs(self.x))
                self.ly = _safe_log(abs(self.y))
                self.lz = _safe_log(abs(self.z))
                self.ex = self.ey = self.ez = 0.0
                self.mode = "log"
            elif n > OVERFLOW_GUARD_NORM:
                self.failed = True
                return False
        return True


def forward_iterator(p: Params, q: Point) -> ShiftIterator:
    return ShiftIterator(ShiftCoeffs.forward(p), q)


def backward_iterator(p: Params, q: Point) -> ShiftIterator:
    return ShiftIterator(ShiftCoeffs.backward(p), tau(q))
