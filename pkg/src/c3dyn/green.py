"""Escape-rate potentials G+ and G- with convergence diagnostics.

The forward potential is the renormalized limit

    G+(q) = lim_n  sigma^{-n} * (u + v)(f^n(q)),
    u(q) = log(|y|^2 + 1) / (2 sigma),   v(q) = log(1 + |q|_2^2) / 2,

and G- is the same limit along backward orbits.  Values are >= 0, vanish
exactly off the basin of the superattracting point at infinity, and satisfy
G+ o f = sigma * G+.  Orbits in the basin overflow doubles almost
immediately, so the kernel switches to certified log-magnitude surrogates
(see _iterate) and reports an a-posteriori error bound built from the
geometric tail of the renormalized increments.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ._iterate import (
    DOMINANCE_MARGIN,
    SURROGATE_SWITCH_NORM,
    ShiftCoeffs,
    backward_iterator,
    forward_iterator,
)
from .core import Point
from .params import OVERFLOW_GUARD_NORM, Params, SIGMA


class GreenMode(enum.Enum):
    DIRECT_ITERATION = "direct"
    LOG_SURROGATE = "log_surrogate"
    CONVERGED_ZERO = "converged_zero"
    UNRESOLVED = "unresolved"


@dataclass
class GreenResult:
    value: float
    iterations: int
    mode: GreenMode
    error_bound: float


@dataclass(frozen=True)
class GreenOptions:
    max_iters: int = 200
    tol: float = 1e-9
    positivity_threshold: float = 1e-8

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


DEFAULT_OPTIONS = GreenOptions()

# iterations before the stopping tests may fire; lets transients settle
_MIN_ITERS = 8
_MIN_ZERO_ITERS = 12
# below this norm an exact-mode orbit is not yet locked into escape and the
# error bound keeps a sigma^{-n} floor
_LOCKED_NORM = 1e6


def potential_parts(p: Params, q: Point) -> tuple[float, float]:
    """(u, v): the two plurisubharmonic pieces of the seed potential."""
    x, y, z = q
    ay2 = abs(y) ** 2
    u = math.log1p(ay2) / (2.0 * SIGMA)
    v = 0.5 * math.log1p(abs(x) ** 2 + ay2 + abs(z) ** 2)
    return u, v


def potential_total(p: Params, q: Point) -> float:
    u, v = potential_parts(p, q)
    return u + v


def _ball_potential_bound(radius: float) -> float:
    """Safe bound for the seed potential (inflated by 2x where it stands in
    for the limit potential) over the max-norm ball of the given radius."""
    r2 = radius * radius
    return math.log1p(r2) / (2.0 * SIGMA) + 0.5 * math.log1p(3.0 * r2)


def green_value(
    p: Params,
    q: Point,
    direction: str = "forward",
    opts: GreenOptions = DEFAULT_OPTIONS,
) -> GreenResult:
    """Renormalized escape-rate potential along the forward or backward orbit."""
    it = forward_iterator(p, q) if direction == "forward" else backward_iterator(p, q)
    r_bounded = p.bounded_radius
    zero_bound = 2.0 * _ball_potential_bound(r_bounded)
    below = it.max_norm() <= r_bounded

    u, uerr = it.potential()
    val_prev = u
    inc_prev = math.inf
    inv_pow = 1.0
    val = u
    for n in range(1, opts.max_iters + 1):
        if not it.step():
            return GreenResult(max(val, 0.0), n, GreenMode.UNRESOLVED, math.inf)
        inv_pow /= SIGMA
        u, uerr = it.potential()
        val = u * inv_pow
        inc = val - val_prev
        val_prev = val

        if below:
            if it.mode == "exact" and it.max_norm() <= r_bounded:
                if n >= _MIN_ZERO_ITERS and inv_pow * zero_bound < opts.tol:
                    return GreenResult(
                        0.0, n, GreenMode.CONVERGED_ZERO, inv_pow * zero_bound
                    )
            else:
                below = False

        floor = 0.0
        if it.mode == "exact" and it.max_norm() < _LOCKED_NORM:
            floor = inv_pow * max(1.0, u)
        err = 3.0 * SIGMA * max(abs(inc), abs(inc_prev) / SIGMA) + uerr * inv_pow + floor
        inc_prev = inc
        if n >= _MIN_ITERS and not below and err < opts.tol:
            mode = (
                GreenMode.LOG_SURROGATE if it.mode == "log" else GreenMode.DIRECT_ITERATION
            )
            return GreenResult(max(val, 0.0), n, mode, err)

    if below:
        return GreenResult(
            0.0, opts.max_iters, GreenMode.CONVERGED_ZERO, inv_pow * zero_bound
        )
    return GreenResult(max(val, 0.0), opts.max_iters, GreenMode.UNRESOLVED, math.inf)


class Basin(enum.Enum):
    IN_BASIN = "in_basin"
    NOT_IN_BASIN = "not_in_basin"
    UNRESOLVED = "unresolved"


def basin_membership(
    p: Params,
    q: Point,
    direction: str = "forward",
    opts: GreenOptions = DEFAULT_OPTIONS,
) -> Basin:
    """Thresholded test of G > 0 (the basin of the attracting point at infinity)."""
    res = green_value(p, q, direction, opts)
    thr = opts.positivity_threshold
    if res.mode == GreenMode.CONVERGED_ZERO:
        return Basin.NOT_IN_BASIN
    if res.mode == GreenMode.UNRESOLVED:
        return Basin.UNRESOLVED
    if res.value > thr and res.error_bound < thr / 2.0:
        return Basin.IN_BASIN
    if res.value + res.error_bound <= thr:
        return Basin.NOT_IN_BASIN
    return Basin.UNRESOLVED


_FD_OPTS = GreenOptions(max_iters=300, tol=1e-12)


def pluriharmonic_defect(
    p: Params,
    q: Point,
    direction_vec: tuple[complex, complex, complex],
    h: float,
    opts: GreenOptions = _FD_OPTS,
) -> float:
    """5-point complex-line Laplacian of G+ along t -> q + t*dir at t = 0.

    Vanishes (up to truncation and kernel noise) wherever G+ is
    pluriharmonic, i.e. everywhere in the basin.  The same stencil applied
    to |t|^2 returns 4, which calibrates the scale.
    """
    norm = math.sqrt(sum(abs(w) ** 2 for w in direction_vec))
    if norm == 0.0:
        raise ValueError("direction vector must be nonzero")
    dv = tuple(w / norm for w in direction_vec)

    def g(t: complex) -> float:
        pt = (q[0] + t * dv[0], q[1] + t * dv[1], q[2] + t * dv[2])
        return green_value(p, pt, "forward", opts).value

    center = g(0.0)
    s = g(h) + g(-h) + g(1j * h) + g(-1j * h)
    return (s - 4.0 * center) / (h * h)


# ---------------------------------------------------------------------------
# Vectorized grid kernel (used by the slice rasterizer)
# ---------------------------------------------------------------------------

GRID_OK = 0
GRID_ZERO = 1
GRID_UNRESOLVED = 2


def green_grid(
    p: Params,
    pts: np.ndarray,
    direction: str = "forward",
    opts: GreenOptions = DEFAULT_OPTIONS,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Evaluate the escape-rate potential on an array of points.

    ``pts`` is a complex array of shape (..., 3).  Returns (values, errors,
    status) with status in {GRID_OK, GRID_ZERO, GRID_UNRESOLVED}; value is
    NaN where unresolved.  The recurrences mirror ``green_value``
    elementwise, so results do not depend on how the array is partitioned
    into batches -- the renderer relies on this for thread-count-independent
    output.
    """
    shape = pts.shape[:-1]
    flat = pts.reshape(-1, 3)
    if direction == "backward":
        flat = flat[:, ::-1]
        coeffs = ShiftCoeffs.backward(p)
    else:
        coeffs = ShiftCoeffs.forward(p)
    m = flat.shape[0]
    x = flat[:, 0].astype(np.complex128).copy()
    y = flat[:, 1].astype(np.complex128).copy()
    z = flat[:, 2].astype(np.complex128).copy()

    la = math.log(abs(coeffs.alpha))
    lco = [
        (math.log(abs(c)) - la) if c != 0 else -math.inf
        for c in (coeffs.beta, coeffs.gamma, coeffs.delta, coeffs.eps)
    ]
    aco = [abs(c) for c in (coeffs.alpha, coeffs.beta, coeffs.gamma, coeffs.delta, coeffs.eps)]

    lx = np.zeros(m)
    ly = np.zeros(m)
    lz = np.zeros(m)
    exw = np.zeros(m)
    eyw = np.zeros(m)
    ezw = np.zeros(m)

    in_log = np.zeros(m, dtype=bool)
    done = np.zeros(m, dtype=bool)
    zero_mode = np.zeros(m, dtype=bool)
    failed = np.zeros(m, dtype=bool)

    values = np.zeros(m)
    errors = np.full(m, np.inf)

    r_bounded = p.bounded_radius
    zero_bound = 2.0 * _ball_potential_bound(r_bounded)

    def norms_exact() -> np.ndarray:
        return np.maximum(np.abs(x), np.maximum(np.abs(y), np.abs(z)))

    def potential_arrays() -> tuple[np.ndarray, np.ndarray]:
        u = np.zeros(m)
        ue = np.zeros(m)
        ex = ~in_log
        if ex.any():
            ay2 = np.abs(y[ex]) ** 2
            r2 = np.abs(x[ex]) ** 2 + ay2 + np.abs(z[ex]) ** 2
            u[ex] = np.log1p(ay2) / (2.0 * SIGMA) + 0.5 * np.log1p(r2)
        lg = in_log
        if lg.any():
            lyg = ly[lg]
            up = np.where(
                lyg > 25.0,
                2.0 * lyg + np.log1p(np.exp(np.minimum(0.0, -2.0 * lyg))),
                np.log1p(np.exp(np.minimum(50.0, 2.0 * lyg))),
            ) / (2.0 * SIGMA)
            mm = np.maximum(0.0, np.maximum(lx[lg], np.maximum(lyg, lz[lg])))
            s = np.exp(-2.0 * mm)
            for arr in (lx[lg], lyg, lz[lg]):
                s += np.exp(2.0 * (arr - mm))
            u[lg] = up + mm + 0.5 * np.log(s)
            ue[lg] = eyw[lg] / SIGMA + np.maximum(exw[lg], np.maximum(eyw[lg], ezw[lg]))
        return u, ue

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        below = norms_exact() <= r_bounded
        u, ue = potential_arrays()
        val_prev = u.copy()
        inc_prev = np.full(m, np.inf)
        inv_pow = 1.0

        for n in range(1, opts.max_iters + 1):
            act = ~(done | failed)
            if not act.any():
                break
            ex_step = act & ~in_log
            if ex_step.any():
                xs, ys, zs = x[ex_step], y[ex_step], z[ex_step]
                hnew = (
                    coeffs.alpha * ys * zs
                    + coeffs.beta * ys
                    + coeffs.gamma * zs
                    + coeffs.delta * xs
                    + coeffs.eps
                )
                x[ex_step], y[ex_step], z[ex_step] = ys, zs, hnew
                nn = np.maximum(np.abs(ys), np.maximum(np.abs(zs), np.abs(hnew)))
                big = nn > SURROGATE_SWITCH_NORM
                if big.any():
                    idx = np.flatnonzero(ex_step)[big]
                    ax, ay, az = np.abs(x[idx]), np.abs(y[idx]), np.abs(z[idx])
                    dom = (
                        aco[1] / (aco[0] * az)
                        + aco[2] / (aco[0] * ay)
                        + aco[3] * ax / (aco[0] * ay * az)
                        + aco[4] / (aco[0] * ay * az)
                    )
                    okd = dom < DOMINANCE_MARGIN
                    sw = idx[okd]
                    if sw.size:
                        lx[sw] = np.log(np.abs(x[sw]))
                        ly[sw] = np.log(np.abs(y[sw]))
                        lz[sw] = np.log(np.abs(z[sw]))
                        exw[sw] = eyw[sw] = ezw[sw] = 0.0
                        in_log[sw] = True
                    bad = idx[~okd]
                    if bad.size:
                        over = np.abs(x[bad]) > OVERFLOW_GUARD_NORM
                        over |= np.abs(y[bad]) > OVERFLOW_GUARD_NORM
                        over |= np.abs(z[bad]) > OVERFLOW_GUARD_NORM
                        failed[bad[over]] = True
            lg_step = act & in_log
            if lg_step.any():
                idx = np.flatnonzero(lg_step)
                lxg = lx[idx] + exw[idx]
                lyg = ly[idx] - eyw[idx]
                lzg = lz[idx] - ezw[idx]
                dom = (
                    np.exp(np.minimum(700.0, lco[0] - lzg))
                    + np.exp(np.minimum(700.0, lco[1] - lyg))
                    + np.exp(np.minimum(700.0, lco[2] + lxg - lyg - lzg))
                    + np.exp(np.minimum(700.0, lco[3] - lyg - lzg))
                )
                okd = dom < DOMINANCE_MARGIN
                failed[idx[~okd]] = True
                good = idx[okd]
                if good.size:
                    corr = -np.log1p(-dom[okd])
                    nlx, nly, nlz = ly[good], lz[good], la + ly[good] + lz[good]
                    lx[good], ly[good], lz[good] = nlx, nly, nlz
                    nex, ney = eyw[good], ezw[good]
                    nez = eyw[good] + ezw[good] + corr
                    exw[good], eyw[good], ezw[good] = nex, ney, nez

            inv_pow /= SIGMA
            u, ue = potential_arrays()
            val = u * inv_pow
            inc = val - val_prev
            val_prev = np.where(act, val, val_prev)

            cur_norm = norms_exact()
            below &= ~act | (~in_log & (cur_norm <= r_bounded) & ~failed)
            if n >= _MIN_ZERO_ITERS and inv_pow * zero_bound < opts.tol:
                zdone = act & below
                if zdone.any():
                    values[zdone] = 0.0
                    errors[zdone] = inv_pow * zero_bound
                    done[zdone] = True
                    zero_mode[zdone] = True

            floor = np.where(
                ~in_log & (cur_norm < _LOCKED_NORM), inv_pow * np.maximum(1.0, u), 0.0
            )
            err = (
                3.0 * SIGMA * np.maximum(np.abs(inc), np.abs(inc_prev) / SIGMA)
                + ue * inv_pow
                + floor
            )
            inc_prev = np.where(act, inc, inc_prev)
            if n >= _MIN_ITERS:
                conv = act & ~done & ~failed & ~below & (err < opts.tol)
                if conv.any():
                    values[conv] = np.maximum(val[conv], 0.0)
                    errors[conv] = err[conv]
                    done[conv] = True

        # budget exhausted: orbits that never left the bounded ball are zero
        tail_zero = below & ~done & ~failed
        values[tail_zero] = 0.0
        errors[tail_zero] = inv_pow * zero_bound
        done[tail_zero] = True
        zero_mode[tail_zero] = True

    status = np.full(m, GRID_UNRESOLVED, dtype=np.int8)
    status[done] = GRID_OK
    status[done & zero_mode] = GRID_ZERO
    values[~done] = np.nan
    return values.reshape(shape), errors.reshape(shape), status.reshape(shape)
