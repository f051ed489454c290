"""The outer billiard map as geometry: tangency, step, inverse, orbits.

A point A outside the curve is mapped to T(A) = 2 gamma(phi_m) - A where
gamma(phi_m) is the unique tangency point for which A - gamma is
anti-parallel to gamma' (counterclockwise convention; chord parameter t > 0
in A = gamma - t gamma').  Everything here works directly on the geometry,
independent of the generating-function calculus, so it can serve as an
oracle for it.

For an exterior point at polar angle phi_A the forward tangency angle lies
in the open half-turn (phi_A, phi_A + pi) and cross(gamma', A - gamma)
changes sign exactly once there (twice-tangent property of convex curves),
which gives an exact bracket for root isolation.
"""

import math
from dataclasses import dataclass

import numpy as np

from .curves import ConvexCurve, PlanePoint
from .errors import InsideCurveError, TangencyError

CCW = "ccw"
CW = "cw"

NEAR_BOUNDARY_T = 1e-8
TANGENCY_GRID = 512
BISECT_WIDTH = 1e-8       # bisection hand-off width before Newton polish
CROSS_TOL = 1e-12         # relative tolerance on the tangency cross product


@dataclass(frozen=True)
class PhasePoint:
    """Exterior phase-space point: world (x, y) and polar (p = r^2/2, phi)."""

    x: float
    y: float
    p: float
    phi: float


@dataclass(frozen=True)
class TangencyResult:
    phi_m: float
    t: float
    point: PlanePoint
    near_boundary: bool = False


def _orientation_sign(orientation: str) -> int:
    if orientation == CCW:
        return 1
    if orientation == CW:
        return -1
    raise ValueError(f"orientation must be '{CCW}' or '{CW}'")


def phase_point(curve: ConvexCurve, x: float, y: float) -> PhasePoint:
    """Build a PhasePoint from world coordinates; must be strictly exterior."""
    dx, dy = x - curve.origin[0], y - curve.origin[1]
    rho = math.hypot(dx, dy)
    phi = math.atan2(dy, dx)
    r, _, _ = curve.radius_scalar(phi)
    if rho <= r:
        raise InsideCurveError(
            f"point ({x:.6g}, {y:.6g}) is not strictly outside the curve "
            f"(rho={rho:.6g}, r(phi)={r:.6g})")
    return PhasePoint(x=float(x), y=float(y), p=0.5 * rho * rho, phi=phi)


def phase_point_polar(curve: ConvexCurve, p: float, phi: float) -> PhasePoint:
    rho = math.sqrt(2.0 * p)
    return phase_point(curve,
                       curve.origin[0] + rho * math.cos(phi),
                       curve.origin[1] + rho * math.sin(phi))


# -- tangency root ------------------------------------------------------------

def _tangency_root(curve: ConvexCurve, ax: float, ay: float, direction: int,
                   grid: int = TANGENCY_GRID):
    """Tangency angle from an origin-relative exterior point (ax, ay).

    direction=+1 picks the forward (t > 0) branch in (phi_A, phi_A + pi),
    direction=-1 the mirrored branch in (phi_A - pi, phi_A).  Sign-change
    isolation on a grid over the half-turn, bisection to width 1e-8, then
    Newton on cross(gamma', A - gamma).
    """
    phi_a = math.atan2(ay, ax)
    if direction > 0:
        lo, hi = phi_a, phi_a + math.pi
        sign_lo = -1.0
    else:
        lo, hi = phi_a - math.pi, phi_a
        sign_lo = 1.0

    def g_scalar(psi):
        r, r1, _ = curve.radius_scalar(psi)
        c, s = math.cos(psi), math.sin(psi)
        gx, gy = r * c, r * s
        tx, ty = r1 * c - r * s, r1 * s + r * c
        return tx * (ay - gy) - ty * (ax - gx)

    # grid isolation inside the half-turn (endpoint signs are known exactly)
    psis = lo + (hi - lo) * np.arange(1, grid) / grid
    r, r1, _ = curve.radius(psis)
    c, s = np.cos(psis), np.sin(psis)
    gvals = (r1 * c - r * s) * (ay - r * s) - (r1 * s + r * c) * (ax - r * c)
    signs = np.concatenate([[sign_lo], np.sign(gvals), [-sign_lo]])
    flips = np.nonzero(signs[:-1] * signs[1:] <= 0)[0]
    if flips.size == 0:
        raise TangencyError("tangency bracketing failed (grid too coarse?)")
    cell = int(flips[0])
    edges = np.concatenate([[lo], psis, [hi]])
    blo, bhi = float(edges[cell]), float(edges[cell + 1])
    glo = sign_lo if cell == 0 else float(gvals[cell - 1])

    while bhi - blo > BISECT_WIDTH:
        mid = 0.5 * (blo + bhi)
        gm = g_scalar(mid)
        if gm * glo > 0.0:
            blo = mid
        else:
            bhi = mid
    psi = 0.5 * (blo + bhi)
    scale = math.hypot(ax, ay) * max(curve.max_radius, 1.0)
    for _ in range(8):
        r, r1, r2 = curve.radius_scalar(psi)
        cp, sp = math.cos(psi), math.sin(psi)
        gx, gy = r * cp, r * sp
        tx, ty = r1 * cp - r * sp, r1 * sp + r * cp
        gxx, gyy = (r2 - r) * cp - 2.0 * r1 * sp, (r2 - r) * sp + 2.0 * r1 * cp
        g = tx * (ay - gy) - ty * (ax - gx)
        if abs(g) < CROSS_TOL * scale:
            break
        gp = gxx * (ay - gy) - gyy * (ax - gx)
        delta = g / gp
        psi = min(max(psi - delta, blo), bhi)
    r, r1, _ = curve.radius_scalar(psi)
    cp, sp = math.cos(psi), math.sin(psi)
    dx, dy = ax - r * cp, ay - r * sp
    t = math.hypot(dx, dy) / math.hypot(r1 * cp - r * sp, r1 * sp + r * cp)
    return psi, t


def tangency(curve: ConvexCurve, a: PhasePoint, orientation: str = CCW,
             grid: int = TANGENCY_GRID) -> TangencyResult:
    """Forward tangency point and chord parameter for an exterior point."""
    sign = _orientation_sign(orientation)
    ax, ay = a.x - curve.origin[0], a.y - curve.origin[1]
    _require_exterior(curve, ax, ay)
    psi, t = _tangency_root(curve, ax, ay, sign, grid)
    mx, my = curve.point(psi)
    return TangencyResult(phi_m=psi, t=t, point=PlanePoint(float(mx), float(my)),
                          near_boundary=t < NEAR_BOUNDARY_T)


def _require_exterior(curve: ConvexCurve, ax: float, ay: float):
    rho = math.hypot(ax, ay)
    r, _, _ = curve.radius_scalar(math.atan2(ay, ax))
    if rho <= r:
        raise InsideCurveError(
            f"phase point at rho={rho:.6g} is not strictly outside (r={r:.6g})")


def step(curve: ConvexCurve, a: PhasePoint, orientation: str = CCW) -> PhasePoint:
    """One application of the outer billiard map: reflect A about the tangency point."""
    res = tangency(curve, a, orientation)
    return phase_point(curve, 2.0 * res.point.x - a.x, 2.0 * res.point.y - a.y)


def inverse_step(curve: ConvexCurve, b: PhasePoint, orientation: str = CCW) -> PhasePoint:
    """The point A with step(A) = B (mirrored tangency branch)."""
    sign = _orientation_sign(orientation)
    bx, by = b.x - curve.origin[0], b.y - curve.origin[1]
    _require_exterior(curve, bx, by)
    psi, _ = _tangency_root(curve, bx, by, -sign)
    mx, my = curve.point(psi)
    return phase_point(curve, 2.0 * float(mx) - b.x, 2.0 * float(my) - b.y)


def orbit(curve: ConvexCurve, a: PhasePoint, n: int, orientation: str = CCW):
    """[A, T(A), ..., T^n(A)]; aborts with the failing step index on error."""
    if n < 0:
        raise ValueError("orbit length must be non-negative")
    points = [a]
    current = a
    for k in range(n):
        try:
            current = step(curve, current, orientation)
        except (TangencyError, InsideCurveError) as exc:
            raise TangencyError(f"orbit step {k + 1} failed: {exc}", step=k + 1) from exc
        points.append(current)
    return points


def differential_fd(curve: ConvexCurve, a: PhasePoint, h: float = 1e-5,
                    orientation: str = CCW) -> np.ndarray:
    """Central-difference differential of T in (p, phi) coordinates.

    Step h*max(1, p) in p and h in phi.  All four stencil points must stay
    exterior.  det of the result is 1 up to O(h^2) since T preserves
    dp ^ dphi.
    """
    hp = h * max(1.0, a.p)
    base = step(curve, a, orientation)
    out = np.empty((2, 2))

    def image(p, phi):
        q = step(curve, phase_point_polar(curve, p, phi), orientation)
        dphi = q.phi - base.phi
        dphi = (dphi + math.pi) % (2.0 * math.pi) - math.pi
        return q.p, base.phi + dphi

    pp, fp = image(a.p + hp, a.phi)
    pm, fm = image(a.p - hp, a.phi)
    out[0, 0] = (pp - pm) / (2.0 * hp)
    out[1, 0] = (fp - fm) / (2.0 * hp)
    pp, fp = image(a.p, a.phi + h)
    pm, fm = image(a.p, a.phi - h)
    out[0, 1] = (pp - pm) / (2.0 * h)
    out[1, 1] = (fp - fm) / (2.0 * h)
    return out


# -- chord-chart stepping (hot paths for Jacobi machinery) --------------------

def chord_of(curve: ConvexCurve, a: PhasePoint, orientation: str = CCW):
    """Forward chord (phi_m, t) through an exterior point (A is the chord's tail)."""
    res = tangency(curve, a, orientation)
    return res.phi_m, res.t


def chord_step_scalar(curve: ConvexCurve, phi_m: float, t: float, direction: int = 1):
    """Next (+1) or previous (-1) chord of the orbit, scalar fast path."""
    r, r1, _ = curve.radius_scalar(phi_m)
    c, s = math.cos(phi_m), math.sin(phi_m)
    bx = r * c + direction * t * (r1 * c - r * s)
    by = r * s + direction * t * (r1 * s + r * c)
    phi_b = math.atan2(by, bx)
    if direction > 0:
        lo, hi = phi_b, phi_b + math.pi
        sign_lo = -1.0
    else:
        lo, hi = phi_b - math.pi, phi_b
        sign_lo = 1.0
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        r, r1, _ = curve.radius_scalar(mid)
        cm, sm = math.cos(mid), math.sin(mid)
        g = (r1 * cm - r * sm) * (by - r * sm) - (r1 * sm + r * cm) * (bx - r * cm)
        if g * sign_lo > 0.0:
            lo = mid
        else:
            hi = mid
    psi = 0.5 * (lo + hi)
    for _ in range(3):
        r, r1, r2 = curve.radius_scalar(psi)
        cm, sm = math.cos(psi), math.sin(psi)
        gx, gy = r * cm, r * sm
        tx, ty = r1 * cm - r * sm, r1 * sm + r * cm
        g = tx * (by - gy) - ty * (bx - gx)
        gp = ((r2 - r) * cm - 2.0 * r1 * sm) * (by - gy) - ((r2 - r) * sm + 2.0 * r1 * cm) * (bx - gx)
        nxt = psi - g / gp
        if lo <= nxt <= hi:
            psi = nxt
    r, r1, _ = curve.radius_scalar(psi)
    cm, sm = math.cos(psi), math.sin(psi)
    t_new = math.hypot(bx - r * cm, by - r * sm) / math.hypot(r1 * cm - r * sm, r1 * sm + r * cm)
    return psi, t_new


def chord_step_batch(curve: ConvexCurve, phi_m: np.ndarray, t: np.ndarray,
                     direction: int = 1):
    """Vectorized chord stepping with fixed iteration counts.

    Fixed 30 bisections + 4 clipped Newton steps keep the per-lane float
    stream independent of batch composition, so chunked runs are bitwise
    reproducible for any worker count.
    """
    r, r1, _ = curve.radius(phi_m)
    c, s = np.cos(phi_m), np.sin(phi_m)
    bx = r * c + direction * t * (r1 * c - r * s)
    by = r * s + direction * t * (r1 * s + r * c)
    phi_b = np.arctan2(by, bx)
    if direction > 0:
        lo, hi = phi_b.copy(), phi_b + np.pi
        sign_lo = -1.0
    else:
        lo, hi = phi_b - np.pi, phi_b.copy()
        sign_lo = 1.0
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        r, r1, _ = curve.radius(mid)
        cm, sm = np.cos(mid), np.sin(mid)
        g = (r1 * cm - r * sm) * (by - r * sm) - (r1 * sm + r * cm) * (bx - r * cm)
        take_lo = g * sign_lo > 0.0
        lo = np.where(take_lo, mid, lo)
        hi = np.where(take_lo, hi, mid)
    psi = 0.5 * (lo + hi)
    for _ in range(4):
        r, r1, r2 = curve.radius(psi)
        cm, sm = np.cos(psi), np.sin(psi)
        gx, gy = r * cm, r * sm
        tx, ty = r1 * cm - r * sm, r1 * sm + r * cm
        g = tx * (by - gy) - ty * (bx - gx)
        gp = ((r2 - r) * cm - 2.0 * r1 * sm) * (by - gy) - ((r2 - r) * sm + 2.0 * r1 * cm) * (bx - gx)
        psi = np.clip(psi - g / gp, lo, hi)
    r, r1, _ = curve.radius(psi)
    cm, sm = np.cos(psi), np.sin(psi)
    t_new = np.hypot(bx - r * cm, by - r * sm) / np.hypot(r1 * cm - r * sm, r1 * sm + r * cm)
    return psi, t_new


def chord_tail_point(curve: ConvexCurve, phi_m: float, t: float) -> PhasePoint:
    """The phase point at the chord's tail M0 = gamma(phi_m) - t gamma'(phi_m)."""
    r, r1, _ = curve.radius_scalar(phi_m)
    c, s = math.cos(phi_m), math.sin(phi_m)
    return phase_point(curve,
                       curve.origin[0] + r * c - t * (r1 * c - r * s),
                       curve.origin[1] + r * s - t * (r1 * s + r * c))


# -- export -------------------------------------------------------------------

def write_orbit_csv(fh, points, footer_lines=()):
    """Write an orbit as CSV rows n,x,y,p,phi at full double precision."""
    fh.write("n,x,y,p,phi\n")
    for n, pt in enumerate(points):
        fh.write(f"{n:d},{pt.x:.17g},{pt.y:.17g},{pt.p:.17g},{pt.phi:.17g}\n")
    for line in footer_lines:
        fh.write(f"# {line}\n")
