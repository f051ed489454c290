"""Strictly convex closed plane curves given by a radial function r(phi).

Three kinds are supported: circles and axis-aligned ellipses (evaluated from
closed forms so equality cases keep maximal accuracy) and trigonometric
polynomials r(phi) = a0 + sum_k (c_k cos k phi + s_k sin k phi).  The radial
function is taken about the curve's ``origin``, a point in world coordinates;
boundary points are ``origin + r(phi) * e_phi``.
"""

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConvergenceError, InvalidCurveError, NotInteriorError
from .quadrature import TWO_PI, periodic_trapezoid, uniform_angles

CIRCLE = "circle"
ELLIPSE = "ellipse"
FOURIER = "fourier"

VALIDATION_GRID = 4096
CHI_MIN_DEFAULT = 1e-6
FOURIER_CUTOFF = 1e-13     # refit coefficients below this are dropped
REFIT_RESIDUAL_MAX = 1e-8


@dataclass(frozen=True)
class PlanePoint:
    x: float
    y: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True)
class CurveSample:
    """Radial data at one angle: r, r', r'', chi, curvature, ds/dphi."""

    phi: float
    r: float
    r_prime: float
    r_second: float
    chi: float
    curvature: float
    arc_element: float


@dataclass(frozen=True)
class CurveValidation:
    ok: bool
    min_r: float
    min_chi: float
    phi_at_min_r: float
    phi_at_min_chi: float
    grid_size: int
    message: str = ""


@dataclass(frozen=True, eq=False)
class ConvexCurve:
    kind: str
    origin: tuple = (0.0, 0.0)
    radius_value: float = 0.0            # circle
    axis_a: float = 0.0                  # ellipse semi-axes
    axis_b: float = 0.0
    a0: float = 0.0                      # fourier mean term
    cos_coeffs: tuple = ()               # harmonic k = index + 1
    sin_coeffs: tuple = ()

    def __post_init__(self):
        # pad the trig coefficient lists to a common length once
        n = max(len(self.cos_coeffs), len(self.sin_coeffs))
        object.__setattr__(self, "cos_coeffs",
                           tuple(self.cos_coeffs) + (0.0,) * (n - len(self.cos_coeffs)))
        object.__setattr__(self, "sin_coeffs",
                           tuple(self.sin_coeffs) + (0.0,) * (n - len(self.sin_coeffs)))

    # -- radial function ---------------------------------------------------

    def radius(self, phi):
        """Vectorized (r, r', r'') at angle(s) phi."""
        phi = np.asarray(phi, dtype=float)
        if self.kind == CIRCLE:
            r = np.full_like(phi, self.radius_value)
            z = np.zeros_like(phi)
            return r, z, z
        if self.kind == ELLIPSE:
            a2, b2 = self.axis_a ** 2, self.axis_b ** 2
            ab = self.axis_a * self.axis_b
            d = b2 * np.cos(phi) ** 2 + a2 * np.sin(phi) ** 2
            dp = (a2 - b2) * np.sin(2.0 * phi)
            dpp = 2.0 * (a2 - b2) * np.cos(2.0 * phi)
            inv = d ** -1.5
            r = ab / np.sqrt(d)
            r1 = -0.5 * ab * dp * inv
            r2 = 0.75 * ab * dp * dp * inv / d - 0.5 * ab * dpp * inv
            return r, r1, r2
        k = self._harmonics
        kphi = np.multiply.outer(phi, k)
        ck, sk = np.cos(kphi), np.sin(kphi)
        c = np.asarray(self.cos_coeffs, dtype=float)
        s = np.asarray(self.sin_coeffs, dtype=float)
        r = self.a0 + ck @ c + sk @ s
        r1 = (ck * k) @ s - (sk * k) @ c
        r2 = -(ck * k * k) @ c - (sk * k * k) @ s
        return r, r1, r2

    def radius_scalar(self, phi: float):
        """Scalar (r, r', r'') on plain floats; hot path for orbit stepping."""
        if self.kind == CIRCLE:
            return self.radius_value, 0.0, 0.0
        if self.kind == ELLIPSE:
            a2, b2 = self.axis_a ** 2, self.axis_b ** 2
            ab = self.axis_a * self.axis_b
            cp, sp = math.cos(phi), math.sin(phi)
            d = b2 * cp * cp + a2 * sp * sp
            dp = (a2 - b2) * math.sin(2.0 * phi)
            dpp = 2.0 * (a2 - b2) * math.cos(2.0 * phi)
            inv = d ** -1.5
            return (ab / math.sqrt(d),
                    -0.5 * ab * dp * inv,
                    0.75 * ab * dp * dp * inv / d - 0.5 * ab * dpp * inv)
        r, r1, r2 = self.a0, 0.0, 0.0
        for k in range(1, len(self.cos_coeffs) + 1):
            c, s = self.cos_coeffs[k - 1], self.sin_coeffs[k - 1]
            ck, sk = math.cos(k * phi), math.sin(k * phi)
            r += c * ck + s * sk
            r1 += k * (s * ck - c * sk)
            r2 -= k * k * (c * ck + s * sk)
        return r, r1, r2

    @cached_property
    def _harmonics(self) -> np.ndarray:
        return np.arange(1, len(self.cos_coeffs) + 1, dtype=float)

    # -- geometry ----------------------------------------------------------

    def point(self, phi):
        """Boundary point(s) gamma(phi) in world coordinates: (x, y)."""
        phi = np.asarray(phi, dtype=float)
        r, _, _ = self.radius(phi)
        return self.origin[0] + r * np.cos(phi), self.origin[1] + r * np.sin(phi)

    def tangent(self, phi):
        """gamma'(phi) = r' e_phi + r e_phi_perp, as (tx, ty)."""
        phi = np.asarray(phi, dtype=float)
        r, r1, _ = self.radius(phi)
        c, s = np.cos(phi), np.sin(phi)
        return r1 * c - r * s, r1 * s + r * c

    def sample(self, phi):
        r, r1, r2 = self.radius(phi)
        chi = r * r + 2.0 * r1 * r1 - r * r2
        rp2 = r * r + r1 * r1
        return CurveSample(phi=phi, r=r, r_prime=r1, r_second=r2, chi=chi,
                           curvature=chi * rp2 ** -1.5,
                           arc_element=np.sqrt(rp2))

    @cached_property
    def diameter(self) -> float:
        x, y = self.point(uniform_angles(1024))
        return float(np.hypot(x.max() - x.min(), y.max() - y.min()))

    @cached_property
    def max_radius(self) -> float:
        r, _, _ = self.radius(uniform_angles(1024))
        return float(r.max())


# -- constructors ----------------------------------------------------------

def circle(radius: float, origin=(0.0, 0.0)) -> ConvexCurve:
    return ConvexCurve(kind=CIRCLE, origin=tuple(origin), radius_value=float(radius))


def ellipse(a: float, b: float, origin=(0.0, 0.0)) -> ConvexCurve:
    return ConvexCurve(kind=ELLIPSE, origin=tuple(origin), axis_a=float(a), axis_b=float(b))


def fourier(a0: float, cos=(), sin=(), origin=(0.0, 0.0)) -> ConvexCurve:
    return ConvexCurve(kind=FOURIER, origin=tuple(origin), a0=float(a0),
                       cos_coeffs=tuple(float(c) for c in cos),
                       sin_coeffs=tuple(float(s) for s in sin))


# -- operations ---------------------------------------------------------------

def evaluate(curve: ConvexCurve, phi) -> CurveSample:
    """Radial value, two derivatives, chi, curvature and arc element at phi."""
    return curve.sample(phi)


def boundary_point(curve: ConvexCurve, phi: float) -> PlanePoint:
    x, y = curve.point(phi)
    return PlanePoint(float(x), float(y))


def tangent_vector(curve: ConvexCurve, phi: float):
    tx, ty = curve.tangent(phi)
    return float(tx), float(ty)


def validate(curve: ConvexCurve, grid_size: int = VALIDATION_GRID,
             chi_min: float = CHI_MIN_DEFAULT) -> CurveValidation:
    """Grid check of r > 0 and chi > chi_min (strict convexity).

    chi = r^2 + 2 r'^2 - r r'' is the curvature numerator in polar form; it
    must stay strictly positive for everything downstream to make sense.
    """
    if grid_size < 256:
        raise ValueError("grid_size must be at least 256")
    phi = uniform_angles(grid_size)
    r, r1, r2 = curve.radius(phi)
    chi = r * r + 2.0 * r1 * r1 - r * r2
    i_r, i_chi = int(np.argmin(r)), int(np.argmin(chi))
    ok = bool(r[i_r] > 0.0 and np.isfinite(r).all() and chi[i_chi] > chi_min)
    msg = ""
    if not ok:
        if not (r[i_r] > 0.0 and np.isfinite(r).all()):
            msg = f"radial function not strictly positive: r({phi[i_r]:.6f}) = {r[i_r]:.6g}"
        else:
            msg = (f"curvature numerator below threshold: chi({phi[i_chi]:.6f}) = "
                   f"{chi[i_chi]:.6g} <= {chi_min:g}")
    return CurveValidation(ok=ok, min_r=float(r[i_r]), min_chi=float(chi[i_chi]),
                           phi_at_min_r=float(phi[i_r]), phi_at_min_chi=float(phi[i_chi]),
                           grid_size=grid_size, message=msg)


def require_valid(curve: ConvexCurve, grid_size: int = VALIDATION_GRID,
                  chi_min: float = CHI_MIN_DEFAULT) -> ConvexCurve:
    v = validate(curve, grid_size, chi_min)
    if not v.ok:
        bad_phi = v.phi_at_min_r if v.min_r <= 0 else v.phi_at_min_chi
        bad_val = v.min_r if v.min_r <= 0 else v.min_chi
        raise InvalidCurveError(v.message, phi=bad_phi, value=bad_val)
    return curve


def radial_about(curve: ConvexCurve, point, thetas, tol: float = 1e-12):
    """Distance from an interior point to the boundary along each ray angle.

    Solves cross(gamma(phi) - x, e_theta) = 0 for the boundary parameter of
    each ray by monotone inversion of the angle map plus Newton polish.
    Returns (rho, phi) arrays.
    """
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    px, py = float(point[0]), float(point[1])
    _check_interior(curve, px, py)

    dense = uniform_angles(4096)
    gx, gy = curve.point(dense)
    ang = np.unwrap(np.arctan2(gy - py, gx - px))
    # periodic extension so every target angle falls inside the table
    ang_ext = np.concatenate([ang, [ang[0] + TWO_PI]])
    phi_ext = np.concatenate([dense, [TWO_PI]])
    targets = ang[0] + np.mod(thetas - ang[0], TWO_PI)
    phi = np.interp(targets, ang_ext, phi_ext)
    ux, uy = np.cos(thetas), np.sin(thetas)
    for _ in range(6):
        gx, gy = curve.point(phi)
        tx, ty = curve.tangent(phi)
        f = (gx - px) * uy - (gy - py) * ux
        fp = tx * uy - ty * ux
        phi = phi - f / fp
    gx, gy = curve.point(phi)
    rho = np.hypot(gx - px, gy - py)
    resid = np.abs((gx - px) * uy - (gy - py) * ux) / rho
    if resid.max() > tol * 10:
        raise ConvergenceError("ray/boundary intersection did not converge",
                               residual=float(resid.max()))
    return rho, phi


def _check_interior(curve: ConvexCurve, px: float, py: float):
    dx, dy = px - curve.origin[0], py - curve.origin[1]
    rho = math.hypot(dx, dy)
    if rho == 0.0:
        return
    r, _, _ = curve.radius_scalar(math.atan2(dy, dx))
    if rho >= r * (1.0 - 1e-12):
        raise NotInteriorError(
            f"point ({px:.6g}, {py:.6g}) is not strictly inside the curve")


def reorigin(curve: ConvexCurve, new_origin, grid_size: int = 2048) -> ConvexCurve:
    """Re-express the curve with its radial function taken about new_origin.

    Per-angle ray/boundary intersection followed by an FFT refit on
    grid_size uniform angles.  The refit is checked against direct ray
    intersections on a doubled grid; the residual must stay below 1e-8.

    Raises NotInteriorError when new_origin is not strictly inside, and
    ConvergenceError when the refit residual is too large (raise grid_size).
    """
    if isinstance(new_origin, PlanePoint):
        new_origin = (new_origin.x, new_origin.y)
    nx, ny = float(new_origin[0]), float(new_origin[1])
    thetas = uniform_angles(grid_size)
    rho, _ = radial_about(curve, (nx, ny), thetas)

    spec = np.fft.rfft(rho) / grid_size
    a0 = float(spec[0].real)
    cos_c = 2.0 * spec[1:].real
    sin_c = -2.0 * spec[1:].imag
    if grid_size % 2 == 0:
        cos_c[-1] *= 0.5        # the Nyquist bin is not doubled
        sin_c[-1] = 0.0
    small = (np.abs(cos_c) <= FOURIER_CUTOFF) & (np.abs(sin_c) <= FOURIER_CUTOFF)
    cos_c[np.abs(cos_c) <= FOURIER_CUTOFF] = 0.0
    sin_c[np.abs(sin_c) <= FOURIER_CUTOFF] = 0.0
    keep = 0 if small.all() else int(np.max(np.nonzero(~small)[0])) + 1
    out = fourier(a0, cos=cos_c[:keep], sin=sin_c[:keep], origin=(nx, ny))

    dbl = uniform_angles(2 * grid_size)
    rho_direct, _ = radial_about(curve, (nx, ny), dbl)
    r_fit, _, _ = out.radius(dbl)
    residual = float(np.abs(r_fit - rho_direct).max())
    if residual > REFIT_RESIDUAL_MAX:
        raise ConvergenceError(
            f"reorigin refit residual {residual:.3g} exceeds {REFIT_RESIDUAL_MAX:g}; "
            "raise grid_size or the coefficient cutoff", residual=residual)
    return require_valid(out)


# -- curve specification files -----------------------------------------------

def curve_from_dict(spec: dict) -> ConvexCurve:
    kind = spec.get("kind")
    origin = tuple(spec.get("origin", (0.0, 0.0)))
    if len(origin) != 2:
        raise InvalidCurveError("origin must be [x, y]")
    if kind == CIRCLE:
        return circle(spec["radius"], origin)
    if kind == ELLIPSE:
        return ellipse(spec["a"], spec["b"], origin)
    if kind == FOURIER:
        return fourier(spec.get("a0", 0.0), spec.get("cos", ()), spec.get("sin", ()), origin)
    raise InvalidCurveError(f"unknown curve kind: {kind!r}")


def load_curve(path) -> ConvexCurve:
    """Load and validate a curve specification JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidCurveError(f"curve file is not valid JSON: {exc}") from exc
    try:
        curve = curve_from_dict(spec)
    except (KeyError, TypeError) as exc:
        raise InvalidCurveError(f"bad curve specification: {exc}") from exc
    return require_valid(curve)


def curve_to_dict(curve: ConvexCurve) -> dict:
    out = {"kind": curve.kind}
    if curve.kind == CIRCLE:
        out["radius"] = curve.radius_value
    elif curve.kind == ELLIPSE:
        out["a"], out["b"] = curve.axis_a, curve.axis_b
    else:
        out["a0"] = curve.a0
        out["cos"] = list(curve.cos_coeffs)
        out["sin"] = list(curve.sin_coeffs)
    if curve.origin != (0.0, 0.0):
        out["origin"] = list(curve.origin)
    return out


def area_centroid(curve: ConvexCurve, grid: int = 2048):
    """Centroid of the enclosed region (simplex-descent starting point)."""
    phi = uniform_angles(grid)
    r, _, _ = curve.radius(phi)
    area = 0.5 * periodic_trapezoid(r * r)
    cx = periodic_trapezoid(r ** 3 * np.cos(phi)) / 3.0
    cy = periodic_trapezoid(r ** 3 * np.sin(phi)) / 3.0
    return (curve.origin[0] + cx / area, curve.origin[1] + cy / area)
