"""Discrete Jacobi fields, conjugate points, Hessian minimality, Hopf field.

Along an orbit with configuration angles {q_n}, a Jacobi field {dq_n} solves
    b_{n-1} dq_{n-1} + a_n dq_n + b_n dq_{n+1} = 0,
with a_n = S22(q_{n-1}, q_n) + S11(q_n, q_{n+1}) and b_n = S12(q_n, q_{n+1}).
A radial tangent vector has dq = 0; its image returns to radial after n steps
exactly when the field started as (dp, dq) = (1, 0) vanishes again at index n
(a conjugate point).  Absence of conjugate points in a window is equivalent
to positive definiteness of the tridiagonal Hessian of the action sum over
that window, which is what local minimality means.

Orbits are stepped in the chord chart (phi, t), where every coefficient is a
closed form in the curve data at the chord (no chart inversion needed).
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .curves import ConvexCurve
from .dynamics import PhasePoint, chord_of, chord_step_batch, chord_step_scalar
from .errors import ConvergenceError
from .generating import _sderiv_arrays
from .quadrature import uniform_angles

HOPF_START = 8
HOPF_CAP = 2 ** 14
HOPF_TOL = 1e-4
ZERO_TOL = 1e-12          # |dq| below this times the running max counts as a zero
RENORM_LIMIT = 1e100
SCAN_CHUNK = 256          # fixed chunk so results are worker-count independent


def sderiv_scalar(curve: ConvexCurve, phi: float, t: float):
    """(S11, S22, S12, r0sq, r1sq, chi) at one chord, plain-float fast path."""
    from .generating import S12_FAULT_SIGN
    r, rp, rpp = curve.radius_scalar(phi)
    chi = r * r + 2.0 * rp * rp - r * rpp
    r2 = r * r
    r0sq = (r - t * rp) ** 2 + t * t * r2
    r1sq = (r + t * rp) ** 2 + t * t * r2
    a = chi * t * t + r2
    den = 2.0 * r2 * a
    common = chi * t * (t * t - 1.0) * r2 + 2.0 * t * r2 * r2 + t * (chi * t * t + 2.0 * r2) * rp * rp
    odd = 2.0 * r2 * r * rp
    return (r0sq * (common - odd) / den,
            r1sq * (common + odd) / den,
            S12_FAULT_SIGN * (-chi * t * r0sq * r1sq / den),
            r0sq, r1sq, chi)


def _gap(curve: ConvexCurve, phi: float, t: float) -> float:
    """Angle advance q_{n+1} - q_n of one chord; always in (0, pi)."""
    r, rp, _ = curve.radius_scalar(phi)
    return math.atan2(t * r, r - t * rp) + math.atan2(t * r, r + t * rp)


# -- orbit windows -------------------------------------------------------------

@dataclass(frozen=True)
class OrbitWindow:
    """Coefficients along an orbit segment for window nodes M..N.

    ``angles`` covers q_{M-1}..q_{N+1} (lifted to the real line).
    ``a_coeffs[i]`` is a_{M+i} for the N-M+1 window nodes;
    ``b_coeffs[j]``, ``s11[j]``, ``s22[j]`` belong to chord_{M-1+j} for the
    N-M+2 chords of the segment, chord_k joining nodes k and k+1.
    """

    angles: np.ndarray
    a_coeffs: np.ndarray
    b_coeffs: np.ndarray
    s11: np.ndarray
    s22: np.ndarray
    chords_phi: np.ndarray
    chords_t: np.ndarray
    node_start: int

    def __len__(self):
        return self.a_coeffs.size


@dataclass(frozen=True)
class JacobiState:
    dq: np.ndarray            # over window nodes M..N
    dp: np.ndarray
    dq_beyond: float          # dq at node N+1 (used by the first dp form at N)
    form_residual: float      # worst relative disagreement of the two dp forms


@dataclass(frozen=True)
class MinimalityVerdict:
    positive_definite: bool
    first_nonpositive_minor: Optional[int]
    pivots: np.ndarray


@dataclass(frozen=True)
class OmegaSample:
    """Hopf-field slope dp0/dq0 at a phase point, with its window diagnostics."""

    omega: Optional[float]
    window: int
    converged: bool
    minimizing: bool
    bound_low: Optional[float] = None
    bound_high: Optional[float] = None
    relation_fwd_residual: Optional[float] = None
    relation_here_residual: Optional[float] = None
    message: str = ""


def build_window(curve: ConvexCurve, seed: PhasePoint, m_back: int, n_fwd: int) -> OrbitWindow:
    """Iterate the map both ways from the seed and fill the Jacobi coefficients.

    Window nodes are M = -m_back .. N = n_fwd; the orbit is extended one
    chord past each end so every a_n is defined.
    """
    if m_back < 0 or n_fwd < 0:
        raise ValueError("window extents must be non-negative")
    phi0, t0 = chord_of(curve, seed)
    fwd = [(phi0, t0)]
    for _ in range(n_fwd):
        fwd.append(chord_step_scalar(curve, *fwd[-1], 1))
    back = []
    for _ in range(m_back + 1):
        prev = back[-1] if back else fwd[0]
        back.append(chord_step_scalar(curve, *prev, -1))
    chords = list(reversed(back)) + fwd          # chord_k for k = M-1 .. N
    cphi = np.array([c[0] for c in chords])
    ct = np.array([c[1] for c in chords])
    d = _sderiv_arrays(curve, cphi, ct)

    q = np.empty(len(chords) + 1)
    q[0] = seed.phi - sum(_gap(curve, *c) for c in chords[:m_back + 1])
    for i, c in enumerate(chords):
        q[i + 1] = q[i] + _gap(curve, *c)

    return OrbitWindow(angles=q,
                       a_coeffs=d["S22"][:-1] + d["S11"][1:],
                       b_coeffs=d["S12"], s11=d["S11"], s22=d["S22"],
                       chords_phi=cphi, chords_t=ct, node_start=-m_back)


def propagate_jacobi(window: OrbitWindow, dq0: float, dq1: float) -> JacobiState:
    """Run the three-term recurrence from the first two window values.

    dp is filled from the first form dp_n = -S11 dq_n - S12 dq_{n+1} (data at
    chord n) and cross-checked against the second form
    dp_n = S22 dq_n + S12 dq_{n-1} (data at chord n-1) on the overlap.
    """
    L = len(window)
    if L < 2:
        raise ValueError("propagation needs a window of at least two nodes")
    a, b = window.a_coeffs, window.b_coeffs
    dq = np.empty(L)
    dq[0], dq[1] = dq0, dq1
    for i in range(1, L - 1):
        dq[i + 1] = -(a[i] * dq[i] + b[i] * dq[i - 1]) / b[i + 1]
    dq_beyond = -(a[L - 1] * dq[L - 1] + b[L - 1] * dq[L - 2]) / b[L]

    dq_ext = np.append(dq, dq_beyond)
    dp = -window.s11[1:] * dq - window.b_coeffs[1:] * dq_ext[1:]
    dp_alt = window.s22[:-1][1:] * dq[1:] + window.b_coeffs[1:-1] * dq[:-1]
    scale = max(float(np.abs(dp).max()), 1e-300)
    form_residual = float(np.abs(dp[1:] - dp_alt).max()) / scale
    return JacobiState(dq=dq, dp=dp, dq_beyond=float(dq_beyond),
                       form_residual=form_residual)


def hessian_minimality(window: OrbitWindow) -> MinimalityVerdict:
    """LDL^T positivity test of the window's tridiagonal Hessian.

    Diagonal a_n over the window nodes, off-diagonal b_n between consecutive
    nodes.  The k-th pivot is the ratio of consecutive leading principal
    minors, so the first non-positive pivot indexes the first failing minor.
    """
    a = window.a_coeffs
    off = window.b_coeffs[1:len(window)]
    pivots = np.empty(a.size)
    pivots[0] = a[0]
    for i in range(1, a.size):
        if pivots[i - 1] <= 0.0:
            pivots[i:] = np.nan
            break
        pivots[i] = a[i] - off[i - 1] ** 2 / pivots[i - 1]
    with np.errstate(invalid="ignore"):
        bad = np.nonzero(~(pivots > 0.0))[0]
    if bad.size:
        return MinimalityVerdict(False, int(bad[0]) + 1, pivots)
    return MinimalityVerdict(True, None, pivots)


# -- conjugate points ----------------------------------------------------------

def radial_conjugate_scan(curve: ConvexCurve, seed: PhasePoint, n_max: int,
                          zero_tol: float = ZERO_TOL) -> Optional[int]:
    """First n with the radial-start Jacobi field back at radial, else None.

    Starts (dp, dq) = (1, 0) at the seed, so dq_1 = -1/b_0 > 0, and watches
    for the first sign change or vanishing of dq_n, n <= n_max.
    """
    phi_m, t = chord_of(curve, seed)
    s11, s22, s12 = sderiv_scalar(curve, phi_m, t)[:3]
    b_prev, s22_prev = s12, s22
    dq_prev, dq = 0.0, -1.0 / s12
    runmax = abs(dq)
    for n in range(1, n_max):
        phi_m, t = chord_step_scalar(curve, phi_m, t, 1)
        s11, s22, s12 = sderiv_scalar(curve, phi_m, t)[:3]
        dq_next = -((s22_prev + s11) * dq + b_prev * dq_prev) / s12
        if dq_next < 0.0 or abs(dq_next) <= zero_tol * runmax:
            return n + 1
        dq_prev, dq = dq, dq_next
        b_prev, s22_prev = s12, s22
        runmax = max(runmax, abs(dq))
        if runmax > RENORM_LIMIT:
            dq_prev /= runmax
            dq /= runmax
            runmax = 1.0
    return None


@dataclass(frozen=True)
class ConjugateScanRow:
    seed_phi: float
    seed_t: float
    n_conjugate: Optional[int]


@dataclass(frozen=True)
class ConjugateScanResult:
    rows: list
    phi_count: int
    t_count: int
    t_max: float
    n_max: int
    complete: bool

    @property
    def found(self):
        return [r for r in self.rows if r.n_conjugate is not None]


def _scan_batch(curve: ConvexCurve, seed_phi: np.ndarray, seed_t: np.ndarray,
                n_max: int, zero_tol: float, stop_at_first: bool) -> np.ndarray:
    """Vectorized radial conjugate scan; -1 marks seeds with no sign change."""
    d = _sderiv_arrays(curve, seed_phi, seed_t)
    b_prev, s22_prev = d["S12"], d["S22"]
    dq_prev = np.zeros_like(seed_phi)
    dq = -1.0 / d["S12"]
    runmax = np.abs(dq)
    found = np.full(seed_phi.shape, -1, dtype=np.int64)
    phi_m, t = seed_phi.copy(), seed_t.copy()
    for n in range(1, n_max):
        phi_m, t = chord_step_batch(curve, phi_m, t, 1)
        d = _sderiv_arrays(curve, phi_m, t)
        dq_next = -((s22_prev + d["S11"]) * dq + b_prev * dq_prev) / d["S12"]
        hit = (found < 0) & ((dq_next < 0.0) | (np.abs(dq_next) <= zero_tol * runmax))
        found[hit] = n + 1
        dq_prev, dq = dq, dq_next
        b_prev, s22_prev = d["S12"], d["S22"]
        runmax = np.maximum(runmax, np.abs(dq))
        big = runmax > RENORM_LIMIT
        if big.any():
            dq_prev = np.where(big, dq_prev / runmax, dq_prev)
            dq = np.where(big, dq / runmax, dq)
            runmax = np.where(big, 1.0, runmax)
        done = found >= 0
        if done.all() or (stop_at_first and done.any()):
            break
    return found


def _scan_chunk_worker(args):
    curve, seed_phi, seed_t, n_max, zero_tol = args
    return _scan_batch(curve, seed_phi, seed_t, n_max, zero_tol, False)


def conjugate_grid_scan(curve: ConvexCurve, phi_count: int = 40, t_count: int = 40,
                        t_max: float = 3.0, n_max: int = 10_000,
                        zero_tol: float = ZERO_TOL, workers: int = 1,
                        stop_at_first: bool = False) -> ConjugateScanResult:
    """Radial conjugate scan over a (phi, t) grid of seed chords.

    Seeds are the tails M0 of the chords (phi_i, t_j), phi uniform on
    [0, 2pi), t_j = t_max (j+1)/t_count.  The grid is processed in fixed
    256-seed chunks so the per-seed arithmetic is identical for any worker
    count; with stop_at_first the chunks run serially and the scan stops at
    the first chunk containing a hit.
    """
    phis = uniform_angles(phi_count)
    ts = t_max * np.arange(1, t_count + 1) / t_count
    seed_phi = np.repeat(phis, t_count)
    seed_t = np.tile(ts, phi_count)
    n_seeds = seed_phi.size
    chunks = [(seed_phi[i:i + SCAN_CHUNK], seed_t[i:i + SCAN_CHUNK])
              for i in range(0, n_seeds, SCAN_CHUNK)]

    results = []
    if stop_at_first:
        # serial, grid order; any hit stops the scan early, so rows past the
        # hit (None) only mean "not fully scanned" and complete goes False
        complete = True
        for cp, ctt in chunks:
            found = _scan_batch(curve, cp, ctt, n_max, zero_tol, True)
            results.append(found)
            if (found >= 0).any():
                complete = False
                break
        while len(results) < len(chunks):
            results.append(np.full(chunks[len(results)][0].shape, -1, dtype=np.int64))
    elif workers > 1:
        complete = True
        jobs = [(curve, cp, ctt, n_max, zero_tol) for cp, ctt in chunks]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_scan_chunk_worker, jobs))
    else:
        complete = True
        results = [_scan_batch(curve, cp, ctt, n_max, zero_tol, False)
                   for cp, ctt in chunks]

    found = np.concatenate(results) if results else np.empty(0, dtype=np.int64)
    rows = [ConjugateScanRow(float(seed_phi[i]), float(seed_t[i]),
                             int(found[i]) if found[i] >= 0 else None)
            for i in range(n_seeds)]
    return ConjugateScanResult(rows=rows, phi_count=phi_count, t_count=t_count,
                               t_max=t_max, n_max=n_max, complete=complete)


# -- Hopf construction ----------------------------------------------------------

class _ChordLine:
    """Lazy doubly-infinite chord sequence with cached closed-form data."""

    def __init__(self, curve: ConvexCurve, seed: PhasePoint):
        self.curve = curve
        phi0, t0 = chord_of(curve, seed)
        self._fwd = [(phi0, t0)]      # chords 0, 1, 2, ...
        self._back = []               # chords -1, -2, ...
        self._data = {0: sderiv_scalar(curve, phi0, t0)}

    def chord(self, k: int):
        while k >= len(self._fwd):
            self._fwd.append(chord_step_scalar(self.curve, *self._fwd[-1], 1))
        while k < -len(self._back):
            prev = self._back[-1] if self._back else self._fwd[0]
            self._back.append(chord_step_scalar(self.curve, *prev, -1))
        return self._fwd[k] if k >= 0 else self._back[-k - 1]

    def data(self, k: int):
        if k not in self._data:
            self._data[k] = sderiv_scalar(self.curve, *self.chord(k))
        return self._data[k]

    def a_of(self, n: int) -> float:
        return self.data(n - 1)[1] + self.data(n)[0]

    def b_of(self, n: int) -> float:
        return self.data(n)[2]


def _window_field(line: _ChordLine, n_win: int):
    """Solve dq_{-N} = 0, dq_{-N+1} = 1 forward to node 2.

    Returns (values at nodes -1..2, first node with a non-positive value or
    None).  Renormalizes deep in the window to dodge overflow; ratios are all
    that matter.
    """
    u_prev, u = 0.0, 1.0
    stored = {}
    for n in range(-n_win + 1, 2):
        if u <= 0.0:
            return None, n
        if n >= -1:
            stored[n] = u
        u_next = -(line.a_of(n) * u + line.b_of(n - 1) * u_prev) / line.b_of(n)
        u_prev, u = u, u_next
        if n < -2 and abs(u) > RENORM_LIMIT:
            scale = abs(u)
            u_prev /= scale
            u /= scale
    stored[2] = u
    return stored, None


def hopf_omega(curve: ConvexCurve, seed: PhasePoint, tol: float = HOPF_TOL,
               n_cap: int = HOPF_CAP) -> OmegaSample:
    """Finite-window Hopf construction of omega = dp0/dq0 at the seed.

    Window N solves the boundary problem dq_{-N} = 0, dq_0 = 1; N doubles
    from 8 until |omega_2N - omega_N| < tol * scale, positivity of the window
    field fails (reported as a finding, not an error), or N exceeds n_cap
    (ConvergenceError).  On success the two evolution relations are evaluated
    at the seed from the propagated field:

        omega(T x) = S22(q0,q1) + S12(q0,q1)/dq1       (first form at node 1)
        omega(x)   = -S11(q0,q1) - S12(q0,q1) * dq1    (second form at node 0)

    and their residuals are returned; both sit at round-off when the
    closed-form coefficients of adjacent chords are mutually consistent.
    """
    if n_cap < HOPF_START:
        raise ValueError(f"n_cap must be at least {HOPF_START}")
    line = _ChordLine(curve, seed)
    s11_0, s22_0, s12_0 = line.data(0)[:3]
    s22_prev = line.data(-1)[1]
    scale = max(1.0, abs(s11_0), abs(s22_prev))

    omega_prev = None
    n_win = HOPF_START
    while n_win <= n_cap:
        stored, bad_node = _window_field(line, n_win)
        if stored is None:
            return OmegaSample(
                omega=None, window=n_win, converged=False, minimizing=False,
                message=("not locally minimizing along the computed window: "
                         f"field vanished at node {bad_node} of window {n_win}"))
        omega = (-s11_0 * stored[0] - s12_0 * stored[1]) / stored[0]
        if omega_prev is not None and abs(omega - omega_prev) < tol * scale:
            dq1 = stored[1] / stored[0]
            s11_1, _, s12_1 = line.data(1)[:3]
            omega_fwd = (-s11_1 * stored[1] - s12_1 * stored[2]) / stored[1]
            rel_fwd = abs(omega_fwd - (s22_0 + s12_0 / dq1))
            omega_here = s22_prev + line.data(-1)[2] * stored[-1] / stored[0]
            rel_here = abs(omega_here - (-s11_0 - s12_0 * dq1))
            return OmegaSample(
                omega=float(omega), window=n_win, converged=True, minimizing=True,
                bound_low=float(-s11_0), bound_high=float(s22_prev),
                relation_fwd_residual=float(rel_fwd),
                relation_here_residual=float(rel_here))
        omega_prev = omega
        n_win *= 2
    raise ConvergenceError(
        f"window doubling did not converge by N={n_cap}: last iterates "
        f"{omega_prev:.17g}, {omega:.17g}", residual=abs(omega - omega_prev))


def jacobi_push(s11: float, s12: float, s22: float, dp: float, dq: float):
    """Tangent-map update ((dp, dq) at x) -> ((dp, dq) at T x) from the
    generating relations; the oracle counterpart is the finite-difference
    differential of the geometric map."""
    dq1 = (-dp - s11 * dq) / s12
    dp1 = s12 * dq + s22 * dq1
    return dp1, dq1
