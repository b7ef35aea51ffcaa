"""Geometry of the conical environment.

The environment is the closed unit-radius circular sector of half-angle
``theta`` centered at the apex (the origin).  Intruders live on fixed rays and
move radially inward; the vehicle moves anywhere inside the sector at unit
speed, so Euclidean path lengths double as travel times.

Two non-obvious conventions:

* The apex is part of the environment.  Shortest in-sector paths between two
  points are either the straight chord (always, for ``theta <= pi/2``) or the
  two-leg detour through the apex when the chord would leave the sector.
* ``theta == pi`` is treated as a disk slit along the ray at angle +-pi: the
  slit is impassable for chords, so poses at angle +pi and -pi are distinct
  even though they share Cartesian coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import GeometryDomainError, ParameterError

ANGLE_TOL = 1e-12
TIME_TOL = 1e-12
CAPTURE_TOL = 1e-9


@dataclass(frozen=True)
class ProblemParams:
    """The four numbers that define a problem instance.

    theta: sector half-angle in radians, in (0, pi].
    rho:   perimeter radius, in (0, 1).
    v:     intruder speed as a fraction of vehicle speed, in (0, 1).
    r:     capture radius, in (0, rho).
    """

    theta: float
    rho: float
    v: float
    r: float

    def __post_init__(self):
        if not (0.0 < self.theta <= math.pi):
            raise ParameterError(f"theta must be in (0, pi], got {self.theta}")
        if not (0.0 < self.rho < 1.0):
            raise ParameterError(f"rho must be in (0, 1), got {self.rho}")
        if not (0.0 < self.v < 1.0):
            raise ParameterError(f"v must be in (0, 1), got {self.v}")
        if not (0.0 < self.r < self.rho):
            raise ParameterError(
                f"r must be in (0, rho), got r={self.r} with rho={self.rho}"
            )

    @property
    def transit_time(self) -> float:
        """Time an intruder takes from the rim (radius 1) to the perimeter."""
        return (1.0 - self.rho) / self.v


@dataclass(frozen=True)
class PolarPoint:
    """A point in polar coordinates (radius, angle in radians).

    The angle is stored as given, never wrapped: at theta == pi the sign of an
    angle of magnitude pi says which lip of the slit the point lies on.
    """

    radius: float
    angle: float

    def to_xy(self) -> tuple[float, float]:
        return (self.radius * math.cos(self.angle), self.radius * math.sin(self.angle))

    @staticmethod
    def from_xy(x: float, y: float) -> "PolarPoint":
        return PolarPoint(math.hypot(x, y), math.atan2(y, x))


@dataclass(frozen=True)
class GuardPose:
    """A static vehicle pose covering the whole perimeter arc.

    ``min_radius`` is the smallest capture radius for which the capture circle
    centered at ``position`` contains every perimeter point.
    """

    position: PolarPoint
    min_radius: float


def to_cartesian(p: PolarPoint) -> tuple[float, float]:
    """Cartesian coordinates of a polar point."""
    return p.to_xy()


def cone_contains(p: PolarPoint, theta: float) -> bool:
    """Whether ``p`` lies in the closed sector of half-angle ``theta``.

    The radius bound is exact (no tolerance); the angle bound uses the
    package-wide angle tolerance.
    """
    if p.radius < 0.0 or p.radius > 1.0:
        return False
    return abs(p.angle) <= theta + ANGLE_TOL


def _slit_lip(p: PolarPoint) -> int:
    """Which lip of the theta=pi slit a point is on: +1, -1, or 0 (not on it)."""
    if p.radius > 0.0 and abs(abs(p.angle) - math.pi) <= ANGLE_TOL:
        return 1 if p.angle > 0 else -1
    return 0


def _chord_crosses_slit(
    p_xy: tuple[float, float],
    q_xy: tuple[float, float],
    p_lip: int,
    q_lip: int,
) -> bool:
    """Whether the segment p->q crosses the slit along the negative x axis.

    Lips are +-1 for endpoints sitting exactly on the slit (0 otherwise, also
    used for Cartesian-derived points whose lip is unknown and therefore
    treated as reachable from either side).
    """
    px, py = p_xy
    qx, qy = q_xy
    if p_lip and q_lip:
        return p_lip != q_lip
    if p_lip:
        # Leaving the slit: allowed only into the closed half-plane of the lip.
        return (p_lip > 0 and qy < 0.0) or (p_lip < 0 and qy > 0.0)
    if q_lip:
        return (q_lip > 0 and py < 0.0) or (q_lip < 0 and py > 0.0)
    if py * qy < 0.0:
        t = py / (py - qy)
        x_cross = px + t * (qx - px)
        return x_cross < 0.0
    return False


def _chord_enters_wedge(
    p_xy: tuple[float, float], q_xy: tuple[float, float], theta: float
) -> bool:
    """Whether the segment p->q enters the open forbidden wedge {|angle|>theta}.

    Only meaningful for pi/2 < theta < pi, where the wedge is the intersection
    of two open half-planes bounded by the sector's edge rays.  Touching the
    wedge boundary (including the apex) does not count as entering.
    """
    ct, st = math.cos(theta), math.sin(theta)
    px, py = p_xy
    qx, qy = q_xy
    # cross(d_plus, s(t)) > 0 and cross(d_minus, s(t)) < 0 for some t in [0,1],
    # with d_plus = (ct, st), d_minus = (ct, -st).
    a0 = ct * py - st * px
    a1 = ct * qy - st * qx
    b0 = ct * py + st * px
    b1 = ct * qy + st * qx

    def _interval(c0: float, c1: float, want_positive: bool) -> tuple[float, float]:
        # Open interval of t where the affine value c0 + t*(c1-c0) has the
        # wanted sign; (1.0, 0.0) encodes empty.
        d = c1 - c0
        if abs(d) < 1e-300:
            full = (c0 > 0.0) if want_positive else (c0 < 0.0)
            return (0.0, 1.0) if full else (1.0, 0.0)
        t_zero = -c0 / d
        rising = d > 0.0
        if want_positive:
            return (t_zero, math.inf) if rising else (-math.inf, t_zero)
        return (-math.inf, t_zero) if rising else (t_zero, math.inf)

    lo1, hi1 = _interval(a0, a1, want_positive=True)
    lo2, hi2 = _interval(b0, b1, want_positive=False)
    lo = max(lo1, lo2, 0.0)
    hi = min(hi1, hi2, 1.0)
    return hi - lo > ANGLE_TOL


def chord_in_sector(p: PolarPoint, q: PolarPoint, theta: float) -> bool:
    """Whether the straight segment from p to q stays inside the closed sector."""
    if theta <= math.pi / 2 + ANGLE_TOL:
        return True
    p_xy, q_xy = p.to_xy(), q.to_xy()
    if theta >= math.pi - ANGLE_TOL:
        return not _chord_crosses_slit(p_xy, q_xy, _slit_lip(p), _slit_lip(q))
    return not _chord_enters_wedge(p_xy, q_xy, theta)


def cone_distance(p: PolarPoint, q: PolarPoint, theta: float) -> float:
    """Length of the shortest path from p to q inside the closed sector.

    Equals the straight chord whenever the chord stays inside (always true for
    theta <= pi/2), otherwise the detour through the apex, |p| + |q|.
    """
    for point in (p, q):
        if not cone_contains(point, theta):
            raise GeometryDomainError(f"point {point} outside environment E({theta})")
    px, py = p.to_xy()
    qx, qy = q.to_xy()
    chord = math.hypot(px - qx, py - qy)
    if chord <= TIME_TOL and _slit_lip(p) == _slit_lip(q):
        return 0.0
    if chord_in_sector(p, q, theta):
        return chord
    return p.radius + q.radius


def min_guard_radius(rho: float, theta: float) -> GuardPose:
    """Pose on the bisector whose capture circle covers the whole perimeter arc.

    Only defined for theta < pi/4: at pi/4 the required radius reaches rho
    itself, outside the admissible capture-radius range.
    """
    if not (0.0 < rho < 1.0):
        raise ParameterError(f"rho must be in (0, 1), got {rho}")
    if not (0.0 < theta < math.pi / 4):
        raise GeometryDomainError(
            f"guard pose requires theta in (0, pi/4), got {theta}"
        )
    return GuardPose(
        position=PolarPoint(rho / math.cos(theta), 0.0),
        min_radius=rho * math.tan(theta),
    )


@dataclass(frozen=True)
class TraverseResult:
    """Minimum time to move between poses covering the two perimeter corners."""

    time: float
    endpoints: tuple[PolarPoint, PolarPoint]
    degenerate: bool = False


def min_traverse_time(params: ProblemParams) -> TraverseResult:
    """Fastest move between a pose covering (rho, theta) and one covering (rho, -theta).

    For theta < pi/2 the optimum runs along the segment joining the two corner
    points, entering each capture circle head-on; for theta >= pi/2 that
    segment leaves the sector and the optimum routes through the apex.  When
    the two capture circles already overlap (rho*sin(theta) <= r) there is a
    single pose covering both corners and the traverse time is zero.
    """
    theta, rho, r = params.theta, params.rho, params.r
    if theta < math.pi / 2:
        half = rho * math.sin(theta) - r
        if half <= 0.0:
            mid = PolarPoint(rho * math.cos(theta), 0.0)
            return TraverseResult(0.0, (mid, mid), degenerate=True)
        x_c = rho * math.cos(theta)
        alpha = math.atan2(half, x_c)
        radius = math.hypot(x_c, half)
        return TraverseResult(
            2.0 * half,
            (PolarPoint(radius, alpha), PolarPoint(radius, -alpha)),
        )
    return TraverseResult(
        2.0 * (rho - r),
        (PolarPoint(rho - r, theta), PolarPoint(rho - r, -theta)),
    )


def _reach_cost(
    pose_xy: tuple[float, float],
    pose_radius: float,
    pose_lip: int,
    c_xy: tuple[float, float],
    c_radius: float,
    r: float,
    theta: float,
) -> float:
    """Minimum in-sector travel from a pose to any point within Euclidean r of c.

    Candidates: stop r short along the straight chord to c (when that chord
    stays in the sector), or route through the apex and stop r short on the
    radial leg.  The apex route is always feasible, so the result is an exact
    travel cost except in exotic slit configurations where a blocked chord
    could be replaced by a shorter chord to the far side of the capture disc;
    those are deliberately not searched (the returned cost is still achievable).
    """
    px, py = pose_xy
    cx, cy = c_xy
    d = math.hypot(px - cx, py - cy)
    if d <= r:
        return 0.0
    best = pose_radius + max(0.0, c_radius - r)
    if theta <= math.pi / 2 + ANGLE_TOL:
        return min(best, d - r)
    # Stop point r short of c along the chord.
    f = r / d
    z_xy = (cx + (px - cx) * f, cy + (py - cy) * f)
    if theta >= math.pi - ANGLE_TOL:
        blocked = _chord_crosses_slit(pose_xy, z_xy, pose_lip, 0)
    else:
        blocked = _chord_enters_wedge(pose_xy, z_xy, theta)
    if not blocked:
        best = min(best, d - r)
    return best


def reach_cost(pose: PolarPoint, target: PolarPoint, r: float, theta: float) -> float:
    """Public wrapper of the pose-to-capture-disc travel cost."""
    return _reach_cost(
        pose.to_xy(), pose.radius, _slit_lip(pose), target.to_xy(), target.radius, r, theta
    )


def intercept_time(
    vehicle: PolarPoint,
    t0: float,
    arrival: tuple[float, float],
    params: ProblemParams,
) -> float | None:
    """Earliest time a unit-speed vehicle leaving ``vehicle`` at ``t0`` can have
    the intruder from ``arrival`` = (time, angle) within capture distance.

    The intruder sits at radius 1 - v*(t - arrival_time) on its fixed ray and
    is only available while that radius stays at or above rho (capture exactly
    at the perimeter counts).  Returns None when the intruder reaches the
    perimeter first.
    """
    t_arr, alpha = arrival
    theta, rho, v, r = params.theta, params.rho, params.v, params.r
    lower = max(t0, t_arr)
    breach = t_arr + params.transit_time
    if lower > breach + CAPTURE_TOL:
        return None

    e = (math.cos(alpha), math.sin(alpha))
    pose_xy = vehicle.to_xy()
    pose_lip = _slit_lip(vehicle)

    def center(t: float) -> tuple[float, float, float]:
        y = 1.0 - v * (t - t_arr)
        return (y * e[0], y * e[1], y)

    def slack(t: float) -> float:
        cx, cy, y = center(t)
        return _reach_cost(pose_xy, vehicle.radius, pose_lip, (cx, cy), y, r, theta) - (
            t - t0
        )

    if slack(lower) <= CAPTURE_TOL:
        return lower

    # Fast path: straight pursuit solves |pose - c(t)| = r + (t - t0), a
    # quadratic in t, valid when the closing chord stays inside the sector.
    ax = pose_xy[0] - e[0] * (1.0 + v * t_arr)
    ay = pose_xy[1] - e[1] * (1.0 + v * t_arr)
    bx, by = v * e[0], v * e[1]
    # |(ax,ay) + t*(bx,by)|^2 = (t - (t0 - r))^2
    qa = bx * bx + by * by - 1.0
    qb = 2.0 * (ax * bx + ay * by) - 2.0 * (r - t0)
    qc = ax * ax + ay * ay - (r - t0) ** 2
    root = None
    if abs(qa) > 1e-300:
        disc = qb * qb - 4.0 * qa * qc
        if disc >= 0.0:
            sq = math.sqrt(disc)
            candidates = sorted(((-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)))
            for t in candidates:
                if t >= lower - TIME_TOL and t - t0 + r >= 0.0:
                    root = max(t, lower)
                    break
    if root is not None and root <= breach + CAPTURE_TOL:
        if abs(slack(root)) <= CAPTURE_TOL:
            return min(root, breach)

    # Robust path: the slack function is piecewise smooth and decreasing at
    # rate at least 1 - v between jumps; scan for the first sign change and
    # bisect it down to the time tolerance.
    n = 64
    t_prev, s_prev = lower, slack(lower)
    for i in range(1, n + 1):
        t_next = lower + (breach - lower) * i / n
        s_next = slack(t_next)
        if s_next <= CAPTURE_TOL:
            lo, hi = t_prev, t_next
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if slack(mid) <= CAPTURE_TOL:
                    hi = mid
                else:
                    lo = mid
                if hi - lo <= TIME_TOL:
                    break
            return min(hi, breach)
        t_prev, s_prev = t_next, s_next
    return None
