"""Online policies for the vehicle, plus their feasibility-interval calculators.

Every policy here is an extreme-speed policy: it either holds or moves at the
maximum (unit) speed.  A policy instance drives a single run; construct a
fresh one (or rely on reset, which clears all run state) for each episode.

The three patrol policies and their admissible-parameter intervals:

* AngularSweep: open-loop sweep of the full angular range at a fixed radius,
  lossless whenever the sweep returns before any intruder can slip under it.
* CompareAndCapture: epoch-based; each epoch counts threatened intruders on
  the left and right half-sectors and sweeps toward the busier side.
* StayNearPerimeter: partitions the environment into sectors each fully
  covered from a resting point near the perimeter, and hops between resting
  points based on recent arrival counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .engine import MotionDirective, Observation
from .errors import ConfigurationError, RegimeError
from .geometry import (
    ANGLE_TOL,
    TIME_TOL,
    PolarPoint,
    ProblemParams,
    min_guard_radius,
)

_AT_POSE_TOL = 1e-9


def _sweep_rate(theta: float) -> int:
    """Angular-path length factor: 2 for the full circle, 4 for out-and-back."""
    return 2 if abs(theta - math.pi) <= ANGLE_TOL else 4


def sweep_speed_bound(params: ProblemParams) -> float:
    """Largest intruder speed for which the sweep radius interval is nonempty."""
    a = _sweep_rate(params.theta)
    theta, rho, r = params.theta, params.rho, params.r
    return min(2.0 * r / ((rho + r) * a * theta), (1.0 - rho) / ((1.0 - r) * a * theta))


def sweep_interval(params: ProblemParams) -> tuple[float, float]:
    """Admissible sweep radii [lo, hi]; raises RegimeError when empty."""
    a = _sweep_rate(params.theta)
    theta, rho, r, v = params.theta, params.rho, params.r, params.v
    hi = min(1.0 - r, rho + r)
    denom = 1.0 - a * theta * v
    lo = (rho - r) / denom if denom > 0.0 else math.inf
    if lo > hi + 1e-15:
        raise RegimeError(
            f"sweep radius interval empty: v={v} exceeds bound {sweep_speed_bound(params):.6g}"
        )
    return (lo, hi)


def concac_speed_bound(params: ProblemParams) -> float:
    theta, rho, r = params.theta, params.rho, params.r
    return min(
        r / (theta * (rho + r)), (1.0 - rho) / (theta * (2.0 - 3.0 * r + rho))
    )


def concac_interval(params: ProblemParams) -> tuple[float, float]:
    """Admissible compare-and-capture radii [lo, hi]; raises RegimeError when empty."""
    theta, rho, r, v = params.theta, params.rho, params.r, params.v
    hi = min(rho + r, (1.0 - r) / (1.0 + v * theta))
    denom = 1.0 - 2.0 * theta * v
    lo = (rho - r) / denom if denom > 0.0 else math.inf
    if lo > hi + 1e-15:
        raise RegimeError(
            f"compare-and-capture radius interval empty: v={v} exceeds bound "
            f"{concac_speed_bound(params):.6g}"
        )
    return (lo, hi)


@dataclass(frozen=True)
class SweepConfig:
    x_s: float
    a: int
    direction: int = 1


@dataclass(frozen=True)
class ConCaCConfig:
    x_c: float
    epoch_duration: float
    epoch_index: int = 0


@dataclass(frozen=True)
class SectorPartition:
    """Division of the environment into equal wedges coverable from rest poses."""

    theta_s: float
    n_s: int
    resting_points: tuple[PolarPoint, ...]
    travel_diameter: float  # distance between the two farthest resting points
    ratio_bound: float

    def sector_of(self, angle: float) -> int:
        """1-based index of the wedge containing the angle."""
        idx = 1 + math.floor((angle + self.n_s * self.theta_s) / (2.0 * self.theta_s))
        return min(max(idx, 1), self.n_s)


def snp_partition(params: ProblemParams) -> SectorPartition:
    """Sector layout, per-sector resting points, and the hop-time quantum."""
    theta, rho, r = params.theta, params.rho, params.r
    theta_s = math.atan(r / rho)
    n_s = max(1, math.ceil(theta / theta_s - 1e-12))
    radius = rho / math.cos(theta_s)
    resting = tuple(
        PolarPoint(radius, (l - (n_s + 1) / 2.0) * 2.0 * theta_s) for l in range(1, n_s + 1)
    )
    if n_s == 1:
        d = 0.0
    elif (n_s - 1) * theta_s < math.pi / 2:
        d = 2.0 * radius * math.sin((n_s - 1) * theta_s)
    else:
        d = 2.0 * radius
    return SectorPartition(
        theta_s=theta_s,
        n_s=n_s,
        resting_points=resting,
        travel_diameter=d,
        ratio_bound=(3.0 * n_s - 1.0) / 2.0,
    )


def snp_feasible(params: ProblemParams, partition: SectorPartition | None = None) -> bool:
    """Feasibility of the stay-near-perimeter schedule (single-sector layouts
    are always feasible: the vehicle just parks)."""
    part = partition or snp_partition(params)
    if part.n_s == 1:
        return True
    d = part.travel_diameter
    radius = params.rho / math.cos(part.theta_s)
    return 3.0 * d <= params.transit_time + 1e-12 and radius <= 2.0 * d + 1e-12


def snp_feasible_strict_form(
    params: ProblemParams, partition: SectorPartition | None = None
) -> bool:
    """Alternate feasibility predicate with the reciprocal reach term.

    Kept alongside the standard form so regime maps can show either; it is far
    more restrictive (the left side exceeds 2 for every admissible rho).
    """
    part = partition or snp_partition(params)
    d = part.travel_diameter
    return (
        3.0 * d <= params.transit_time + 1e-12
        and 2.0 / (params.rho * math.cos(part.theta_s)) <= 2.0 * d + 1e-12
    )


class _PolicyBase:
    def __init__(self, params: ProblemParams):
        self.params = params

    def reset(self, params: ProblemParams) -> None:
        if params != self.params:
            raise ConfigurationError("policy was configured for different parameters")
        self._start()

    def _start(self) -> None:
        pass


class StationaryGuard(_PolicyBase):
    """Parks at a fixed pose; by default the bisector pose whose capture circle
    covers the whole perimeter arc (only defined for theta < pi/4)."""

    def __init__(self, params: ProblemParams, pose: PolarPoint | None = None):
        super().__init__(params)
        if pose is None:
            guard = min_guard_radius(params.rho, params.theta)
            if params.r < guard.min_radius:
                raise RegimeError(
                    f"capture radius {params.r} below guard requirement {guard.min_radius:.6g}"
                )
            pose = guard.position
        self.pose = pose

    def initial_pose(self) -> PolarPoint:
        return self.pose

    def decide(self, obs: Observation) -> MotionDirective:
        if abs(obs.vehicle.radius - self.pose.radius) > _AT_POSE_TOL or abs(
            obs.vehicle.angle - self.pose.angle
        ) > _AT_POSE_TOL:
            return MotionDirective.goto(self.pose)
        return MotionDirective.hold()


class AngularSweep(_PolicyBase):
    """Open-loop sweep at radius x_s: out to +theta, then full alternating
    sweeps between the two edges; a perpetual circle when theta == pi."""

    def __init__(self, params: ProblemParams, x_s: float | None = None, strict: bool = True):
        super().__init__(params)
        if x_s is None:
            lo, hi = sweep_interval(params)
            x_s = 0.5 * (lo + hi)
        elif strict:
            lo, hi = sweep_interval(params)
            if not (lo - 1e-12 <= x_s <= hi + 1e-12):
                raise ConfigurationError(
                    f"x_s={x_s} outside admissible interval [{lo:.6g}, {hi:.6g}]"
                )
        if not (0.0 < x_s <= 1.0):
            raise ConfigurationError(f"x_s={x_s} outside (0, 1]")
        self.config = SweepConfig(x_s=x_s, a=_sweep_rate(params.theta))
        self._start()

    def _start(self) -> None:
        self._target = self.params.theta
        self._direction = 1

    def initial_pose(self) -> PolarPoint:
        return PolarPoint(self.config.x_s, 0.0)

    def decide(self, obs: Observation) -> MotionDirective:
        x_s = self.config.x_s
        if self.config.a == 2:
            return MotionDirective.follow_arc(x_s, None, 1)
        if abs(obs.vehicle.angle - self._target) <= _AT_POSE_TOL:
            self._target = -self._target
            self._direction = -self._direction
        return MotionDirective.follow_arc(x_s, self._target, self._direction)


class CompareAndCapture(_PolicyBase):
    """Epoch policy: count threatened intruders per side, sweep the busier side.

    The clock starts at the first arrival.  After an initial wait that lets the
    earliest intruders descend into the counted band, each epoch lasts exactly
    one out-and-back sweep at radius x_c; equal counts go left.
    """

    def __init__(self, params: ProblemParams, x_c: float | None = None, strict: bool = True):
        super().__init__(params)
        if x_c is None:
            lo, hi = concac_interval(params)
            x_c = 0.5 * (lo + hi)
        elif strict:
            lo, hi = concac_interval(params)
            if not (lo - 1e-12 <= x_c <= hi + 1e-12):
                raise ConfigurationError(
                    f"x_c={x_c} outside admissible interval [{lo:.6g}, {hi:.6g}]"
                )
        if not (0.0 < x_c <= 1.0):
            raise ConfigurationError(f"x_c={x_c} outside (0, 1]")
        theta = params.theta
        self.config = ConCaCConfig(x_c=x_c, epoch_duration=2.0 * theta * x_c)
        self._start()

    def _start(self) -> None:
        self._t0: float | None = None
        self._epoch_start: float | None = None
        self._side = -1

    def initial_pose(self) -> PolarPoint:
        return PolarPoint(self.config.x_c, 0.0)

    def _count_sides(self, obs: Observation) -> tuple[int, int]:
        theta, rho, v = self.params.theta, self.params.rho, self.params.v
        x_c, r = self.config.x_c, self.params.r
        left = right = 0
        for _, pos in obs.active_intruders:
            beta, y = pos.angle, pos.radius
            if 0.0 <= beta <= theta + ANGLE_TOL:
                low = rho + beta * x_c * v
                high = min(1.0, x_c + r + (2.0 * theta - beta) * v * x_c)
                if low < y <= high:
                    right += 1
            elif -theta - ANGLE_TOL <= beta < 0.0:
                low = rho - beta * x_c * v * -1.0  # rho + |beta| x_c v
                high = min(1.0, x_c + r + (2.0 * theta + beta) * v * x_c)
                if low < y <= high:
                    left += 1
        return left, right

    def decide(self, obs: Observation) -> MotionDirective:
        if not obs.revealed:
            return MotionDirective.hold()
        theta = self.params.theta
        x_c = self.config.x_c
        if self._t0 is None:
            self._t0 = min(a.time for _, a in obs.revealed)
            wait = 1.0 - min(1.0, x_c + self.params.r + 2.0 * theta * self.params.v * x_c)
            self._epoch_start = self._t0 + wait
        assert self._epoch_start is not None
        if obs.now < self._epoch_start - TIME_TOL:
            return MotionDirective.hold(review_at=self._epoch_start)

        period = self.config.epoch_duration
        # Roll the epoch anchor forward; consults land exactly on boundaries.
        while obs.now >= self._epoch_start + period - TIME_TOL:
            self._epoch_start += period
        tau = obs.now - self._epoch_start
        half = theta * x_c
        if abs(tau) <= TIME_TOL:
            left, right = self._count_sides(obs)
            self._side = 1 if left < right else -1
            return MotionDirective.follow_arc(
                x_c, self._side * theta, self._side, mark="epoch"
            )
        if tau < half - TIME_TOL:
            return MotionDirective.follow_arc(x_c, self._side * theta, self._side)
        return MotionDirective.follow_arc(x_c, 0.0, -self._side)


class StayNearPerimeter(_PolicyBase):
    """Sector-hopping policy driven by per-interval arrival counts.

    Time is cut into intervals equal to the longest hop between resting
    points.  After a startup phase (hold at the apex for one interval, move to
    the busiest sector, hold until the third interval ends), the policy makes
    one decision per interval: stay and collect the current sector's due
    arrivals, or hop to a sector that accumulated strictly more.
    """

    def __init__(self, params: ProblemParams, strict: bool = True):
        super().__init__(params)
        self.partition = snp_partition(params)
        if strict and not snp_feasible(params, self.partition):
            raise RegimeError(
                "stay-near-perimeter schedule infeasible: intruders outrun the hop quantum"
            )
        self._start()

    def _start(self) -> None:
        self._t0: float | None = None
        self._sector: int | None = None
        self._pending_goto: PolarPoint | None = None

    def initial_pose(self) -> PolarPoint:
        if self.partition.n_s == 1:
            return self.partition.resting_points[0]
        return PolarPoint(0.0, 0.0)

    def _interval_counts(self, obs: Observation, j: int) -> list[int]:
        """Arrival counts per sector for interval j (1-based, half-open)."""
        assert self._t0 is not None
        lo = self._t0 + (j - 1) * self.partition.travel_diameter
        hi = self._t0 + j * self.partition.travel_diameter
        counts = [0] * (self.partition.n_s + 1)
        for _, arrival in obs.revealed:
            if lo <= arrival.time < hi:
                counts[self.partition.sector_of(arrival.angle)] += 1
        return counts

    def decide(self, obs: Observation) -> MotionDirective:
        part = self.partition
        if part.n_s == 1:
            return MotionDirective.hold()
        if not obs.revealed:
            return MotionDirective.hold()
        d = part.travel_diameter
        if self._t0 is None:
            self._t0 = min(a.time for _, a in obs.revealed)
        t0 = self._t0

        if obs.now < t0 + d - TIME_TOL:
            return MotionDirective.hold(review_at=t0 + d)

        if self._sector is None:
            # Startup selection: busiest sector of the first interval.
            counts = self._interval_counts(obs, 1)
            self._sector = max(range(1, part.n_s + 1), key=lambda l: (counts[l], -l))
            self._pending_goto = part.resting_points[self._sector - 1]
            return MotionDirective.goto(
                self._pending_goto, review_at=t0 + 3.0 * d, mark="startup"
            )

        if obs.now < t0 + 3.0 * d - TIME_TOL:
            if self._pending_goto is not None and (
                abs(obs.vehicle.radius - self._pending_goto.radius) > _AT_POSE_TOL
                or abs(obs.vehicle.angle - self._pending_goto.angle) > _AT_POSE_TOL
            ):
                return MotionDirective.goto(self._pending_goto, review_at=t0 + 3.0 * d)
            self._pending_goto = None
            return MotionDirective.hold(review_at=t0 + 3.0 * d)

        # Decision grid: time t0 + (j+3)*d carries the j-th loop decision.
        steps = (obs.now - t0) / d
        j = int(round(steps)) - 3
        on_grid = abs(steps - round(steps)) <= 1e-9 and j >= 0
        next_decision = t0 + (math.floor(steps + 1e-9) + 1) * d

        if not on_grid or j == 0:
            directive = self._travel_or_hold(obs, next_decision)
            return directive

        i = self._sector
        counts1 = self._interval_counts(obs, j + 1)
        counts2 = self._interval_counts(obs, j + 2)
        counts3 = self._interval_counts(obs, j + 3)
        eta = [0] * (part.n_s + 1)
        for l in range(1, part.n_s + 1):
            if l == i:
                eta[l] = counts1[l] + counts2[l] + counts3[l]
            else:
                eta[l] = counts2[l] + counts3[l]
        top = max(eta[1:])
        winners = [l for l in range(1, part.n_s + 1) if eta[l] == top]
        if i in winners:
            o = i
        else:
            best2 = max(counts2[l] for l in winners)
            o = min(l for l in winners if counts2[l] == best2)

        if o != i and counts2[o] >= counts1[i]:
            self._sector = o
            self._pending_goto = part.resting_points[o - 1]
            return MotionDirective.goto(
                self._pending_goto, review_at=next_decision, mark="decision"
            )
        return MotionDirective.hold(review_at=next_decision, mark="decision")

    def _travel_or_hold(self, obs: Observation, review_at: float) -> MotionDirective:
        if self._pending_goto is not None and (
            abs(obs.vehicle.radius - self._pending_goto.radius) > _AT_POSE_TOL
            or abs(obs.vehicle.angle - self._pending_goto.angle) > _AT_POSE_TOL
        ):
            return MotionDirective.goto(self._pending_goto, review_at=review_at)
        self._pending_goto = None
        return MotionDirective.hold(review_at=review_at)


class ScriptedPolicy(_PolicyBase):
    """Replays a fixed (pose, time) schedule: reach each pose, hold until its
    time passes, then head for the next.  Used to replay oracle schedules."""

    def __init__(
        self,
        params: ProblemParams,
        waypoints: list[tuple[PolarPoint, float]],
        start: PolarPoint = PolarPoint(0.0, 0.0),
    ):
        super().__init__(params)
        self.waypoints = list(waypoints)
        self.start = start
        self._start()

    def _start(self) -> None:
        self._idx = 0

    def initial_pose(self) -> PolarPoint:
        return self.start

    def decide(self, obs: Observation) -> MotionDirective:
        while self._idx < len(self.waypoints):
            pose, due = self.waypoints[self._idx]
            at_pose = (
                abs(obs.vehicle.radius - pose.radius) <= _AT_POSE_TOL
                and abs(obs.vehicle.angle - pose.angle) <= _AT_POSE_TOL
            )
            if not at_pose:
                return MotionDirective.goto(pose, review_at=max(due, obs.now))
            if obs.now < due - TIME_TOL:
                return MotionDirective.hold(review_at=due)
            self._idx += 1
        return MotionDirective.hold()


def angular_sweep_policy(
    params: ProblemParams, x_s: float | None = None, strict: bool = True
) -> AngularSweep:
    return AngularSweep(params, x_s=x_s, strict=strict)


def concac_policy(
    params: ProblemParams, x_c: float | None = None, strict: bool = True
) -> CompareAndCapture:
    return CompareAndCapture(params, x_c=x_c, strict=strict)


def snp_policy(params: ProblemParams, strict: bool = True) -> StayNearPerimeter:
    return StayNearPerimeter(params, strict=strict)


def policy_from_name(
    name: str,
    params: ProblemParams,
    x_s: float | None = None,
    x_c: float | None = None,
    strict: bool = True,
):
    """Build a policy from its command-line selection string."""
    if name == "stationary":
        return StationaryGuard(params)
    if name == "sweep":
        return AngularSweep(params, x_s=x_s, strict=strict)
    if name == "concac":
        return CompareAndCapture(params, x_c=x_c, strict=strict)
    if name == "snp":
        return StayNearPerimeter(params, strict=strict)
    raise ConfigurationError(f"unknown policy {name!r}")
