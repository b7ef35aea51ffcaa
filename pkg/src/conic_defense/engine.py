"""Deterministic event-driven simulator.

The vehicle's motion between policy decisions is piecewise linear or a
constant-radius arc, and intruders move linearly along fixed rays, so capture
instants are found analytically (quadratic roots on linear/hold segments, a
Lipschitz-guarded root isolation on arcs) instead of by time stepping.  The
event loop advances to the earliest of: next arrival, earliest capture contact
on the current motion, earliest perimeter breach, waypoint arrival, or a
policy-requested review.  Ties resolve in that order; in particular a capture
at the exact instant an intruder reaches the perimeter counts as a capture.

Reactive sources (adversaries) receive every trace record as it is emitted and
may inject new arrivals at the current instant in response.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Protocol

from . import oracle as _oracle
from .errors import EngineError, InstanceError, PolicyFaultError
from .geometry import (
    ANGLE_TOL,
    CAPTURE_TOL,
    TIME_TOL,
    PolarPoint,
    ProblemParams,
    chord_in_sector,
    cone_contains,
)
from .instances import ArrivalEvent, InputInstance, IntruderRecord, IntruderStatus, validate

_PRIORITY = {"arrival": 0, "capture": 1, "breach": 2, "waypoint": 3, "review": 4, "horizon": 5}


@dataclass(frozen=True)
class Observation:
    """What a policy is allowed to see when consulted."""

    now: float
    revealed: tuple[tuple[int, ArrivalEvent], ...]
    active_intruders: tuple[tuple[int, PolarPoint], ...]
    vehicle: PolarPoint
    scratch: object = None


@dataclass(frozen=True)
class MotionDirective:
    """A motion command returned by a policy.

    kind is one of "hold", "goto", "follow_arc".  ``review_at`` forces a policy
    consult at that time even if no event fires.  ``mark`` asks the engine to
    log a decision trace record with that label.
    """

    kind: str
    waypoint: PolarPoint | None = None
    radius: float | None = None
    target_angle: float | None = None
    direction: int = 0
    speed: float = 1.0
    review_at: float | None = None
    mark: str | None = None

    @staticmethod
    def hold(review_at: float | None = None, mark: str | None = None) -> "MotionDirective":
        return MotionDirective(kind="hold", review_at=review_at, mark=mark)

    @staticmethod
    def goto(
        waypoint: PolarPoint,
        speed: float = 1.0,
        review_at: float | None = None,
        mark: str | None = None,
    ) -> "MotionDirective":
        return MotionDirective(
            kind="goto", waypoint=waypoint, speed=speed, review_at=review_at, mark=mark
        )

    @staticmethod
    def follow_arc(
        radius: float,
        target_angle: float | None,
        direction: int,
        speed: float = 1.0,
        review_at: float | None = None,
        mark: str | None = None,
    ) -> "MotionDirective":
        return MotionDirective(
            kind="follow_arc",
            radius=radius,
            target_angle=target_angle,
            direction=direction,
            speed=speed,
            review_at=review_at,
            mark=mark,
        )


class Policy(Protocol):
    def reset(self, params: ProblemParams) -> None: ...

    def initial_pose(self) -> PolarPoint: ...

    def decide(self, obs: Observation) -> MotionDirective: ...


@dataclass(frozen=True)
class TraceRecord:
    time: float
    event: str
    intruder_id: int | None
    vehicle: PolarPoint
    detail: str = ""


@dataclass
class SimResult:
    captured: int
    lost: int
    per_intruder: list[IntruderRecord]
    trace: list[TraceRecord]
    end_time: float

    @property
    def total(self) -> int:
        return len(self.per_intruder)


class ArrivalSource(Protocol):
    def peek(self) -> ArrivalEvent | None: ...

    def pop(self) -> ArrivalEvent: ...

    def observe(self, record: TraceRecord) -> None: ...

    def exhausted(self) -> bool: ...


class InstanceSource:
    """Replays a fixed, validated instance."""

    def __init__(self, instance: InputInstance):
        validate(instance)
        self._arrivals = list(instance.arrivals)
        self._index = 0

    def peek(self) -> ArrivalEvent | None:
        if self._index < len(self._arrivals):
            return self._arrivals[self._index]
        return None

    def pop(self) -> ArrivalEvent:
        event = self._arrivals[self._index]
        self._index += 1
        return event

    def observe(self, record: TraceRecord) -> None:
        pass

    def exhausted(self) -> bool:
        return self._index >= len(self._arrivals)

    def realized(self) -> list[ArrivalEvent]:
        return list(self._arrivals[: self._index])


# --- vehicle motion plan ---------------------------------------------------


@dataclass
class _Leg:
    kind: str  # "linear" (vel may be zero) or "arc"
    t0: float
    t1: float  # may be inf
    p0: tuple[float, float] = (0.0, 0.0)
    vel: tuple[float, float] = (0.0, 0.0)
    radius: float = 0.0
    angle0: float = 0.0
    omega: float = 0.0
    end_pose: PolarPoint | None = None  # exact pose at t1 when known

    def position(self, t: float) -> tuple[float, float]:
        if self.kind == "linear":
            dt = t - self.t0
            return (self.p0[0] + self.vel[0] * dt, self.p0[1] + self.vel[1] * dt)
        a = self.angle0 + self.omega * (t - self.t0)
        return (self.radius * math.cos(a), self.radius * math.sin(a))

    def pose(self, t: float) -> PolarPoint:
        if self.end_pose is not None and t >= self.t1 - TIME_TOL:
            return self.end_pose
        if self.kind == "arc":
            a = self.angle0 + self.omega * (t - self.t0)
            a = math.atan2(math.sin(a), math.cos(a))
            return PolarPoint(self.radius, a)
        return PolarPoint.from_xy(*self.position(t))


class _MotionPlan:
    def __init__(self, legs: list[_Leg], waypoint_time: float | None):
        self.legs = legs
        self.waypoint_time = waypoint_time  # goto arrival / arc target reached

    def leg_at(self, t: float) -> _Leg:
        for leg in self.legs:
            if t < leg.t1 - TIME_TOL or leg.t1 == math.inf:
                return leg
        return self.legs[-1]

    def pose(self, t: float) -> PolarPoint:
        return self.leg_at(t).pose(t)


def _build_plan(
    directive: MotionDirective, pose: PolarPoint, now: float, params: ProblemParams
) -> _MotionPlan:
    theta = params.theta
    if directive.kind == "hold":
        leg = _Leg("linear", now, math.inf, p0=pose.to_xy(), end_pose=None)
        leg.end_pose = pose
        return _MotionPlan([leg], None)

    if not (0.0 < directive.speed <= 1.0 + 1e-12):
        raise PolicyFaultError(f"directive speed {directive.speed} outside (0, 1] at t={now}")

    if directive.kind == "goto":
        wp = directive.waypoint
        if wp is None or not cone_contains(wp, theta):
            raise PolicyFaultError(f"goto waypoint {wp} outside environment at t={now}")
        legs: list[_Leg] = []
        if chord_in_sector(pose, wp, theta):
            hops = [(pose, wp)]
        else:
            apex = PolarPoint(0.0, 0.0)
            hops = [(pose, apex), (apex, wp)]
        t = now
        for a, b in hops:
            ax, ay = a.to_xy()
            bx, by = b.to_xy()
            dist = math.hypot(bx - ax, by - ay)
            if dist <= TIME_TOL:
                continue
            dur = dist / directive.speed
            vel = ((bx - ax) / dur, (by - ay) / dur)
            leg = _Leg("linear", t, t + dur, p0=(ax, ay), vel=vel, end_pose=b)
            legs.append(leg)
            t += dur
        if not legs:
            # Already at the waypoint: immediate waypoint event.
            leg = _Leg("linear", now, now, p0=pose.to_xy(), end_pose=wp)
            return _MotionPlan([leg], now)
        return _MotionPlan(legs, t)

    if directive.kind == "follow_arc":
        radius = directive.radius
        if radius is None or not (0.0 < radius <= 1.0 + 1e-12):
            raise PolicyFaultError(f"arc radius {radius} outside (0, 1] at t={now}")
        if abs(pose.radius - radius) > 1e-9:
            raise PolicyFaultError(
                f"follow_arc at radius {radius} but vehicle at radius {pose.radius} (t={now})"
            )
        direction = directive.direction
        if direction not in (-1, 1):
            raise PolicyFaultError(f"follow_arc direction must be +-1, got {direction}")
        omega = direction * directive.speed / radius
        angle0 = pose.angle
        if directive.target_angle is None:
            leg = _Leg("arc", now, math.inf, radius=radius, angle0=angle0, omega=omega)
            return _MotionPlan([leg], None)
        delta = direction * (directive.target_angle - angle0)
        if delta < -ANGLE_TOL:
            delta += 2.0 * math.pi  # wrapped target (full-circle sweeps)
        delta = max(delta, 0.0)
        dur = delta * radius / directive.speed
        end = PolarPoint(radius, directive.target_angle)
        leg = _Leg(
            "arc", now, now + dur, radius=radius, angle0=angle0, omega=omega, end_pose=end
        )
        return _MotionPlan([leg], now + dur)

    raise PolicyFaultError(f"unknown directive kind {directive.kind!r} at t={now}")


# --- capture contact detection --------------------------------------------


def _intruder_xy(arrival: ArrivalEvent, v: float, t: float) -> tuple[float, float]:
    y = 1.0 - v * (t - arrival.time)
    return (y * math.cos(arrival.angle), y * math.sin(arrival.angle))


def _contact_on_linear(
    leg: _Leg, arrival: ArrivalEvent, v: float, r: float, lo: float, hi: float
) -> float | None:
    """Earliest t in [lo, hi] with |vehicle - intruder| <= r on a linear leg."""
    ex, ey = math.cos(arrival.angle), math.sin(arrival.angle)
    # D(t) = P(t) - I(t) is affine in t.
    dx0 = leg.p0[0] - leg.vel[0] * leg.t0 - ex * (1.0 + v * arrival.time)
    dy0 = leg.p0[1] - leg.vel[1] * leg.t0 - ey * (1.0 + v * arrival.time)
    dx1 = leg.vel[0] + v * ex
    dy1 = leg.vel[1] + v * ey
    c0x, c0y = dx0 + dx1 * lo, dy0 + dy1 * lo
    if c0x * c0x + c0y * c0y <= (r + CAPTURE_TOL) ** 2:
        return lo
    qa = dx1 * dx1 + dy1 * dy1
    qb = 2.0 * (dx0 * dx1 + dy0 * dy1)
    qc = dx0 * dx0 + dy0 * dy0 - r * r
    if qa < 1e-300:
        return None
    disc = qb * qb - 4.0 * qa * qc
    if disc < 0.0:
        return None
    sq = math.sqrt(disc)
    t_first = (-qb - sq) / (2.0 * qa)
    if lo - TIME_TOL <= t_first <= hi + TIME_TOL:
        return min(max(t_first, lo), hi)
    return None


def _contact_on_arc(
    leg: _Leg, arrival: ArrivalEvent, v: float, r: float, lo: float, hi: float
) -> float | None:
    """Earliest contact on an arc leg via Lipschitz-guarded root isolation.

    |d/dt dist^2| <= 2*|D|*|D'| <= 2*2*(1+v) < 8 inside the unit disk, so from a
    sample with clearance f the next contact is at least f/8 away.
    """
    ex, ey = math.cos(arrival.angle), math.sin(arrival.angle)

    def f(t: float) -> float:
        y = 1.0 - v * (t - arrival.time)
        a = leg.angle0 + leg.omega * (t - leg.t0)
        px, py = leg.radius * math.cos(a), leg.radius * math.sin(a)
        dx, dy = px - y * ex, py - y * ey
        return dx * dx + dy * dy - r * r

    eps_f = 2.0 * r * CAPTURE_TOL
    lipschitz = 8.0
    t = lo
    ft = f(t)
    if ft <= eps_f:
        return lo
    while t < hi:
        step = max(ft / lipschitz, 1e-7)
        t_next = min(t + step, hi)
        f_next = f(t_next)
        if f_next <= eps_f:
            a, b = t, t_next
            for _ in range(200):
                mid = 0.5 * (a + b)
                if f(mid) <= eps_f:
                    b = mid
                else:
                    a = mid
                if b - a <= TIME_TOL:
                    break
            return b
        t, ft = t_next, f_next
    return None


# --- the simulator ----------------------------------------------------------


def simulate(
    source: ArrivalSource | InputInstance,
    policy: Policy,
    params: ProblemParams | None = None,
    horizon: float | None = None,
) -> SimResult:
    """Run one episode and return outcome counts, per-intruder records, and a trace."""
    if isinstance(source, InputInstance):
        if params is None:
            params = source.params
        elif params != source.params:
            raise InstanceError("explicit params disagree with instance params")
        source = InstanceSource(source)
    if params is None:
        raise InstanceError("params are required when simulating from a raw source")

    v, r, rho = params.v, params.r, params.rho
    transit = params.transit_time

    policy.reset(params)
    pose = policy.initial_pose()
    if not cone_contains(pose, params.theta):
        raise PolicyFaultError(f"initial pose {pose} outside environment")

    now = 0.0
    records: list[IntruderRecord] = []
    active: list[IntruderRecord] = []
    trace: list[TraceRecord] = []
    last_mark: tuple[float, str] | None = None
    plan = _MotionPlan([_Leg("linear", now, math.inf, p0=pose.to_xy(), end_pose=pose)], None)
    review_at: float | None = None
    same_time_events = 0
    last_event_time = -math.inf

    def emit(event: str, intruder_id: int | None, detail: str = "") -> TraceRecord:
        rec = TraceRecord(now, event, intruder_id, plan.pose(now), detail)
        trace.append(rec)
        source.observe(rec)
        return rec

    def consult():
        nonlocal plan, review_at, last_mark
        revealed = tuple((rec.id, rec.arrival) for rec in records)
        active_obs = tuple(
            (rec.id, PolarPoint(1.0 - v * (now - rec.arrival.time), rec.arrival.angle))
            for rec in active
        )
        obs = Observation(
            now=now, revealed=revealed, active_intruders=active_obs, vehicle=plan.pose(now)
        )
        directive = policy.decide(obs)
        if directive.review_at is not None and directive.review_at < now - TIME_TOL:
            raise PolicyFaultError(f"review_at {directive.review_at} is in the past (t={now})")
        plan = _build_plan(directive, obs.vehicle, now, params)
        review_at = directive.review_at
        if directive.mark is not None and last_mark != (now, directive.mark):
            last_mark = (now, directive.mark)
            emit("decision", None, directive.mark)

    consult()

    while True:
        if source.exhausted() and not active:
            break

        candidates: list[tuple[float, int, str]] = []
        nxt = source.peek()
        if nxt is not None:
            candidates.append((max(nxt.time, now), _PRIORITY["arrival"], "arrival"))
        if active:
            breach_t = min(rec.arrival.time + transit for rec in active)
            candidates.append((max(breach_t, now), _PRIORITY["breach"], "breach"))
        if plan.waypoint_time is not None:
            candidates.append((max(plan.waypoint_time, now), _PRIORITY["waypoint"], "waypoint"))
        if review_at is not None:
            candidates.append((max(review_at, now), _PRIORITY["review"], "review"))
        if horizon is not None:
            candidates.append((horizon, _PRIORITY["horizon"], "horizon"))
        if not candidates:
            break
        window_end, window_prio, window_kind = min(candidates)

        contact: float | None = None
        if active and window_end >= now:
            for rec in active:
                i_lo = max(now, rec.arrival.time)
                i_hi = min(window_end, rec.arrival.time + transit)
                if i_hi < i_lo:
                    continue
                t = i_lo
                while t <= i_hi + TIME_TOL:
                    leg = plan.leg_at(t)
                    seg_hi = min(i_hi, leg.t1)
                    if leg.kind == "arc":
                        c = _contact_on_arc(leg, rec.arrival, v, r, t, seg_hi)
                    else:
                        c = _contact_on_linear(leg, rec.arrival, v, r, t, seg_hi)
                    if c is not None:
                        c = min(c, rec.arrival.time + transit)
                        if contact is None or c < contact:
                            contact = c
                        break
                    if seg_hi >= i_hi or leg.t1 == math.inf:
                        break
                    t = seg_hi + TIME_TOL

        if contact is not None and (
            contact < window_end - TIME_TOL
            or (abs(contact - window_end) <= TIME_TOL and _PRIORITY["capture"] < window_prio)
        ):
            event_time, event_kind = max(contact, now), "capture"
        else:
            event_time, event_kind = window_end, window_kind

        if abs(event_time - last_event_time) <= TIME_TOL:
            same_time_events += 1
            if same_time_events > 10000:
                raise EngineError(f"event loop stalled at t={event_time}")
        else:
            same_time_events = 0
            last_event_time = event_time
        now = event_time

        if event_kind == "horizon":
            break

        if event_kind == "arrival":
            while True:
                nxt = source.peek()
                if nxt is None or max(nxt.time, now) > now + TIME_TOL:
                    break
                arrival = source.pop()
                rec = IntruderRecord(id=len(records), arrival=arrival, status=IntruderStatus.ACTIVE)
                records.append(rec)
                active.append(rec)
                emit("arrival", rec.id)
            consult()
            continue

        if event_kind == "capture":
            vx, vy = plan.pose(now).to_xy()
            vpos = plan.leg_at(now).position(now)
            caught = []
            for rec in active:
                ix, iy = _intruder_xy(rec.arrival, v, now)
                if math.hypot(vpos[0] - ix, vpos[1] - iy) <= r + CAPTURE_TOL:
                    caught.append(rec)
            if not caught:
                raise EngineError(f"capture event with no intruder in range at t={now}")
            for rec in caught:
                rec.status = IntruderStatus.CAPTURED
                rec.resolved_at = now
                rec.captured_at_arrival = abs(now - rec.arrival.time) <= TIME_TOL
                active.remove(rec)
                emit("capture", rec.id, "at_arrival" if rec.captured_at_arrival else "")
            consult()
            continue

        if event_kind == "breach":
            vpos = plan.leg_at(now).position(now)
            breached = []
            for rec in active:
                if rec.arrival.time + transit <= now + TIME_TOL:
                    ix, iy = _intruder_xy(rec.arrival, v, now)
                    if math.hypot(vpos[0] - ix, vpos[1] - iy) <= r + CAPTURE_TOL:
                        continue  # capture precedence at the boundary
                    breached.append(rec)
            for rec in breached:
                rec.status = IntruderStatus.LOST
                rec.resolved_at = now
                active.remove(rec)
                emit("breach", rec.id)
            consult()
            continue

        if event_kind == "waypoint":
            plan = _MotionPlan(
                [_Leg("linear", now, math.inf, p0=plan.pose(now).to_xy(), end_pose=plan.pose(now))],
                None,
            )
            emit("waypoint_reached", None)
            consult()
            continue

        if event_kind == "review":
            review_at = None
            consult()
            continue

    captured = sum(1 for rec in records if rec.status == IntruderStatus.CAPTURED)
    lost = sum(1 for rec in records if rec.status == IntruderStatus.LOST)
    return SimResult(captured=captured, lost=lost, per_intruder=records, trace=trace, end_time=now)


def trace_to_csv(trace: Iterable[TraceRecord]) -> str:
    """Render a trace as CSV with 12-significant-digit numbers."""
    lines = ["time,event,intruder_id,vehicle_radius,vehicle_angle"]
    for rec in trace:
        intruder = "" if rec.intruder_id is None else str(rec.intruder_id)
        lines.append(
            f"{rec.time:.12g},{rec.event},{intruder},"
            f"{rec.vehicle.radius:.12g},{rec.vehicle.angle:.12g}"
        )
    return "\n".join(lines) + "\n"


def competitive_ratio_estimate(
    instance: InputInstance,
    policy: Policy,
    limit: int = 10,
    opt: int | None = None,
) -> tuple[float, int, int]:
    """(ratio, opt, alg) on one instance, with the exhaustive oracle as OPT.

    Callers with large instances must supply ``opt`` themselves (for example
    from ``oracle.upper_bound``); ratio conventions: opt == 0 gives 1.0, and a
    shutout (alg == 0 with opt > 0) gives +inf.
    """
    if opt is None:
        opt = _oracle.offline_opt(instance, limit=limit).max_captured
    result = simulate(instance, policy)
    alg = result.captured
    if opt == 0:
        return (1.0, opt, alg)
    if alg == 0:
        return (math.inf, opt, alg)
    return (opt / alg, opt, alg)
