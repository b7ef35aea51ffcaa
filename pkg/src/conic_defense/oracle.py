"""Offline-optimal benchmark: exact maximization of captured intruders.

The search enumerates capture orders depth-first with branch-and-bound
pruning.  Within a fixed order each capture happens at the earliest feasible
instant; the vehicle pose inside a capture circle is resolved lazily, once the
following target is known, by picking the admissible pose closest to that
target's perimeter point.  This waypoint-interception model reproduces every
offline schedule used by the analytic bounds; its global optimality over
arbitrary continuous controls is an assumption (a capture could in principle
be delayed to buy a better pose), cross-checked empirically in the test suite
against enumerators that search delayed capture times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import OracleLimitError
from .geometry import (
    CAPTURE_TOL,
    PolarPoint,
    ProblemParams,
    chord_in_sector,
    cone_contains,
    cone_distance,
    intercept_time,
)
from .instances import InputInstance, validate

ORIGIN = PolarPoint(0.0, 0.0)


@dataclass(frozen=True)
class OracleResult:
    max_captured: int
    schedule: tuple[tuple[int, float, PolarPoint], ...]
    nodes_explored: int


def upper_bound(instance: InputInstance) -> int:
    """Trivial bound: no schedule captures more intruders than arrive."""
    return len(instance.arrivals)


def _chase_pose(anchor: PolarPoint, c: PolarPoint, r: float, theta: float) -> PolarPoint:
    """Pose after walking the geodesic toward c and stopping r short."""
    d = cone_distance(anchor, c, theta)
    travel = max(0.0, d - r)
    if travel <= 0.0:
        return anchor
    if chord_in_sector(anchor, c, theta):
        ax, ay = anchor.to_xy()
        cx, cy = c.to_xy()
        f = travel / d
        return PolarPoint.from_xy(ax + (cx - ax) * f, ay + (cy - ay) * f)
    if travel <= anchor.radius:
        return PolarPoint(anchor.radius - travel, anchor.angle)
    return PolarPoint(max(c.radius - r, 0.0), c.angle)


def _resolve_pose(
    anchor: PolarPoint,
    anchor_time: float,
    c: PolarPoint,
    tau: float,
    params: ProblemParams,
    target: PolarPoint | None,
) -> PolarPoint:
    """Admissible pose within the capture circle around c at time tau.

    Feasible poses satisfy |z - c| <= r and an in-sector travel budget of
    tau - anchor_time from the anchor.  With no follow-up target the chase
    pose is returned; otherwise the feasible candidate nearest the target
    (by in-sector distance) wins.
    """
    theta, r = params.theta, params.r
    budget = tau - anchor_time + CAPTURE_TOL
    chase = _chase_pose(anchor, c, r, theta)
    if target is None:
        return chase
    candidates = [chase]

    cx, cy = c.to_xy()
    tx, ty = target.to_xy()
    sep = math.hypot(tx - cx, ty - cy)
    if sep > 1e-12:
        zx, zy = cx + r * (tx - cx) / sep, cy + r * (ty - cy) / sep
        z = PolarPoint.from_xy(zx, zy)
        if cone_contains(z, theta) and cone_distance(anchor, z, theta) <= budget:
            candidates.append(z)
        elif chord_in_sector(anchor, c, theta):
            # Clamp to the reachable rim of the capture circle (Euclidean
            # two-circle intersection, valid while travel is chord-like).
            ax, ay = anchor.to_xy()
            d = math.hypot(cx - ax, cy - ay)
            delta = max(tau - anchor_time, 0.0)
            if d > 1e-12 and delta > 0.0 and d <= r + delta:
                a = (d * d + delta * delta - r * r) / (2.0 * d)
                h2 = delta * delta - a * a
                if h2 > 0.0:
                    h = math.sqrt(h2)
                    ux, uy = (cx - ax) / d, (cy - ay) / d
                    for sign in (1.0, -1.0):
                        px = ax + a * ux - sign * h * uy
                        py = ay + a * uy + sign * h * ux
                        z = PolarPoint.from_xy(px, py)
                        if (
                            cone_contains(z, theta)
                            and chord_in_sector(anchor, z, theta)
                            and cone_distance(anchor, z, theta) <= budget
                        ):
                            candidates.append(z)

    best = None
    best_cost = math.inf
    for z in candidates:
        cost = cone_distance(z, target, theta)
        if cost < best_cost - 1e-15:
            best, best_cost = z, cost
    return best if best is not None else chase


class _Search:
    def __init__(self, instance: InputInstance, start: PolarPoint):
        self.params = instance.params
        self.arrivals = list(instance.arrivals)
        self.transit = self.params.transit_time
        self.start = start
        self.best = 0
        self.best_schedule: tuple[tuple[int, float, PolarPoint], ...] = ()
        self.nodes = 0
        # Representative follow-up point per intruder: where it meets the perimeter.
        self.last_chance = [
            PolarPoint(self.params.rho, a.angle) for a in self.arrivals
        ]

    def _maybe_feasible(self, ref_xy: tuple[float, float], ref_time: float, j: int) -> bool:
        """Optimistic capturability of j from within r of the reference point.

        Uses the Euclidean displacement lower bound on travel, so it never
        rules out a genuinely feasible capture (prune-safe).
        """
        breach = self.arrivals[j].time + self.transit
        if ref_time > breach + CAPTURE_TOL:
            return False
        lx, ly = self.last_chance[j].to_xy()
        need = math.hypot(lx - ref_xy[0], ly - ref_xy[1]) - 2.0 * self.params.r
        return need <= (breach - ref_time) + CAPTURE_TOL

    def run(self, remaining: list[int]):
        self._dfs(self.start, 0.0, None, remaining, [])

    def _dfs(
        self,
        anchor: PolarPoint,
        anchor_time: float,
        pending: tuple[int, float, PolarPoint] | None,
        remaining: list[int],
        done: list[tuple[int, float, PolarPoint]],
    ):
        self.nodes += 1
        count = len(done) + (1 if pending is not None else 0)
        if count > self.best:
            schedule = list(done)
            if pending is not None:
                j, tau, c = pending
                schedule.append((j, tau, _resolve_pose(anchor, anchor_time, c, tau, self.params, None)))
            self.best = count
            self.best_schedule = tuple(schedule)

        if pending is not None:
            ref_xy, ref_time = pending[2].to_xy(), pending[1]
        else:
            ref_xy, ref_time = anchor.to_xy(), anchor_time
        feasible = [j for j in remaining if self._maybe_feasible(ref_xy, ref_time, j)]
        if count + len(feasible) <= self.best:
            return
        feasible.sort(key=lambda j: (self.arrivals[j].time + self.transit, j))

        seen_twins: set[tuple[float, float]] = set()
        for j in feasible:
            key = (self.arrivals[j].time, self.arrivals[j].angle)
            if key in seen_twins:
                continue
            seen_twins.add(key)

            if pending is not None:
                pj, ptau, pc = pending
                pose = _resolve_pose(
                    anchor, anchor_time, pc, ptau, self.params, self.last_chance[j]
                )
                from_pose, from_time = pose, ptau
                new_done = done + [(pj, ptau, pose)]
            else:
                from_pose, from_time = anchor, anchor_time
                new_done = done

            arr = self.arrivals[j]
            tau = intercept_time(from_pose, from_time, (arr.time, arr.angle), self.params)
            if tau is None:
                continue
            c = PolarPoint(1.0 - self.params.v * (tau - arr.time), arr.angle)
            self._dfs(
                from_pose,
                from_time,
                (j, tau, c),
                [k for k in remaining if k != j],
                new_done,
            )


def offline_opt(
    instance: InputInstance, limit: int = 10, start: PolarPoint = ORIGIN
) -> OracleResult:
    """Exact maximum number of captures with full knowledge of the instance.

    Raises OracleLimitError above ``limit`` arrivals; callers should fall back
    to ``upper_bound`` for larger instances.
    """
    validate(instance)
    n = len(instance.arrivals)
    if n > limit:
        raise OracleLimitError(
            f"instance has {n} arrivals, above the exhaustive limit {limit}; "
            "use upper_bound as a fallback"
        )
    search = _Search(instance, start)
    search.run(list(range(n)))
    return OracleResult(
        max_captured=search.best,
        schedule=search.best_schedule,
        nodes_explored=search.nodes,
    )


def evaluate_order(
    instance: InputInstance, order: list[int], start: PolarPoint = ORIGIN
) -> int:
    """Captures achieved by greedily serving the given intruder order.

    Stops at the first intruder in the order that can no longer be captured.
    Shared with the naive enumerator used to cross-check the search.
    """
    params = instance.params
    anchor, anchor_time = start, 0.0
    pending: tuple[float, PolarPoint] | None = None
    count = 0
    for idx, j in enumerate(order):
        if pending is not None:
            ptau, pc = pending
            target = PolarPoint(params.rho, instance.arrivals[j].angle)
            anchor = _resolve_pose(anchor, anchor_time, pc, ptau, params, target)
            anchor_time = ptau
        arr = instance.arrivals[j]
        tau = intercept_time(anchor, anchor_time, (arr.time, arr.angle), params)
        if tau is None:
            return count
        count += 1
        pending = (tau, PolarPoint(1.0 - params.v * (tau - arr.time), arr.angle))
    return count


def exhaustive_opt(instance: InputInstance, start: PolarPoint = ORIGIN) -> int:
    """Naive maximum over every ordered subset; exponential, test-sized only."""
    n = len(instance.arrivals)
    best = 0

    def extend(order: list[int], used: set[int]):
        nonlocal best
        best = max(best, evaluate_order(instance, order, start))
        for j in range(n):
            if j not in used:
                extend(order + [j], used | {j})

    extend([], set())
    return best
