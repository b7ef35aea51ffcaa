"""Input instances: timed intruder arrivals at the rim of the environment.

An instance couples problem parameters with a time-sorted arrival list and is
immutable once validated.  Files are self-contained JSON documents embedding
the parameters, so a file alone reproduces a run.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from enum import Enum

from .errors import InstanceError
from .geometry import ANGLE_TOL, ProblemParams


@dataclass(frozen=True)
class ArrivalEvent:
    """One intruder appearing at radius 1 at the given time and angle."""

    time: float
    angle: float


class IntruderStatus(Enum):
    PENDING = "pending"
    ACTIVE = "active"
    CAPTURED = "captured"
    LOST = "lost"


@dataclass
class IntruderRecord:
    """Lifecycle bookkeeping for one intruder during a run."""

    id: int
    arrival: ArrivalEvent
    status: IntruderStatus = IntruderStatus.PENDING
    resolved_at: float | None = None
    captured_at_arrival: bool = False


@dataclass(frozen=True)
class InputInstance:
    """Problem parameters plus arrivals sorted by time (ties allowed)."""

    params: ProblemParams
    arrivals: tuple[ArrivalEvent, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "arrivals", tuple(self.arrivals))


def validate(instance: InputInstance) -> InputInstance:
    """Return the instance unchanged if every invariant holds.

    Raises InstanceError naming the first offending arrival otherwise.
    """
    theta = instance.params.theta
    prev_time = -math.inf
    for k, arrival in enumerate(instance.arrivals):
        if not math.isfinite(arrival.time) or arrival.time < 0.0:
            raise InstanceError(f"arrival time must be finite and >= 0 at index {k}")
        if not math.isfinite(arrival.angle) or abs(arrival.angle) > theta + ANGLE_TOL:
            raise InstanceError(f"angle out of range at index {k}")
        if arrival.time < prev_time:
            raise InstanceError(f"arrivals not sorted by time at index {k}")
        prev_time = arrival.time
    return instance


def random_instance(
    params: ProblemParams, n: int, horizon: float, seed: int
) -> InputInstance:
    """n arrivals with times uniform on [0, horizon] (sorted) and angles
    uniform on [-theta, theta]; deterministic for a given seed."""
    if n < 0:
        raise InstanceError(f"n must be >= 0, got {n}")
    if horizon <= 0.0:
        raise InstanceError(f"horizon must be > 0, got {horizon}")
    rng = random.Random(seed)
    times = sorted(rng.uniform(0.0, horizon) for _ in range(n))
    angles = [rng.uniform(-params.theta, params.theta) for _ in range(n)]
    return validate(
        InputInstance(
            params=params,
            arrivals=tuple(ArrivalEvent(t, a) for t, a in zip(times, angles)),
        )
    )


def _num(x: float) -> float:
    if not isinstance(x, (int, float)) or isinstance(x, bool) or not math.isfinite(x):
        raise InstanceError(f"expected a finite number, got {x!r}")
    return float(x)


def write_instance(instance: InputInstance) -> bytes:
    """Serialize to the UTF-8 JSON document format (17 significant digits)."""
    p = instance.params

    def fmt(x: float) -> str:
        return format(x, ".17g")

    parts = [
        "{",
        f'"theta": {fmt(p.theta)}, ',
        f'"rho": {fmt(p.rho)}, ',
        f'"v": {fmt(p.v)}, ',
        f'"r": {fmt(p.r)}, ',
        '"arrivals": [',
        ", ".join(
            f'{{"t": {fmt(a.time)}, "alpha": {fmt(a.angle)}}}'
            for a in instance.arrivals
        ),
        "]}",
    ]
    return "".join(parts).encode("utf-8")


def read_instance(data: bytes | str) -> InputInstance:
    """Parse an instance document; rejects non-finite numbers.

    Parse errors carry the line and column of the offending token.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")

    def _reject_constant(name: str):
        raise InstanceError(f"non-finite number {name!r} in instance document")

    try:
        doc = json.loads(data, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise InstanceError(
            f"malformed instance document at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, dict):
        raise InstanceError("instance document must be a JSON object")
    try:
        params = ProblemParams(
            theta=_num(doc["theta"]),
            rho=_num(doc["rho"]),
            v=_num(doc["v"]),
            r=_num(doc["r"]),
        )
        raw_arrivals = doc["arrivals"]
    except KeyError as exc:
        raise InstanceError(f"missing field {exc.args[0]!r} in instance document") from exc
    if not isinstance(raw_arrivals, list):
        raise InstanceError('"arrivals" must be a list')
    arrivals = []
    for k, item in enumerate(raw_arrivals):
        if not isinstance(item, dict) or "t" not in item or "alpha" not in item:
            raise InstanceError(f'arrival {k} must be an object with "t" and "alpha"')
        arrivals.append(ArrivalEvent(time=_num(item["t"]), angle=_num(item["alpha"])))
    return validate(InputInstance(params=params, arrivals=tuple(arrivals)))
