"""Node placement, unit-disk reachability, and random-walk mobility.

Placements are deterministic; mobility draws come from per-node named streams.
Nodes reflect off the arena walls (angle of incidence mirrored) and pick a new
uniform direction at fixed leg boundaries, keeping a constant speed throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from random import Random

from .engine import MICROS, Simulator

LEG_DURATION = 5.0  # seconds per randomly chosen direction


@dataclass
class Arena:
    width: float
    height: float
    tx_radius: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0 or self.tx_radius <= 0:
            raise ValueError("arena dimensions and radius must be positive")


@dataclass
class NodeKinematics:
    x: float
    y: float
    vx: float
    vy: float
    leg_end: float


def grid_topology(rows: int, cols: int, spacing: float) -> list[tuple[float, float]]:
    """Row-major grid: node (r, c) sits at (c * spacing, r * spacing)."""
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    return [(c * spacing, r * spacing) for r in range(rows) for c in range(cols)]


def linear_topology(n: int, spacing: float) -> list[tuple[float, float]]:
    """Collinear chain along the x axis; with radius < 2*spacing each interior
    node hears exactly its two adjacent neighbors."""
    if n < 2:
        raise ValueError("a chain needs at least 2 nodes")
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    return [(i * spacing, 0.0) for i in range(n)]


def neighbors(
    positions: list[tuple[float, float]], tx_radius: float
) -> dict[int, list[int]]:
    """Symmetric unit-disk adjacency: i ~ j iff euclidean distance <= tx_radius."""
    if tx_radius <= 0:
        raise ValueError("tx_radius must be positive")
    r2 = tx_radius * tx_radius
    adj: dict[int, list[int]] = {i: [] for i in range(len(positions))}
    for i, (xi, yi) in enumerate(positions):
        for j in range(i + 1, len(positions)):
            xj, yj = positions[j]
            dx, dy = xi - xj, yi - yj
            if dx * dx + dy * dy <= r2:
                adj[i].append(j)
                adj[j].append(i)
    return adj


def mobility_step(
    kin: NodeKinematics, speed: float, arena: Arena, rand: Random, now: float,
    leg_duration: float = LEG_DURATION,
) -> NodeKinematics:
    """Start a new leg at `now`: direction uniform in [0, 2*pi), constant speed."""
    theta = rand.random() * 2.0 * math.pi
    return NodeKinematics(
        x=kin.x,
        y=kin.y,
        vx=speed * math.cos(theta),
        vy=speed * math.sin(theta),
        leg_end=now + leg_duration,
    )


class RandomWalk:
    """Event-driven random walk for a set of nodes inside an arena.

    Between events each node moves linearly; wall contacts reflect the
    velocity component and leg boundaries redraw the direction.  Positions are
    exact linear interpolations at any queried time, so adjacency can be
    sampled whenever a transmission begins.
    """

    def __init__(
        self,
        sim: Simulator,
        arena: Arena,
        positions: list[tuple[float, float]],
        speed: float,
        stream_prefix: str = "mobility",
    ):
        self.sim = sim
        self.arena = arena
        self.speed = speed
        self._stream_prefix = stream_prefix
        self._x = [p[0] for p in positions]
        self._y = [p[1] for p in positions]
        self._vx = [0.0] * len(positions)
        self._vy = [0.0] * len(positions)
        self._anchor_us = [sim.now_us] * len(positions)
        self._leg_end = [0.0] * len(positions)
        if speed > 0:
            for i in range(len(positions)):
                self._new_leg(i)

    def position(self, i: int) -> tuple[float, float]:
        dt = (self.sim.now_us - self._anchor_us[i]) / MICROS
        x = self._x[i] + self._vx[i] * dt
        y = self._y[i] + self._vy[i] * dt
        # clamp float dust at the walls
        x = min(max(x, 0.0), self.arena.width)
        y = min(max(y, 0.0), self.arena.height)
        return x, y

    def positions(self) -> list[tuple[float, float]]:
        return [self.position(i) for i in range(len(self._x))]

    def _rand(self, i: int) -> Random:
        return self.sim.stream(f"{self._stream_prefix}.{i}")

    def _new_leg(self, i: int) -> None:
        kin = NodeKinematics(self._x[i], self._y[i], self._vx[i], self._vy[i], 0.0)
        kin = mobility_step(kin, self.speed, self.arena, self._rand(i), self.sim.now)
        self._vx[i], self._vy[i] = kin.vx, kin.vy
        self._anchor_us[i] = self.sim.now_us
        self._leg_end[i] = kin.leg_end
        self._schedule_next(i)

    def _schedule_next(self, i: int) -> None:
        dt_leg = self._leg_end[i] - self.sim.now
        dt = max(dt_leg, 0.0)
        wall = False
        for v, p, hi in (
            (self._vx[i], self._x[i], self.arena.width),
            (self._vy[i], self._y[i], self.arena.height),
        ):
            if v > 0:
                t = (hi - p) / v
            elif v < 0:
                t = -p / v
            else:
                continue
            if t < dt:
                dt, wall = t, True
        self.sim.schedule_us(
            self.sim.now_us + to_us_ceil(dt), self._on_event, i, wall
        )

    def _on_event(self, i: int, wall: bool) -> None:
        x, y = self.position(i)
        self._x[i], self._y[i] = x, y
        self._anchor_us[i] = self.sim.now_us
        if wall:
            eps = 1e-9
            if x <= eps or x >= self.arena.width - eps:
                self._vx[i] = -self._vx[i]
            if y <= eps or y >= self.arena.height - eps:
                self._vy[i] = -self._vy[i]
            self._schedule_next(i)
        else:
            self._new_leg(i)


def to_us_ceil(seconds: float) -> int:
    """Round a delay up to whole microseconds so wall events never fire early."""
    return int(math.ceil(seconds * MICROS - 1e-9))
