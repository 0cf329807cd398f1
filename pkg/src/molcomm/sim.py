"""Monte-Carlo model of the diffusion channel.

Molecules are released uniformly on the surface of a transmitter sphere
centred at the origin, random-walk with per-axis Gaussian increments of
variance ``2 * D * dt``, bounce off an infinite circular cylinder of radius
``r_v`` around the z-axis, and are absorbed by a receiver sphere whose centre
sits at ``(0, 0, r_t + d + r_r)``, so ``d`` is the surface-to-surface gap.

Randomness comes from one ``numpy.random.Generator(PCG64(seed))`` per
simulation, consumed in this order:

1. ``N x 3`` standard normals for the release points (molecule-major).
2. For every step, ``n_alive x 3`` standard normals for the increments of the
   molecules still in flight, in index order.
3. In ``"bridge"`` absorption mode, then ``n_alive`` uniforms for the
   sub-step crossing test, in the same order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np
from scipy.special import erfc

from .errors import GeometryError, InvalidParameterError, ParseError

MAX_REFLECTIONS = 10
CLAMP_FACTOR = 1.0 - 1e-9
ABSORPTION_MODES = ("bridge", "endpoint")


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise InvalidParameterError(f"non-finite coordinate in {self!r}")

    @classmethod
    def from_array(cls, a) -> Point3:
        a = np.asarray(a, dtype=float)
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


@dataclass(frozen=True)
class ChannelParams:
    """Full configuration of one channel simulation.

    ``r_v=None`` resolves to ``2 * max(r_t, r_r)``.
    """

    r_t: float
    r_r: float
    d: float
    diff: float
    n_molecules: int = 1000
    n_steps: int = 3000
    dt: float = 0.01
    seed: int = 0
    r_v: float | None = None
    absorption: str = "bridge"

    def __post_init__(self):
        if self.r_v is None:
            object.__setattr__(self, "r_v", 2.0 * max(self.r_t, self.r_r))
        for name in ("r_t", "r_r", "d", "diff", "dt", "r_v"):
            try:
                object.__setattr__(self, name, float(getattr(self, name)))
            except (TypeError, ValueError):
                raise InvalidParameterError(f"{name} must be a number, got {getattr(self, name)!r}") from None
        for name in ("r_t", "r_r", "d", "dt", "r_v"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidParameterError(f"{name} must be a positive finite number, got {v!r}")
        if not (math.isfinite(self.diff) and self.diff >= 0):
            raise InvalidParameterError(f"diff must be >= 0, got {self.diff!r}")
        if self.r_v <= max(self.r_t, self.r_r):
            raise InvalidParameterError(
                f"r_v={self.r_v!r} must exceed max(r_t, r_r)={max(self.r_t, self.r_r)!r}"
            )
        if int(self.n_molecules) != self.n_molecules or self.n_molecules < 1:
            raise InvalidParameterError(f"n_molecules must be a positive integer, got {self.n_molecules!r}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise InvalidParameterError(f"n_steps must be a positive integer, got {self.n_steps!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise InvalidParameterError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.absorption not in ABSORPTION_MODES:
            raise InvalidParameterError(f"absorption must be one of {ABSORPTION_MODES}, got {self.absorption!r}")
        object.__setattr__(self, "n_molecules", int(self.n_molecules))
        object.__setattr__(self, "n_steps", int(self.n_steps))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def transmitter_center(self) -> np.ndarray:
        return np.zeros(3)

    @property
    def receiver_center(self) -> np.ndarray:
        return np.array([0.0, 0.0, self.r_t + self.d + self.r_r])


@dataclass(frozen=True)
class ReflectionSolution:
    a: float
    b: float
    c: float
    t1: float
    t2: float
    chosen_root: int
    intersection: Point3
    reflected: Point3


@dataclass(frozen=True, eq=False)
class SimResult:
    cumulative_hits: np.ndarray
    map: float
    params: ChannelParams = field(repr=False)

    @property
    def seed(self) -> int:
        return self.params.seed

    @property
    def absorbed_fraction(self) -> float:
        return float(self.cumulative_hits[-1]) / self.params.n_molecules

    def __eq__(self, other):
        if not isinstance(other, SimResult):
            return NotImplemented
        return (
            self.params == other.params
            and self.map == other.map
            and np.array_equal(self.cumulative_hits, other.cumulative_hits)
        )

    def to_text(self) -> str:
        lines = ["# molcomm simulation result v1"]
        for f in fields(ChannelParams):
            value = getattr(self.params, f.name)
            lines.append(f"{f.name} = {value if isinstance(value, str) else repr(value)}")
        lines.append(f"map = {self.map!r}")
        lines.append("cumulative_hits = " + " ".join(str(int(h)) for h in self.cumulative_hits))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> SimResult:
        kv = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ParseError(f"expected 'key = value', got {raw!r}", lineno)
            kv[key.strip()] = (value.strip(), lineno)
        try:
            kw = {}
            for f in fields(ChannelParams):
                value, lineno = kv.pop(f.name)
                if f.name in ("n_molecules", "n_steps", "seed"):
                    kw[f.name] = int(value)
                elif f.name == "absorption":
                    kw[f.name] = value
                else:
                    kw[f.name] = float(value)
            map_value = float(kv.pop("map")[0])
            hits_text = kv.pop("cumulative_hits")[0]
            hits = np.array([int(h) for h in hits_text.split()], dtype=np.int64)
        except KeyError as exc:
            raise ParseError(f"missing key {exc.args[0]!r}") from None
        except ValueError as exc:
            raise ParseError(str(exc)) from None
        return cls(hits, map_value, ChannelParams(**kw))


def sample_sphere_surface(center, radius: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``size`` points uniformly on a sphere surface, shape ``(size, 3)``."""
    if not radius > 0:
        raise InvalidParameterError(f"radius must be positive, got {radius!r}")
    v = rng.standard_normal((size, 3))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    return np.asarray(center, dtype=float) + radius * (v / norms)


def sample_transmitter_point(center: Point3, radius: float, rng: np.random.Generator) -> Point3:
    return Point3.from_array(sample_sphere_surface(center.to_array(), radius, 1, rng)[0])


def diffuse(positions: np.ndarray, diff: float, dt: float, rng: np.random.Generator) -> np.ndarray:
    """One Brownian step for every row of ``positions``."""
    if not diff >= 0:
        raise InvalidParameterError(f"diffusion coefficient must be >= 0, got {diff!r}")
    if not dt > 0:
        raise InvalidParameterError(f"dt must be positive, got {dt!r}")
    sd = math.sqrt(2.0 * diff * dt)
    return positions + sd * rng.standard_normal(positions.shape)


def diffusion_step(p: Point3, diff: float, dt: float, rng: np.random.Generator) -> Point3:
    return Point3.from_array(diffuse(p.to_array(), diff, dt, rng))


def _roots(a, b, c):
    # Cancellation-free quadratic roots; t1 >= t2.
    disc = b * b - 4.0 * a * c
    sq = np.sqrt(np.maximum(disc, 0.0))
    q = -0.5 * (b + np.where(b >= 0, sq, -sq))
    safe_q = np.where(q == 0, 1.0, q)
    r1 = np.where(q == 0, 0.0, q / a)
    r2 = np.where(q == 0, 0.0, c / safe_q)
    return disc, np.maximum(r1, r2), np.minimum(r1, r2)


def reflect_off_vessel(p1: Point3, p2: Point3, r_v: float) -> ReflectionSolution:
    """Reflect a step that left the cylinder ``x^2 + y^2 = r_v^2``.

    The segment ``p1 -> p2`` is intersected with the wall, the intersection
    nearest ``p1`` is kept (the one ahead of ``p1`` on ties) and ``p2`` is mirrored
    through it in x and y. ``z`` is carried over unchanged.
    """
    if not r_v > 0:
        raise InvalidParameterError(f"r_v must be positive, got {r_v!r}")
    if math.hypot(p1.x, p1.y) > r_v * (1 + 1e-12):
        raise GeometryError(f"pre-step point {p1} is outside the vessel of radius {r_v}")
    if math.hypot(p2.x, p2.y) <= r_v:
        raise GeometryError(f"post-step point {p2} is not outside the vessel of radius {r_v}")
    r_v = float(r_v)
    dx, dy = p2.x - p1.x, p2.y - p1.y
    a = dx * dx + dy * dy
    b = 2.0 * (dx * p1.x + dy * p1.y)
    c = p1.x * p1.x + p1.y * p1.y - r_v * r_v
    if a == 0.0:
        raise GeometryError("step has no lateral component")
    disc, t1, t2 = (float(v) for v in _roots(a, b, c))
    if disc < 0:
        raise GeometryError(f"negative discriminant {disc!r}")
    dist1 = a * t1 * t1
    dist2 = a * t2 * t2
    # on a tie keep the crossing ahead of p1 (t1 >= t2)
    chosen = 2 if dist2 < dist1 else 1
    t = t1 if chosen == 1 else t2
    xi = p1.x + dx * t
    yi = p1.y + dy * t
    zi = p1.z + (p2.z - p1.z) * t
    return ReflectionSolution(
        a=a, b=b, c=c, t1=t1, t2=t2, chosen_root=chosen,
        intersection=Point3(xi, yi, zi),
        reflected=Point3(2.0 * xi - p2.x, 2.0 * yi - p2.y, p2.z),
    )


def _reflect_batch(p1: np.ndarray, p2: np.ndarray, r_v: float) -> np.ndarray:
    """Vectorised wall handling for rows of ``p2`` that are laterally outside.

    The first bounce uses the nearest-intersection rule. A bounce that still
    lands outside is re-reflected from the previous wall point through the far
    crossing; after ``MAX_REFLECTIONS`` the point is pulled radially inside.
    """
    out = p2.copy()
    r2 = r_v * r_v
    pre = p1[:, :2].copy()
    post = out[:, :2]
    idx = np.flatnonzero(np.einsum("ij,ij->i", post, post) > r2)
    first = True
    for _ in range(MAX_REFLECTIONS):
        if idx.size == 0:
            break
        s = pre[idx]
        e = post[idx]
        delta = e - s
        a = np.einsum("ij,ij->i", delta, delta)
        b = 2.0 * np.einsum("ij,ij->i", delta, s)
        c = np.einsum("ij,ij->i", s, s) - r2
        _, t1, t2 = _roots(a, b, c)
        if first:
            t = np.where(t2 * t2 < t1 * t1, t2, t1)
        else:
            t = t1
        hit = s + delta * t[:, None]
        post[idx] = 2.0 * hit - e
        pre[idx] = hit
        first = False
        moved = post[idx]
        idx = idx[np.einsum("ij,ij->i", moved, moved) > r2]
    if idx.size:
        lateral = post[idx]
        post[idx] = lateral * (r_v * CLAMP_FACTOR / np.linalg.norm(lateral, axis=1))[:, None]
    return out


def compute_map(cumulative_hits, n_molecules: int) -> float:
    """Time-average of the cumulative absorbed fraction."""
    hits = np.asarray(cumulative_hits)
    if n_molecules < 1:
        raise InvalidParameterError(f"n_molecules must be >= 1, got {n_molecules!r}")
    if hits.ndim != 1 or hits.size == 0:
        raise InvalidParameterError("cumulative_hits must be a non-empty 1-D sequence")
    if np.any(hits < 0) or np.any(hits > n_molecules):
        raise InvalidParameterError(f"cumulative_hits must lie in [0, {n_molecules}]")
    if np.any(np.diff(hits) < 0):
        raise InvalidParameterError("cumulative_hits must be non-decreasing")
    return float(np.mean(hits / n_molecules))


def simulate_channel(params: ChannelParams) -> SimResult:
    rng = np.random.Generator(np.random.PCG64(params.seed))
    n, T = params.n_molecules, params.n_steps
    centre = params.receiver_center
    rr2 = params.r_r * params.r_r
    var = 2.0 * params.diff * params.dt
    sd = math.sqrt(var)
    bridge = params.absorption == "bridge"

    pos = sample_sphere_surface(params.transmitter_center, params.r_t, n, rng)
    alive = np.arange(n)
    hits = np.zeros(T, dtype=np.int64)
    absorbed = 0
    for step in range(T):
        if alive.size == 0:
            hits[step:] = absorbed
            break
        old = pos[alive]
        new = old + sd * rng.standard_normal(old.shape)
        new = _reflect_batch(old, new, params.r_v)
        rel = new - centre
        dist2 = np.einsum("ij,ij->i", rel, rel)
        caught = dist2 <= rr2
        if bridge:
            u = rng.random(alive.size)
            if var > 0:
                rel0 = old - centre
                h0 = np.sqrt(np.einsum("ij,ij->i", rel0, rel0)) - params.r_r
                h1 = np.sqrt(dist2) - params.r_r
                gap = np.maximum(h0, 0.0) * np.maximum(h1, 0.0)
                caught |= u < np.exp(-2.0 * gap / var)
        pos[alive] = new
        absorbed += int(np.count_nonzero(caught))
        alive = alive[~caught]
        hits[step] = absorbed
    hits.setflags(write=False)
    return SimResult(hits, compute_map(hits, n), params)


def first_passage_probability(r0: float, r_r: float, diff: float, t: float) -> float:
    """Probability a free 3-D Brownian particle started at distance ``r0`` from
    the centre of an absorbing sphere of radius ``r_r`` has hit it by time ``t``."""
    if r0 <= r_r:
        return 1.0
    if t <= 0 or diff <= 0:
        return 0.0
    return (r_r / r0) * float(erfc((r0 - r_r) / math.sqrt(4.0 * diff * t)))


def with_seed(params: ChannelParams, seed: int) -> ChannelParams:
    return replace(params, seed=seed)
