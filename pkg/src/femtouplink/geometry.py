"""Hexagonal macrocell lattice, region predicates, and spatial samplers.

The macrocell base stations sit on the lattice
``{(3/2*a*Rc, sqrt(3)/2*a*Rc + sqrt(3)*b*Rc) : a, b integers}``.  The Voronoi
cell of each lattice point is a regular hexagon with circumradius ``Rc``
(vertices along the +x axis, apothem ``sqrt(3)/2*Rc``).  All randomness flows
through explicit ``numpy.random.Generator`` streams so runs are reproducible
from ``(seed, stream id)``; see :mod:`femtouplink.rng`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SQRT3 = math.sqrt(3.0)

# Offsets checked around the rounded lattice index; the lattice basis is well
# conditioned, so a 3x3 neighbourhood always contains the nearest point.
_NEIGHBOR_OFFSETS = [(da, db) for da in (-1, 0, 1) for db in (-1, 0, 1)]


@dataclass(frozen=True)
class Point:
    """2-D location in the length unit of the enclosing config (meters)."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)

    def norm(self) -> float:
        return math.hypot(self.x, self.y)


@dataclass(frozen=True)
class HexGrid:
    """Infinite hexagonal macrocell lattice with cell circumradius ``cell_radius``."""

    cell_radius: float

    def __post_init__(self) -> None:
        if not (self.cell_radius > 0 and math.isfinite(self.cell_radius)):
            raise ValueError(f"cell_radius must be positive, got {self.cell_radius}")

    def bs_position(self, a: int, b: int) -> Point:
        """Lattice point for integer indices (a, b)."""
        rc = self.cell_radius
        return Point(1.5 * a * rc, (SQRT3 / 2.0) * a * rc + SQRT3 * b * rc)


@dataclass(frozen=True)
class DiskRegion:
    """Closed disk of radius ``radius`` around ``center``."""

    center: Point
    radius: float

    def __post_init__(self) -> None:
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError(f"radius must be positive, got {self.radius}")

    @property
    def area(self) -> float:
        return math.pi * self.radius**2


@dataclass(frozen=True)
class IntensityProfile:
    """Radial step intensity for the femto-UE daughter process.

    ``break_radii`` are strictly increasing annulus outer edges, the last one
    being the femtocell radius; ``densities[i]`` applies on
    ``(break_radii[i-1], break_radii[i]]``.  Restricting to radial steps keeps
    inverse-CDF sampling exact.
    """

    break_radii: tuple[float, ...]
    densities: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.break_radii) != len(self.densities) or not self.break_radii:
            raise ValueError("break_radii and densities must be equal-length and non-empty")
        prev = 0.0
        for r in self.break_radii:
            if not (r > prev and math.isfinite(r)):
                raise ValueError(f"break radii must be strictly increasing from 0, got {self.break_radii}")
            prev = r
        if any(d < 0 or not math.isfinite(d) for d in self.densities):
            raise ValueError(f"densities must be finite and >= 0, got {self.densities}")

    @classmethod
    def constant(cls, density: float, radius: float) -> "IntensityProfile":
        return cls((float(radius),), (float(density),))

    @property
    def radius(self) -> float:
        return self.break_radii[-1]

    @property
    def nu_bar(self) -> float:
        """Mean number of points: integral of the profile over its disk."""
        total = 0.0
        prev = 0.0
        for r, d in zip(self.break_radii, self.densities):
            total += d * math.pi * (r * r - prev * prev)
            prev = r
        return total

    def scaled(self, length_scale: float, density_scale: float) -> "IntensityProfile":
        """Rescale radii by ``length_scale`` and densities by ``density_scale``."""
        return IntensityProfile(
            tuple(r * length_scale for r in self.break_radii),
            tuple(d * density_scale for d in self.densities),
        )

    def density_at(self, r: np.ndarray) -> np.ndarray:
        """Step density at radii ``r`` (0 beyond the outer radius)."""
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        prev = 0.0
        for edge, d in zip(self.break_radii, self.densities):
            out = np.where((r >= prev) & (r <= edge), d, out)
            prev = edge
        out = np.where(r > self.radius, 0.0, out)
        return out

    def sample_radii(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Exact inverse-CDF radii for ``n`` points of the step profile."""
        masses = []
        prev = 0.0
        for r, d in zip(self.break_radii, self.densities):
            masses.append(d * math.pi * (r * r - prev * prev))
            prev = r
        masses = np.array(masses)
        total = masses.sum()
        if total <= 0.0:
            raise ValueError("cannot sample radii from an all-zero profile")
        cum = np.concatenate([[0.0], np.cumsum(masses)])
        u = rng.random(n) * total
        idx = np.searchsorted(cum, u, side="right") - 1
        idx = np.clip(idx, 0, len(masses) - 1)
        inner = np.concatenate([[0.0], np.asarray(self.break_radii)])[idx]
        dens = np.asarray(self.densities)[idx]
        rem = u - cum[idx]
        return np.sqrt(inner**2 + rem / (math.pi * dens))


def nearest_bs_xy(xy: np.ndarray, cell_radius: float) -> np.ndarray:
    """Vectorized nearest lattice point for an (n, 2) array of positions.

    Ties (measure-zero hexagon boundaries) resolve to the lexicographically
    smallest (a, b) index, making the induced cells a partition of the plane.
    """
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    x = xy[:, 0] / cell_radius
    y = xy[:, 1] / cell_radius
    af = 2.0 * x / 3.0
    bf = y / SQRT3 - x / 3.0
    a0 = np.rint(af)
    b0 = np.rint(bf)

    best_d2 = np.full(x.shape, np.inf)
    best = np.zeros_like(xy)
    # Offsets visited in lexicographic (a, b) order; strict '<' keeps the
    # first (smallest) candidate on exact ties.
    for da, db in _NEIGHBOR_OFFSETS:
        a = a0 + da
        b = b0 + db
        cx = 1.5 * a
        cy = (SQRT3 / 2.0) * a + SQRT3 * b
        d2 = (x - cx) ** 2 + (y - cy) ** 2
        take = d2 < best_d2
        best_d2 = np.where(take, d2, best_d2)
        best[take, 0] = cx[take]
        best[take, 1] = cy[take]
    return best * cell_radius


def nearest_bs(p: Point, grid: HexGrid) -> Point:
    """Lattice point closest to ``p`` (lexicographic (a, b) tie-break)."""
    bs = nearest_bs_xy(np.array([[p.x, p.y]]), grid.cell_radius)[0]
    return Point(float(bs[0]), float(bs[1]))


def server_distance_xy(xy: np.ndarray, cell_radius: float) -> np.ndarray:
    """Distance from each position to its nearest lattice base station."""
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    bs = nearest_bs_xy(xy, cell_radius)
    return np.hypot(xy[:, 0] - bs[:, 0], xy[:, 1] - bs[:, 1])


def in_hexagon(p: Point, center: Point, grid: HexGrid) -> bool:
    """True iff ``p``'s nearest base station is ``center``.

    Consistent with :func:`nearest_bs` by construction, including the
    boundary tie-break.
    """
    return nearest_bs(p, grid) == center


def hex_area(grid: HexGrid) -> float:
    """Area of one macrocell: 3*sqrt(3)/2 * Rc^2."""
    return 1.5 * SQRT3 * grid.cell_radius**2


def hexagon_edge_radius(theta: np.ndarray, origin: np.ndarray | None = None) -> np.ndarray:
    """Distance from ``origin`` (inside the unit-circumradius hexagon centered
    at 0) to the hexagon boundary along direction ``theta``."""
    theta = np.asarray(theta, dtype=float)
    if origin is None or (origin[0] == 0.0 and origin[1] == 0.0):
        # r(theta) = apothem / cos(folded angle), vertices at multiples of 60 deg
        folded = np.mod(theta, math.pi / 3.0) - math.pi / 6.0
        return (SQRT3 / 2.0) / np.cos(folded)
    ox, oy = float(origin[0]), float(origin[1])
    ux = np.cos(theta)
    uy = np.sin(theta)
    t_best = np.full(theta.shape, np.inf)
    for k in range(6):
        ang = math.pi / 6.0 + k * math.pi / 3.0
        nx, ny = math.cos(ang), math.sin(ang)
        denom = nx * ux + ny * uy
        num = SQRT3 / 2.0 - (nx * ox + ny * oy)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(denom > 1e-15, num / denom, np.inf)
        t_best = np.minimum(t_best, t)
    return t_best


def sample_uniform_hexagon_xy(rng: np.random.Generator, n: int, cell_radius: float = 1.0) -> np.ndarray:
    """``n`` i.i.d. uniform points in the hexagon centered at the origin.

    Exact triangle decomposition (no rejection): pick one of the six
    center/vertex/vertex triangles, then a uniform point inside it.
    """
    k = rng.integers(0, 6, size=n)
    ang0 = k * (math.pi / 3.0)
    v1 = np.stack([np.cos(ang0), np.sin(ang0)], axis=1)
    v2 = np.stack([np.cos(ang0 + math.pi / 3.0), np.sin(ang0 + math.pi / 3.0)], axis=1)
    r1 = rng.random(n)
    r2 = rng.random(n)
    s = np.sqrt(r1)
    pts = v1 * (s * (1.0 - r2))[:, None] + v2 * (s * r2)[:, None]
    return pts * cell_radius


def sample_uniform_hexagon(rng: np.random.Generator, grid: HexGrid) -> Point:
    """One uniform point in the hexagon centered at the origin."""
    xy = sample_uniform_hexagon_xy(rng, 1, grid.cell_radius)[0]
    return Point(float(xy[0]), float(xy[1]))


def sample_ppp_window_xy(rng: np.random.Generator, density: float, window: DiskRegion) -> np.ndarray:
    """Homogeneous PPP realization in a disk window, as an (n, 2) array."""
    if density < 0:
        raise ValueError(f"density must be >= 0, got {density}")
    n = rng.poisson(density * window.area)
    r = window.radius * np.sqrt(rng.random(n))
    phi = rng.random(n) * (2.0 * math.pi)
    return np.stack(
        [window.center.x + r * np.cos(phi), window.center.y + r * np.sin(phi)], axis=1
    )


def sample_ppp_window(rng: np.random.Generator, density: float, window: DiskRegion) -> list[Point]:
    return [Point(float(x), float(y)) for x, y in sample_ppp_window_xy(rng, density, window)]


def sample_ppp_profile_xy(rng: np.random.Generator, profile: IntensityProfile, center: Point) -> np.ndarray:
    """Non-homogeneous radial PPP around ``center``: Poisson(nu_bar) count,
    inverse-CDF radii, uniform angles."""
    nu_bar = profile.nu_bar
    if nu_bar == 0.0:
        return np.empty((0, 2))
    n = rng.poisson(nu_bar)
    if n == 0:
        return np.empty((0, 2))
    r = profile.sample_radii(rng, n)
    phi = rng.random(n) * (2.0 * math.pi)
    return np.stack([center.x + r * np.cos(phi), center.y + r * np.sin(phi)], axis=1)


def sample_ppp_profile(rng: np.random.Generator, profile: IntensityProfile, center: Point) -> list[Point]:
    return [Point(float(x), float(y)) for x, y in sample_ppp_profile_xy(rng, profile, center)]
