"""Planar integration regions: rectangles, discs, annuli, rectangle minus disc.

Each region supplies a quadrature rule, point membership, distance to its
boundary and the intersection of rays with itself (used by the fractional
seminorm).
"""
import numpy as np

from .errors import ValidationError

_INF = np.inf


def _gauss(order):
    return np.polynomial.legendre.leggauss(order)


def _slab(p, e, lo, hi):
    """Parametric interval of ``p + t e`` inside ``[lo, hi]`` along one axis."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t1 = (lo - p) / e
        t2 = (hi - p) / e
    tmin = np.where(e == 0, np.where((p >= lo) & (p <= hi), -_INF, _INF), np.minimum(t1, t2))
    tmax = np.where(e == 0, np.where((p >= lo) & (p <= hi), _INF, -_INF), np.maximum(t1, t2))
    return tmin, tmax


class Region:
    empty = False

    def describe(self):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.describe()})"


class Rect(Region):
    def __init__(self, x0, x1, y0, y1):
        self.x0, self.x1, self.y0, self.y1 = map(float, (x0, x1, y0, y1))
        self.empty = not (self.x1 > self.x0 and self.y1 > self.y0)

    @property
    def area(self):
        return 0.0 if self.empty else (self.x1 - self.x0) * (self.y1 - self.y0)

    def describe(self):
        return {"type": "rect", "bounds": [self.x0, self.x1, self.y0, self.y1]}

    def cell_diameter(self, n):
        return float(np.hypot((self.x1 - self.x0) / n, (self.y1 - self.y0) / n))

    def quadrature(self, n=32, order=4):
        """Tensor Gauss rule on an ``n x n`` grid of cells."""
        if self.empty:
            return np.empty(0), np.empty(0), np.empty(0)
        g, gw = _gauss(order)

        def axis(a, b):
            br = np.linspace(a, b, n + 1)
            lo, hi = br[:-1, None], br[1:, None]
            return (0.5 * (lo + hi) + 0.5 * (hi - lo) * g).ravel(), (0.5 * (hi - lo) * gw).ravel()

        xs, wx = axis(self.x0, self.x1)
        ys, wy = axis(self.y0, self.y1)
        X, Y = np.meshgrid(xs, ys)
        return X.ravel(), Y.ravel(), np.outer(wy, wx).ravel()

    def contains(self, x, y):
        return (x > self.x0) & (x < self.x1) & (y > self.y0) & (y < self.y1)

    def boundary_distance(self, x, y):
        return np.minimum(np.minimum(x - self.x0, self.x1 - x), np.minimum(y - self.y0, self.y1 - y))

    def ray_segments(self, x, y, ex, ey):
        ax, bx = _slab(x, ex, self.x0, self.x1)
        ay, by = _slab(y, ey, self.y0, self.y1)
        a = np.maximum(np.maximum(ax, ay), 0.0)
        b = np.maximum(np.minimum(bx, by), a)
        return a[..., None], b[..., None]


class Disc(Region):
    def __init__(self, cx, cy, r):
        self.cx, self.cy, self.r = float(cx), float(cy), float(r)
        self.empty = not self.r > 0

    @property
    def area(self):
        return np.pi * self.r ** 2

    def describe(self):
        return {"type": "disc", "center": [self.cx, self.cy], "radius": self.r}

    def quadrature(self, n=8, order=4, r_inner=0.0):
        """Polar rule: Gauss in radius on ``n`` intervals, trapezoid in angle."""
        if self.empty:
            return np.empty(0), np.empty(0), np.empty(0)
        g, gw = _gauss(order)
        br = np.linspace(r_inner, self.r, n + 1)
        lo, hi = br[:-1, None], br[1:, None]
        rs = (0.5 * (lo + hi) + 0.5 * (hi - lo) * g).ravel()
        wr = (0.5 * (hi - lo) * gw).ravel() * rs
        nth = max(16, 4 * n * order)
        th = 2 * np.pi * (np.arange(nth) + 0.5) / nth
        R, T = np.meshgrid(rs, th)
        W = np.broadcast_to(wr * (2 * np.pi / nth), R.shape)
        return (self.cx + R * np.cos(T)).ravel(), (self.cy + R * np.sin(T)).ravel(), W.ravel().copy()

    def contains(self, x, y):
        return np.hypot(x - self.cx, y - self.cy) < self.r

    def boundary_distance(self, x, y):
        return self.r - np.hypot(x - self.cx, y - self.cy)

    def chord(self, x, y, ex, ey):
        """Unclipped parametric interval of the ray inside the disc (empty: a == b)."""
        px, py = x - self.cx, y - self.cy
        bq = px * ex + py * ey
        cq = px * px + py * py - self.r ** 2
        disc = bq * bq - cq
        sq = np.sqrt(np.maximum(disc, 0.0))
        t1, t2 = -bq - sq, -bq + sq
        hit = disc > 0
        return np.where(hit, t1, 0.0), np.where(hit, t2, 0.0)

    def ray_segments(self, x, y, ex, ey):
        t1, t2 = self.chord(x, y, ex, ey)
        a = np.maximum(t1, 0.0)
        b = np.maximum(t2, a)
        return a[..., None], b[..., None]


class Annulus(Region):
    def __init__(self, cx, cy, r_in, r_out):
        self.outer = Disc(cx, cy, r_out)
        self.hole = Disc(cx, cy, r_in)
        self.empty = not r_out > r_in

    @property
    def area(self):
        return self.outer.area - self.hole.area

    def describe(self):
        return {"type": "annulus", "center": [self.outer.cx, self.outer.cy],
                "radii": [self.hole.r, self.outer.r]}

    def quadrature(self, n=8, order=4):
        return self.outer.quadrature(n, order, r_inner=self.hole.r)

    def contains(self, x, y):
        return self.outer.contains(x, y) & (np.hypot(x - self.hole.cx, y - self.hole.cy) > self.hole.r)

    def boundary_distance(self, x, y):
        return np.minimum(self.outer.boundary_distance(x, y), -self.hole.boundary_distance(x, y))

    def ray_segments(self, x, y, ex, ey):
        return _subtract(self.outer.ray_segments(x, y, ex, ey), self.hole, x, y, ex, ey)


class RectMinusDisc(Region):
    """Rectangle with a disc removed; the disc must lie inside the rectangle."""

    def __init__(self, rect, hole):
        if (hole.cx - hole.r < rect.x0 or hole.cx + hole.r > rect.x1
                or hole.cy - hole.r < rect.y0 or hole.cy + hole.r > rect.y1):
            raise ValidationError("hole must lie inside the rectangle")
        self.rect, self.hole = rect, hole
        self.empty = rect.empty

    @property
    def area(self):
        return self.rect.area - self.hole.area

    def describe(self):
        return {"type": "rect_minus_disc", "rect": self.rect.describe(), "hole": self.hole.describe()}

    def quadrature(self, n=32, order=4):
        """Rectangle rule plus the disc rule with negated weights."""
        x1, y1, w1 = self.rect.quadrature(n, order)
        hn = max(2, int(np.ceil(n * self.hole.r / (self.rect.x1 - self.rect.x0))) + 1)
        x2, y2, w2 = self.hole.quadrature(hn, order)
        return np.r_[x1, x2], np.r_[y1, y2], np.r_[w1, -w2]

    def cell_diameter(self, n):
        return self.rect.cell_diameter(n)

    def contains(self, x, y):
        return self.rect.contains(x, y) & (np.hypot(x - self.hole.cx, y - self.hole.cy) > self.hole.r)

    def boundary_distance(self, x, y):
        return np.minimum(self.rect.boundary_distance(x, y), -self.hole.boundary_distance(x, y))

    def ray_segments(self, x, y, ex, ey):
        return _subtract(self.rect.ray_segments(x, y, ex, ey), self.hole, x, y, ex, ey)


def _subtract(segs, hole, x, y, ex, ey):
    """Remove the disc chord from a single segment, giving up to two segments."""
    a, b = segs[0][..., 0], segs[1][..., 0]
    c1, c2 = hole.chord(x, y, ex, ey)
    first_b = np.clip(c1, a, b)
    second_a = np.clip(c2, a, b)
    # no chord: keep [a, b] whole
    nochord = c2 <= c1
    first_b = np.where(nochord, b, first_b)
    second_a = np.where(nochord, b, second_a)
    return np.stack([a, second_a], -1), np.stack([first_b, b], -1)
