"""Exact 2D computational geometry over the rationals.

Internal helpers for the diagram machinery: segment intersection, point
location, polygon predicates.  No tolerances anywhere; every predicate is a
sign computation on Fractions.
"""

from fractions import Fraction

from .lattice import cross, sub


def orient(a, b, c):
    """Sign of the turn a->b->c: +1 left, -1 right, 0 collinear."""
    d = cross(sub(b, a), sub(c, a))
    return (d > 0) - (d < 0)


def on_segment(p, a, b):
    """p lies on the closed segment [a, b]."""
    if orient(a, b, p) != 0:
        return False
    return (
        min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
    )


def strictly_between(p, a, b):
    return on_segment(p, a, b) and p != a and p != b


def seg_intersection(a, b, c, d):
    """Intersection of closed segments [a,b] and [c,d].

    Returns one of
      ('none',)
      ('point', p, t, s)   with p = a + t*(b-a) = c + s*(d-c), exact Fractions
      ('overlap', p, q)    a shared sub-segment with p != q
    """
    r = sub(b, a)
    s = sub(d, c)
    denom = cross(r, s)
    qp = sub(c, a)
    if denom == 0:
        if cross(qp, r) != 0:
            return ("none",)
        # collinear: project on r
        rr = r[0] * r[0] + r[1] * r[1]
        if rr == 0:
            if on_segment(a, c, d):
                return ("point", a, Fraction(0), _param(c, d, a))
            return ("none",)
        t0 = Fraction(qp[0] * r[0] + qp[1] * r[1], rr)
        t1 = t0 + Fraction(s[0] * r[0] + s[1] * r[1], rr)
        lo, hi = min(t0, t1), max(t0, t1)
        lo = max(lo, Fraction(0))
        hi = min(hi, Fraction(1))
        if lo > hi:
            return ("none",)
        p = (a[0] + lo * r[0], a[1] + lo * r[1])
        q = (a[0] + hi * r[0], a[1] + hi * r[1])
        if p == q:
            return ("point", p, lo, _param(c, d, p))
        return ("overlap", p, q)
    t = Fraction(cross(qp, s), denom)
    u = Fraction(cross(qp, r), denom)
    if 0 <= t <= 1 and 0 <= u <= 1:
        p = (a[0] + t * r[0], a[1] + t * r[1])
        return ("point", p, t, u)
    return ("none",)


def _param(a, b, p):
    """Parameter t with p = a + t (b - a), for p known collinear on [a,b]."""
    r = sub(b, a)
    if r[0]:
        return Fraction(p[0] - a[0], 1) / r[0]
    return Fraction(p[1] - a[1], 1) / r[1]


def segments_cross_properly(a, b, c, d):
    """True when [a,b] and [c,d] meet at a single interior point of both."""
    kind = seg_intersection(a, b, c, d)
    if kind[0] != "point":
        return False
    _, _, t, u = kind
    return 0 < t < 1 and 0 < u < 1


def polygon_area2(points):
    """Twice the signed area (positive for counterclockwise)."""
    total = 0
    n = len(points)
    for i in range(n):
        total += cross(points[i], points[(i + 1) % n])
    return total


def is_clockwise(points):
    return polygon_area2(points) < 0


def point_in_polygon(p, points):
    """Exact location of p in the polygon: 1 inside, 0 on boundary, -1 outside.

    Crossing-number walk with exact handling of vertices on the ray.
    """
    n = len(points)
    for i in range(n):
        if on_segment(p, points[i], points[(i + 1) % n]):
            return 0
    inside = False
    for i in range(n):
        a, b = points[i], points[(i + 1) % n]
        ay, by = a[1], b[1]
        if (ay > p[1]) != (by > p[1]):
            # x coordinate of the crossing of edge with the horizontal line
            xqy = a[0] + (p[1] - ay) * (b[0] - a[0]) / (by - ay)
            if xqy > p[0]:
                inside = not inside
    return 1 if inside else -1


def polyline_self_intersects(points):
    """True when consecutive-segment polyline meets itself away from joints."""
    segs = list(zip(points, points[1:]))
    for i in range(len(segs)):
        for j in range(i + 1, len(segs)):
            hit = seg_intersection(*segs[i], *segs[j])
            if hit[0] == "none":
                continue
            if hit[0] == "overlap":
                return True
            p = hit[1]
            if j == i + 1 and p == segs[i][1]:
                continue
            return True
    return False


def polygon_is_simple(points):
    """No repeated vertices, no edge crossings except shared endpoints."""
    n = len(points)
    if len(set(points)) != n:
        return False
    for i in range(n):
        a, b = points[i], points[(i + 1) % n]
        if a == b:
            return False
        for j in range(i + 1, n):
            c, d = points[j], points[(j + 1) % n]
            hit = seg_intersection(a, b, c, d)
            if hit[0] == "none":
                continue
            if hit[0] == "overlap":
                return False
            p = hit[1]
            adjacent = j == i + 1 or (i == 0 and j == n - 1)
            if adjacent and (p == b or p == a):
                continue
            return False
    return True


def segment_clear_of_polyline(a, b, polyline, allow_endpoints=()):
    """[a,b] avoids the polyline except possibly at listed endpoint points."""
    for c, d in zip(polyline, polyline[1:]):
        hit = seg_intersection(a, b, c, d)
        if hit[0] == "none":
            continue
        if hit[0] == "overlap":
            return False
        if hit[1] in allow_endpoints:
            continue
        return False
    return True


def convex_position(points):
    """All turns weakly the same way (used for sanity checks on fixtures)."""
    n = len(points)
    signs = set()
    for i in range(n):
        s = orient(points[i], points[(i + 1) % n], points[(i + 2) % n])
        if s:
            signs.add(s)
    return len(signs) <= 1
