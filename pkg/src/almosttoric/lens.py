"""Lens spaces and the surgeries built on them.

Cone bases, visible lens spaces, equivalence testing with explicit
unimodular witnesses, plumbing bases for chains of spheres, rational balls,
the generalized rational blowdown, fiber-connected sums of diagrams and
contact-structure checks on visible lens spaces.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from . import geometry as geo
from .diagram import (
    REDUCED,
    REGULAR,
    BaseDiagram,
    Edge,
    Node,
    _walk_crossings,
    apply_affine,
    identified,
    is_identified,
    normalize,
    polygon_diagram,
    smooth_components,
    transport_class,
    validate,
)
from .invariants import boundary_torus_self_intersection, edge_self_intersection
from .lattice import (
    AffineMap,
    UnimodularMatrix,
    add,
    canonical_sign,
    cf_eval,
    cf_expand,
    cross,
    dot,
    neg,
    primitive,
    scale,
    sub,
    turn,
)
from .moves import MoveError, _affine_transversal, _fresh_gluing_id, thicken


class LensError(ValueError):
    pass


@dataclass(frozen=True)
class LensSpace:
    """Normalized lens space: gcd(n,m)=1, 0 <= m < n for n >= 1; L(0,1) is
    the product of a sphere and a circle."""

    n: int
    m: int
    orientation: int = 1

    def __post_init__(self):
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +-1")
        if self.n < 0 or gcd(self.n, self.m) != 1:
            raise ValueError("need n >= 0 and gcd(n, m) = 1")
        if self.n == 0 and self.m != 1:
            raise ValueError("the n = 0 space is L(0, 1)")
        if self.n >= 1 and not (0 <= self.m < max(self.n, 1)):
            raise ValueError("m must be normalized into [0, n)")

    def __str__(self):
        return "L(%d,%d)" % (self.n, self.m)


def lens_space(n, m, orientation=1):
    n, m = int(n), int(m)
    if n == 0:
        if m not in (1, -1):
            raise LensError("invalid lens data (0, %d)" % m)
        return LensSpace(0, 1, orientation)
    if n < 0:
        n, m = -n, -m
    return LensSpace(n, m % n if n > 1 else 0, orientation)


@dataclass(frozen=True)
class SphereChain:
    """Chain of spheres with self-intersections -b_i and positive areas."""

    b: tuple
    areas: tuple = None

    def __post_init__(self):
        if not self.b:
            raise ValueError("chain must be nonempty")
        if self.areas is not None and len(self.areas) != len(self.b):
            raise ValueError("areas must match the chain length")

    def area(self, i):
        return Fraction(1) if self.areas is None else Fraction(self.areas[i])

    def boundary(self):
        """Boundary lens space n/m = [b_1, ..., b_k]."""
        v = cf_eval(self.b)
        return lens_space(v.numerator, v.denominator)


# -- cones ---------------------------------------------------------------------


def cone_base(n, m, scale_=3):
    """Truncated cone V_{n,m}: both rays reduced; not smooth unless n = 1."""
    n, m = int(n), int(m)
    if n < 1 or gcd(n, m) != 1:
        raise LensError("need coprime (n, m) with n >= 1")
    s = Fraction(scale_)
    apex = (Fraction(0), Fraction(0))
    top = (Fraction(0), s)
    far = (s * n, s * m)
    return polygon_diagram(
        [apex, top, (top[0] + far[0], top[1] + far[1]), far],
        markings=[REDUCED, REGULAR, REGULAR, REDUCED],
    )


# -- visible lens spaces -----------------------------------------------------------


def _edge_through(d, p, transverse_to=None):
    for ref, e in d.reduced_edges():
        if geo.strictly_between(p, e.start, e.end):
            return ref, e
    raise LensError("endpoint %r is not interior to a reduced edge" % (p,))


def visible_lens_space(d, path):
    """Lens space over an embedded transversal from one reduced edge to
    another, read from the two collapsing classes in a common chart."""
    path = [tuple(map(Fraction, p)) for p in path]
    _, e_start = _edge_through(d, path[0])
    _, e_end = _edge_through(d, path[-1])
    if cross(sub(path[1], path[0]), e_start.direction()) == 0:
        raise LensError("path is not transverse at its start")
    if cross(sub(path[-1], path[-2]), e_end.direction()) == 0:
        raise LensError("path is not transverse at its end")
    c1 = e_start.inward_normal()
    c2 = transport_class(e_end.inward_normal(), list(reversed(path)), d)
    return _lens_from_classes(c1, c2)


def _lens_from_classes(c1, c2):
    n = abs(cross(c1, c2))
    if n == 0:
        return lens_space(0, 1)
    # basis change sending c1 to (1,0); then c2 = (-m', n)
    a, b = c1
    g, x, y = _ext_gcd(a, b)
    assert g == 1, "collapsing vector must be primitive"
    m_mat = UnimodularMatrix(x, y, -b, a)
    u, v = m_mat.apply(c2)
    if v < 0:
        u, v = -u, -v
    return lens_space(v, (-u) % v if v > 1 else 0)


def _ext_gcd(a, b):
    if b == 0:
        return (abs(a), 1 if a >= 0 else -1, 0)
    g, x, y = _ext_gcd(b, a % b)
    return (g, y, x - (a // b) * y)


# -- equivalences -------------------------------------------------------------------


def lens_equivalent(l1, l2, allow_orientation_reversal=False):
    """(equivalent?, unimodular witness mapping V_{n,m} onto V_{n,m'}).

    Orientation-preserving equivalence: m = m' or m m' = 1 (mod n);
    reversing adds m = -m' and m m' = -1 (mod n).
    """
    if l1.n != l2.n:
        return False, None
    n, m, m2 = l1.n, l1.m, l2.m
    if n == 0:
        return True, UnimodularMatrix(1, 0, 0, 1)
    if n == 1:
        return True, UnimodularMatrix(1, 0, 0, 1)
    if (m - m2) % n == 0:
        k = (m2 - m) // n
        return True, UnimodularMatrix(1, 0, k, 1)
    if (m * m2 - 1) % n == 0:
        c = (1 - m * m2) // n
        return True, UnimodularMatrix(-m, n, c, m2)
    if allow_orientation_reversal:
        if (m + m2) % n == 0:
            k = -(m + m2) // n
            return True, UnimodularMatrix(1, 0, k, 1) * UnimodularMatrix(1, 0, 0, -1)
        if (m * m2 + 1) % n == 0:
            c = (-1 - m * m2) // n
            return True, UnimodularMatrix(-m, n, c, m2) * UnimodularMatrix(1, 0, 0, -1)
    return False, None


def cone_witness_ok(l1, l2, w):
    """Check that a witness carries the rays of V_{n,m} onto those of V_{n,m'}."""
    rays1 = {canonical_sign((0, 1)), canonical_sign((l1.n, l1.m))}
    rays2 = {canonical_sign((0, 1)), canonical_sign((l2.n, l2.m))}
    image = {canonical_sign(primitive(w.apply(r))) for r in rays1}
    return image == rays2


# -- plumbings ----------------------------------------------------------------------


def plumbing_base(chain, collar=Fraction(1, 4)):
    """Toric base of the linear plumbing for a chain of spheres.

    The bottom chain of heavy edges carries the spheres (self-intersections
    -b_i); the two heavy caps are end fibers; the light top is the truncation
    of the collar.
    """
    if not isinstance(chain, SphereChain):
        chain = SphereChain(tuple(int(x) for x in chain))
    eps = Fraction(collar)
    if eps <= 0:
        raise LensError("collar must be positive")
    k = len(chain.b)
    if eps >= min(chain.area(i) for i in range(k)) / 2:
        raise LensError("collar too large for the polydisk overlaps")
    mats = [UnimodularMatrix(b, -1, 1, 0) for b in chain.b]
    prefix = [UnimodularMatrix(1, 0, 0, 1)]
    for m in mats[:-1]:
        prefix.append(prefix[-1] * m)
    dirs = [prefix[i].apply((1, 0)) for i in range(k)]
    verts = [(Fraction(0), Fraction(0))]
    for i in range(k):
        verts.append(add(verts[-1], scale(dirs[i], chain.area(i))))
    f_vec = prefix[-1].apply((chain.b[-1], 1))
    caps = [add(verts[0], scale((0, 1), eps)), add(verts[-1], scale(f_vec, eps))]
    junctions = []
    for i in range(1, k):
        junctions.append(add(verts[i], scale(prefix[i - 1].apply((chain.b[i - 1] - 1, 1)), eps)))
    pts = verts + [caps[1]] + list(reversed(junctions)) + [caps[0]]
    markings = (
        [REDUCED] * k  # the chain
        + [REDUCED]  # right cap
        + [REGULAR] * (len(junctions) + 1)  # collar truncation
        + [REDUCED]  # left cap
    )
    d = polygon_diagram(pts, markings=markings)
    report = validate(d)
    if not report.ok:
        raise LensError("plumbing base is invalid: %s" % (report.findings[0],))
    return d


def plumbing_crossing_curve(d_or_chain, chain=None):
    """A transversal from the left cap to the right cap of a plumbing base,
    together with the base itself: (diagram, path)."""
    if chain is None:
        chain = d_or_chain
        d = plumbing_base(chain)
    else:
        d = d_or_chain
    if not isinstance(chain, SphereChain):
        chain = SphereChain(tuple(int(x) for x in chain))
    caps = _plumbing_caps(d, chain)
    path = [_midpoint(*caps[0]), _midpoint(*caps[1])]
    return d, path


def _midpoint(a, b):
    return ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)


def _plumbing_caps(d, chain):
    cycle = d.cycles[0]
    origin = (Fraction(0), Fraction(0))
    left = right = None
    k = len(chain.b)
    chain_end = None
    verts = [origin]
    mats = [UnimodularMatrix(b, -1, 1, 0) for b in chain.b]
    prefix = [UnimodularMatrix(1, 0, 0, 1)]
    for m in mats[:-1]:
        prefix.append(prefix[-1] * m)
    for i in range(k):
        verts.append(add(verts[-1], scale(prefix[i].apply((1, 0)), chain.area(i))))
    for e in cycle:
        pts = {e.start, e.end}
        if origin in pts and e.marking == REDUCED and verts[1] not in pts:
            left = (e.start, e.end)
        if verts[-1] in pts and e.marking == REDUCED and verts[-2] not in pts:
            right = (e.start, e.end)
    if left is None or right is None:
        raise LensError("could not locate the plumbing caps")
    return left, right


# -- rational balls -----------------------------------------------------------------


def rational_ball_base(k, l, t=1, scale_=None):
    """Almost toric rational ball: the cone on L(k^2, kl-1) with the vertex
    traded for a node at (tk, tl), cut through the origin along (k, l)."""
    k, l, t = int(k), int(l), Fraction(t)
    if k < 1 or gcd(k, l) != 1 or t <= 0:
        raise LensError("need coprime (k, l), k >= 1, t > 0")
    n, m = k * k, k * l - 1
    s = Fraction(scale_) if scale_ is not None else 3 * t * (k + abs(l) + 1)
    apex = (Fraction(0), Fraction(0))
    ray1 = (Fraction(0), s)
    ray2 = (s * n, s * m)
    d = polygon_diagram(
        [apex, ray1, add(ray1, ray2), ray2],
        markings=[REDUCED, REGULAR, REGULAR, REDUCED],
    )
    pos = (t * k, t * l)
    node = Node(pos, 1, canonical_sign((k, l)), (pos, apex))
    out = normalize(BaseDiagram(d.cycles, (node,), (), None))
    report = validate(out)
    if not report.ok:
        raise LensError("rational ball base is invalid: %s" % (report.findings[0],))
    return out


def rational_ball_crossing_curve(d, k, l, t=1):
    """Arc across the rational ball avoiding the cut (visible L(k^2, kl-1))."""
    k, l, t = int(k), int(l), Fraction(t)
    n, m = k * k, k * l - 1
    # start high on the (0,1) ray side, end far along the (n,m) ray, passing
    # on the far side of the node
    h = 2 * t * (k + abs(l) + 1)
    start = (Fraction(0), h)
    end = scale(primitive((n, m)), h)
    mid = add(scale(add(start, end), Fraction(1, 2)), scale((1, 0), h))
    return [start, mid, end]


# -- rational blowdown ----------------------------------------------------------------


def rational_blowdown(d, chain_refs):
    """Replace a plumbing collar around a chain of -b_i spheres whose
    boundary is L(k^2, kl-1) by the matching rational ball.

    The output has two charts: the ambient remainder and the ball, joined
    along a polyline of identified edges (the common lens-space collar).
    """
    if len(d.cycles) != 1 or d.gluings or d.nodes:
        raise LensError("rational blowdown supports plain toric single charts")
    cycle = list(d.cycles[0])
    refs = sorted(tuple(r) for r in chain_refs)
    b = []
    for r in refs:
        e = cycle[r[1]]
        if e.marking != REDUCED:
            raise LensError("chain edge %r is not reduced" % (r,))
        b.append(-edge_self_intersection(d, r))
    idxs = [r[1] for r in refs]
    if idxs != list(range(idxs[0], idxs[0] + len(idxs))):
        raise LensError("chain edges must be consecutive")
    value = cf_eval(b)
    n, m = value.numerator, value.denominator
    k = _isqrt(n)
    if k * k != n or k < 2:
        raise LensError("boundary %s is not of the form L(k^2, kl-1)" % lens_space(n, m))
    l = (m + 1) // k
    if k * l - 1 != m or gcd(k, l) != 1:
        raise LensError("boundary %s is not of the form L(k^2, kl-1)" % lens_space(n, m))

    chain = SphereChain(tuple(b), tuple(cycle[i].affine_length() for i in idxs))
    prev = cycle[(idxs[0] - 1) % len(cycle)]
    nxt = cycle[(idxs[-1] + 1) % len(cycle)]
    if is_identified(prev.marking) or is_identified(nxt.marking):
        raise LensError("chain neighbours must be plain edges")

    # exact collar: feet on the neighbour edges at affine distance eps
    eps = _collar_clearance(d, idxs)
    chain_pts = [cycle[idxs[0]].start] + [cycle[i].end for i in idxs]
    foot_a = sub(chain_pts[0], scale(prev.direction(), eps))
    foot_b = add(chain_pts[-1], scale(nxt.direction(), eps))
    gamma = [foot_a]
    for i, p in enumerate(chain_pts):
        di_in = prev.direction() if i == 0 else cycle[idxs[i - 1]].direction()
        di_out = nxt.direction() if i == len(chain_pts) - 1 else cycle[idxs[i]].direction()
        gamma.append(add(p, scale(sub(di_out, di_in), eps)))
    gamma.append(foot_b)
    gamma = [q for i, q in enumerate(gamma) if i == 0 or q != gamma[i - 1]]

    # ambient remainder: replace [foot_a .. chain .. foot_b] by gamma
    keep = []
    for i, e in enumerate(cycle):
        if i in idxs:
            continue
        if i == (idxs[0] - 1) % len(cycle):
            keep.append(Edge(e.start, foot_a, e.marking))
        elif i == (idxs[-1] + 1) % len(cycle):
            keep.append(Edge(foot_b, e.end, e.marking))
        else:
            keep.append(e)

    # develop the collar onto the cone on L(k^2, kl-1): one affine map carries
    # the whole lens curve into the ball's chart, anchored at the virtual
    # cone point where the two neighbour lines meet (the chain
    # self-intersection data forces the far germ to land on the far ray)
    w_prev = _affine_transversal(prev.direction(), prev.inward_normal())
    lin = _basis_map((prev.direction(), w_prev), ((0, -1), (1, 0)))
    apex_virtual = _line_meet(prev.start, prev.direction(), nxt.start, nxt.direction())
    if apex_virtual is None:
        raise LensError("chain neighbours are parallel; collar is not a cone")
    shift = _disjoint_shift(d, cone_base(1, 0, 1))
    apex = (Fraction(shift[0]), Fraction(shift[1]))
    g_map = AffineMap(lin, sub(apex, lin.apply(apex_virtual)))
    gamma_ball = [g_map.apply(p) for p in gamma]

    q_a, q_b = gamma_ball[0], gamma_ball[-1]
    if cross(sub(q_a, apex), (0, 1)) != 0 or dot(sub(q_a, apex), (0, 1)) <= 0:
        raise LensError("collar development misses the vertical ray")
    far = primitive(sub(q_b, apex))
    if far[0] != n or (far[1] - m) % n != 0:
        raise LensError(
            "collar development misses the far ray (chain data inconsistent)"
        )
    # the vertical-shear ambiguity of the development shifts m by multiples
    # of n; the matching ball parameter moves with it
    l_eff = (far[1] + 1) // k
    assert k * l_eff - 1 == far[1] and gcd(k, l_eff) == 1

    # ball chart: the cone sector truncated along the developed curve, with
    # the node placed inside it
    t_node = _node_parameter(gamma_ball, apex, k, l_eff)
    node_pos = add(apex, (t_node * k, t_node * l_eff))
    node = Node(node_pos, 1, canonical_sign((k, l_eff)), (node_pos, apex))
    ball_pieces = [
        Edge(apex, q_a, REDUCED),
        Edge(q_b, apex, REDUCED),
    ]
    gluings = []
    pieces = keep[:]
    for i, (a, q) in enumerate(zip(gamma, gamma[1:])):
        key = "rb%d" % i
        pieces.append(Edge(a, q, identified(key)))
        ball_pieces.append(Edge(g_map.apply(a), g_map.apply(q), identified(key)))
        gluings.append((key, g_map))
    cycle1 = _chain_cycle(pieces)
    cycle2 = _chain_cycle(ball_pieces)
    out = BaseDiagram(
        (tuple(cycle1), tuple(cycle2)),
        (node,),
        tuple(sorted(gluings)),
        None,
    )
    out = normalize(out)
    report = validate(out)
    if not report.ok:
        raise LensError("blowdown output is invalid: %s" % (report.findings[0],))
    return out


def _line_meet(p1, d1, p2, d2):
    denom = cross(d1, d2)
    if denom == 0:
        return None
    t = Fraction(cross(sub(p2, p1), d2), denom)
    return add(p1, scale(d1, t))


def _node_parameter(gamma_ball, apex, k, l):
    """Largest clean dyadic t with the node at apex + t(k,l) inside the kept
    cone piece and its cut clear of the interface."""
    poly = [apex] + list(gamma_ball)
    t = Fraction(1, 2)
    for _ in range(40):
        pos = add(apex, (t * k, t * l))
        if geo.point_in_polygon(pos, poly) == 1:
            ok = True
            for a, b in zip(gamma_ball, gamma_ball[1:]):
                if geo.seg_intersection(pos, apex, a, b)[0] != "none":
                    ok = False
            if ok:
                return t
        t /= 2
    raise LensError("no room for the ball node inside the collar")


def _isqrt(n):
    r = int(n**0.5)
    while r * r > n:
        r -= 1
    while (r + 1) * (r + 1) <= n:
        r += 1
    return r


def _collar_clearance(d, idxs):
    # a conservative exact collar size: halve until the offset polyline is
    # clear of all features (finitely many steps; all tests exact)
    eps = Fraction(1, 4)
    for _ in range(24):
        if _collar_fits(d, idxs, eps):
            return eps
        eps /= 2
    raise LensError("no clear collar around the chain")


def _collar_fits(d, idxs, eps):
    cycle = d.cycles[0]
    prev = cycle[(idxs[0] - 1) % len(cycle)]
    nxt = cycle[(idxs[-1] + 1) % len(cycle)]
    if prev.affine_length() <= eps or nxt.affine_length() <= eps:
        return False
    foot_a = sub(cycle[idxs[0]].start, scale(prev.direction(), eps))
    foot_b = add(cycle[idxs[-1]].end, scale(nxt.direction(), eps))
    pts = [foot_a]
    chain_pts = [cycle[idxs[0]].start] + [cycle[i].end for i in idxs]
    for i, p in enumerate(chain_pts):
        di_in = prev.direction() if i == 0 else cycle[idxs[i - 1]].direction()
        di_out = nxt.direction() if i == len(chain_pts) - 1 else cycle[idxs[i]].direction()
        pts.append(add(p, scale(sub(di_out, di_in), eps)))
    pts.append(foot_b)
    pts = [q for i, q in enumerate(pts) if i == 0 or q != pts[i - 1]]
    for a, q in zip(pts, pts[1:]):
        for ref, e in d.edges():
            hit = geo.seg_intersection(a, q, e.start, e.end)
            if hit[0] == "overlap":
                return False
            if hit[0] == "point" and hit[1] not in (foot_a, foot_b):
                return False
        mid = _midpoint(a, q)
        if d.locate(mid)[1] != 1:
            return False
    return True


def _disjoint_shift(d1, d2):
    xs1 = [p[0] for ci in range(len(d1.cycles)) for p in d1.cycle_points(ci)]
    xs2 = [p[0] for ci in range(len(d2.cycles)) for p in d2.cycle_points(ci)]
    ys1 = [p[1] for ci in range(len(d1.cycles)) for p in d1.cycle_points(ci)]
    ys2 = [p[1] for ci in range(len(d2.cycles)) for p in d2.cycle_points(ci)]
    return (max(xs1) - min(xs2) + 2, max(ys1) - min(ys2) + 2)



def _basis_map(src, dst):
    """Unimodular matrix sending basis src=(u1,u2) to dst=(v1,v2)."""
    u1, u2 = src
    v1, v2 = dst
    det_u = cross(u1, u2)
    if abs(det_u) != 1 or abs(cross(v1, v2)) != 1:
        raise LensError("germ directions do not form lattice bases")
    inv_u = UnimodularMatrix(u1[0], u2[0], u1[1], u2[1]).inverse()
    m_v = UnimodularMatrix(v1[0], v2[0], v1[1], v2[1])
    return m_v * inv_u


def _chain_cycle(pieces):
    by_start = {}
    for e in pieces:
        by_start.setdefault(e.start, []).append(e)
    start = pieces[0]
    cycle = [start]
    by_start[start.start].remove(start)
    while cycle[-1].end != start.start:
        nxts = by_start.get(cycle[-1].end)
        if not nxts:
            raise LensError("surgered boundary does not close up")
        cycle.append(nxts.pop(0))
        if len(cycle) > len(pieces):
            raise LensError("surgered boundary is not a single cycle")
    return cycle



# -- symplectic sum -------------------------------------------------------------------


class SumError(ValueError):
    pass


def symplectic_sum(d1, ref1, d2, ref2, allow_thicken=False):
    """Fiber sum of two diagrams along matching reduced components.

    Both components must be spheres (edge with two corner endpoints) or
    smooth circles (boundary tori); self-intersections must sum to zero and
    total affine lengths must agree (or allow_thicken fixes lengths when the
    self-intersections are nonzero).
    """
    comp1 = _component_of(d1, ref1)
    comp2 = _component_of(d2, ref2)
    s1 = _component_self_int(d1, comp1, ref1)
    s2 = _component_self_int(d2, comp2, ref2)
    if s1 + s2 != 0:
        raise SumError("self-intersections sum to %d, need 0" % (s1 + s2))
    len1 = sum(e.affine_length() for _, e in comp1["edges"])
    len2 = sum(e.affine_length() for _, e in comp2["edges"])
    if len1 != len2:
        if not allow_thicken or s2 == 0:
            raise SumError("affine lengths differ (%s vs %s)" % (len1, len2))
        tau = Fraction(len2 - len1) / s2  # new length = a - n*tau with n = -s2
        d2 = thicken(d2, comp2["edges"][0][0], tau)
        comp2 = _component_of(d2, comp2["edges"][0][0])
        len2 = sum(e.affine_length() for _, e in comp2["edges"])
        if len1 != len2:
            raise SumError("thickening did not match the lengths")
    if len(comp1["edges"]) != len(comp2["edges"]):
        raise SumError("components have different edge patterns")

    shift = _disjoint_shift(d1, d2)
    d2 = apply_affine(d2, AffineMap.translation_by(shift))
    comp2 = _component_of(d2, (comp2["edges"][0][0]))

    e1 = comp1["edges"][0][1]
    e2 = comp2["edges"][0][1]
    g = _sum_gluing(e1, e2)
    # the map must carry every sub-edge of component 1 onto one of component 2
    targets = {(e.start, e.end): ref for ref, e in comp2["edges"]}
    pairs = []
    for ref, e in comp1["edges"]:
        img = (g.apply(e.end), g.apply(e.start))
        if img not in targets:
            img = (img[1], img[0])
            if img not in targets:
                raise SumError("components do not match under the gluing")
        pairs.append((ref, targets[img]))

    used = {r2 for _, r2 in pairs}
    if len(used) != len(pairs):
        raise SumError("component matching is not a bijection")

    # merge charts and switch markings
    base = _fresh_prefix(d1, d2)
    remark = {}
    for i, (r1, r2) in enumerate(pairs):
        key = "%s%d" % (base, i)
        remark[r1] = key
        remark[(r2[0] + len(d1.cycles), r2[1])] = key
    cycles = []
    for ci, cycle in enumerate(d1.cycles):
        cycles.append(
            tuple(
                Edge(e.start, e.end, identified(remark[(ci, ei)]))
                if (ci, ei) in remark
                else e
                for ei, e in enumerate(cycle)
            )
        )
    for ci, cycle in enumerate(d2.cycles):
        cycles.append(
            tuple(
                Edge(e.start, e.end, identified(remark[(ci + len(d1.cycles), ei)]))
                if (ci + len(d1.cycles), ei) in remark
                else e
                for ei, e in enumerate(cycle)
            )
        )
    gluings = list(d1.gluings) + list(d2.gluings)
    for i in range(len(pairs)):
        gluings.append(("%s%d" % (base, i), g))
    out = BaseDiagram(
        tuple(cycles),
        tuple(d1.nodes) + tuple(d2.nodes),
        tuple(sorted(gluings)),
        None,
    )
    out = normalize(out)
    kind = _maybe_closed(out)
    if kind:
        out = BaseDiagram(out.cycles, out.nodes, out.gluings, kind)
        out = normalize(out)
    report = validate(out)
    if not report.ok:
        raise SumError("sum output is invalid: %s" % (report.findings[0],))
    return out


def _maybe_closed(d):
    from .diagram import glued_surface_type

    return glued_surface_type(d)


def _fresh_prefix(d1, d2):
    used = {key for key, _ in d1.gluings} | {key for key, _ in d2.gluings}
    base = "s"
    while any(k.startswith(base) for k in used):
        base += "s"
    return base


def _component_of(d, ref):
    ref = tuple(ref)
    for comp in smooth_components(d):
        if ref in [r for r, _ in comp["edges"]]:
            return comp
    raise SumError("no reduced component through %r" % (ref,))


def _component_self_int(d, comp, ref):
    if comp["closed"]:
        return boundary_torus_self_intersection(d, comp["edges"][0][0])
    if len(comp["edges"]) == 1:
        return edge_self_intersection(d, comp["edges"][0][0])
    # multi-edge sphere component (wedge interruptions): transport along
    total = 0
    # the collapsing data is carried by edge_self_intersection on the first
    # and last corners; for the straight spliced components used here the
    # cross of the outer normals is the answer
    first = comp["edges"][0][1]
    last = comp["edges"][-1][1]
    ci, ei = comp["edges"][0][0]
    cycle = d.cycles[ci]
    prev = cycle[(ei - 1) % len(cycle)]
    cj, ej = comp["edges"][-1][0]
    nxt = d.cycles[cj][(ej + 1) % len(d.cycles[cj])]
    if prev.marking != REDUCED or nxt.marking != REDUCED:
        raise SumError("component endpoints are not corners")
    n = prev.inward_normal()
    for (ri, e) in comp["edges"]:
        for t, m in _cuts_along(d, e):
            n = m.apply(n)
        n = _gap_matrix(d, ri).apply(n) if _gap_matrix(d, ri) else n
    return cross(n, nxt.inward_normal())


def _cuts_along(d, e):
    from .diagram import _slit_crossing_matrix

    out = []
    for node in d.nodes:
        if len(node.cut) != 2:
            continue
        end = node.cut[-1]
        if geo.strictly_between(end, e.start, e.end):
            t = geo._param(e.start, e.end, end)
            out.append((t, _slit_crossing_matrix(node, sub(e.end, e.start))))
    return sorted(out, key=lambda x: x[0])


def _gap_matrix(d, ref):
    from .diagram import _smooth_successor

    edge_at = {r: e for r, e in d.edges()}
    nxt = _smooth_successor(d, ref, edge_at)
    if nxt is None:
        return None
    return nxt[1]


def _sum_gluing(e1, e2):
    """Canonical zero-shear gluing carrying edge1 onto edge2 end-to-start."""
    d1, d2 = e1.direction(), e2.direction()
    w1 = _affine_transversal(d1, e1.inward_normal())
    w2 = _affine_transversal(d2, e2.inward_normal())
    lin = _basis_map((d1, w1), (neg(d2), neg(w2)))
    t = sub(e2.end, lin.apply(e1.start))
    return AffineMap(lin, t)


# -- contact checks ------------------------------------------------------------------


@dataclass(frozen=True)
class ContactVerdict:
    has_contact: bool
    overtwisted_witness: object = None  # (line point, direction, crossing count)
    fillable: object = None  # True in the cone-vertex case, else left unset

    def __post_init__(self):
        if self.overtwisted_witness is not None and not self.has_contact:
            raise ValueError("a witness presumes an induced contact structure")


def unfold_path(d, path):
    """Segments of the path developed into the chart of its first point.

    Crossing a wall composes the inverse transition, so every returned
    segment is expressed in the starting chart.
    """
    path = [tuple(map(Fraction, p)) for p in path]
    out = []
    cur = AffineMap.identity()
    for i in range(len(path) - 1):
        p, q = path[i], path[i + 1]
        events = list(_walk_crossings(d, [p, q]))
        if not events:
            out.append((cur.apply(p), cur.apply(q)))
            continue
        if any(ev[0] == "jump" for ev in events):
            if len(events) != 1:
                raise LensError("multiple walls in one jump step")
            m = events[0][1]
            # q is the re-entry point; fold it back to the exit chart
            fold = AffineMap(m, (Fraction(0), Fraction(0)))
            anchor = p  # the wall point itself maps to q
            trans = AffineMap(m, sub(q, m.apply(p)))
            cur = cur.compose(trans.inverse())
            continue
        # slit crossings: split the segment at each crossing point
        detail = []
        for node in d.slit_nodes():
            hit = geo.seg_intersection(p, q, node.cut[0], node.cut[1])
            if hit[0] == "point" and 0 < hit[2] < 1:
                from .diagram import _slit_crossing_matrix

                m = _slit_crossing_matrix(node, sub(q, p))
                detail.append((hit[2], hit[1], AffineMap.fixing(node.pos, m)))
        detail.sort(key=lambda x: x[0])
        last = p
        for _, x, trans in detail:
            out.append((cur.apply(last), cur.apply(x)))
            cur = cur.compose(trans.inverse())
            last = x
        out.append((cur.apply(last), cur.apply(q)))
    return [seg for seg in out if seg[0] != seg[1]]


def contact_check(d, path, x0):
    """Existence, tightness and overtwistedness data for the contact
    structure induced on a visible lens space by the radial field at x0."""
    x0 = (Fraction(x0[0]), Fraction(x0[1]))
    segs = unfold_path(d, path)
    has_contact = True
    for a, b in segs:
        sa = cross(sub(a, x0), sub(b, a))
        sb = cross(sub(b, x0), sub(b, a))
        if sa == 0 or sb == 0 or (sa > 0) != (sb > 0):
            has_contact = False
    # endpoint tangency: the pencil line through each endpoint must be
    # tangent to the reduced edge there
    path_t = [tuple(map(Fraction, p)) for p in path]
    for endpoint, seg_pt in ((path_t[0], segs[0][0]), (path_t[-1], segs[-1][1])):
        try:
            _, e = _edge_through(d, endpoint)
        except LensError:
            has_contact = False
            continue
        if cross(sub(seg_pt, x0), e.direction()) != 0:
            # the edge direction lives in the endpoint's own chart; for the
            # start that is the base chart, for the end compare unfolded
            if endpoint == path_t[0]:
                has_contact = False
            else:
                edir = _unfolded_end_direction(d, path_t, e)
                if cross(sub(seg_pt, x0), edir) != 0:
                    has_contact = False
    witness = _overtwisted_witness(segs, x0) if has_contact else None
    fillable = None
    if has_contact and witness is None and _cone_vertex_configuration(d, path_t, x0):
        fillable = True
    return ContactVerdict(has_contact, witness, fillable)


def _unfolded_end_direction(d, path, e):
    cur = AffineMap.identity()
    for ev in _walk_crossings(d, path):
        m = ev[1] if ev[0] == "jump" else ev[2]
        step = AffineMap(m, (Fraction(0), Fraction(0)))
        cur = cur.compose(step.inverse())
    return cur.linear.apply(e.direction())


def _overtwisted_witness(segs, x0):
    """A pencil line meeting the open unfolded path at least twice, if any."""
    for i in range(len(segs)):
        for j in range(i + 1, len(segs)):
            hit = _double_crossing(segs[i], segs[j], x0)
            if hit is not None:
                z = hit
                count = sum(_line_hits_segment(x0, z, s) for s in segs)
                if count >= 2:
                    return (z, sub(z, x0), count)
    return None


def _double_crossing(s1, s2, x0):
    a, b = s1
    c, e = s2

    def g1(t):
        z = (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
        return cross(sub(c, x0), sub(z, x0))

    def g2(t):
        z = (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
        return cross(sub(e, x0), sub(z, x0))

    # roots of the two linear-in-t functions
    cands = {Fraction(1, 2)}
    for g in (g1, g2):
        v0, v1 = g(Fraction(0)), g(Fraction(1))
        if v0 != v1:
            r = Fraction(v0) / (v0 - v1)
            for t in (r, r / 2, (r + 1) / 2):
                if 0 < t < 1:
                    cands.add(t)
    pairs = sorted(cands)
    for lo, hi in zip(pairs, pairs[1:]):
        cands.add((lo + hi) / 2)
    for t in sorted(cands):
        if not (0 < t < 1):
            continue
        if g1(t) * g2(t) < 0:
            return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
    return None


def _line_hits_segment(x0, z, seg):
    a, b = seg
    u = sub(z, x0)
    sa = cross(u, sub(a, x0))
    sb = cross(u, sub(b, x0))
    if sa == 0 and sb == 0:
        return 0  # collinear overlap does not count as transverse hits
    return 1 if (sa <= 0 <= sb or sb <= 0 <= sa) else 0


def _cone_vertex_configuration(d, path, x0):
    """x0 is a corner joining the two endpoint edges and the compact side is
    free of nodes and cuts."""
    corner = any(p == x0 for _, _, p in d.corner_points())
    if not corner:
        return False
    poly = [x0] + list(path)
    for node in d.nodes:
        if geo.point_in_polygon(node.pos, poly) >= 0:
            return False
        if geo.point_in_polygon(node.cut[-1], poly) > 0:
            return False
    return True
