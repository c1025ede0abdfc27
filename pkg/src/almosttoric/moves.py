"""Surgery moves on base diagrams.

Corner chops and their inverses (blow-up / blow-down), almost toric blow-up
(wedge insertion), nodal trades and slides, branch moves, and the
thicken/thin deformation.  Every move is a pure function returning a new
diagram; "small enough" parameters are verified by exact intersection tests
against all features, never by tolerances.
"""

from dataclasses import dataclass
from fractions import Fraction

from . import geometry as geo
from .diagram import (
    REDUCED,
    BaseDiagram,
    Edge,
    Node,
    apply_affine,
    identified,
    is_identified,
    normalize,
    serialize,
    validate,
)
from .invariants import euler_characteristic, symplectic_volume
from .lattice import (
    AffineMap,
    UnimodularMatrix,
    add,
    canonical_sign,
    cross,
    neg,
    primitive,
    scale,
    sub,
)


class MoveError(ValueError):
    pass


@dataclass(frozen=True)
class MoveRecord:
    move: str
    args: dict
    euler_before: int
    euler_after: int
    volume_before: Fraction
    volume_after: Fraction

    def to_json_obj(self):
        return {
            "move": self.move,
            "args": {k: str(v) for k, v in self.args.items()},
            "euler": [self.euler_before, self.euler_after],
            "volume_pi2": [str(self.volume_before), str(self.volume_after)],
        }


def _checked(d):
    report = validate(d)
    if not report.ok:
        raise MoveError("move output is invalid: %s" % (report.findings[0],))
    return d


def _find_vertex(d, point):
    point = (Fraction(point[0]), Fraction(point[1]))
    for ci, ei, p in d.vertices():
        if p == point:
            return ci, ei
    raise MoveError("no vertex of the 0-stratum at %r" % (point,))


def _vertex_edges(d, ci, ei):
    cycle = d.cycles[ci]
    return cycle[ei - 1], cycle[ei]


def _clear_of_features(d, segs, allow=()):
    """Each segment intersects the diagram's features only in listed points."""
    for a, b in segs:
        for c, e in d.features_polylines():
            hit = geo.seg_intersection(a, b, c, e)
            if hit[0] == "overlap":
                return False
            if hit[0] == "point" and hit[1] not in allow:
                return False
        for node in d.nodes:
            if geo.on_segment(node.pos, a, b) and node.pos not in allow:
                return False
    return True


# -- toric blow-up / blow-down ---------------------------------------------


def toric_blow_up(d, vertex, size):
    """Chop the corner at the given vertex; the new edge is a -1 sphere."""
    size = Fraction(size)
    if size <= 0:
        raise MoveError("blow-up size must be positive")
    ci, ei = _find_vertex(d, vertex)
    e_in, e_out = _vertex_edges(d, ci, ei)
    if e_in.marking != REDUCED or e_out.marking != REDUCED:
        raise MoveError("vertex is not a reduced-reduced corner")
    v = e_out.start
    if size >= e_in.affine_length() or size >= e_out.affine_length():
        raise MoveError("size exceeds an adjacent edge")
    p_a = sub(v, scale(e_in.direction(), size))
    p_b = add(v, scale(e_out.direction(), size))
    if not _clear_of_features(d, [(p_a, p_b)], allow={p_a, p_b}):
        raise MoveError("chopped corner collides with another feature")
    cycle = list(d.cycles[ci])
    cycle[ei - 1] = Edge(e_in.start, p_a, REDUCED)
    cycle[ei % len(cycle)] = Edge(p_b, e_out.end, REDUCED)
    cycle.insert(ei % len(cycle), Edge(p_a, p_b, REDUCED))
    cycles = list(d.cycles)
    cycles[ci] = tuple(cycle)
    return _checked(normalize(BaseDiagram(tuple(cycles), d.nodes, d.gluings, d.surface)))


def toric_blow_down(d, ref):
    """Remove a -1 edge, extending its neighbours to their intersection."""
    from .invariants import edge_self_intersection

    ci, ei = ref
    cycle = list(d.cycles[ci])
    e = cycle[ei]
    if e.marking != REDUCED:
        raise MoveError("edge is not reduced")
    if edge_self_intersection(d, ref) != -1:
        raise MoveError("edge has self-intersection %d, need -1"
                        % edge_self_intersection(d, ref))
    prev = cycle[(ei - 1) % len(cycle)]
    nxt = cycle[(ei + 1) % len(cycle)]
    if prev.marking != REDUCED or nxt.marking != REDUCED:
        raise MoveError("adjacent vertices are not reduced-reduced corners")
    p = _line_intersection(prev.start, prev.direction(), nxt.start, nxt.direction())
    if p is None:
        raise MoveError("adjacent edges are parallel; cannot extend")
    # the new vertex must lie beyond both neighbours (a genuine extension)
    t_prev = geo._param(prev.start, prev.end, p)
    t_next = geo._param(nxt.start, nxt.end, p)
    if t_prev <= 1 or t_next >= 0:
        raise MoveError("extension degenerates")
    new_prev = Edge(prev.start, p, prev.marking)
    new_next = Edge(p, nxt.end, nxt.marking)
    cycle = cycle[:]
    del cycle[ei]
    cycle[(ei - 1) % len(cycle)] = new_prev
    cycle[ei % len(cycle)] = new_next
    cycles = list(d.cycles)
    cycles[ci] = tuple(cycle)
    out = normalize(BaseDiagram(tuple(cycles), d.nodes, d.gluings, d.surface))
    report = validate(out)
    if not report.ok:
        raise MoveError("extension collides with other features: %s" % (report.findings[0],))
    return out


# -- almost toric blow-up -----------------------------------------------------


def almost_toric_blow_up(d, point, size):
    """Blow up at a point interior to a reduced edge: remove a triangle and
    insert a wedge whose apex is a new multiplicity-one node.

    The wedge apex sits one affine-transversal step of length `size` inward
    from the far corner of the removed base; the two sides are identified by
    the nodal monodromy (eigenline parallel to the edge).
    """
    size = Fraction(size)
    if size <= 0:
        raise MoveError("blow-up size must be positive")
    point = (Fraction(point[0]), Fraction(point[1]))
    host = None
    for ref, e in d.reduced_edges():
        if geo.strictly_between(point, e.start, e.end):
            host = (ref, e)
            break
    if host is None:
        raise MoveError("point is not interior to a reduced edge")
    (ci, ei), e = host
    dvec = e.direction()
    w = _affine_transversal(dvec, e.inward_normal())  # inward unit step
    half = size / 2
    q_near = sub(point, scale(dvec, half))
    q_far = add(point, scale(dvec, half))
    apex = add(q_far, scale(w, size))
    for q in (q_near, q_far):
        if not geo.strictly_between(q, e.start, e.end):
            raise MoveError("triangle does not fit inside the edge")
    tri = [(q_near, apex), (apex, q_far)]
    if not _clear_of_features(d, tri, allow={q_near, q_far}):
        raise MoveError("triangle collides with another feature")
    if d.locate(apex)[1] != 1:
        raise MoveError("triangle does not fit inside the diagram")
    eigen = canonical_sign(dvec)
    node = Node(apex, 1, eigen, (apex, q_near))
    # A^s with s = cross(d, w) carries the far side onto the near side
    s = cross(dvec, w)
    gl = AffineMap.fixing(apex, node.monodromy(s))
    assert gl.apply(q_far) == q_near, "wedge gluing calibration broke"
    key = _fresh_gluing_id(d)
    cycle = list(d.cycles[ci])
    pieces = [
        Edge(e.start, q_near, REDUCED),
        Edge(q_near, apex, identified(key)),
        Edge(apex, q_far, identified(key)),
        Edge(q_far, e.end, REDUCED),
    ]
    cycle[ei : ei + 1] = pieces
    cycles = list(d.cycles)
    cycles[ci] = tuple(cycle)
    out = BaseDiagram(
        tuple(cycles),
        d.nodes + (node,),
        d.gluings + ((key, gl),),
        d.surface,
    )
    return _checked(normalize(out))


def _fresh_gluing_id(d):
    used = {key for key, _ in d.gluings}
    i = 0
    while "w%d" % i in used:
        i += 1
    return "w%d" % i


# -- nodal trade ---------------------------------------------------------------


def nodal_trade(d, vertex, depth=None):
    """Replace a reduced-reduced vertex by a node on the inward eigenray."""
    ci, ei = _find_vertex(d, vertex)
    e_in, e_out = _vertex_edges(d, ci, ei)
    if e_in.marking != REDUCED or e_out.marking != REDUCED:
        raise MoveError("vertex is not a reduced-reduced corner")
    v = e_out.start
    d_in, d_out = e_in.direction(), e_out.direction()
    if abs(cross(d_in, d_out)) != 1:
        raise MoveError("orbifold vertex: collapsing covectors do not span")
    e_dir = primitive(sub(d_out, d_in))
    t_max = _ray_clearance(d, v, e_dir)
    depth = Fraction(depth) if depth is not None else t_max / 2
    if not (0 < depth < t_max):
        raise MoveError("trade depth leaves the diagram or hits a feature")
    pos = add(v, scale(e_dir, depth))
    node = Node(pos, 1, canonical_sign(e_dir), (pos, v))
    out = BaseDiagram(d.cycles, d.nodes + (node,), d.gluings, d.surface)
    return _checked(normalize(out))


def nodal_trade_back(d, node):
    """Inverse of nodal_trade: remove a node whose cut is an eigen segment
    ending at a heavy dot, turning the dot back into a vertex."""
    node = _find_node(d, node)
    if len(node.cut) != 2:
        raise MoveError("node cut is not a single segment")
    v = node.cut[-1]
    if cross(sub(node.pos, v), node.eigen) != 0:
        raise MoveError("cut is not along the eigenline")
    hit = [(ci, ei) for ci, ei, p in d.dots() if p == v]
    if not hit:
        raise MoveError("cut endpoint is not a heavy dot between reduced edges")
    if node.mult != 1:
        raise MoveError("only multiplicity-one nodes trade back")
    ci, ei = hit[0]
    e_in, e_out = _vertex_edges(d, ci, ei)
    if abs(cross(e_in.direction(), e_out.direction())) != 1:
        raise MoveError("orbifold corner: vanishing and collapsing classes do not span")
    nodes = tuple(n for n in d.nodes if n != node)
    out = BaseDiagram(d.cycles, nodes, d.gluings, d.surface)
    return _checked(normalize(out))


def _find_node(d, node):
    if isinstance(node, Node):
        if node in d.nodes:
            return node
        raise MoveError("node is not part of the diagram")
    pos = (Fraction(node[0]), Fraction(node[1]))
    for n in d.nodes:
        if n.pos == pos:
            return n
    raise MoveError("no node at %r" % (pos,))


def _ray_clearance(d, origin, direction, skip_points=()):
    """Largest t with the open segment origin..origin+t*dir clear of features."""
    best = None
    for a, b in d.features_polylines():
        t = _ray_hit(origin, direction, a, b)
        if t is not None and t > 0:
            best = t if best is None else min(best, t)
    for node in d.nodes:
        w = sub(node.pos, origin)
        if cross(w, direction) == 0 and (w[0] * direction[0] + w[1] * direction[1]) > 0:
            t = Fraction(w[0], direction[0]) if direction[0] else Fraction(w[1], direction[1])
            best = t if best is None else min(best, t)
    if best is None:
        raise MoveError("ray from %r never leaves the diagram" % (origin,))
    return best


def _ray_hit(origin, direction, a, b):
    """Smallest positive parameter where the ray meets segment [a,b]."""
    r = direction
    s = sub(b, a)
    denom = cross(r, s)
    qp = sub(a, origin)
    if denom == 0:
        if cross(qp, r) != 0:
            return None
        # collinear: nearest positive endpoint parameter
        ts = []
        for p in (a, b):
            w = sub(p, origin)
            t = Fraction(w[0], r[0]) if r[0] else Fraction(w[1], r[1])
            if t > 0:
                ts.append(t)
        return min(ts) if ts else None
    t = Fraction(cross(qp, s), denom)
    u = Fraction(cross(qp, r), denom)
    if t > 0 and 0 <= u <= 1:
        return t
    return None


# -- nodal slide ------------------------------------------------------------------


def nodal_slide(d, node, t):
    """Slide a node along its eigenline by t (in units of the eigen vector);
    the cut is re-anchored to the same endpoint."""
    node = _find_node(d, node)
    t = Fraction(t)
    if len(node.cut) != 2:
        raise MoveError("only slit-cut nodes slide; branch-move first")
    anchor = node.cut[-1]
    if cross(sub(node.pos, anchor), node.eigen) != 0:
        raise MoveError("cut is not along the eigenline")
    new_pos = add(node.pos, scale(node.eigen, t))
    if new_pos == anchor:
        raise MoveError("slide lands on the cut anchor (use nodal_trade_back)")
    # the new position must still see the anchor along the eigenray
    w = sub(new_pos, anchor)
    if cross(w, node.eigen) != 0:
        raise MoveError("slide leaves the eigenline")
    old = sub(node.pos, anchor)
    if (w[0] * old[0] + w[1] * old[1]) <= 0:
        raise MoveError("slide crosses the cut anchor")
    ci, code = d.locate(new_pos)
    if code != 1:
        raise MoveError("slide exits the diagram")
    others = BaseDiagram(
        d.cycles,
        tuple(n for n in d.nodes if n != node),
        d.gluings,
        d.surface,
    )
    if not _clear_of_features(others, [(new_pos, anchor)], allow={anchor}):
        raise MoveError("slide collides with another feature")
    moved = Node(new_pos, node.mult, node.eigen, (new_pos, anchor))
    out = BaseDiagram(d.cycles, others.nodes + (moved,), d.gluings, d.surface)
    return _checked(normalize(out))


# -- branch move ----------------------------------------------------------------


def branch_move(d, node, new_direction):
    """Re-route a node's cut along a new ray from the node.

    The region swept between the old and new cut is redrawn through the
    nodal monodromy; the underlying fibration is unchanged.  Slit cuts may
    open into sector cuts and vice versa.
    """
    node = _find_node(d, node)
    if len(d.cycles) != 1:
        raise MoveError("branch moves support single-chart diagrams")
    r = primitive(new_direction)
    wedge_key = None
    for key, n in d.wedge_ids().items():
        if n == node:
            wedge_key = key
    if wedge_key is None:
        side_dir = primitive(sub(node.cut[-1], node.cut[0]))
        if r == side_dir:
            return d
        s = cross(side_dir, r)
        if s == 0:
            raise MoveError("new cut direction is parallel to the current cut")
        return _branch_from_ray(d, node, side_dir, r, s > 0, wedge_key=None)
    # for a sector cut, sweep whichever side reaches the new ray through the
    # region (never through the missing sector, marked by the other side)
    (rs, es), (rt, et), g = d.resolved_gluing(wedge_key)
    dirs = []
    for e in (es, et):
        far = e.start if e.start != node.pos else e.end
        dirs.append(primitive(sub(far, node.pos)))
    choices = []
    for i, c in enumerate(dirs):
        other = dirs[1 - i]
        if r == c:
            continue
        for ccw in (True, False):
            bad = any(
                _strictly_in_rotation(w, c, r, ccw)
                for w in (other, neg(other), neg(c))
            )
            if not bad:
                choices.append((c, ccw))
    if not choices:
        raise MoveError("no clean sweep from the current cut to %r" % (r,))
    c, ccw = choices[0]
    return _branch_from_ray(d, node, c, r, ccw, wedge_key=wedge_key)


def _strictly_in_rotation(w, a, b, ccw):
    """w strictly inside the sector rotating from ray a to ray b."""
    if not ccw:
        return _strictly_in_rotation(w, b, a, True)
    s = cross(a, b)
    if s > 0:
        return cross(a, w) > 0 and cross(w, b) > 0
    if s < 0:
        return cross(a, w) > 0 or cross(w, b) > 0
    # b parallel to a: half turn (b = -a) or empty
    if b == a or (a[0] * b[0] + a[1] * b[1]) > 0:
        return False
    return cross(a, w) > 0


def _branch_from_ray(d, node, old_dir, new_dir, sweep_ccw, wedge_key):
    """Sweep the cut side along old_dir onto the ray along new_dir."""
    t_map = node.affine_monodromy(1 if sweep_ccw else -1)

    cycle = list(d.cycles[0])
    if wedge_key is not None:
        sides = [
            (i, e) for i, e in enumerate(cycle) if e.marking == identified(wedge_key)
        ]
        if len(sides) != 2 or sides[1][0] != sides[0][0] + 1:
            raise MoveError("wedge sides are not adjacent in the outline")
        (i1, s1), (i2, s2) = sides
        feet = [s1.start if s1.start != node.pos else s1.end,
                s2.start if s2.start != node.pos else s2.end]
        old_far = next(
            (p for p in feet if cross(sub(p, node.pos), old_dir) == 0), None
        )
        if old_far is None:
            raise MoveError("old cut direction does not match a wedge side")
        del cycle[i1 : i1 + 2]
        gluings = tuple((k, g) for k, g in d.gluings if k != wedge_key)
    else:
        old_far = node.cut[-1]
        gluings = d.gluings
    t_new = _ray_clearance(
        BaseDiagram((tuple(cycle),), tuple(n for n in d.nodes if n != node), gluings, None),
        node.pos,
        new_dir,
    )
    w_new = add(node.pos, scale(new_dir, t_new))

    cycle, _ = _split_at(cycle, w_new)
    cycle, _ = _split_at(cycle, old_far)
    arc_idx = _arc_indices(cycle, old_far, w_new, node.pos, old_dir, new_dir, sweep_ccw)
    arc = [cycle[i] for i in arc_idx]
    for n2 in d.nodes:
        if n2 != node and _strictly_in_rotation(
            primitive(sub(n2.pos, node.pos)), old_dir, new_dir, sweep_ccw
        ):
            raise MoveError("sweep would move another node")
    moved = [Edge(t_map.apply(e.start), t_map.apply(e.end), e.marking) for e in arc]
    keep = [cycle[i] for i in range(len(cycle)) if i not in set(arc_idx)]

    key = wedge_key or _fresh_gluing_id(d)
    w_img = t_map.apply(w_new)
    slit = cross(new_dir, node.eigen) == 0
    pieces = keep + moved
    if not slit:
        if any(e.end == w_new for e in pieces):
            pieces += [
                Edge(w_new, node.pos, identified(key)),
                Edge(node.pos, w_img, identified(key)),
            ]
        else:
            pieces += [
                Edge(w_img, node.pos, identified(key)),
                Edge(node.pos, w_new, identified(key)),
            ]
    new_cycle = _chain_edges(pieces)
    nodes = [n2 for n2 in d.nodes if n2 != node]
    new_node = Node(node.pos, node.mult, node.eigen, (node.pos, w_new))
    new_gluings = gluings
    if not slit:
        new_gluings = gluings + ((key, AffineMap.fixing(node.pos, t_map.linear)),)
    nodes.append(new_node)
    out = BaseDiagram((tuple(new_cycle),), tuple(nodes), tuple(sorted(new_gluings)), d.surface)
    return _checked(normalize(out))


def _chain_edges(pieces):
    by_start = {}
    for e in pieces:
        if e.start == e.end:
            continue
        by_start.setdefault(e.start, []).append(e)
    pieces = [e for e in pieces if e.start != e.end]
    start = pieces[0]
    cycle = [start]
    by_start[start.start].remove(start)
    while cycle[-1].end != start.start:
        nxts = by_start.get(cycle[-1].end)
        if not nxts:
            raise MoveError("re-drawn boundary does not close up")
        cycle.append(nxts.pop(0))
        if len(cycle) > len(pieces):
            raise MoveError("re-drawn boundary is not a single cycle")
    if len(cycle) != len(pieces):
        raise MoveError("re-drawn boundary left extra pieces")
    return cycle


def _split_at(cycle, p):
    for i, e in enumerate(cycle):
        if p == e.start or p == e.end:
            return cycle, i
        if geo.strictly_between(p, e.start, e.end):
            cycle = cycle[:i] + [
                Edge(e.start, p, e.marking),
                Edge(p, e.end, e.marking),
            ] + cycle[i + 1 :]
            return cycle, i + 1
    raise MoveError("point %r is not on the outline" % (p,))


def _arc_indices(cycle, a_pt, b_pt, apex, old_dir, new_dir, sweep_ccw):
    """Cyclically contiguous indices of the boundary arc between the two cut
    feet that lies inside the swept sector (in original cycle order)."""
    n = len(cycle)
    for i, e in enumerate(cycle):
        if e.start not in (a_pt, b_pt):
            continue
        goal = b_pt if e.start == a_pt else a_pt
        idxs = []
        j = i
        ok = False
        for _ in range(n):
            idxs.append(j)
            if cycle[j].end == goal:
                ok = True
                break
            j = (j + 1) % n
        if not ok:
            continue
        probe = cycle[idxs[0]].end
        if probe == goal:
            probe = (
                (cycle[idxs[0]].start[0] + cycle[idxs[0]].end[0]) / 2,
                (cycle[idxs[0]].start[1] + cycle[idxs[0]].end[1]) / 2,
            )
        if probe == apex:
            continue
        if _strictly_in_rotation(sub(probe, apex), old_dir, new_dir, sweep_ccw):
            return idxs
    raise MoveError("could not identify the swept boundary arc")


# -- thicken / thin ---------------------------------------------------------------


def thicken(d, ref, tau):
    """Translate a reduced edge outward by affine distance tau (negative thins),
    extending or trimming the adjacent edges."""
    tau = Fraction(tau)
    ci, ei = ref
    cycle = list(d.cycles[ci])
    e = cycle[ei]
    if e.marking != REDUCED:
        raise MoveError("edge is not reduced")
    if tau == 0:
        return d
    prev = cycle[(ei - 1) % len(cycle)]
    nxt = cycle[(ei + 1) % len(cycle)]
    if is_identified(prev.marking) or is_identified(nxt.marking):
        raise MoveError("cannot thicken against identified edges")
    dvec = e.direction()
    out_n = neg(e.inward_normal())
    # affine-unit transversal step: any w with cross(d, w) = cross(d, out_n)/|..|
    w = _affine_transversal(dvec, out_n)
    shift = scale(w, tau)
    new_start = _line_intersection(add(e.start, shift), dvec, prev.start, prev.direction())
    new_end = _line_intersection(add(e.start, shift), dvec, nxt.end, nxt.direction())
    if new_start is None or new_end is None:
        raise MoveError("adjacent edge is parallel to the thickened edge")
    new_edge = Edge(new_start, new_end, REDUCED)
    if primitive(sub(new_end, new_start)) != dvec:
        raise MoveError("thickening collapses the edge (tau out of range)")
    cycle[(ei - 1) % len(cycle)] = Edge(prev.start, new_start, prev.marking)
    cycle[ei] = new_edge
    cycle[(ei + 1) % len(cycle)] = Edge(new_end, nxt.end, nxt.marking)
    for f in (cycle[(ei - 1) % len(cycle)], cycle[(ei + 1) % len(cycle)]):
        if f.start == f.end:
            raise MoveError("thinning consumes an adjacent edge (tau out of range)")
    cycles = list(d.cycles)
    cycles[ci] = tuple(cycle)
    return _checked(normalize(BaseDiagram(tuple(cycles), d.nodes, d.gluings, d.surface)))


def _affine_transversal(dvec, out_n):
    """Primitive w on the outward side with |cross(d, w)| = 1."""
    # solve cross(d, w) = sign over primitive vectors: extended euclid
    a, b = dvec
    # find (x, y) with a*y - b*x = 1
    g, x0, y0 = _ext_gcd(a, b)
    assert g == 1
    w = (-y0, x0) if False else None
    # cross((a,b),(p,q)) = a q - b p = 1  ->  take (p,q) = (-y0, x0)? check:
    # a*x0 + b*y0 = 1 ... we need a*q - b*p = 1: choose q = x0, p = -y0
    w = (-y0, x0)
    assert cross(dvec, w) == 1
    if (w[0] * out_n[0] + w[1] * out_n[1]) < 0:
        w = neg(w)
    return w


def _ext_gcd(a, b):
    if b == 0:
        return (abs(a), 1 if a > 0 else -1, 0)
    g, x, y = _ext_gcd(b, a % b)
    return (g, y, x - (a // b) * y)


def _line_intersection(p1, d1, p2, d2):
    denom = cross(d1, d2)
    if denom == 0:
        return None
    t = Fraction(cross(sub(p2, p1), d2), denom)
    return add(p1, scale(d1, t))


# -- equality up to AGL(2,Z) -------------------------------------------------------


def canonical_form(d):
    """Canonical serialization of the AGL(2,Z) orbit of a diagram.

    For each vertex, the outgoing/incoming edge pair is mapped to the
    standard basis and the vertex to the origin; the lexicographically least
    serialization over all vertices and both orientations wins.
    """
    best = None
    for flip in (False, True):
        dd = apply_affine(d, UnimodularMatrix(1, 0, 0, -1)) if flip else d
        anchors = list(dd.vertices()) or list(dd.dots())
        for ci, ei, p in anchors:
            e_in, e_out = _vertex_edges(dd, ci, ei)
            cols = (e_out.direction(), e_in.direction())
            det = cross(cols[0], cols[1])
            if det == 0:
                continue
            m = UnimodularMatrix(cols[0][0], cols[1][0], cols[0][1], cols[1][1]).inverse()
            g = AffineMap(m, neg(m.apply(p)))
            s = serialize(apply_affine(dd, g))
            if best is None or s < best:
                best = s
        if not anchors:
            s = serialize(dd)
            if best is None or s < best:
                best = s
    return best


def agl_equal(d1, d2):
    return canonical_form(d1) == canonical_form(d2)


# -- move scripts ------------------------------------------------------------------


MOVES = {}


def _register(name, fn):
    MOVES[name] = fn


_register("toric_blow_up", lambda d, a: toric_blow_up(d, a["vertex"], a["size"]))
_register("toric_blow_down", lambda d, a: toric_blow_down(d, tuple(a["edge"])))
_register(
    "almost_toric_blow_up",
    lambda d, a: almost_toric_blow_up(d, a["point"], a["size"]),
)
_register(
    "nodal_trade",
    lambda d, a: nodal_trade(d, a["vertex"], a.get("depth")),
)
_register("nodal_trade_back", lambda d, a: nodal_trade_back(d, a["node"]))
_register("nodal_slide", lambda d, a: nodal_slide(d, a["node"], a["t"]))
_register("branch_move", lambda d, a: branch_move(d, a["node"], tuple(a["direction"])))
_register("thicken", lambda d, a: thicken(d, tuple(a["edge"]), a["tau"]))


def apply_moves(d, script):
    """Run a list of {"move": name, "args": {...}} steps; returns the final
    diagram and one MoveRecord per step."""
    records = []
    for step in script:
        name = step["move"]
        if name not in MOVES:
            raise MoveError("unknown move %r" % name)
        before = (euler_characteristic(d), symplectic_volume(d))
        d = MOVES[name](d, step.get("args", {}))
        after = (euler_characteristic(d), symplectic_volume(d))
        records.append(
            MoveRecord(name, step.get("args", {}), before[0], after[0], before[1], after[1])
        )
    return d, records
