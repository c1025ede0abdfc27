"""Base diagrams: polygonal charts with marked boundary, nodes and cuts.

A diagram is a finite set of polygonal charts drawn in (R^2, standard
integral affine structure).  Boundary edges are marked reduced (heavy),
regular (light) or identified (light with arrows; carries an affine gluing
onto its partner edge).  Each node carries a multiplicity, the direction of
its eigenline and a cut polyline.  Cuts come in two drawings:

  * slit cuts: a straight segment along the eigenline, drawn inside the
    chart; crossing it multiplies tangent vectors by the nodal monodromy;
  * sector cuts ("wedges"): the stored cut coincides with an identified
    boundary edge whose partner is its image under the nodal monodromy; the
    sector between the two sides is simply absent from the drawing.

Everything is exact; diagrams are immutable values.
"""

import json
from dataclasses import dataclass, replace
from fractions import Fraction
from math import gcd

from . import geometry as geo
from .lattice import (
    AffineMap,
    MonodromySpec,
    UnimodularMatrix,
    canonical_sign,
    cross,
    dot as dot_,
    is_primitive,
    monodromy_matrix,
    primitive,
    sub,
)

REDUCED = "reduced"
REGULAR = "regular"


def identified(pair_id):
    return ("identified", str(pair_id))


def is_identified(marking):
    return isinstance(marking, tuple) and marking[0] == "identified"


@dataclass(frozen=True)
class Edge:
    start: tuple
    end: tuple
    marking: object = REDUCED

    def direction(self):
        """Primitive integer direction vector."""
        return primitive(sub(self.end, self.start))

    def inward_normal(self):
        """Primitive normal pointing into the region (cycles stored clockwise,
        so inward = -J applied to the direction)."""
        d = self.direction()
        return (d[1], -d[0])

    def affine_length(self):
        d = sub(self.end, self.start)
        p = primitive(d)
        return Fraction(d[0], p[0]) if p[0] else Fraction(d[1], p[1])

    def reversed(self):
        return Edge(self.end, self.start, self.marking)


@dataclass(frozen=True)
class Node:
    pos: tuple
    mult: int
    eigen: tuple
    cut: tuple  # polyline of points, first one == pos

    def __post_init__(self):
        if self.mult < 1:
            raise ValueError("node multiplicity must be >= 1")
        if not is_primitive(self.eigen):
            raise ValueError("eigen direction must be primitive")
        if not self.cut or self.cut[0] != self.pos:
            raise ValueError("cut must start at the node position")

    def monodromy(self, power=1):
        """Tangent-vector action of crossing this node's cut (k-th power)."""
        return monodromy_matrix(MonodromySpec(self.eigen, self.mult)) ** power

    def affine_monodromy(self, power=1):
        return AffineMap.fixing(self.pos, self.monodromy(power))


@dataclass(frozen=True)
class BaseDiagram:
    cycles: tuple  # tuple of tuples of Edge
    nodes: tuple = ()
    gluings: tuple = ()  # sorted tuple of (pair_id, AffineMap)
    surface: object = None  # None | 'sphere' | 'rp2' | 'torus' | 'klein'

    # -- basic accessors ---------------------------------------------------

    def gluing(self, pair_id):
        for key, g in self.gluings:
            if key == pair_id:
                return g
        raise KeyError(pair_id)

    def edges(self):
        for ci, cycle in enumerate(self.cycles):
            for ei, edge in enumerate(cycle):
                yield (ci, ei), edge

    def reduced_edges(self):
        return [(ref, e) for ref, e in self.edges() if e.marking == REDUCED]

    def identified_pair(self, pair_id):
        """((ref, edge) primary, (ref, edge) partner) in cycle order."""
        found = [(ref, e) for ref, e in self.edges() if e.marking == identified(pair_id)]
        if len(found) != 2:
            raise ValueError("gluing %r does not mark exactly two edges" % pair_id)
        return found

    def resolved_gluing(self, pair_id):
        """((source ref, edge), (target ref, edge), map) with map(source) = target.

        The stored map may carry either edge onto the other; the direction is
        recovered geometrically so it survives cycle re-rotation.
        """
        (r1, e1), (r2, e2) = self.identified_pair(pair_id)
        g = self.gluing(pair_id)
        if {g.apply(e1.start), g.apply(e1.end)} == {e2.start, e2.end}:
            return (r1, e1), (r2, e2), g
        if {g.apply(e2.start), g.apply(e2.end)} == {e1.start, e1.end}:
            return (r2, e2), (r1, e1), g
        raise ValueError("gluing %r does not carry either edge onto the other" % pair_id)

    def cycle_points(self, ci):
        return [e.start for e in self.cycles[ci]]

    def node_total(self):
        return sum(n.mult for n in self.nodes)

    def vertex_count(self):
        return len(self.vertices())

    # -- derived structure ---------------------------------------------------

    def corner_points(self):
        """Corner points of the outline where two reduced edges meet."""
        out = []
        for ci, cycle in enumerate(self.cycles):
            for ei, edge in enumerate(cycle):
                prev = cycle[ei - 1]
                if prev.end != edge.start:
                    continue
                if prev.marking == REDUCED and edge.marking == REDUCED:
                    out.append((ci, ei, edge.start))
        return out

    def cut_endpoints(self):
        return {n.cut[-1] for n in self.nodes}

    def dots(self):
        """Heavy dots: reduced-reduced corners where a cut terminates."""
        ends = self.cut_endpoints()
        return [(ci, ei, p) for ci, ei, p in self.corner_points() if p in ends]

    def vertices(self):
        """0-stratum points: reduced-reduced corners that are not dots."""
        ends = self.cut_endpoints()
        return [(ci, ei, p) for ci, ei, p in self.corner_points() if p not in ends]

    def wedge_ids(self):
        """Map pair_id -> node for sector cuts (cut lies on identified edges)."""
        out = {}
        for node in self.nodes:
            seg = (node.cut[0], node.cut[-1])
            for ref, e in self.edges():
                if is_identified(e.marking) and {e.start, e.end} == {seg[0], seg[1]}:
                    out[e.marking[1]] = node
                    break
        return out

    def slit_nodes(self):
        wedge_nodes = set(id(n) for n in self.wedge_ids().values())
        return [n for n in self.nodes if id(n) not in wedge_nodes]

    def features_polylines(self):
        """All drawn 1-dimensional features (edges and cuts), for clearance tests."""
        out = [(e.start, e.end) for _, e in self.edges()]
        for n in self.nodes:
            out.extend(zip(n.cut, n.cut[1:]))
        return out

    def locate(self, p):
        """(chart index, code) with code 1 interior / 0 boundary / -1 outside all."""
        for ci in range(len(self.cycles)):
            code = geo.point_in_polygon(p, self.cycle_points(ci))
            if code >= 0:
                return ci, code
        return None, -1

    def contains(self, p):
        return self.locate(p)[1] >= 0


# -- construction helpers ----------------------------------------------------


def cycle_from_points(points_markings):
    """Closed cycle from [(point, marking), ...]; edge i runs to point i+1."""
    pts = [p for p, _ in points_markings]
    n = len(pts)
    return tuple(
        Edge(pts[i], pts[(i + 1) % n], points_markings[i][1]) for i in range(n)
    )


def polygon_diagram(points, markings=None, nodes=(), gluings=(), surface=None):
    """Diagram from one polygon given by its vertex list (any orientation)."""
    pts = [(Fraction(x), Fraction(y)) for x, y in points]
    if not geo.is_clockwise(pts):
        pts = list(reversed(pts))
        if markings is not None:
            # marking i belonged to edge (i, i+1); reversing re-homes it
            markings = [markings[(len(pts) - 2 - i) % len(pts)] for i in range(len(pts))]
    if markings is None:
        markings = [REDUCED] * len(pts)
    cycle = cycle_from_points(list(zip(pts, markings)))
    return normalize(
        BaseDiagram(
            cycles=(cycle,),
            nodes=tuple(nodes),
            gluings=tuple(sorted(gluings)),
            surface=surface,
        )
    )


# -- serialization -------------------------------------------------------------


def _frac_to_str(x):
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return "%d/%d" % (x.numerator, x.denominator)


def _frac_from_str(s):
    if isinstance(s, int):
        return Fraction(s)
    if "/" in s:
        num, den = s.split("/")
        den = int(den)
        if den <= 0:
            raise DiagramFormatError("denominator must be positive in %r" % s)
        return Fraction(int(num), den)
    return Fraction(int(s))


def _point_json(p):
    return [_frac_to_str(p[0]), _frac_to_str(p[1])]


def _point_from_json(v, where):
    if not (isinstance(v, list) and len(v) == 2):
        raise DiagramFormatError("%s: expected a 2-element point, got %r" % (where, v))
    return (_frac_from_str(v[0]), _frac_from_str(v[1]))


class DiagramFormatError(ValueError):
    """Schema violation while parsing a diagram document."""


def to_json_obj(d):
    boundary = []
    for ci in range(len(d.cycles)):
        cyc = []
        for e in d.cycles[ci]:
            marking = e.marking if not is_identified(e.marking) else {"identified": e.marking[1]}
            cyc.append({"pt": _point_json(e.start), "marking": marking})
        boundary.append(cyc)
    obj = {"boundary": boundary}
    if d.gluings:
        obj["gluings"] = {
            key: {
                "linear": [list(g.linear.rows()[0]), list(g.linear.rows()[1])],
                "translation": _point_json(g.translation),
            }
            for key, g in d.gluings
        }
    obj["nodes"] = [
        {
            "pos": _point_json(n.pos),
            "mult": n.mult,
            "eigen": list(n.eigen),
            "cut": [_point_json(p) for p in n.cut],
        }
        for n in d.nodes
    ]
    if d.surface is not None:
        obj["surface"] = d.surface
    return obj


def serialize(d):
    """Canonical JSON text; deterministic for equal diagrams."""
    return json.dumps(to_json_obj(normalize(d)), indent=1, sort_keys=True)


def from_json_obj(obj):
    if not isinstance(obj, dict):
        raise DiagramFormatError("top level must be an object")
    unknown = set(obj) - {"boundary", "gluings", "nodes", "surface"}
    if unknown:
        raise DiagramFormatError("unknown top-level keys %s" % sorted(unknown))
    if "boundary" not in obj:
        raise DiagramFormatError("missing 'boundary'")
    cycles = []
    for ci, cyc in enumerate(obj["boundary"]):
        pts = []
        for ei, entry in enumerate(cyc):
            where = "boundary[%d][%d]" % (ci, ei)
            if set(entry) != {"pt", "marking"}:
                raise DiagramFormatError("%s: need 'pt' and 'marking'" % where)
            p = _point_from_json(entry["pt"], where)
            m = entry["marking"]
            if m in (REDUCED, REGULAR):
                marking = m
            elif isinstance(m, dict) and set(m) == {"identified"}:
                marking = identified(m["identified"])
            else:
                raise DiagramFormatError("%s: bad marking %r" % (where, m))
            pts.append((p, marking))
        if len(pts) < 2:
            raise DiagramFormatError("boundary[%d]: need at least two edges" % ci)
        cycles.append(cycle_from_points(pts))
    gluings = []
    for key, g in (obj.get("gluings") or {}).items():
        where = "gluings[%s]" % key
        try:
            (a, b), (c, dd) = g["linear"]
            lin = UnimodularMatrix(int(a), int(b), int(c), int(dd))
        except (KeyError, TypeError, ValueError) as exc:
            raise DiagramFormatError("%s: bad linear part (%s)" % (where, exc))
        t = _point_from_json(g.get("translation", ["0", "0"]), where)
        gluings.append((str(key), AffineMap(lin, t)))
    nodes = []
    for ni, nd in enumerate(obj.get("nodes") or []):
        where = "nodes[%d]" % ni
        try:
            pos = _point_from_json(nd["pos"], where)
            mult = int(nd.get("mult", 1))
            eigen = (int(nd["eigen"][0]), int(nd["eigen"][1]))
            cut = tuple(_point_from_json(p, where) for p in nd["cut"])
            nodes.append(Node(pos, mult, canonical_sign(eigen), cut))
        except DiagramFormatError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise DiagramFormatError("%s: %s" % (where, exc))
    surface = obj.get("surface")
    if surface not in (None, "sphere", "rp2", "torus", "klein"):
        raise DiagramFormatError("bad surface tag %r" % surface)
    d = BaseDiagram(
        cycles=tuple(cycles),
        nodes=tuple(nodes),
        gluings=tuple(sorted(gluings)),
        surface=surface,
    )
    return normalize(d)


def parse(text):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DiagramFormatError("not valid JSON: %s" % exc)
    return from_json_obj(obj)


def normalize(d):
    """Canonical form: clockwise cycles, merged collinear reduced edges,
    canonical cycle rotation and ordering, sorted nodes and gluings."""
    cut_ends = {n.cut[-1] for n in d.nodes} | {n.pos for n in d.nodes}
    cycles = []
    for ci in range(len(d.cycles)):
        cycle = list(d.cycles[ci])
        for e in cycle:
            if e.start == e.end:
                raise DiagramFormatError("degenerate zero-length edge at %r" % (e.start,))
        pts = [e.start for e in cycle]
        if not geo.is_clockwise(pts):
            cycle = [e.reversed() for e in reversed(cycle)]
        # merge collinear consecutive same-marking runs not pinned by a cut
        changed = True
        while changed and len(cycle) > 2:
            changed = False
            for i in range(len(cycle)):
                a = cycle[i - 1]
                b = cycle[i]
                if (
                    a.marking == b.marking
                    and not is_identified(a.marking)
                    and a.end == b.start
                    and b.start not in cut_ends
                    and cross(sub(a.end, a.start), sub(b.end, b.start)) == 0
                ):
                    merged = Edge(a.start, b.end, a.marking)
                    if i == 0:
                        cycle = [merged] + cycle[1:-1]
                    else:
                        cycle = cycle[: i - 1] + [merged] + cycle[i + 1 :]
                    changed = True
                    break
        # rotate to the lexicographically least start point
        k = min(range(len(cycle)), key=lambda i: cycle[i].start)
        cycles.append(tuple(cycle[k:] + cycle[:k]))
    cycles.sort(key=lambda c: c[0].start)
    nodes = tuple(sorted(d.nodes, key=lambda n: (n.pos, n.mult)))
    return BaseDiagram(
        cycles=tuple(cycles),
        nodes=nodes,
        gluings=tuple(sorted(d.gluings)),
        surface=d.surface,
    )


# -- validation -----------------------------------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    verdict: str  # 'valid' | 'invalid'
    findings: tuple  # of (location, rule, message)

    @property
    def ok(self):
        return self.verdict == "valid"

    def rules(self):
        return {rule for _, rule, _ in self.findings}


NODE_TOTALS = {"sphere": 24, "rp2": 12, "torus": 0, "klein": 0}


def validate(d):
    """Check the diagram against the toric/almost-toric base conditions."""
    findings = []

    def flag(loc, rule, msg):
        findings.append((loc, rule, msg))

    # E0: well-formed outline
    for ci, cycle in enumerate(d.cycles):
        pts = [e.start for e in cycle]
        for ei, e in enumerate(cycle):
            if e.end != cycle[(ei + 1) % len(cycle)].start:
                flag((ci, ei), "E0", "cycle is not closed at edge %d" % ei)
        if not geo.is_clockwise(pts):
            flag((ci,), "E0", "cycle is not clockwise")
        if not geo.polygon_is_simple(pts):
            flag((ci,), "E0", "outline self-intersects")
    if any(rule == "E0" for _, rule, _ in findings):
        return ValidationReport("invalid", tuple(findings))

    wedges = d.wedge_ids()
    wedge_nodes = {id(n) for n in wedges.values()}

    # V4 / wedge consistency: identified pairs glue edge onto partner
    seen = {}
    for ref, e in d.edges():
        if is_identified(e.marking):
            seen.setdefault(e.marking[1], []).append((ref, e))
    for key, items in seen.items():
        if len(items) != 2:
            flag(key, "V4", "gluing %r marks %d edges, need 2" % (key, len(items)))
            continue
        try:
            d.gluing(key)
        except KeyError:
            flag(key, "V4", "no gluing map for pair %r" % key)
            continue
        try:
            (rs, es), (rt, et), g = d.resolved_gluing(key)
        except ValueError:
            flag(key, "V4", "gluing %r does not carry its edge onto the partner" % key)
            continue
        # crossing the wall must carry outward motion to inward motion
        if dot_(g.linear.apply(es.inward_normal()), et.inward_normal()) >= 0:
            flag(key, "V4", "gluing %r does not flow through the wall" % key)
        if key in wedges:
            node = wedges[key]
            want = {node.affine_monodromy(+1), node.affine_monodromy(-1)}
            if g not in want and g.inverse() not in want:
                flag(key, "V5", "sector-cut gluing is not the nodal monodromy")
    for key, _ in d.gluings:
        if key not in seen:
            flag(key, "V4", "gluing %r marks no edges" % key)

    # vertices: V1 unimodularity, V2 convexity
    for ci, ei, p in d.vertices():
        cycle = d.cycles[ci]
        e_in, e_out = cycle[ei - 1], cycle[ei]
        if not (e_in.marking == REDUCED and e_out.marking == REDUCED):
            continue
        c = cross(e_in.direction(), e_out.direction())
        if abs(c) != 1:
            flag((ci, ei), "V1", "orbifold point: |cross| = %d at %r" % (abs(c), p))
        elif c >= 0:
            flag((ci, ei), "V2", "not locally convex at %r" % (p,))

    # nodes and cuts
    outline_ok = True
    for ni, node in enumerate(d.nodes):
        if id(node) in wedge_nodes:
            continue
        cut = node.cut
        if len(cut) != 2:
            flag(ni, "V3", "slit cut must be a single segment")
            continue
        ray = sub(cut[1], cut[0])
        if cross(ray, node.eigen) != 0:
            flag(ni, "V5", "slit cut at %r is not along the eigenline" % (node.pos,))
        ci, code = d.locate(node.pos)
        if code != 1:
            flag(ni, "V3", "node at %r is not interior to a chart" % (node.pos,))
            outline_ok = False
            continue
        ci_end, code_end = d.locate(cut[-1])
        if code_end != 0:
            flag(ni, "V3", "cut endpoint %r is not on the boundary" % (cut[-1],))
        # embedded, clear of other features except its own endpoints
        for other in d.nodes:
            if other is node:
                continue
            for a, b in zip(other.cut, other.cut[1:]):
                hit = geo.seg_intersection(cut[0], cut[1], a, b)
                if hit[0] == "overlap" or (hit[0] == "point" and hit[1] not in (cut[-1],)):
                    flag(ni, "V3", "cut collides with another cut")
            if geo.strictly_between(other.pos, cut[0], cut[1]) or other.pos == cut[-1]:
                flag(ni, "V3", "cut passes through another node")
        for ref, e in d.edges():
            hit = geo.seg_intersection(cut[0], cut[1], e.start, e.end)
            if hit[0] == "overlap":
                flag(ni, "V3", "cut overlaps edge %r" % (ref,))
            elif hit[0] == "point" and hit[1] != cut[-1]:
                flag(ni, "V3", "cut crosses the boundary before its endpoint")

    # smoothness across dots: incoming direction maps to outgoing direction
    for ci, ei, p in d.dots():
        cycle = d.cycles[ci]
        e_in, e_out = cycle[ei - 1], cycle[ei]
        node = next((n for n in d.nodes if n.cut[-1] == p and len(n.cut) == 2), None)
        if node is None:
            continue
        d_in, d_out = e_in.direction(), e_out.direction()
        m = node.monodromy()
        if m.apply(d_in) != d_out and m.inverse().apply(d_in) != d_out:
            flag((ci, ei), "V2", "boundary is not smooth across the dot at %r" % (p,))

    # closed-surface constraints
    if d.surface is not None:
        free = [ref for ref, e in d.edges() if not is_identified(e.marking)]
        if free:
            flag(free[0], "S1", "closed surface tag with unglued boundary edges")
        want = NODE_TOTALS[d.surface]
        have = d.node_total()
        if have != want:
            flag(
                "surface",
                "S1",
                "surface %r needs 12*chi = %d nodes, found %d" % (d.surface, want, have),
            )
        kind = glued_surface_type(d)
        if kind is not None and kind != d.surface:
            flag("surface", "S1", "gluing pattern builds %r, tag says %r" % (kind, d.surface))
        if outline_ok and d.surface == "sphere" and len(d.cycles) == 2:
            if not _sphere_monodromy_consistent(d):
                flag("surface", "S2", "total monodromy around the glued sphere is not trivial")

    verdict = "valid" if not findings else "invalid"
    return ValidationReport(verdict, tuple(findings))


def glued_surface_type(d):
    """Surface type assembled by the identified edges, when fully glued.

    Returns 'sphere' | 'rp2' | 'torus' | 'klein' | None (when boundary
    remains or the complex is disconnected).
    """
    if any(not is_identified(e.marking) for _, e in d.edges()):
        return None
    # chi = V - E + F on the identification complex
    corners = []
    for ci, cycle in enumerate(d.cycles):
        for e in cycle:
            corners.append(e.start)
    pair_of = {}
    for key, _ in d.gluings:
        (r1, e1), (r2, e2) = d.identified_pair(key)
        g = d.gluing(key)
        pair_of[(r1, r2)] = g
    # vertex classes: identify corner points under all gluing maps
    points = set(corners)
    parent = {p: p for p in points}

    def find(p):
        while parent[p] != p:
            parent[p] = parent[parent[p]]
            p = parent[p]
        return p

    def union(p, q):
        rp, rq = find(p), find(q)
        if rp != rq:
            parent[rp] = rq

    orientation_reversing = 0
    for key, _ in d.gluings:
        (r1, e1), (r2, e2), g = d.resolved_gluing(key)
        for p in (e1.start, e1.end):
            q = g.apply(p)
            if q not in parent:
                parent[q] = q
                points.add(q)
            union(p, q)
        # the chart transition across the wall is the gluing's linear part,
        # so its determinant decides orientability
        if g.linear.det == -1:
            orientation_reversing += 1
    v = len({find(p) for p in corners})
    e_count = sum(len(c) for c in d.cycles) // 2
    f = len(d.cycles)
    chi = v - e_count + f
    orientable = orientation_reversing == 0
    if chi == 2:
        return "sphere"
    if chi == 1:
        return "rp2"
    if chi == 0:
        return "torus" if orientable else "klein"
    return None


def _sphere_monodromy_consistent(d):
    """For a two-chart sphere: a loop around one chart's nodes, carried across
    the gluing, must cancel the other chart's loop."""
    u = [boundary_loop_monodromy(d, ci) for ci in range(2)]
    key, g = d.gluings[0]
    (r1, _), (r2, _) = d.identified_pair(key)
    a = g.linear
    for m2 in (u[1], u[1].inverse()):
        for conj in (a * m2 * a.inverse(), a.inverse() * m2 * a):
            if u[0] * conj == UnimodularMatrix(1, 0, 0, 1) or conj * u[0] == UnimodularMatrix(1, 0, 0, 1):
                return True
    return False


def boundary_loop_monodromy(d, ci):
    """Ordered product of cut monodromies along the clockwise boundary of a
    chart (tangent action), based just after the first edge's start."""
    total = UnimodularMatrix(1, 0, 0, 1)
    wedges = d.wedge_ids()
    cycle = d.cycles[ci]
    crossings = []  # (edge index, parameter, matrix)
    for ni, node in enumerate(d.nodes):
        if id(node) in {id(n) for n in wedges.values()}:
            continue
        end = node.cut[-1]
        for ei, e in enumerate(cycle):
            if geo.on_segment(end, e.start, e.end):
                t = geo._param(e.start, e.end, end)
                m = _slit_crossing_matrix(node, sub(e.end, e.start))
                crossings.append((ei, t, m))
                break
    for key, node in wedges.items():
        (rs, es), (rt, et), g = d.resolved_gluing(key)
        if rs[0] != ci and rt[0] != ci:
            continue
        # walking clockwise past the wedge: leave through the side appearing
        # earlier in the cycle; tangents pick up the map carrying the exit
        # side onto the entry side.
        if rs[1] < rt[1]:
            crossings.append((rs[1], Fraction(1, 2), g.linear))
        else:
            crossings.append((rt[1], Fraction(1, 2), g.linear.inverse()))
    for _, _, m in sorted(crossings, key=lambda x: (x[0], x[1])):
        total = m * total
    return total


def _slit_crossing_matrix(node, crossing_direction):
    """Monodromy applied to tangent vectors for one crossing of a slit cut.

    Sign convention: with c the cut direction away from the node, crossing
    with cross(c, d) < 0 applies the positive power (clockwise loops around
    a node compose the positive monodromy).
    """
    c = sub(node.cut[-1], node.cut[0])
    s = cross(c, crossing_direction)
    if s == 0:
        raise ValueError("path runs along the cut")
    return node.monodromy(+1 if s < 0 else -1)


# -- transport -----------------------------------------------------------------


class TransportError(ValueError):
    pass


def _walk_crossings(d, path):
    """Yield wall crossings along the polyline, in order.

    Events are ('slit', node, matrix) or ('jump', gluing) where consecutive
    breakpoints p, q with q = gluing(p) encode passage through an identified
    edge (including wedge sectors).
    """
    wedges = d.wedge_ids()
    wedge_node_ids = {id(n) for n in wedges.values()}
    slit_segmentss = []
    for node in d.nodes:
        if id(node) in wedge_node_ids:
            continue
        if len(node.cut) != 2:
            raise TransportError("transport across polyline cuts is not supported")
        slit_segmentss.append((node, [(node.cut[0], node.cut[1])]))
    for idx in range(len(path) - 1):
        p, q = path[idx], path[idx + 1]
        jumped = False
        if p != q:
            for key, _ in d.gluings:
                (_, src), (_, tgt), g = d.resolved_gluing(key)
                if geo.on_segment(p, src.start, src.end) and g.apply(p) == q:
                    yield ("jump", g.linear, key)
                    jumped = True
                    break
                if geo.on_segment(p, tgt.start, tgt.end) and g.inverse().apply(p) == q:
                    yield ("jump", g.linear.inverse(), key)
                    jumped = True
                    break
        if jumped:
            continue
        events = []
        for node, segs in slit_segmentss:
            if geo.strictly_between(node.pos, p, q):
                raise TransportError("path passes through the node at %r" % (node.pos,))
            interior_breakpoint = node.pos in (p, q) and not (
                (idx == 0 and node.pos == p)
                or (idx == len(path) - 2 and node.pos == q)
            )
            if interior_breakpoint:
                raise TransportError("path passes through the node at %r" % (node.pos,))
            a, b = segs[0]
            hit = geo.seg_intersection(p, q, a, b)
            if hit[0] == "overlap":
                raise TransportError("path runs along a cut")
            if hit[0] == "point":
                x, t, u = hit[1], hit[2], hit[3]
                if x == node.pos:
                    continue  # segment ends at the node itself
                if t == 0 or t == 1:
                    # touching the cut at a breakpoint: allowed only at the
                    # path's own endpoints, where no crossing is counted
                    at_path_end = (idx == 0 and x == p) or (
                        idx == len(path) - 2 and x == q
                    )
                    if at_path_end:
                        continue
                    raise TransportError(
                        "breakpoint %r lies on a cut; crossing is ambiguous" % (x,)
                    )
                if u == 1:
                    raise TransportError("path grazes the cut endpoint at %r" % (x,))
                m = _slit_crossing_matrix(node, sub(q, p))
                events.append((t, ("slit", node, m)))
        events.sort(key=lambda ev: ev[0])
        for t, ev in events:
            yield ev


def transport(v, path, d):
    """Parallel transport of a tangent vector along a polyline path.

    The vector is multiplied by the signed product of the cut monodromies the
    path crosses, in crossing order.  Identified edges (and wedge sectors)
    are crossed by repeating the point: ..., p, gluing(p), ...
    """
    out = tuple(v)
    for ev in _walk_crossings(d, path):
        m = ev[1] if ev[0] == "jump" else ev[2]
        out = m.apply(out)
    return out


def transport_class(v, path, d):
    """Transport of fiber-class data (compatible / collapsing / vanishing
    vectors), which transforms contragrediently to tangent vectors."""
    out = tuple(v)
    for ev in _walk_crossings(d, path):
        m = ev[1] if ev[0] == "jump" else ev[2]
        out = m.inverse_transpose().apply(out)
    return out


def transport_matrix(path, d):
    m = UnimodularMatrix(1, 0, 0, 1)
    for ev in _walk_crossings(d, path):
        step = ev[1] if ev[0] == "jump" else ev[2]
        m = step * m
    return m


# -- smooth 1-stratum components ---------------------------------------------


def smooth_components(d):
    """Partition reduced edges into smooth components of the 1-stratum.

    Consecutive reduced edges joined at a heavy dot belong to one component,
    as do edges joined across a wedge sector or an identified gap whenever
    the gluing carries the incoming direction onto the outgoing one.  Each
    component is {'edges': [(ref, edge), ...], 'closed': bool}.
    """
    refs = [ref for ref, e in d.edges() if e.marking == REDUCED]
    edge_at = {ref: e for ref, e in d.edges()}
    succ = {}
    for ref in refs:
        nxt = _smooth_successor(d, ref, edge_at)
        if nxt is not None:
            succ[ref] = nxt
    pred = {v[0]: k for k, v in succ.items()}
    components = []
    seen = set()
    for ref in refs:
        if ref in seen:
            continue
        start = ref
        while start in pred and pred[start] != ref and pred[start] not in seen:
            start = pred[start]
            if start == ref:
                break
        chain = [start]
        seen.add(start)
        closed = False
        cur = start
        while cur in succ:
            nxt = succ[cur][0]
            if nxt == chain[0]:
                closed = True
                break
            if nxt in seen:
                break
            chain.append(nxt)
            seen.add(nxt)
            cur = nxt
        components.append(
            {"edges": [(r, edge_at[r]) for r in chain], "closed": closed}
        )
    return components


def _smooth_successor(d, ref, edge_at):
    """Next reduced edge of the same smooth component, or None at a vertex.

    Returns (ref, matrix) where matrix is the tangent transition picked up
    between the two edges (slit monodromy at a dot, gluing across a gap).
    """
    ci, ei = ref
    cycle = d.cycles[ci]
    e = cycle[ei]
    nxt_ref = (ci, (ei + 1) % len(cycle))
    nxt = cycle[nxt_ref[1]]
    if nxt.marking == REDUCED:
        if e.direction() == nxt.direction():
            return (nxt_ref, IDENTITY_M)
        node = next(
            (n for n in d.nodes if len(n.cut) == 2 and n.cut[-1] == e.end), None
        )
        if node is None:
            return None  # genuine vertex (or invalid corner)
        m = _slit_crossing_matrix(node, sub(e.end, e.start))
        if m.apply(e.direction()) != nxt.direction():
            return None
        return (nxt_ref, m)
    if is_identified(nxt.marking):
        key = nxt.marking[1]
        (rs, es), (rt, et), g = d.resolved_gluing(key)
        if nxt_ref == rs:
            image, lin = g.apply(e.end), g.linear
        else:
            image, lin = g.inverse().apply(e.end), g.linear.inverse()
        for ref2, e2 in d.edges():
            if e2.marking == REDUCED and e2.start == image:
                if lin.apply(e.direction()) == e2.direction():
                    return (ref2, lin)
        return None
    return None


IDENTITY_M = UnimodularMatrix(1, 0, 0, 1)


def component_loop_matrix(d, component):
    """Tangent transport once around a closed smooth component, in cycle
    order, based at the start of its first edge."""
    if not component["closed"]:
        raise ValueError("component is not a closed circle")
    total = IDENTITY_M
    edges = component["edges"]
    edge_at = {ref: e for ref, e in d.edges()}
    for i, (ref, e) in enumerate(edges):
        # cuts ending strictly inside this edge
        inner = []
        for node in d.nodes:
            if len(node.cut) != 2:
                continue
            end = node.cut[-1]
            if geo.strictly_between(end, e.start, e.end):
                t = geo._param(e.start, e.end, end)
                inner.append((t, _slit_crossing_matrix(node, sub(e.end, e.start))))
        for _, m in sorted(inner, key=lambda x: x[0]):
            total = m * total
        nxt = _smooth_successor(d, ref, edge_at)
        if nxt is None:
            raise ValueError("component walk broke at %r" % (ref,))
        total = nxt[1] * total
    return total


# -- affine action ---------------------------------------------------------------


def apply_affine(d, g):
    """Image of the diagram under an AGL(2,Z) element (or UnimodularMatrix)."""
    if isinstance(g, UnimodularMatrix):
        g = AffineMap(g, (Fraction(0), Fraction(0)))
    cycles = tuple(
        tuple(Edge(g.apply(e.start), g.apply(e.end), e.marking) for e in cycle)
        for cycle in d.cycles
    )
    nodes = tuple(
        Node(
            g.apply(n.pos),
            n.mult,
            canonical_sign(g.linear.apply(n.eigen)),
            tuple(g.apply(p) for p in n.cut),
        )
        for n in d.nodes
    )
    gluings = tuple(
        (key, g.compose(h).compose(g.inverse())) for key, h in d.gluings
    )
    return normalize(BaseDiagram(cycles, nodes, gluings, d.surface))


# -- pasting ---------------------------------------------------------------------


class PasteError(ValueError):
    pass


def paste(d1, d2, g=None):
    """Union of d1 and g(d2) along an overlap with agreeing strata.

    Supports single-chart diagrams whose union is a simple polygon; markings
    must agree wherever both boundaries overlap, and merged reduced strata
    must stay straight across the former joints.
    """
    if g is not None:
        d2 = apply_affine(d2, g)
    if len(d1.cycles) != 1 or len(d2.cycles) != 1:
        raise PasteError("pasting supports single-chart diagrams")
    if d1.gluings or d2.gluings:
        raise PasteError("pasting across identified edges is not supported")
    poly1 = d1.cycle_points(0)
    poly2 = d2.cycle_points(0)
    if not _polygons_overlap_interior(poly1, poly2):
        raise PasteError("overlap has empty interior")

    # split both boundaries at every mutual intersection point
    chains1 = _split_cycle(d1.cycles[0], d2.cycles[0])
    chains2 = _split_cycle(d2.cycles[0], d1.cycles[0])

    # keep boundary pieces not interior to the other polygon; overlapping
    # pieces must agree in marking
    pieces = []
    for e in chains1:
        side = _piece_side(e, poly2)
        if side == "interior":
            continue
        if side == "boundary":
            other = _find_overlapping(e, chains2)
            if other is None or other.marking != e.marking:
                raise PasteError("strata disagree on the overlap near %r" % (e.start,))
        pieces.append(e)
    for e in chains2:
        side = _piece_side(e, poly1)
        if side in ("interior", "boundary"):
            continue
        pieces.append(e)

    cycle = _assemble_cycle(pieces)
    out = BaseDiagram(
        cycles=(tuple(cycle),),
        nodes=tuple(sorted(set(d1.nodes) | set(d2.nodes), key=lambda n: (n.pos, n.mult))),
        gluings=(),
        surface=None,
    )
    out = normalize(out)
    report = validate(out)
    if not report.ok:
        raise PasteError("pasted diagram is invalid: %s" % (report.findings[0],))
    return out


def _polygons_overlap_interior(p1, p2):
    for p in p1:
        if geo.point_in_polygon(p, p2) == 1:
            return True
    for p in p2:
        if geo.point_in_polygon(p, p1) == 1:
            return True
    # edges may cross without containing vertices
    n1, n2 = len(p1), len(p2)
    for i in range(n1):
        for j in range(n2):
            if geo.segments_cross_properly(
                p1[i], p1[(i + 1) % n1], p2[j], p2[(j + 1) % n2]
            ):
                return True
    return False


def _split_cycle(cycle, other_cycle):
    cuts = []
    for e in cycle:
        points = {e.start, e.end}
        for o in other_cycle:
            hit = geo.seg_intersection(e.start, e.end, o.start, o.end)
            if hit[0] == "point":
                points.add(hit[1])
            elif hit[0] == "overlap":
                points.update(hit[1:])
        ordered = sorted(points, key=lambda p: geo._param(e.start, e.end, p))
        for a, b in zip(ordered, ordered[1:]):
            cuts.append(Edge(a, b, e.marking))
    return cuts


def _piece_side(e, poly):
    mid = ((e.start[0] + e.end[0]) / 2, (e.start[1] + e.end[1]) / 2)
    code = geo.point_in_polygon(mid, poly)
    return {1: "interior", 0: "boundary", -1: "exterior"}[code]


def _find_overlapping(e, chain):
    mid = ((e.start[0] + e.end[0]) / 2, (e.start[1] + e.end[1]) / 2)
    for o in chain:
        if geo.on_segment(mid, o.start, o.end):
            return o
    return None


def _assemble_cycle(pieces):
    by_start = {}
    for e in pieces:
        by_start.setdefault(e.start, []).append(e)
    start = pieces[0]
    cycle = [start]
    guard = 0
    while cycle[-1].end != start.start:
        nxts = by_start.get(cycle[-1].end)
        if not nxts:
            raise PasteError("union boundary does not close up")
        cycle.append(nxts.pop(0))
        guard += 1
        if guard > len(pieces):
            raise PasteError("union boundary is not a single cycle")
    if len(cycle) != len(pieces):
        raise PasteError("union region is not simply connected")
    return cycle
