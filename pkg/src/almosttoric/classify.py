"""Diffeomorphism types of closed toric and almost toric diagrams.

Closed toric diagrams are classified by their vertex count with a recursive
-1-edge blow-down (three vertices: the projective plane; four: the two
sphere bundles over the sphere, split by the odd-cross-product test; more:
blow down and recurse).  Closed almost toric diagrams dispatch on the base
surface.
"""

from dataclasses import dataclass

from .diagram import (
    REDUCED,
    is_identified,
    transport_matrix,
    validate,
)
from .invariants import edge_self_intersection
from .lattice import cross
from .moves import MoveError, nodal_trade_back, toric_blow_down


class ClassifyError(ValueError):
    pass


@dataclass(frozen=True)
class DiffeoType:
    kind: str  # 'CP2' | 'S2xS2' | 'CP2#nCP2bar' | 'S2xT2' | 'S2~xT2'
    #            | '(S2 bundle over T2)#nCP2bar' | 'torus bundle over torus'
    #            | 'torus bundle over Klein bottle' | 'K3' | 'Enriques'
    blowups: int = 0
    shear: object = None  # lambda for torus bundles

    def label(self):
        if self.kind == "CP2#nCP2bar":
            return "CP2#%dCP2bar" % self.blowups
        if self.kind == "(S2 bundle over T2)#nCP2bar":
            return "(S2 bundle over T2)#%dCP2bar" % self.blowups
        if self.kind == "torus bundle over torus":
            return "torus bundle over torus (lambda=%d)" % self.shear
        return self.kind


def classify_closed_toric(d):
    """(DiffeoType, blow-down trace) for a valid closed toric diagram."""
    report = validate(d)
    if not report.ok:
        raise ClassifyError("diagram is invalid: %s" % (report.findings[0],))
    if d.nodes or d.gluings or d.surface is not None or len(d.cycles) != 1:
        raise ClassifyError("not a closed toric diagram")
    if any(e.marking != REDUCED for e in d.cycles[0]):
        raise ClassifyError("boundary is not entirely reduced")
    k0 = len(d.cycles[0])
    trace = []
    while True:
        cycle = d.cycles[0]
        k = len(cycle)
        if k == 3 or k == 4:
            break
        candidates = [
            (ref, e)
            for ref, e in d.reduced_edges()
            if edge_self_intersection(d, ref) == -1
        ]
        if not candidates:
            raise ClassifyError("no -1 edge found on a %d-gon" % k)
        ref, e = min(candidates, key=lambda it: (it[1].start, it[1].end))
        trace.append({"blow_down": [list(map(str, e.start)), list(map(str, e.end))]})
        d = toric_blow_down(d, ref)
    if k0 == 3:
        return DiffeoType("CP2"), trace
    if k0 == 4:
        cycle = d.cycles[0]
        odd = any(
            cross(cycle[i].direction(), cycle[i + 2].direction()) % 2
            for i in (0, 1)
        )
        return (DiffeoType("CP2#nCP2bar", 1) if odd else DiffeoType("S2xS2")), trace
    # a blow-up of either sphere bundle over the sphere is CP2#(k0-3)CP2bar
    return DiffeoType("CP2#nCP2bar", k0 - 3), trace


def classify_closed_almost_toric(d):
    """DiffeoType of a valid diagram of a closed almost toric manifold."""
    report = validate(d)
    if not report.ok:
        raise ClassifyError("diagram is invalid: %s" % (report.findings[0],))
    if d.surface == "sphere":
        return DiffeoType("K3")
    if d.surface == "rp2":
        return DiffeoType("Enriques")
    if d.surface in ("torus", "klein"):
        return _classify_torus_bundle(d)
    # boundary must be all reduced for the total space to be closed
    non_wedge = [
        e
        for _, e in d.edges()
        if e.marking != REDUCED
        and not (is_identified(e.marking) and e.marking[1] in d.wedge_ids())
    ]
    if any(e.marking == "regular" for e in non_wedge):
        raise ClassifyError("total space has boundary (regular edges present)")
    if not non_wedge:
        return _classify_disk_base(d)
    return _classify_cylinder_base(d, non_wedge)


def _classify_disk_base(d):
    work = d
    guard = 0
    while work.nodes:
        slits = work.slit_nodes()
        if not slits:
            raise ClassifyError("sector cuts remain; branch-move them to slits first")
        progressed = False
        for node in sorted(slits, key=lambda n: (n.pos, n.mult)):
            try:
                work = nodal_trade_back(work, node)
                progressed = True
                break
            except MoveError:
                continue
        if not progressed:
            raise ClassifyError(
                "no node can be traded back; deform the diagram first (disk bases "
                "always admit a toric model, but only after branch moves)"
            )
        guard += 1
        if guard > 1000:
            raise ClassifyError("trade-back loop did not terminate")
    base, _trace = classify_closed_toric(work)
    return base


def _classify_cylinder_base(d, identified_edges):
    keys = {e.marking[1] for e in identified_edges if is_identified(e.marking)}
    if len(keys) != 1 or len(d.cycles) != 1:
        raise ClassifyError("unrecognized closed almost toric configuration")
    key = keys.pop()
    (rs, es), (rt, et), g = d.resolved_gluing(key)
    if g.linear.det == -1:
        raise ClassifyError(
            "Moebius-band bases are not classified here (no table entry)"
        )
    comps = _reduced_circle_directions(d)
    if len(comps) != 2:
        raise ClassifyError("cylinder base needs two reduced boundary circles")
    d1, d2 = comps
    if cross(d1, d2) != 0:
        raise ClassifyError("cylinder boundary components are not parallel")
    for node in d.nodes:
        if cross(node.eigen, d1) != 0:
            raise ClassifyError("node eigenline is not parallel to the boundary")
    n = d.node_total()
    if n:
        return DiffeoType("(S2 bundle over T2)#nCP2bar", n)
    shear = _unipotent_shear(g.linear)
    if shear is None:
        raise ClassifyError("cylinder gluing is not a boundary-parallel shear")
    return DiffeoType("S2xT2" if shear % 2 == 0 else "S2~xT2")


def _reduced_circle_directions(d):
    from .diagram import smooth_components

    out = []
    for comp in smooth_components(d):
        if not comp["closed"]:
            raise ClassifyError("reduced boundary has vertices; not a cylinder base")
        out.append(comp["edges"][0][1].direction())
    return out


def _unipotent_shear(m):
    """k with m conjugate to [[1,k],[0,1]] (sign-normalized), else None."""
    if m.trace != 2 or m.det != 1:
        return None
    n = ((m.a - 1, m.b), (m.c, m.d - 1))
    entries = [abs(x) for row in n for x in row if x]
    if not entries:
        return 0
    from math import gcd

    k = 0
    for x in entries:
        k = gcd(k, x)
    return k


def _classify_torus_bundle(d):
    shears = []
    for key, _ in d.gluings:
        (_, _), (_, _), g = d.resolved_gluing(key)
        if g.linear.det == -1:
            return DiffeoType("torus bundle over Klein bottle")
        k = _unipotent_shear(g.linear)
        if k is None:
            raise ClassifyError("torus-bundle gluing is not unipotent")
        shears.append(k)
    lam = max(shears) if shears else 0
    if d.surface == "klein":
        return DiffeoType("torus bundle over Klein bottle")
    return DiffeoType("torus bundle over torus", shear=lam)


def monodromy_around(d, loop):
    """Ordered product of the cut monodromies crossed by a closed polyline,
    conjugated to the loop's base chart (tangent-vector action)."""
    if loop[0] != loop[-1]:
        raise ClassifyError("loop is not closed")
    return transport_matrix(loop, d)
