"""Pretopologies on finite categories, sieves, and the refinement calculus.

A covering is a finite family of arrows into a common target, normalized to a
sorted tuple (input may repeat arrows; verdicts never depend on repetition).
A pretopology declares coverings per object; :func:`validate_pretopology`
checks the isomorphism, base-change and composition axioms exhaustively.

Sieves are precomposition-closed arrow families into a root object.  The
sieve calculus here (belonging, intersection, refinement, subordination,
saturation) is deliberately presentation-independent: every decider that
consumes a pretopology goes through sieves or refinements, never through the
identity of particular covering families.
"""

import itertools

from . import fincat
from .errors import CapExceeded, RootMismatch, TargetMismatch

DEFAULT_FAMILY_CAP = 1 << 16


class Covering:
    """A normalized family of arrows with a common target.

    Input may repeat arrows; the family is normalized to a sorted
    duplicate-free tuple.  No verdict in this package depends on
    multiplicity (the pair conditions for a repeated member are instances
    of the conditions for the member itself).
    """

    __slots__ = ("target", "arrows")

    def __init__(self, target, arrows):
        self.target = target
        self.arrows = tuple(sorted(set(arrows)))

    def key(self):
        return (self.target, self.arrows)

    def __eq__(self, other):
        return isinstance(other, Covering) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return "Covering(%r, %r)" % (self.target, list(self.arrows))


class Pretopology:
    """A base category plus, per object, a set of declared coverings."""

    def __init__(self, cat, coverings):
        self.cat = cat
        self.coverings = {}
        for obj in cat.objects:
            covs = []
            seen = set()
            for cov in coverings.get(obj, []):
                cov = cov if isinstance(cov, Covering) else Covering(obj, cov)
                if cov.key() not in seen:
                    seen.add(cov.key())
                    covs.append(cov)
            self.coverings[obj] = covs

    def coverings_of(self, obj):
        return self.coverings.get(obj, [])

    def covering_id(self, cov):
        """Stable identifier of a declared covering (position in canonical order)."""
        for i, c in enumerate(self.coverings_of(cov.target)):
            if c == cov:
                return "%s#%d" % (cov.target, i)
        return "%s#?" % cov.target

    def __repr__(self):
        total = sum(len(v) for v in self.coverings.values())
        return "Pretopology(%d coverings)" % total


class Sieve:
    """A precomposition-closed family of arrows into a fixed root."""

    __slots__ = ("root", "arrows")

    def __init__(self, root, arrows):
        self.root = root
        self.arrows = frozenset(arrows)

    def members(self, cat, source):
        return [f for f in cat.hom(source, self.root) if f in self.arrows]

    def is_closed(self, cat):
        for f in self.arrows:
            src = cat.src(f)
            for obj in cat.objects:
                for g in cat.hom(obj, src):
                    if cat.compose(f, g) not in self.arrows:
                        return False
        return True

    def __le__(self, other):
        return self.root == other.root and self.arrows <= other.arrows

    def __eq__(self, other):
        return (
            isinstance(other, Sieve)
            and self.root == other.root
            and self.arrows == other.arrows
        )

    def __hash__(self):
        return hash((self.root, self.arrows))

    def __repr__(self):
        return "Sieve(%r, %d arrows)" % (self.root, len(self.arrows))


def maximal_sieve(cat, root):
    return Sieve(root, cat.arrows_into(root))


def sieve_from_covering(cat, cov):
    """The sieve of arrows factoring through some member of the covering."""
    members = set()
    for t in cat.arrows_into(cov.target):
        arr = cat.arrow(t)
        for f in cov.arrows:
            mid = cat.src(f)
            if any(cat.compose(f, h) == t for h in cat.hom(arr.src, mid)):
                members.add(t)
                break
    return Sieve(cov.target, members)


def sieve_ops(cat, s1, s2, topology):
    """Closure checks, belonging of s1, and the intersection with its belonging."""
    if s1.root != s2.root:
        raise RootMismatch("%r vs %r" % (s1.root, s2.root))
    inter = Sieve(s1.root, s1.arrows & s2.arrows)
    return {
        "is_sieve": (s1.is_closed(cat), s2.is_closed(cat)),
        "belongs_S1": sieve_belongs(cat, s1, topology),
        "intersection": inter,
        "intersection_belongs": sieve_belongs(cat, inter, topology),
    }


def sieve_belongs(cat, sieve, topology):
    """A sieve belongs to the topology iff it contains some covering's sieve."""
    for cov in topology.coverings_of(sieve.root):
        if sieve_from_covering(cat, cov) <= sieve:
            return True
    return False


def refinement_relation(cat, fine, coarse):
    """True iff ``fine`` refines ``coarse``: every arrow factors through a member.

    Computed both directly and via sieve inclusion; the two answers are
    asserted to agree.
    """
    if fine.target != coarse.target:
        raise TargetMismatch("%r vs %r" % (fine.target, coarse.target))
    direct = all(
        any(
            any(cat.compose(u, h) == v for h in cat.hom(cat.src(v), cat.src(u)))
            for u in coarse.arrows
        )
        for v in fine.arrows
    )
    via_sieves = sieve_from_covering(cat, fine) <= sieve_from_covering(cat, coarse)
    assert direct == via_sieves, "refinement deciders disagree on %r vs %r" % (
        fine,
        coarse,
    )
    return direct


def chosen_base_change(cat, cov, arrow):
    """Pull a covering back along an arrow using canonical pullbacks.

    Returns (covering of src(arrow), list of PullbackSquare) or None when a
    required fibered product is missing.
    """
    arr = cat.arrow(arrow)
    if arr.tgt != cov.target:
        raise TargetMismatch("%r does not land in %r" % (arrow, cov.target))
    squares = []
    projections = []
    for f in cov.arrows:
        square = fincat.compute_pullback(cat, f, arrow)
        if square is None:
            return None
        squares.append(square)
        projections.append(square.pr2)
    return Covering(arr.src, projections), squares


def validate_pretopology(topology):
    """Report every violated pretopology axiom with a witness.

    Axiom 1: singletons of isomorphisms are coverings.  Axiom 2: base
    changes exist and are coverings.  Axiom 3: composites of coverings are
    coverings.
    """
    cat = topology.cat
    report = fincat.ValidationReport()

    declared = {obj: set(c.arrows for c in topology.coverings_of(obj)) for obj in cat.objects}
    for obj in cat.objects:
        for cov in topology.coverings_of(obj):
            for f in cov.arrows:
                if f not in cat.arrows or cat.tgt(f) != obj:
                    report.add("covering-typing", "%s: %s" % (obj, f))
    if not report.ok:
        return report

    for name in cat.arrow_order:
        if cat.is_iso(name):
            target = cat.tgt(name)
            if (name,) not in declared[target]:
                report.add("iso-singleton-missing", name)

    for obj in cat.objects:
        for cov in topology.coverings_of(obj):
            for v in cat.arrows_into(obj):
                pulled = chosen_base_change(cat, cov, v)
                if pulled is None:
                    report.add(
                        "base-change-pullback-missing",
                        "%s along %s" % (topology.covering_id(cov), v),
                    )
                    continue
                if pulled[0].arrows not in declared[cat.src(v)]:
                    report.add(
                        "base-change-not-covering",
                        "%s along %s" % (topology.covering_id(cov), v),
                    )

    for obj in cat.objects:
        for cov in topology.coverings_of(obj):
            per_member = []
            for f in cov.arrows:
                mid = cat.src(f)
                per_member.append(
                    [
                        tuple(cat.compose(f, g) for g in sub.arrows)
                        for sub in topology.coverings_of(mid)
                    ]
                )
            for combo in itertools.product(*per_member):
                composite = Covering(obj, itertools.chain.from_iterable(combo)).arrows
                if composite not in declared[obj]:
                    report.add(
                        "composition-closure",
                        "%s refined to %r" % (topology.covering_id(cov), list(composite)),
                    )
    return report


def saturation_contains(topology, family):
    """Membership of an arrow family in the saturation of the pretopology.

    A family is in the saturation iff some declared covering refines it.
    """
    cat = topology.cat
    fam = family if isinstance(family, Covering) else Covering(family[0], family[1])
    for cov in topology.coverings_of(fam.target):
        if refinement_relation(cat, cov, fam):
            return True
    return False


def enumerate_families(cat, obj, cap=DEFAULT_FAMILY_CAP):
    """All nonempty normalized arrow families into obj, plus the empty family."""
    arrows = cat.arrows_into(obj)
    if 1 << len(arrows) > cap:
        raise CapExceeded(
            "2^%d families into %r exceeds cap %d" % (len(arrows), obj, cap)
        )
    families = []
    for r in range(len(arrows) + 1):
        for combo in itertools.combinations(arrows, r):
            families.append(Covering(obj, combo))
    return families


def saturate(topology, cap=DEFAULT_FAMILY_CAP):
    """Materialize the saturation as a new pretopology (capped enumeration)."""
    cat = topology.cat
    coverings = {}
    for obj in cat.objects:
        coverings[obj] = [
            fam for fam in enumerate_families(cat, obj, cap) if saturation_contains(topology, fam)
        ]
    return Pretopology(cat, coverings)


def all_sieves(cat, obj, cap=DEFAULT_FAMILY_CAP):
    """Every sieve on obj, by filtering arrow subsets for closure."""
    arrows = cat.arrows_into(obj)
    if 1 << len(arrows) > cap:
        raise CapExceeded(
            "2^%d subsets into %r exceeds cap %d" % (len(arrows), obj, cap)
        )
    sieves = []
    for r in range(len(arrows) + 1):
        for combo in itertools.combinations(arrows, r):
            s = Sieve(obj, combo)
            if s.is_closed(cat):
                sieves.append(s)
    return sieves


def belonging_sieves(topology, obj, cap=DEFAULT_FAMILY_CAP):
    cat = topology.cat
    return [s for s in all_sieves(cat, obj, cap) if sieve_belongs(cat, s, topology)]


def subordinate(t_first, t_second):
    """Every covering of the first pretopology has a refinement in the second."""
    cat = t_first.cat
    for obj in cat.objects:
        for cov in t_first.coverings_of(obj):
            if not any(
                refinement_relation(cat, other, cov)
                for other in t_second.coverings_of(obj)
            ):
                return False
    return True


def topology_compare(t_first, t_second, cap=DEFAULT_FAMILY_CAP):
    """Subordination both ways plus equality of materialized saturations.

    The verdicts are cross-checked: equivalence must coincide with equality
    of saturations.
    """
    if t_first.cat is not t_second.cat and t_first.cat.objects != t_second.cat.objects:
        raise TargetMismatch("pretopologies live on different categories")
    sub = subordinate(t_first, t_second)
    sup = subordinate(t_second, t_first)
    equivalent = sub and sup
    sat_first = saturate(t_first, cap)
    sat_second = saturate(t_second, cap)
    saturation_equal = all(
        set(c.key() for c in sat_first.coverings_of(obj))
        == set(c.key() for c in sat_second.coverings_of(obj))
        for obj in t_first.cat.objects
    )
    assert equivalent == saturation_equal, (
        "equivalence and saturation comparison disagree"
    )
    return {
        "subordinate": sub,
        "equivalent": equivalent,
        "saturationEqual": saturation_equal,
    }
