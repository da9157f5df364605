"""Exact finite categories with limits checked by exhaustion.

Representation conventions:

* Objects are strings; arrows are named triples ``(name, src, tgt)``.
* Composition is a dense total table ``(g, f) -> g∘f`` over exactly the
  composable pairs (``tgt(f) == src(g)``); "g after f" throughout.
* Every choice function (pullback apex, product apex, mediating arrow scan)
  walks objects and arrows in their declared order and takes the first hit,
  so all outputs are reproducible.

Nothing here assumes validity: :func:`validate_category` reports every broken
axiom with a witness instead of raising.  The remaining operations document
which parts of validity they rely on.
"""

from collections import Counter

from .errors import (
    CapExceeded,
    MissingProducts,
    TargetMismatch,
    UnknownArrow,
    UnknownObject,
)

DEFAULT_MAX_ARROWS = 512


class ValidationReport:
    """An ordered list of (rule, witness) violations; empty means valid."""

    def __init__(self):
        self.violations = []

    def add(self, rule, witness):
        self.violations.append((rule, witness))

    def extend(self, other):
        self.violations.extend(other.violations)

    @property
    def ok(self):
        return not self.violations

    def rules(self):
        return [rule for rule, _ in self.violations]

    def __bool__(self):
        return self.ok

    def __repr__(self):
        if self.ok:
            return "ValidationReport(ok)"
        lines = ", ".join("%s: %s" % v for v in self.violations[:4])
        more = "" if len(self.violations) <= 4 else ", ..."
        return "ValidationReport(%s%s)" % (lines, more)


class Arrow:
    __slots__ = ("name", "src", "tgt")

    def __init__(self, name, src, tgt):
        self.name = name
        self.src = src
        self.tgt = tgt

    def __repr__(self):
        return "Arrow(%r, %r, %r)" % (self.name, self.src, self.tgt)

    def __eq__(self, other):
        return (
            isinstance(other, Arrow)
            and (self.name, self.src, self.tgt) == (other.name, other.src, other.tgt)
        )

    def __hash__(self):
        return hash((self.name, self.src, self.tgt))


class FinCategory:
    """A finite category given by explicit object/arrow/composition tables.

    The constructor only enforces the arrow cap and id uniqueness needed to
    index the data; all axioms are left to :func:`validate_category` so a
    malformed table can be loaded and diagnosed.
    """

    def __init__(self, objects, arrows, identities, composition, max_arrows=DEFAULT_MAX_ARROWS):
        arrows = [a if isinstance(a, Arrow) else Arrow(*a) for a in arrows]
        if len(arrows) > max_arrows:
            raise CapExceeded(
                "category has %d arrows, cap is %d" % (len(arrows), max_arrows)
            )
        self.objects = tuple(objects)
        self.arrow_order = tuple(a.name for a in arrows)
        self.arrows = {}
        self._duplicate_arrows = []
        for a in arrows:
            if a.name in self.arrows:
                self._duplicate_arrows.append(a.name)
            self.arrows[a.name] = a
        self.identities = dict(identities)
        self.composition = dict(composition)
        self.max_arrows = max_arrows
        self._hom = {}
        for name in self.arrow_order:
            a = self.arrows[name]
            self._hom.setdefault((a.src, a.tgt), []).append(name)
        self._iso_cache = {}
        self._pullback_cache = {}
        self._product_cache = {}

    # -- basic accessors -------------------------------------------------

    def arrow(self, name):
        try:
            return self.arrows[name]
        except KeyError:
            raise UnknownArrow(name) from None

    def src(self, name):
        return self.arrow(name).src

    def tgt(self, name):
        return self.arrow(name).tgt

    def hom(self, x, y):
        """Arrow names x -> y in declared order."""
        return self._hom.get((x, y), [])

    def arrows_into(self, y):
        return [n for n in self.arrow_order if self.arrows[n].tgt == y]

    def arrows_from(self, x):
        return [n for n in self.arrow_order if self.arrows[n].src == x]

    def identity(self, x):
        if x not in self.identities:
            raise UnknownObject("no identity recorded for %r" % (x,))
        return self.identities[x]

    def compose(self, g, f):
        """g∘f; requires the pair to be composable in a valid table."""
        return self.composition[(g, f)]

    def compose_path(self, *names):
        """Compose a path written source-to-target order: compose_path(f, g) = g∘f."""
        acc = names[0]
        for nxt in names[1:]:
            acc = self.compose(nxt, acc)
        return acc

    # -- derived structure ------------------------------------------------

    def is_iso(self, name):
        if name not in self._iso_cache:
            self._iso_cache[name] = self.iso_inverse(name) is not None
        return self._iso_cache[name]

    def iso_inverse(self, name):
        a = self.arrow(name)
        for back in self.hom(a.tgt, a.src):
            if (
                self.composition.get((back, name)) == self.identity(a.src)
                and self.composition.get((name, back)) == self.identity(a.tgt)
            ):
                return back
        return None

    def isomorphic_objects(self, x, y):
        return any(self.is_iso(f) for f in self.hom(x, y))

    def iso_class(self, x):
        return tuple(y for y in self.objects if self.isomorphic_objects(x, y))

    def __repr__(self):
        return "FinCategory(%d objects, %d arrows)" % (len(self.objects), len(self.arrows))


def validate_category(cat):
    """Report every violated category axiom with a witness.

    Total: malformed tables produce report entries, never exceptions.  The
    report is empty iff the data is a category.
    """
    report = ValidationReport()
    seen = Counter(cat.objects)
    for obj, count in seen.items():
        if count > 1:
            report.add("duplicate-object", obj)
    for name in cat._duplicate_arrows:
        report.add("duplicate-arrow", name)
    for name in cat.arrow_order:
        a = cat.arrows[name]
        if a.src not in seen:
            report.add("unknown-source", "%s: %s" % (name, a.src))
        if a.tgt not in seen:
            report.add("unknown-target", "%s: %s" % (name, a.tgt))

    for obj in cat.objects:
        ident = cat.identities.get(obj)
        if ident is None:
            report.add("missing-identity", obj)
            continue
        if ident not in cat.arrows:
            report.add("unknown-identity-arrow", "%s: %s" % (obj, ident))
            continue
        a = cat.arrows[ident]
        if a.src != obj or a.tgt != obj:
            report.add("identity-not-endo", "%s: %s" % (obj, ident))

    composable = set()
    for g in cat.arrow_order:
        for f in cat.arrow_order:
            if cat.arrows[f].tgt == cat.arrows[g].src:
                composable.add((g, f))
    for pair in composable:
        if pair not in cat.composition:
            report.add("composition-missing", "%s after %s" % pair)
    for (g, f), h in cat.composition.items():
        if (g, f) not in composable:
            report.add("composition-spurious", "%s after %s" % (g, f))
            continue
        if h not in cat.arrows:
            report.add("composition-unknown-result", "%s after %s -> %s" % (g, f, h))
            continue
        if cat.arrows[h].src != cat.arrows[f].src or cat.arrows[h].tgt != cat.arrows[g].tgt:
            report.add("composition-typing", "%s after %s -> %s" % (g, f, h))

    if not report.ok:
        return report

    for obj in cat.objects:
        ident = cat.identities[obj]
        for f in cat.arrows_from(obj):
            if cat.composition[(f, ident)] != f:
                report.add("identity-not-right-neutral", "%s after %s" % (f, ident))
        for f in cat.arrows_into(obj):
            if cat.composition[(ident, f)] != f:
                report.add("identity-not-left-neutral", "%s after %s" % (ident, f))

    for h in cat.arrow_order:
        for g in cat.arrow_order:
            if cat.arrows[g].tgt != cat.arrows[h].src:
                continue
            hg = cat.composition[(h, g)]
            for f in cat.arrow_order:
                if cat.arrows[f].tgt != cat.arrows[g].src:
                    continue
                if cat.composition[(h, cat.composition[(g, f)])] != cat.composition[(hg, f)]:
                    report.add("associativity", "(%s, %s, %s)" % (h, g, f))
    return report


# -- limits ----------------------------------------------------------------


class PullbackSquare:
    """A verified pullback: apex with projections completing a cospan."""

    __slots__ = ("apex", "pr1", "pr2", "f", "g")

    def __init__(self, apex, pr1, pr2, f, g):
        self.apex = apex
        self.pr1 = pr1
        self.pr2 = pr2
        self.f = f
        self.g = g

    def __repr__(self):
        return "PullbackSquare(apex=%r, pr1=%r, pr2=%r)" % (self.apex, self.pr1, self.pr2)


class ProductData:
    """A verified finite product: apex plus one projection per factor."""

    __slots__ = ("apex", "projections", "factors")

    def __init__(self, apex, projections, factors):
        self.apex = apex
        self.projections = tuple(projections)
        self.factors = tuple(factors)

    def __repr__(self):
        return "ProductData(apex=%r, projections=%r)" % (self.apex, self.projections)


def _cones_over_cospan(cat, f, g):
    af, ag = cat.arrow(f), cat.arrow(g)
    cones = []
    for q in cat.objects:
        for q1 in cat.hom(q, af.src):
            left = cat.compose(f, q1)
            for q2 in cat.hom(q, ag.src):
                if left == cat.compose(g, q2):
                    cones.append((q, q1, q2))
    return cones


def compute_pullback(cat, f, g):
    """Least-apex pullback of the cospan (f, g), or None when none exists.

    Each candidate square is verified by the exhaustive universal-property
    test: every competing cone admits exactly one mediating arrow.
    """
    af, ag = cat.arrow(f), cat.arrow(g)
    if af.tgt != ag.tgt:
        raise TargetMismatch("%s: ->%s vs %s: ->%s" % (f, af.tgt, g, ag.tgt))
    if (f, g) in cat._pullback_cache:
        return cat._pullback_cache[(f, g)]
    result = None
    cones = _cones_over_cospan(cat, f, g)
    for apex in cat.objects:
        for p1 in cat.hom(apex, af.src):
            left = cat.compose(f, p1)
            for p2 in cat.hom(apex, ag.src):
                if left != cat.compose(g, p2):
                    continue
                if _is_universal_cone(cat, apex, (p1, p2), cones):
                    result = PullbackSquare(apex, p1, p2, f, g)
                    break
            if result is not None:
                break
        if result is not None:
            break
    cat._pullback_cache[(f, g)] = result
    return result


def _is_universal_cone(cat, apex, projections, cones):
    for cone in cones:
        q, legs = cone[0], cone[1:]
        count = 0
        for u in cat.hom(q, apex):
            if all(cat.compose(p, u) == leg for p, leg in zip(projections, legs)):
                count += 1
                if count > 1:
                    return False
        if count != 1:
            return False
    return True


def mediating_arrow(cat, apex, projections, q, legs):
    """The unique arrow q -> apex with projections∘u = legs.

    Raises MissingProducts when zero or several candidates exist; with
    verified ProductData/PullbackSquare inputs this cannot happen.
    """
    found = None
    for u in cat.hom(q, apex):
        if all(cat.compose(p, u) == leg for p, leg in zip(projections, legs)):
            if found is not None:
                raise MissingProducts(
                    "ambiguous mediating arrow into %r from %r" % (apex, q)
                )
            found = u
    if found is None:
        raise MissingProducts("no mediating arrow into %r from %r" % (apex, q))
    return found


def terminal_object(cat):
    for x in cat.objects:
        if all(len(cat.hom(y, x)) == 1 for y in cat.objects):
            return x
    return None


def _cones_over_factors(cat, factors):
    cones = []
    for q in cat.objects:
        legs_per_factor = [cat.hom(q, x) for x in factors]
        total = 1
        for legs in legs_per_factor:
            total *= len(legs)
        if total == 0:
            continue
        stack = [()]
        for legs in legs_per_factor:
            stack = [tup + (leg,) for tup in stack for leg in legs]
        cones.extend((q,) + tup for tup in stack)
    return cones


def compute_products(cat, factors):
    """Product of a list of objects, or None if the limit does not exist.

    Empty list -> terminal object.  Products of three or more factors are
    assembled from binary ones left-associatively and then re-verified
    against the n-ary universal property.
    """
    for x in factors:
        if x not in cat.objects:
            raise UnknownObject(x)
    key = tuple(factors)
    if key in cat._product_cache:
        return cat._product_cache[key]
    result = _compute_products(cat, list(factors))
    cat._product_cache[key] = result
    return result


def _compute_products(cat, factors):
    if not factors:
        apex = terminal_object(cat)
        if apex is None:
            return None
        return ProductData(apex, (), ())
    if len(factors) == 1:
        return ProductData(factors[0], (cat.identity(factors[0]),), tuple(factors))
    if len(factors) == 2:
        cones = _cones_over_factors(cat, factors)
        for apex in cat.objects:
            for p1 in cat.hom(apex, factors[0]):
                for p2 in cat.hom(apex, factors[1]):
                    if _is_universal_cone(cat, apex, (p1, p2), cones):
                        return ProductData(apex, (p1, p2), tuple(factors))
        return None
    left = compute_products(cat, factors[:-1])
    if left is None:
        return None
    outer = compute_products(cat, [left.apex, factors[-1]])
    if outer is None:
        return None
    projections = [cat.compose(p, outer.projections[0]) for p in left.projections]
    projections.append(outer.projections[1])
    if not _is_universal_cone(
        cat, outer.apex, tuple(projections), _cones_over_factors(cat, factors)
    ):
        return None
    return ProductData(outer.apex, projections, tuple(factors))


# -- functors and transformations -------------------------------------------


class FinFunctor:
    """A functor between finite categories given by explicit maps."""

    def __init__(self, source, target, obj_map, arrow_map, name=""):
        self.source = source
        self.target = target
        self.obj_map = dict(obj_map)
        self.arrow_map = dict(arrow_map)
        self.name = name

    def on_obj(self, x):
        return self.obj_map[x]

    def on_arrow(self, f):
        return self.arrow_map[f]

    def validate(self):
        report = ValidationReport()
        src, tgt = self.source, self.target
        for x in src.objects:
            if x not in self.obj_map:
                report.add("functor-object-missing", x)
            elif self.obj_map[x] not in tgt.objects:
                report.add("functor-object-unknown", "%s -> %s" % (x, self.obj_map[x]))
        for f in src.arrow_order:
            if f not in self.arrow_map:
                report.add("functor-arrow-missing", f)
                continue
            image = self.arrow_map[f]
            if image not in tgt.arrows:
                report.add("functor-arrow-unknown", "%s -> %s" % (f, image))
                continue
            a, b = src.arrows[f], tgt.arrows[image]
            if self.obj_map.get(a.src) != b.src or self.obj_map.get(a.tgt) != b.tgt:
                report.add("functor-typing", f)
        if not report.ok:
            return report
        for x in src.objects:
            if self.arrow_map[src.identity(x)] != tgt.identity(self.obj_map[x]):
                report.add("functor-identity", x)
        for (g, f), h in src.composition.items():
            if tgt.compose(self.arrow_map[g], self.arrow_map[f]) != self.arrow_map[h]:
                report.add("functor-composition", "%s after %s" % (g, f))
        return report

    def then(self, other):
        """Composite self;other (apply self first)."""
        return FinFunctor(
            self.source,
            other.target,
            {x: other.on_obj(y) for x, y in self.obj_map.items()},
            {f: other.on_arrow(g) for f, g in self.arrow_map.items()},
        )

    def __repr__(self):
        return "FinFunctor(%s)" % (self.name or "%d objects" % len(self.obj_map))


def identity_functor(cat):
    return FinFunctor(
        cat,
        cat,
        {x: x for x in cat.objects},
        {f: f for f in cat.arrow_order},
        name="id",
    )


class NatTransformation:
    """A natural transformation between parallel functors, one component per object."""

    def __init__(self, source, target, components):
        self.source = source
        self.target = target
        self.components = dict(components)

    def validate(self):
        report = ValidationReport()
        f, g = self.source, self.target
        cat, dest = f.source, f.target
        for x in cat.objects:
            comp = self.components.get(x)
            if comp is None:
                report.add("component-missing", x)
                continue
            if comp not in dest.arrows:
                report.add("component-unknown", "%s: %s" % (x, comp))
                continue
            a = dest.arrows[comp]
            if a.src != f.on_obj(x) or a.tgt != g.on_obj(x):
                report.add("component-typing", x)
        if not report.ok:
            return report
        for name in cat.arrow_order:
            arr = cat.arrows[name]
            lhs = dest.compose(self.components[arr.tgt], f.on_arrow(name))
            rhs = dest.compose(g.on_arrow(name), self.components[arr.src])
            if lhs != rhs:
                report.add("naturality", name)
        return report


def find_natural_iso(f, g):
    """Search for a natural isomorphism between parallel functors.

    Returns a NatTransformation or None.  Backtracks over iso components in
    declared order, so the result is canonical.
    """
    cat, dest = f.source, f.target
    objs = list(cat.objects)
    choices = []
    for x in objs:
        isos = [h for h in dest.hom(f.on_obj(x), g.on_obj(x)) if dest.is_iso(h)]
        if not isos:
            return None
        choices.append(isos)

    arrows_by_tgt = {}
    for name in cat.arrow_order:
        arrows_by_tgt.setdefault(cat.arrows[name].tgt, []).append(name)

    index = {x: i for i, x in enumerate(objs)}

    def consistent(partial, upto):
        for name in cat.arrow_order:
            arr = cat.arrows[name]
            i, j = index[arr.src], index[arr.tgt]
            if i >= upto or j >= upto:
                continue
            if dest.compose(partial[j], f.on_arrow(name)) != dest.compose(
                g.on_arrow(name), partial[i]
            ):
                return False
        return True

    def search(partial):
        k = len(partial)
        if k == len(objs):
            return list(partial)
        for comp in choices[k]:
            partial.append(comp)
            if consistent(partial, k + 1):
                result = search(partial)
                if result is not None:
                    return result
            partial.pop()
        return None

    found = search([])
    if found is None:
        return None
    return NatTransformation(f, g, dict(zip(objs, found)))


class EquivalenceReport:
    __slots__ = ("verdict", "fully_faithful", "essentially_surjective", "witness")

    def __init__(self, fully_faithful, essentially_surjective, witness):
        self.fully_faithful = fully_faithful
        self.essentially_surjective = essentially_surjective
        self.verdict = fully_faithful and essentially_surjective
        self.witness = witness

    def __repr__(self):
        return "EquivalenceReport(verdict=%r, witness=%r)" % (self.verdict, self.witness)


def check_equivalence(functor):
    """Decide whether a functor is an equivalence: fully faithful and
    essentially surjective, both by exhaustive enumeration.

    The witness names the first failing hom-set or the first unreached
    isomorphism class.
    """
    src, tgt = functor.source, functor.target
    for x in src.objects:
        for y in src.objects:
            dom = src.hom(x, y)
            images = [functor.on_arrow(h) for h in dom]
            codom = tgt.hom(functor.on_obj(x), functor.on_obj(y))
            if len(set(images)) != len(images):
                return EquivalenceReport(False, None, ("not-faithful", x, y))
            if set(images) != set(codom):
                return EquivalenceReport(False, None, ("not-full", x, y))
    reached = {functor.on_obj(x) for x in src.objects}
    for z in tgt.objects:
        if not any(tgt.isomorphic_objects(z, w) for w in reached):
            return EquivalenceReport(True, False, ("not-essentially-surjective", z))
    return EquivalenceReport(True, True, None)


# -- slice categories --------------------------------------------------------


def slice_arrow_name(h, a, b):
    return "%s[%s>%s]" % (h, a, b)


def slice_category(cat, root, max_arrows=None):
    """The category of arrows into ``root``; returns (slice, forgetful functor).

    Objects are the arrows a: X -> root of the base (named by their arrow
    id); an arrow a -> b is a base arrow h with b∘h = a.
    """
    if root not in cat.objects:
        raise UnknownObject(root)
    if max_arrows is None:
        max_arrows = cat.max_arrows
    objects = cat.arrows_into(root)
    arrow_triples = []
    base_of = {}
    for a in objects:
        for b in objects:
            x, y = cat.src(a), cat.src(b)
            for h in cat.hom(x, y):
                if cat.compose(b, h) == a:
                    name = slice_arrow_name(h, a, b)
                    arrow_triples.append((name, a, b))
                    base_of[name] = h
    identities = {
        a: slice_arrow_name(cat.identity(cat.src(a)), a, a) for a in objects
    }
    composition = {}
    for g_name, g_src, g_tgt in arrow_triples:
        for f_name, f_src, f_tgt in arrow_triples:
            if f_tgt != g_src:
                continue
            comp = cat.compose(base_of[g_name], base_of[f_name])
            composition[(g_name, f_name)] = slice_arrow_name(comp, f_src, g_tgt)
    sliced = FinCategory(objects, arrow_triples, identities, composition, max_arrows=max_arrows)
    forget = FinFunctor(
        sliced,
        cat,
        {a: cat.src(a) for a in objects},
        dict(base_of),
        name="forget(%s)" % root,
    )
    return sliced, forget


# -- group objects and actions ----------------------------------------------


class GroupObjectData:
    """A carrier with multiplication/inverse/identity arrows and chosen products.

    ``prod_gg`` and ``prod_ggg`` may be omitted; they are then computed (and
    MissingProducts is raised when the category lacks them).
    """

    def __init__(self, carrier, mul, inv, iden, pt, prod_gg=None, prod_ggg=None):
        self.carrier = carrier
        self.mul = mul
        self.inv = inv
        self.iden = iden
        self.pt = pt
        self.prod_gg = prod_gg
        self.prod_ggg = prod_ggg


class ActionData:
    """An action arrow act: G×X -> X with its chosen products."""

    def __init__(self, carrier, act, prod_gx=None, prod_ggx=None):
        self.carrier = carrier
        self.act = act
        self.prod_gx = prod_gx
        self.prod_ggx = prod_ggx


def _require_product(cat, data, factors, label):
    if data is not None:
        return data
    prod = compute_products(cat, factors)
    if prod is None:
        raise MissingProducts("no product of %r (%s)" % (factors, label))
    return prod


def _terminal_leg(cat, pt, x):
    legs = cat.hom(x, pt)
    if len(legs) != 1:
        raise MissingProducts("%r is not terminal for %r" % (pt, x))
    return legs[0]


def check_group_object_and_action(cat, group, action=None):
    """Verify the group-object diagrams, and the action diagrams when given.

    Each failed diagram is reported by name: left/right unit, associativity,
    left/right inverse, action unit, action associativity.
    """
    report = ValidationReport()
    g = group.carrier
    prod_gg = _require_product(cat, group.prod_gg, [g, g], "G x G")
    prod_ggg = _require_product(cat, group.prod_ggg, [g, g, g], "G x G x G")

    def pair(pd, legs, source):
        return mediating_arrow(cat, pd.apex, pd.projections, source, legs)

    id_g = cat.identity(g)
    t_g = _terminal_leg(cat, group.pt, g)
    unit_leg = cat.compose(group.iden, t_g)

    if cat.compose(group.mul, pair(prod_gg, (unit_leg, id_g), g)) != id_g:
        report.add("left unit", g)
    if cat.compose(group.mul, pair(prod_gg, (id_g, unit_leg), g)) != id_g:
        report.add("right unit", g)

    q1, q2, q3 = prod_ggg.projections
    mul12 = cat.compose(group.mul, pair(prod_gg, (q1, q2), prod_ggg.apex))
    mul23 = cat.compose(group.mul, pair(prod_gg, (q2, q3), prod_ggg.apex))
    lhs = cat.compose(group.mul, pair(prod_gg, (mul12, q3), prod_ggg.apex))
    rhs = cat.compose(group.mul, pair(prod_gg, (q1, mul23), prod_ggg.apex))
    if lhs != rhs:
        report.add("associativity", prod_ggg.apex)

    if cat.compose(group.mul, pair(prod_gg, (group.inv, id_g), g)) != unit_leg:
        report.add("left inverse", g)
    if cat.compose(group.mul, pair(prod_gg, (id_g, group.inv), g)) != unit_leg:
        report.add("right inverse", g)

    if action is not None:
        x = action.carrier
        prod_gx = _require_product(cat, action.prod_gx, [g, x], "G x X")
        prod_ggx = _require_product(cat, action.prod_ggx, [g, g, x], "G x G x X")
        id_x = cat.identity(x)
        t_x = _terminal_leg(cat, group.pt, x)
        unit_x = cat.compose(group.iden, t_x)
        if cat.compose(action.act, pair(prod_gx, (unit_x, id_x), x)) != id_x:
            report.add("action unit", x)
        r1, r2, r3 = prod_ggx.projections
        mul_r = cat.compose(group.mul, pair(prod_gg, (r1, r2), prod_ggx.apex))
        act_r = cat.compose(action.act, pair(prod_gx, (r2, r3), prod_ggx.apex))
        lhs = cat.compose(action.act, pair(prod_gx, (mul_r, r3), prod_ggx.apex))
        rhs = cat.compose(action.act, pair(prod_gx, (r1, act_r), prod_ggx.apex))
        if lhs != rhs:
            report.add("action associativity", prod_ggx.apex)
    return report
