"""Builders for the standard finite fixtures used throughout the package.

Two families of constructions live here:

* opens-poset sites of finite topological spaces (the Sierpinski space and
  the two-point discrete space are the workhorses), with their open-cover
  and indiscrete pretopologies;
* concrete function-backed categories (finite sets with chosen products,
  finite groups as one-object categories) for group objects, actions and
  torsors.

Everything is named canonically so data rebuilt from the same input is
identical table for table.
"""

import itertools

from . import fincat, sitekit
from .errors import CapExceeded


def _open_name(subset):
    return "{%s}" % ",".join(sorted(subset))


def _inclusion_name(small, big):
    return "%s>%s" % (_open_name(small), _open_name(big))


def poset_of_opens(opens, max_arrows=fincat.DEFAULT_MAX_ARROWS):
    """The inclusion poset of a family of opens (as frozensets), as a category."""
    opens = sorted({frozenset(u) for u in opens}, key=lambda u: (len(u), sorted(u)))
    objects = [_open_name(u) for u in opens]
    arrows = []
    composition = {}
    pairs = []
    for small in opens:
        for big in opens:
            if small <= big:
                arrows.append((_inclusion_name(small, big), _open_name(small), _open_name(big)))
                pairs.append((small, big))
    for small, mid in pairs:
        for mid2, big in pairs:
            if mid == mid2:
                composition[
                    (_inclusion_name(mid, big), _inclusion_name(small, mid))
                ] = _inclusion_name(small, big)
    identities = {_open_name(u): _inclusion_name(u, u) for u in opens}
    cat = fincat.FinCategory(objects, arrows, identities, composition, max_arrows=max_arrows)
    cat.opens_by_name = {_open_name(u): u for u in opens}
    return cat


def open_cover_pretopology(cat):
    """All open covers: families of subopens whose union is the target."""
    coverings = {}
    for name, target in cat.opens_by_name.items():
        subs = [
            (sub_name, sub)
            for sub_name, sub in cat.opens_by_name.items()
            if sub <= target
        ]
        covs = []
        for r in range(len(subs) + 1):
            for combo in itertools.combinations(subs, r):
                union = frozenset().union(*(sub for _, sub in combo)) if combo else frozenset()
                if union == target:
                    covs.append(
                        sitekit.Covering(
                            name, tuple(_inclusion_name(sub, target) for sub_name, sub in combo)
                        )
                    )
        coverings[name] = covs
    return sitekit.Pretopology(cat, coverings)


def indiscrete_pretopology(cat):
    """Only the isomorphism singletons: the minimal pretopology."""
    coverings = {}
    for name in cat.arrow_order:
        if cat.is_iso(name):
            coverings.setdefault(cat.tgt(name), []).append(
                sitekit.Covering(cat.tgt(name), (name,))
            )
    return sitekit.Pretopology(cat, coverings)


def sierpinski_site():
    """Opens of the Sierpinski space: {}, {1}, {0,1}, with all open covers."""
    cat = poset_of_opens([frozenset(), frozenset("1"), frozenset("01")])
    return cat, open_cover_pretopology(cat)


def two_point_discrete_site():
    """Opens of the discrete space on {a, b}, with all open covers."""
    cat = poset_of_opens(
        [frozenset(), frozenset("a"), frozenset("b"), frozenset("ab")]
    )
    return cat, open_cover_pretopology(cat)


def sierpinski_category():
    return sierpinski_site()[0]


# -- function-backed categories ----------------------------------------------


def _fn_name(src, tgt, func):
    return "%s>%s:%s" % (src, tgt, ",".join(str(v) for v in func))


class ConcreteCategory:
    """A category of named finite sets and explicitly listed functions.

    ``sizes`` maps object name -> cardinality; elements are 0..size-1.
    Generators are (name, src, tgt, func) with func a tuple of images.  The
    arrow set is closed under composition and, for each declared product,
    under pairing of cones; composite arrows get canonical names derived
    from their graph, so the result is independent of insertion order.
    """

    def __init__(self, sizes, generators, products=(), max_arrows=4096):
        self.sizes = dict(sizes)
        self.func = {}
        self.named = {}
        self.products = []
        self._arrows = []
        for name, src, tgt, func in generators:
            self._add(src, tgt, tuple(func), name)
        for apex, factors, projections in products:
            self.products.append((apex, tuple(factors), tuple(projections)))
        self._close(max_arrows)
        self.max_arrows = max_arrows

    def _add(self, src, tgt, func, name=None):
        key = (src, tgt, func)
        if key in self.named:
            return self.named[key]
        if name is None:
            name = _fn_name(src, tgt, func)
        self.named[key] = name
        self.func[name] = key
        self._arrows.append((name, src, tgt))
        return name

    def _close(self, max_arrows):
        for obj, size in self.sizes.items():
            self._add(obj, obj, tuple(range(size)), "id:%s" % obj)
        changed = True
        while changed:
            changed = False
            if len(self._arrows) > max_arrows:
                raise CapExceeded(
                    "concrete category closure exceeded %d arrows" % max_arrows
                )
            existing = list(self._arrows)
            for g_name, g_src, g_tgt in existing:
                for f_name, f_src, f_tgt in existing:
                    if f_tgt != g_src:
                        continue
                    gf = tuple(self.func[g_name][2][v] for v in self.func[f_name][2])
                    if (f_src, g_tgt, gf) not in self.named:
                        self._add(f_src, g_tgt, gf)
                        changed = True
            for apex, factors, projections in self.products:
                pair_index = self._pair_index(apex, projections)
                for legs in itertools.product(
                    *(
                        [a for a in existing if a[2] == factor]
                        for factor in factors
                    )
                ):
                    srcs = {a[1] for a in legs}
                    if len(srcs) != 1:
                        continue
                    src = srcs.pop()
                    funcs = [self.func[a[0]][2] for a in legs]
                    paired = tuple(
                        pair_index[tuple(fn[x] for fn in funcs)]
                        for x in range(self.sizes[src])
                    )
                    if (src, apex, paired) not in self.named:
                        self._add(src, apex, paired)
                        changed = True

    def _pair_index(self, apex, projections):
        index = {}
        projs = [self.func[p][2] for p in projections]
        for elem in range(self.sizes[apex]):
            index[tuple(p[elem] for p in projs)] = elem
        if len(index) != self.sizes[apex]:
            raise CapExceeded("declared projections of %r are not jointly injective" % apex)
        return index

    def category(self, max_arrows=None):
        composition = {}
        for g_name, g_src, g_tgt in self._arrows:
            for f_name, f_src, f_tgt in self._arrows:
                if f_tgt != g_src:
                    continue
                gf = tuple(self.func[g_name][2][v] for v in self.func[f_name][2])
                composition[(g_name, f_name)] = self.named[(f_src, g_tgt, gf)]
        identities = {
            obj: self.named[(obj, obj, tuple(range(size)))]
            for obj, size in self.sizes.items()
        }
        return fincat.FinCategory(
            list(self.sizes),
            self._arrows,
            identities,
            composition,
            max_arrows=max_arrows or max(self.max_arrows, len(self._arrows)),
        )


def group_table_category(table, iden_elem=None, inv_table=None, name="G"):
    """Objects pt, G, GxG, GxGxG with the arrows a multiplication table needs.

    ``table[i][j]`` is the product i*j.  When the table has a two-sided
    identity and inverses they are encoded as arrows; the category is closed
    under composition and product pairings, so the group-object diagrams can
    be evaluated in it.  Returns (category, GroupObjectData).
    """
    m = len(table)
    if iden_elem is None:
        iden_elem = _two_sided_identity(table)
    if iden_elem is None:
        raise ValueError("table has no two-sided identity; nothing to encode")
    if inv_table is None:
        inv_table = _inverse_table(table, iden_elem)
    if inv_table is None:
        raise ValueError("table has no inverses; nothing to encode")
    pt, g, gg, ggg = "pt", name, name + "2", name + "3"
    sizes = {pt: 1, g: m, gg: m * m, ggg: m * m * m}

    def enc2(i, j):
        return i * m + j

    elems = range(m)
    triples = [(i, j, k) for i in elems for j in elems for k in elems]
    mul = tuple(table[i][j] for i in elems for j in elems)
    # The pairing generators below are exactly the mediating cones the
    # group-object diagrams evaluate; composition closure stays small
    # because no arrows point into the triple-product object.
    generators = [
        ("mul", gg, g, mul),
        ("inv", g, g, tuple(inv_table)),
        ("iden", pt, g, (iden_elem,)),
        ("t:%s" % g, g, pt, tuple(0 for _ in elems)),
        ("t:%s" % gg, gg, pt, tuple(0 for _ in range(m * m))),
        ("t:%s" % ggg, ggg, pt, tuple(0 for _ in triples)),
        ("p1", gg, g, tuple(i for i in elems for _ in elems)),
        ("p2", gg, g, tuple(j for _ in elems for j in elems)),
        ("q1", ggg, g, tuple(i for i, j, k in triples)),
        ("q2", ggg, g, tuple(j for i, j, k in triples)),
        ("q3", ggg, g, tuple(k for i, j, k in triples)),
        ("<iden.t,id>", g, gg, tuple(enc2(iden_elem, x) for x in elems)),
        ("<id,iden.t>", g, gg, tuple(enc2(x, iden_elem) for x in elems)),
        ("<inv,id>", g, gg, tuple(enc2(inv_table[x], x) for x in elems)),
        ("<id,inv>", g, gg, tuple(enc2(x, inv_table[x]) for x in elems)),
        ("pr12", ggg, gg, tuple(enc2(i, j) for i, j, k in triples)),
        ("pr23", ggg, gg, tuple(enc2(j, k) for i, j, k in triples)),
        ("<mul12,q3>", ggg, gg, tuple(enc2(table[i][j], k) for i, j, k in triples)),
        ("<q1,mul23>", ggg, gg, tuple(enc2(i, table[j][k]) for i, j, k in triples)),
    ]
    concrete = ConcreteCategory(sizes, generators)
    cat = concrete.category()
    group = fincat.GroupObjectData(
        g,
        "mul",
        "inv",
        "iden",
        pt,
        prod_gg=fincat.ProductData(gg, ("p1", "p2"), (g, g)),
        prod_ggg=fincat.ProductData(ggg, ("q1", "q2", "q3"), (g, g, g)),
    )
    return cat, group


def _two_sided_identity(table):
    m = len(table)
    for e in range(m):
        if all(table[e][x] == x and table[x][e] == x for x in range(m)):
            return e
    return None


def _inverse_table(table, iden_elem):
    m = len(table)
    inv = []
    for x in range(m):
        candidates = [
            y for y in range(m) if table[x][y] == iden_elem and table[y][x] == iden_elem
        ]
        if not candidates:
            return None
        inv.append(candidates[0])
    return inv


def cyclic_table(n):
    return [[(i + j) % n for j in range(n)] for i in range(n)]


def group_as_category(table, prefix="g"):
    """A finite group (or monoid table) as a one-object category."""
    m = len(table)
    obj = "*"
    arrows = [("%s%d" % (prefix, i), obj, obj) for i in range(m)]
    iden = _two_sided_identity(table)
    composition = {}
    for i in range(m):
        for j in range(m):
            composition[("%s%d" % (prefix, i), "%s%d" % (prefix, j))] = "%s%d" % (
                prefix,
                table[i][j],
            )
    identities = {obj: "%s%d" % (prefix, iden)}
    return fincat.FinCategory([obj], arrows, identities, composition)


def classifying_pseudofunctor(cat):
    """One-object groupoid fibers B(Z/2^points(U)) over an opens poset,
    with restriction of tuples as (strict) transport.

    This is the classifying construction for the sheaf of groups
    (Z/2)^points; on a discrete finite space it is a stack with genuinely
    non-discrete fibers."""
    from . import fibkit

    opens = cat.opens_by_name
    fibers = {}
    elements = {}
    for name, subset in opens.items():
        points = sorted(subset)
        group_elems = list(itertools.product((0, 1), repeat=len(points)))
        table = [
            [
                group_elems.index(tuple((a + b) % 2 for a, b in zip(x, y)))
                for y in group_elems
            ]
            for x in group_elems
        ]
        fibers[name] = group_as_category(table, prefix="g%s:" % name)
        elements[name] = (points, group_elems)
    transports = {}
    for arrow in cat.arrow_order:
        src, tgt = cat.src(arrow), cat.tgt(arrow)
        src_points, src_elems = elements[src]
        tgt_points, tgt_elems = elements[tgt]
        mapping = {}
        for i, value in enumerate(tgt_elems):
            restricted = tuple(value[tgt_points.index(p)] for p in src_points)
            mapping["g%s:%d" % (tgt, i)] = "g%s:%d" % (src, src_elems.index(restricted))
        transports[arrow] = fincat.FinFunctor(
            fibers[tgt], fibers[src], {"*": "*"}, mapping
        )
    return fibkit.strict_pseudofunctor(cat, fibers, transports)


def free_z2_torsor_fixture():
    """The free transitive Z/2-set over a point, in a concrete category
    closed under the products and pullbacks the torsor checks need.

    Returns (category, group data, action data, invariant arrow name).
    """
    m = 2
    table = cyclic_table(m)
    pt, g, gg, ggg = "pt", "T2", "T4", "T8"
    sizes = {pt: 1, g: m, gg: m * m, ggg: m * m * m}
    elems = range(m)
    pairs2 = [(i, j) for i in elems for j in elems]
    triples = [(i, j, k) for i in elems for j in elems for k in elems]

    def enc2(i, j):
        return i * m + j

    generators = [
        ("mul", gg, g, tuple(table[i][j] for i, j in pairs2)),
        ("iden", pt, g, (0,)),
        ("t:%s" % g, g, pt, tuple(0 for _ in elems)),
        ("t:%s" % gg, gg, pt, tuple(0 for _ in pairs2)),
        ("t:%s" % ggg, ggg, pt, tuple(0 for _ in triples)),
        ("p1", gg, g, tuple(i for i, j in pairs2)),
        ("p2", gg, g, tuple(j for i, j in pairs2)),
        ("q1", ggg, g, tuple(i for i, j, k in triples)),
        ("q2", ggg, g, tuple(j for i, j, k in triples)),
        ("q3", ggg, g, tuple(k for i, j, k in triples)),
    ]
    products = [
        (gg, (g, g), ("p1", "p2")),
        (ggg, (g, g, g), ("q1", "q2", "q3")),
    ]
    concrete = ConcreteCategory(sizes, generators, products)
    cat = concrete.category()
    prod_gg = fincat.ProductData(gg, ("p1", "p2"), (g, g))
    prod_ggg = fincat.ProductData(ggg, ("q1", "q2", "q3"), (g, g, g))
    group = fincat.GroupObjectData(
        g, "mul", "inv", "iden", pt, prod_gg=prod_gg, prod_ggg=prod_ggg
    )
    # inverse of Z/2 is the identity function on the carrier
    group.inv = cat.identity(g)
    action = fincat.ActionData(g, "mul", prod_gx=prod_gg, prod_ggx=prod_ggg)
    return cat, group, action, "t:%s" % g


def group_quotient_functor(big_table, small_table, mapping, big_prefix="g", small_prefix="h"):
    """The functor of one-object categories induced by a homomorphism."""
    big = group_as_category(big_table, prefix=big_prefix)
    small = group_as_category(small_table, prefix=small_prefix)
    return fincat.FinFunctor(
        big,
        small,
        {"*": "*"},
        {
            "%s%d" % (big_prefix, i): "%s%d" % (small_prefix, mapping[i])
            for i in range(len(big_table))
        },
        name="quotient",
    )
