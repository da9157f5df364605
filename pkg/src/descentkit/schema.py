"""The versioned input/output document schema.

One self-describing JSON dialect covers every spec kind, discriminated by a
top-level "kind".  All integers travel as decimal strings.  Emitted
documents are stable-ordered (sorted keys, fixed separators), so identical
inputs produce byte-identical outputs; sheafification output is emitted in
the same presheaf schema it consumes.
"""

import hashlib
import json

from . import fincat, moddescent, presheafkit, sitekit
from .errors import ParseError, SchemaError

SCHEMA_VERSION = "1"


def digest(raw):
    return hashlib.sha256(raw).hexdigest()


def loads(raw):
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError("input is not UTF-8: %s" % exc) from None
    try:
        document = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError("line %d: %s" % (exc.lineno, exc.msg)) from None
    if not isinstance(document, dict):
        raise SchemaError("top level: expected an object")
    version = document.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError("schema_version: expected %r, got %r" % (SCHEMA_VERSION, version))
    if "kind" not in document:
        raise SchemaError("kind: missing")
    return document


def dumps(document):
    return json.dumps(document, sort_keys=True, separators=(",", ":")) + "\n"


def _require(mapping, field, path):
    if field not in mapping:
        raise SchemaError("%s.%s: missing" % (path, field))
    return mapping[field]


def _int(value, path):
    if isinstance(value, str):
        try:
            return int(value, 10)
        except ValueError:
            pass
    raise SchemaError("%s: expected a decimal string, got %r" % (path, value))


def _str_int(value):
    return str(int(value))


# -- categories ----------------------------------------------------------------


def parse_category(spec, path="category", max_arrows=fincat.DEFAULT_MAX_ARROWS):
    objects = _require(spec, "objects", path)
    arrows_spec = _require(spec, "arrows", path)
    identities = _require(spec, "identities", path)
    composition_spec = _require(spec, "composition", path)
    arrows = []
    names = set()
    for i, arrow in enumerate(arrows_spec):
        apath = "%s.arrows[%d]" % (path, i)
        name = _require(arrow, "name", apath)
        src = _require(arrow, "src", apath)
        tgt = _require(arrow, "tgt", apath)
        if src not in objects:
            raise SchemaError("%s.src: unknown object %r" % (apath, src))
        if tgt not in objects:
            raise SchemaError("%s.tgt: unknown object %r" % (apath, tgt))
        arrows.append((name, src, tgt))
        names.add(name)
    composition = {}
    for i, entry in enumerate(composition_spec):
        cpath = "%s.composition[%d]" % (path, i)
        after = _require(entry, "after", cpath)
        first = _require(entry, "first", cpath)
        result = _require(entry, "result", cpath)
        for field, value in (("after", after), ("first", first), ("result", result)):
            if value not in names:
                raise SchemaError("%s.%s: unknown arrow %r" % (cpath, field, value))
        composition[(after, first)] = result
    for obj, ident in identities.items():
        if obj not in objects:
            raise SchemaError("%s.identities: unknown object %r" % (path, obj))
        if ident not in names:
            raise SchemaError("%s.identities[%r]: unknown arrow %r" % (path, obj, ident))
    return fincat.FinCategory(objects, arrows, identities, composition, max_arrows=max_arrows)


def emit_category(cat):
    return {
        "objects": list(cat.objects),
        "arrows": [
            {"name": name, "src": cat.src(name), "tgt": cat.tgt(name)}
            for name in cat.arrow_order
        ],
        "identities": {obj: cat.identity(obj) for obj in cat.objects},
        "composition": [
            {"after": g, "first": f, "result": h}
            for (g, f), h in sorted(cat.composition.items())
        ],
    }


def parse_site(document, path="", max_arrows=fincat.DEFAULT_MAX_ARROWS):
    prefix = path or "site"
    cat = parse_category(_require(document, "category", prefix), prefix + ".category", max_arrows)
    coverings_spec = _require(document, "coverings", prefix)
    coverings = {}
    for obj, families in coverings_spec.items():
        if obj not in cat.objects:
            raise SchemaError("%s.coverings: unknown object %r" % (prefix, obj))
        covs = []
        for i, family in enumerate(families):
            for arrow in family:
                if arrow not in cat.arrows:
                    raise SchemaError(
                        "%s.coverings[%r][%d]: unknown arrow %r" % (prefix, obj, i, arrow)
                    )
                if cat.tgt(arrow) != obj:
                    raise SchemaError(
                        "%s.coverings[%r][%d]: arrow %r does not target %r"
                        % (prefix, obj, i, arrow, obj)
                    )
            covs.append(sitekit.Covering(obj, family))
        coverings[obj] = covs
    return cat, sitekit.Pretopology(cat, coverings)


def emit_site(cat, topology):
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "site",
        "category": emit_category(cat),
        "coverings": {
            obj: [list(c.arrows) for c in topology.coverings_of(obj)]
            for obj in cat.objects
            if topology.coverings_of(obj)
        },
    }


def parse_presheaf(document, max_arrows=fincat.DEFAULT_MAX_ARROWS):
    cat, topology = parse_site(_require(document, "site", "presheaf"), "site", max_arrows)
    sets = _require(document, "sets", "presheaf")
    restrictions_spec = _require(document, "restrictions", "presheaf")
    for obj in sets:
        if obj not in cat.objects:
            raise SchemaError("sets: unknown object %r" % obj)
    restrictions = {}
    for arrow, table in restrictions_spec.items():
        if arrow not in cat.arrows:
            raise SchemaError("restrictions: unknown arrow %r" % arrow)
        restrictions[arrow] = dict(table)
    presheaf = presheafkit.Presheaf(cat, {o: tuple(v) for o, v in sets.items()}, restrictions)
    return cat, topology, presheaf


def emit_presheaf(cat, topology, presheaf):
    site = emit_site(cat, topology)
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "presheaf",
        "site": {k: site[k] for k in ("category", "coverings")},
        "sets": {obj: list(presheaf.elements(obj)) for obj in cat.objects},
        "restrictions": {
            name: dict(presheaf.restrict_map(name)) for name in cat.arrow_order
        },
    }


def parse_functor_tables(spec, source, target, path):
    objects = _require(spec, "objects", path)
    arrows = _require(spec, "arrows", path)
    return fincat.FinFunctor(source, target, objects, arrows)


def parse_fibered(document, max_arrows=fincat.DEFAULT_MAX_ARROWS):
    cat, topology = parse_site(_require(document, "site", "fibered"), "site", max_arrows)
    total = parse_category(_require(document, "total", "fibered"), "total", max_arrows)
    proj = parse_functor_tables(
        _require(document, "projection", "fibered"), total, cat, "projection"
    )
    report = proj.validate()
    if not report.ok:
        raise SchemaError("projection: not a functor: %r" % (report.violations[:3],))
    from . import fibkit

    return cat, topology, fibkit.CategoryOver(total, cat, proj)


def parse_pseudofunctor(document, max_arrows=fincat.DEFAULT_MAX_ARROWS):
    from . import fibkit

    base = parse_category(_require(document, "category", "pseudofunctor"), "category", max_arrows)
    fibers_spec = _require(document, "fibers", "pseudofunctor")
    fibers = {}
    for obj, spec in fibers_spec.items():
        if obj not in base.objects:
            raise SchemaError("fibers: unknown object %r" % obj)
        fibers[obj] = parse_category(spec, "fibers[%r]" % obj, max_arrows)
    transports_spec = _require(document, "transports", "pseudofunctor")
    transports = {}
    for arrow, spec in transports_spec.items():
        if arrow not in base.arrows:
            raise SchemaError("transports: unknown arrow %r" % arrow)
        transports[arrow] = parse_functor_tables(
            spec, fibers[base.tgt(arrow)], fibers[base.src(arrow)], "transports[%r]" % arrow
        )
    eps_spec = _require(document, "eps", "pseudofunctor")
    eps = {obj: dict(table) for obj, table in eps_spec.items()}
    alpha_spec = _require(document, "alpha", "pseudofunctor")
    alpha = {}
    for i, entry in enumerate(alpha_spec):
        path = "alpha[%d]" % i
        first = _require(entry, "first", path)
        then = _require(entry, "then", path)
        components = _require(entry, "components", path)
        alpha[(first, then)] = dict(components)
    return fibkit.PseudoFunctor(base, fibers, transports, eps, alpha)


def emit_fibered(cat, topology, over):
    site = emit_site(cat, topology)
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "fibered",
        "site": {k: site[k] for k in ("category", "coverings")},
        "total": emit_category(over.total),
        "projection": {
            "objects": dict(over.proj.obj_map),
            "arrows": dict(over.proj.arrow_map),
        },
    }


def parse_torsor(document, max_arrows=fincat.DEFAULT_MAX_ARROWS):
    from . import stackkit

    cat, topology = parse_site(_require(document, "site", "torsor"), "site", max_arrows)
    group_spec = _require(document, "group", "torsor")
    action_spec = _require(document, "action", "torsor")

    def product(spec, path):
        apex = _require(spec, "apex", path)
        projections = _require(spec, "projections", path)
        return fincat.ProductData(apex, projections, ())

    group = fincat.GroupObjectData(
        _require(group_spec, "carrier", "group"),
        _require(group_spec, "mul", "group"),
        _require(group_spec, "inv", "group"),
        _require(group_spec, "iden", "group"),
        _require(group_spec, "pt", "group"),
        prod_gg=product(_require(group_spec, "prod_gg", "group"), "group.prod_gg"),
        prod_ggg=(
            product(group_spec["prod_ggg"], "group.prod_ggg")
            if "prod_ggg" in group_spec
            else None
        ),
    )
    action = fincat.ActionData(
        _require(action_spec, "carrier", "action"),
        _require(action_spec, "act", "action"),
        prod_gx=product(_require(action_spec, "prod_gx", "action"), "action.prod_gx"),
        prod_ggx=(
            product(action_spec["prod_ggx"], "action.prod_ggx")
            if "prod_ggx" in action_spec
            else None
        ),
    )
    pi = _require(document, "pi", "torsor")
    if pi not in cat.arrows:
        raise SchemaError("pi: unknown arrow %r" % pi)
    return cat, topology, stackkit.TorsorData(group, action, pi)


def parse_module_descent(document):
    base_spec = _require(document, "base", "module-descent")
    base_type = _require(base_spec, "type", "base")
    if base_type == "integers-mod-n":
        ring = moddescent.Zmod(_int(_require(base_spec, "n", "base"), "base.n"))
    elif base_type == "prime-field-extension":
        raise SchemaError(
            "base: descent runs take an integers-mod-n base; field extensions "
            "enter as the free algebra"
        )
    else:
        raise SchemaError("base.type: unknown kind %r" % base_type)

    algebra = None
    quotient = None
    if "algebra" in document:
        spec = document["algebra"]
        rank = _int(_require(spec, "rank", "algebra"), "algebra.rank")
        constants = [
            [
                tuple(_int(x, "algebra.constants") for x in spec["constants"][i][j])
                for j in range(rank)
            ]
            for i in range(rank)
        ]
        unit = tuple(_int(x, "algebra.unit") for x in _require(spec, "unit", "algebra"))
        algebra = moddescent.build_algebra(ring, rank, constants, unit)
    if "quotient" in document:
        quotient = moddescent.zmod_quotient_algebra(
            ring, _int(document["quotient"], "quotient")
        )
    modules = []
    for i, spec in enumerate(document.get("modules", [])):
        orders = tuple(_int(x, "modules[%d].orders" % i) for x in _require(spec, "orders", "modules[%d]" % i))
        modules.append(moddescent.Module(ring, orders))
    psi = None
    if "psi" in document:
        psi = [[_int(x, "psi") for x in row] for row in document["psi"]]
    return {
        "ring": ring,
        "algebra": algebra,
        "quotient": quotient,
        "modules": modules,
        "psi": psi,
    }


def emit_matrix(matrix):
    return [[_str_int(x) for x in row] for row in matrix]
