"""The verification batteries behind the acceptance suite and the CLI
`suite` command.

Each battery returns a plain dict of verdicts and counts; everything is
deterministic given the seed.  The pytest acceptance module runs these at
the full advertised scale; the CLI may run them with reduced knobs.
"""

import itertools
import random

from . import fibkit, fincat, moddescent, presheafkit, sitekit, sites, stackkit


def fixture_sites():
    sierpinski = sites.sierpinski_site()
    two_point = sites.two_point_discrete_site()
    return {"sierpinski": sierpinski, "two-point-discrete": two_point}


def sheaf_decider_agreement(max_size=2):
    """Criterion: the three sheaf deciders agree on every presheaf with
    per-object set sizes <= max_size on both fixture sites."""
    out = {}
    for name, (cat, topology) in fixture_sites().items():
        presheaves = presheafkit.enumerate_presheaves(cat, max_size)
        agreed = 0
        for presheaf in presheaves:
            verdict = presheafkit.classify_sheaf(presheaf, topology, all_sieves="force")
            methods = set(verdict.methods.values())
            assert len(methods) == 1, "deciders disagree on %r" % presheaf
            agreed += 1
        out[name] = {"presheaves": len(presheaves), "agreed": agreed}
    out["ok"] = all(v["presheaves"] == v["agreed"] for v in out.values() if isinstance(v, dict))
    return out


def sheafification_battery(max_size=2, sheaf_size=3, universal_sample=None):
    """Criterion: Fa is a sheaf, the universal property holds against all
    sheaves with sizes <= sheaf_size, unit injective iff separated, and the
    constant-presheaf fixture has |Fa({a,b})| = 4."""
    results = {"checked": 0, "universal_checked": 0}
    for name, (cat, topology) in fixture_sites().items():
        presheaves = presheafkit.enumerate_presheaves(cat, max_size)
        sheaves = [
            g
            for g in presheafkit.enumerate_presheaves(cat, sheaf_size)
            if presheafkit.classify_sheaf(g, topology).sheaf
        ]
        for presheaf in presheaves:
            verdict = presheafkit.classify_sheaf(presheaf, topology)
            result = presheafkit.sheafify(presheaf, topology)
            assert presheafkit.classify_sheaf(result.fa, topology).sheaf
            assert result.unit.is_injective() == verdict.separated
            targets = sheaves if universal_sample is None else sheaves[:universal_sample]
            for sheaf_g in targets:
                assert presheafkit.check_universal_property(
                    presheaf, result.fa, result.unit, sheaf_g
                ), "universal property failed"
                results["universal_checked"] += 1
            results["checked"] += 1

    cat, topology = fixture_sites()["two-point-discrete"]
    constant = presheafkit.constant_presheaf(
        cat, ("x", "y"), initial_objects=("{}",), initial_value="x"
    )
    result = presheafkit.sheafify(constant, topology)
    families, _ = presheafkit.matching_families(
        constant,
        sitekit.Covering("{a,b}", ("{a}>{a,b}", "{b}>{a,b}")),
    )
    results["constant_fa_size"] = len(result.fa.elements("{a,b}"))
    results["constant_oracle"] = len(families)
    results["ok"] = results["constant_fa_size"] == 4 == results["constant_oracle"]
    return results


def topology_equivalence_battery(max_size=2):
    """Criterion: a pretopology and its saturation give identical sheaf sets
    and identical stack verdicts."""
    out = {"sheaf_pairs": 0, "stack_pairs": 0}
    for name, (cat, topology) in fixture_sites().items():
        saturated = sitekit.saturate(topology)
        compare = sitekit.topology_compare(topology, saturated)
        assert compare["equivalent"], "saturation is not equivalent"
        for presheaf in presheafkit.enumerate_presheaves(cat, max_size):
            first = presheafkit.classify_sheaf(presheaf, topology).pair()
            second = presheafkit.classify_sheaf(presheaf, saturated).pair()
            assert first == second, "sheaf verdicts differ across equivalent pretopologies"
            out["sheaf_pairs"] += 1
        for presheaf in presheafkit.enumerate_presheaves(cat, 2)[:8]:
            over = fibkit.presheaf_to_fibration(presheaf)
            first = stackkit.classify_stack(over, topology)
            second = stackkit.classify_stack(over, saturated)
            assert (first.prestack, first.stack) == (second.prestack, second.stack)
            out["stack_pairs"] += 1
    out["ok"] = True
    return out


def _seeded_pseudofunctors(count, rng):
    """Deterministic pseudo-functor generator: strict examples on the
    Sierpinski base plus nontrivial-coherence examples on the Z/2 base."""
    generated = []
    z2 = sites.cyclic_table(2)
    z4 = sites.cyclic_table(4)
    mbase = sites.group_as_category(z2, prefix="b")
    mfib = sites.group_as_category(z4, prefix="c")
    neg = fincat.FinFunctor(
        mfib, mfib, {"*": "*"}, {"c0": "c0", "c1": "c3", "c2": "c2", "c3": "c1"}
    )
    ident = fincat.identity_functor(mfib)

    twisted = 0
    while len(generated) < count:
        use_twist = rng.random() < 0.5 or (count - len(generated) <= 5 - twisted)
        if use_twist and twisted < max(5, count // 2):
            phi = fibkit.strict_pseudofunctor(
                mbase, {"*": mfib}, {"b0": ident, "b1": neg}
            )
            alpha = {k: dict(v) for k, v in phi.alpha.items()}
            alpha[("b1", "b1")]["*"] = "c2"
            phi = fibkit.PseudoFunctor(
                mbase, {"*": mfib}, phi.transports, phi.eps, alpha
            )
            twisted += 1
            generated.append(("twisted", phi))
            continue
        cat, _ = sites.sierpinski_site()
        prefix = "s%d_" % len(generated)
        fiber = sites.group_as_category(sites.cyclic_table(3), prefix=prefix)
        fiber_id = fincat.identity_functor(fiber)
        swap = fincat.FinFunctor(
            fiber,
            fiber,
            {"*": "*"},
            {prefix + "0": prefix + "0", prefix + "1": prefix + "2", prefix + "2": prefix + "1"},
        )
        lower = swap if rng.random() < 0.5 else fiber_id
        upper = swap if rng.random() < 0.5 else fiber_id
        transports = {
            cat.identity(obj): fiber_id for obj in cat.objects
        }
        transports["{1}>{0,1}"] = upper
        transports["{}>{1}"] = lower
        transports["{}>{0,1}"] = upper.then(lower)
        generated.append(("strict", fibkit.strict_pseudofunctor(cat, {u: fiber for u in cat.objects}, transports)))
    return generated


def grothendieck_battery(count=20, seed=0):
    """Criterion: constructions validate, are fibered, have the right fibers
    and round-trip; corrupted coherence is rejected."""
    rng = random.Random(seed)
    generated = _seeded_pseudofunctors(count, rng)
    nontrivial = sum(1 for kind, _ in generated if kind == "twisted")
    passed = 0
    for kind, phi in generated:
        assert fibkit.validate_pseudofunctor(phi).ok
        result = fibkit.grothendieck_construction(phi)
        assert fibkit.check_fibered(result.over)["fibered"]
        assert fibkit.pseudofunctor_roundtrip_matches(phi, result)
        passed += 1

    mutants_rejected = 0
    for kind, phi in generated:
        if kind != "twisted":
            continue
        alpha = {k: dict(v) for k, v in phi.alpha.items()}
        alpha[("b1", "b1")]["*"] = "c1"
        mutant = fibkit.PseudoFunctor(phi.base, phi.fibers, phi.transports, phi.eps, alpha)
        if not fibkit.validate_pseudofunctor(mutant).ok:
            mutants_rejected += 1
    return {
        "count": len(generated),
        "nontrivial_alpha": nontrivial,
        "passed": passed,
        "mutants_rejected": mutants_rejected,
        "ok": passed == len(generated) and nontrivial >= 5 and mutants_rejected == nontrivial,
    }


def random_presheaf(cat, rng, max_size=2):
    """A seeded random presheaf: choose sizes then functorial tables by
    rejection (deterministic given the rng state)."""
    while True:
        sizes = {obj: rng.randint(1, max_size) for obj in cat.objects}
        sets = {obj: tuple(range(sizes[obj])) for obj in cat.objects}
        restrictions = {}
        for name in cat.arrow_order:
            arr = cat.arrows[name]
            if name == cat.identity(arr.src):
                restrictions[name] = {a: a for a in sets[arr.src]}
            else:
                restrictions[name] = {
                    a: rng.randrange(sizes[arr.src]) for a in sets[arr.tgt]
                }
        candidate = presheafkit.Presheaf(cat, sets, restrictions)
        if candidate.validate().ok:
            return candidate


def stack_vs_sheaf_battery(per_site=50, seed=0):
    """Criterion: the discrete fibration of a presheaf is a (pre)stack
    exactly when the presheaf is a (separated) sheaf."""
    rng = random.Random(seed)
    checked = 0
    for name, (cat, topology) in fixture_sites().items():
        for _ in range(per_site):
            presheaf = random_presheaf(cat, rng)
            verdict = presheafkit.classify_sheaf(presheaf, topology)
            over = fibkit.presheaf_to_fibration(presheaf)
            report = stackkit.classify_stack(over, topology)
            assert (report.prestack, report.stack) == verdict.pair(), (
                "stack/sheaf verdicts differ"
            )
            checked += 1
    return {"checked": checked, "ok": True}


def descent_vs_sieve_battery():
    """Criterion: the descent category and Hom(h_cov, F) are equivalent for
    every covering of every fixture fibration with small groupoid fibers."""
    fixtures = []
    cat2, top2 = sites.two_point_discrete_site()
    phi = sites.classifying_pseudofunctor(cat2)
    fixtures.append((cat2, top2, fibkit.grothendieck_construction(phi).over))
    scat, stop = sites.sierpinski_site()
    sphi = sites.classifying_pseudofunctor(scat)
    fixtures.append((scat, stop, fibkit.grothendieck_construction(sphi).over))
    rep = presheafkit.representable(cat2, "{a,b}")
    fixtures.append((cat2, top2, fibkit.presheaf_to_fibration(rep)))

    checked = 0
    for cat, topology, over in fixtures:
        for obj in cat.objects:
            for cov in topology.coverings_of(obj):
                result = stackkit.descent_via_sieve(over, cov)
                assert result["comparison_equivalence"], (
                    "sieve-hom and descent categories differ at %r" % (cov,)
                )
                checked += 1
    return {"coverings": checked, "ok": True}


def module_roundtrip_battery(enum_cap=1 << 17):
    """Criterion: G(F(M)) ≅ M over all three ring fixtures, and F(G(D)) ≅ D
    for every enumerated descent object over the field cases."""
    gf4 = moddescent.field_extension_algebra(2, 2)
    gf9 = moddescent.field_extension_algebra(3, 2)
    z8 = moddescent.Zmod(8)
    idem = moddescent.build_algebra(
        z8, 2, [[(1, 0), (0, 1)], [(0, 1), (0, 1)]], (1, 0)
    )

    unit_count = 0
    for algebra in (gf4, gf9):
        base = algebra.base
        for dim in range(0, 4):
            module = moddescent.free_module(base, dim)
            assert moddescent.unit_roundtrip(algebra, module)["unit_iso"]
            unit_count += 1
    for size in range(0, 4):
        for profile in itertools.product((8, 4, 2), repeat=size):
            module = moddescent.Module(z8, profile)
            assert moddescent.unit_roundtrip(idem, module)["unit_iso"]
            unit_count += 1

    counts = {}
    counit_count = 0
    for label, algebra in (("F2->GF4", gf4), ("F3->GF9", gf9)):
        for dim in (1, 2):
            try:
                objects = moddescent.enumerate_descent_objects_full(
                    algebra, dim, enum_cap
                )
                strategy = "full"
            except Exception:
                objects = moddescent.enumerate_descent_objects_semilinear(
                    algebra, dim, enum_cap
                )
                strategy = "semilinear"
            for descent in objects:
                assert moddescent.counit_roundtrip(descent)["counit_iso"]
                counit_count += 1
            counts["%s rank %d" % (label, dim)] = {
                "count": len(objects),
                "strategy": strategy,
            }
    return {
        "unit_isos": unit_count,
        "counit_isos": counit_count,
        "object_counts": counts,
        "ok": True,
    }


def amitsur_battery(per_fixture=100, seed=0):
    """Criterion: exactness for seeded random modules over the free-algebra
    fixtures; injectivity failure for the quotient map at M = A."""
    rng = random.Random(seed)
    gf4 = moddescent.field_extension_algebra(2, 2)
    gf9 = moddescent.field_extension_algebra(3, 2)
    z8 = moddescent.Zmod(8)
    idem = moddescent.build_algebra(
        z8, 2, [[(1, 0), (0, 1)], [(0, 1), (0, 1)]], (1, 0)
    )
    checked = 0
    for algebra in (gf4, gf9, idem):
        base = algebra.base
        for _ in range(per_fixture):
            if base.is_field:
                module = moddescent.free_module(base, rng.randint(0, 3))
            else:
                size = rng.randint(0, 3)
                module = moddescent.Module(
                    base, tuple(rng.choice((2, 4, 8)) for _ in range(size))
                )
            result = moddescent.amitsur_check(algebra, module)
            assert result["exact"], (algebra, module.orders, result)
            checked += 1
    z4 = moddescent.Zmod(4)
    quotient = moddescent.zmod_quotient_algebra(z4, 2)
    failure = moddescent.amitsur_check(quotient, moddescent.free_module(z4, 1))
    return {
        "checked": checked,
        "quotient_failure": failure,
        "ok": (not failure["exact"]) and failure["failure"] == "injectivity",
    }


def galois_battery(pairs=((2, 2), (3, 2), (2, 3)), enum_cap=1 << 17):
    """Criterion: the evaluation ring isomorphism, the semilinear dictionary
    with fixed points and dimensions, and the torsor descent fixture."""
    out = {}
    for p, n in pairs:
        result = moddescent.galois_toolkit(p, n, enum_cap=enum_cap)
        entry_ok = all(
            all(value for key, value in entry.items() if isinstance(value, bool))
            for entry in result["dictionary"]
        )
        out["GF(%d^%d)" % (p, n)] = {
            "crt_bijective": result["crt_bijective"],
            "crt_multiplicative": result["crt_multiplicative"],
            "dictionary_entries": len(result["dictionary"]),
            "dictionary_ok": entry_ok,
        }

    cat, group, action, pi = sites.free_z2_torsor_fixture()
    topology = sites.indiscrete_pretopology(cat)
    torsor = stackkit.TorsorData(group, action, pi)
    verdict = stackkit.check_torsor(cat, topology, torsor)
    sheaf = presheafkit.constant_presheaf(cat, ("u", "v"))
    over = fibkit.presheaf_to_fibration(sheaf)
    cleavage = fibkit.extract_cleavage(over)
    descent_ok = stackkit.torsor_descent_check(over, cleavage, torsor, topology)
    out["torsor"] = {"verdict": verdict["torsor"], "descent_equivalence": descent_ok}
    out["ok"] = (
        all(v["crt_bijective"] and v["crt_multiplicative"] and v["dictionary_ok"]
            for k, v in out.items() if k.startswith("GF"))
        and verdict["torsor"]
        and descent_ok
    )
    return out
