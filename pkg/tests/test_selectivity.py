import itertools
import random
from fractions import Fraction as F

import pytest

from ordist import (
    CapExceeded,
    Design,
    InputPoint,
    OrderDistance,
    OrderSpec,
    PDistance,
    SequenceWitness,
    TreatmentTable,
    chain_test,
    check_marginal_selectivity,
    enumerate_irreducible,
    enumerate_realizable,
    is_irreducible,
    pair_coverable,
    run_suite,
    transform_outputs,
)
from randsys import (
    binary_design,
    canonical_order_specs,
    pr_box,
    product_system,
    random_coupled_system,
    random_order_spec,
    sign_system,
    system_from_joint,
)

P = InputPoint


def index_order_spec(tables):
    per_point = {}
    for t in tables:
        for pos, name in enumerate(t.design.inputs):
            pt = P(name, t.treatment[pos])
            if pt not in per_point:
                per_point[pt] = {v: k + 1 for k, v in enumerate(t.axes[pos])}
    return OrderSpec({}, per_point)


class TestPairCoverable:
    def test_full_design_covers_cross_input_pairs(self):
        d = binary_design()
        assert pair_coverable(P("1", "x"), P("2", "y"), d) == ("x", "y")
        assert pair_coverable(P("2", "y'"), P("1", "x"), d) == ("x", "y'")

    def test_same_input_distinct_values_never_covered(self):
        d = binary_design()
        assert pair_coverable(P("1", "x"), P("1", "x'"), d) is None

    def test_point_with_itself(self):
        d = binary_design()
        assert pair_coverable(P("1", "x'"), P("1", "x'"), d) == ("x'", "y")

    def test_restricted_design_membership_scan(self):
        d = Design(
            ["1", "2"],
            {"1": ["x", "x'"], "2": ["y", "y'"]},
            [("x", "y"), ("x'", "y'")],
        )
        assert pair_coverable(P("1", "x"), P("2", "y'"), d) is None
        assert pair_coverable(P("1", "x"), P("2", "y"), d) == ("x", "y")


class TestEnumerateRealizable:
    def test_alternating_unit_square_sequence_is_realizable(self):
        d = Design(["1", "2"], {"1": ["0", "1"], "2": ["0", "1"]})
        target = (P("1", "0"), P("2", "1"), P("1", "1"), P("2", "0"))
        seqs = {w.points for w in enumerate_realizable(d, max_len=4)}
        assert target in seqs

    def test_within_one_treatment_is_realizable(self):
        d = binary_design()
        target = (P("1", "x"), P("2", "y"), P("1", "x"))
        seqs = {w.points for w in enumerate_realizable(d, max_len=3)}
        assert target in seqs

    def test_alternating_distinct_tetrads_count_eight(self):
        d = Design(["1", "2"], {"1": ["0", "1"], "2": ["0", "1"]})
        count = 0
        for w in enumerate_realizable(d, max_len=4):
            pts = w.points
            if len(pts) != 4 or len(set(pts)) != 4:
                continue
            if all(pts[i].input != pts[i + 1].input for i in range(3)):
                count += 1
        assert count == 8

    def test_witness_covers_contain_their_pairs(self):
        d = Design(
            ["1", "2"],
            {"1": ["x", "x'"], "2": ["y", "y'"]},
            [("x", "y"), ("x", "y'"), ("x'", "y")],
        )
        for w in enumerate_realizable(d, max_len=4):
            pts, covers = w.points, w.covers
            pairs = [(pts[0], pts[-1])] + [
                (pts[i - 1], pts[i]) for i in range(1, len(pts))
            ]
            for (a, b), cover in zip(pairs, covers):
                assert d.value_of(cover, a.input) == a.value
                assert d.value_of(cover, b.input) == b.value

    def test_cap_exceeded(self):
        d = binary_design()
        with pytest.raises(CapExceeded):
            list(enumerate_realizable(d, max_len=5, cap=10))

    def test_lexicographic_and_shortest_first(self):
        d = binary_design()
        lengths = [len(w.points) for w in enumerate_realizable(d, max_len=4)]
        assert lengths == sorted(lengths)


class TestEnumerateIrreducible:
    def test_full_2x2_design_yields_exactly_eight_tetrads(self):
        d = binary_design()
        got = [w.points for w in enumerate_irreducible(d, max_len=6)]
        assert len(got) == 8
        for pts in got:
            assert len(pts) == 4 and len(set(pts)) == 4
            assert pts[0].input == pts[2].input
            assert pts[1].input == pts[3].input
            assert pts[0].input != pts[1].input

    def test_full_design_fast_path_matches_filtering(self):
        for values2 in (["y", "y'"], ["y", "y'", "y''"]):
            d = Design(["1", "2"], {"1": ["x", "x'"], "2": values2})
            fast = [w.points for w in enumerate_irreducible(d, max_len=6)]
            brute = [
                w.points
                for w in enumerate_realizable(d, max_len=6, cap=2_000_000)
                if is_irreducible(w.points, d)
            ]
            assert fast == brute

    def test_full_design_tetrad_shape(self):
        d = Design(["1", "2"], {"1": ["x", "x'"], "2": ["y", "y'", "y''"]})
        for w in enumerate_irreducible(d, max_len=6):
            x, y, s, t = w.points
            assert x.input == s.input and y.input == t.input
            assert x.input != y.input
            assert x != s and y != t

    def test_sequence_with_coverable_nonadjacent_pair_is_reducible(self):
        d = binary_design()
        # points 0 and 2 lie in a common treatment: reducible
        seq = (P("1", "x"), P("2", "y"), P("2", "y"), P("2", "y'"))
        assert not is_irreducible(seq, d)

    def test_endpoints_must_differ(self):
        d = binary_design()
        seq = (P("1", "x"), P("2", "y"), P("1", "x"))
        assert not is_irreducible(seq, d)

    def test_triangle_irreducible_on_restricted_design(self):
        # three treatments pairwise sharing a point, no treatment holding
        # all three points: a length-3 irreducible sequence exists
        d = Design(
            ["1", "2", "3"],
            {"1": ["a", "a'"], "2": ["b", "b'"], "3": ["c", "c'"]},
            [("a", "b", "c'"), ("a", "b'", "c"), ("a'", "b", "c")],
        )
        seq = (P("1", "a"), P("2", "b"), P("3", "c"))
        assert is_irreducible(seq, d)
        got = [w.points for w in enumerate_irreducible(d, max_len=4)]
        assert seq in got

    def test_degenerate_sequences_realizable_but_never_irreducible(self):
        d = binary_design()
        degenerate = [
            w.points
            for w in enumerate_realizable(d, max_len=4)
            if w.points[0] == w.points[-1]
        ]
        assert degenerate
        for pts in degenerate:
            assert not is_irreducible(pts, d)


class TestChainTest:
    def test_symbolic_tetrad_terms(self):
        from test_probspace import symbolic_tables

        design = binary_design()
        tables = symbolic_tables(design)
        by_t = {t.treatment: t for t in tables}
        seq = (P("1", "x"), P("2", "y"), P("1", "x'"), P("2", "y'"))
        witness = SequenceWitness(
            seq,
            (("x", "y'"), ("x", "y"), ("x'", "y"), ("x'", "y'")),
        )
        metric = index_order_spec(tables)
        report = chain_test(OrderDistance(metric), witness, tables)
        q, p, r, s = (by_t[t] for t in [("x", "y'"), ("x", "y"), ("x'", "y"), ("x'", "y'")])
        assert report.lhs == q.prob(("0", "1"))
        assert report.rhs_terms == (
            p.prob(("0", "1")),
            r.prob(("1", "0")),
            s.prob(("0", "1")),
        )
        assert report.residual == sum(report.rhs_terms) - report.lhs

    def test_repeated_point_contributes_zero(self):
        design, tables = product_system()
        seq = (P("1", "x"), P("1", "x"), P("2", "y"))
        witness = SequenceWitness(seq, (("x", "y"), ("x", "y"), ("x", "y")))
        report = chain_test(OrderDistance(index_order_spec(tables)), witness, tables)
        assert report.rhs_terms[0] == 0

    def test_residual_invariant_under_cover_choice(self):
        rng = random.Random(41)
        for _ in range(10):
            design, tables = random_coupled_system(rng, n_inputs=2, restrict_phi=True)
            metric = OrderDistance(random_order_spec(rng, tables))
            treatments = list(design.iter_treatments())
            for w in itertools.islice(enumerate_irreducible(design, max_len=4), 6):
                pts = w.points
                pairs = [(pts[0], pts[-1])] + [
                    (pts[i - 1], pts[i]) for i in range(1, len(pts))
                ]
                choices = []
                for a, b in pairs:
                    covering = [
                        t
                        for t in treatments
                        if design.value_of(t, a.input) == a.value
                        and design.value_of(t, b.input) == b.value
                    ]
                    choices.append(covering)
                baseline = None
                for combo in itertools.islice(itertools.product(*choices), 12):
                    report = chain_test(metric, SequenceWitness(pts, combo), tables)
                    if baseline is None:
                        baseline = report.residual
                    else:
                        assert report.residual == baseline


class TestMarginalSelectivity:
    def test_identical_tables_pass_with_zero(self):
        design, tables = product_system()
        report = check_marginal_selectivity(design, tables)
        assert report.passed
        assert report.max_discrepancy == 0

    def test_shared_margins_pass(self):
        rng = random.Random(43)
        for _ in range(10):
            design, tables = random_coupled_system(rng, n_inputs=2)
            assert check_marginal_selectivity(design, tables).passed

    def test_three_input_product_extension_passes(self):
        rng = random.Random(47)
        for _ in range(5):
            design, tables = random_coupled_system(rng, n_inputs=3, max_input_values=2)
            assert check_marginal_selectivity(design, tables).passed

    def test_perturbed_marginal_detected_with_size(self):
        # shift the first output's margin under (x, y) by exactly 1/20:
        # the report must come back with that discrepancy
        design, tables = product_system()
        eps = F(1, 20)
        cells = {
            ("0", "0"): F(1, 4) + eps / 2,
            ("0", "1"): F(1, 4) + eps / 2,
            ("1", "0"): F(1, 4) - eps / 2,
            ("1", "1"): F(1, 4) - eps / 2,
        }
        tables[0] = TreatmentTable(design, ("x", "y"), cells, axes=[("0", "1"), ("0", "1")])
        report = check_marginal_selectivity(design, tables)
        assert not report.passed
        assert report.max_discrepancy == eps
        assert report.witness is not None
        assert report.witness["inputs"] == ["1"]


class TestRunSuite:
    def test_product_system_clean(self):
        design, tables = product_system()
        suite = run_suite(design, tables, [OrderDistance(index_order_spec(tables))])
        assert suite.sequences_tested == 8
        assert suite.violations == ()

    def test_pr_box_violated(self):
        design, tables = pr_box()
        suite = run_suite(design, tables, [OrderDistance(index_order_spec(tables))])
        assert suite.violations
        worst = min(v.residual for v in suite.violations)
        assert worst == F(-1, 2)

    def test_sign_system_violated(self):
        design, tables = sign_system()
        suite = run_suite(design, tables, [OrderDistance(index_order_spec(tables))])
        assert suite.violations
        assert min(v.residual for v in suite.violations) == F(-1, 4)

    def test_sound_systems_never_violate(self):
        rng = random.Random(53)
        for _ in range(15):
            design, tables, _ = system_from_joint(rng, 2, 2, 2)
            metrics = [
                OrderDistance(random_order_spec(rng, tables)),
                OrderDistance(index_order_spec(tables)),
            ]
            suite = run_suite(design, tables, metrics)
            assert suite.violations == ()

    def test_truncation_flag(self):
        design, tables = product_system()
        suite = run_suite(
            design,
            tables,
            [OrderDistance(index_order_spec(tables))],
            cap=3,
            on_cap="truncate",
        )
        assert suite.truncated
        with pytest.raises(CapExceeded):
            run_suite(design, tables, [OrderDistance(index_order_spec(tables))], cap=3)


class TestRealizableIrreducibleEquivalence:
    def test_violation_in_realizable_iff_in_irreducible(self):
        rng = random.Random(59)
        checked_any = 0
        for _ in range(12):
            n_inputs = rng.choice([2, 2, 3])
            design, tables = random_coupled_system(
                rng,
                n_inputs=n_inputs,
                max_input_values=3 if n_inputs == 2 else 2,
                out_sizes=(2, 2),
            )
            low, rev = canonical_order_specs(tables)
            metrics = [
                OrderDistance(low),
                OrderDistance(rev),
                OrderDistance(random_order_spec(rng, tables)),
            ]
            max_len = 5
            cache = [dict() for _ in metrics]
            by_t = {t.treatment: t for t in tables}

            def dist(mi, x, y, cover):
                key = (x, y)
                if key not in cache[mi]:
                    from ordist.selectivity import _pair_marginal

                    cache[mi][key] = metrics[mi].evaluate(
                        _pair_marginal(by_t[cover], x, y)
                    )
                return cache[mi][key]

            def violated_over(stream):
                found = [False] * len(metrics)
                for w in stream:
                    pts = w.points
                    for mi in range(len(metrics)):
                        lhs = dist(mi, pts[0], pts[-1], w.covers[0])
                        rhs = sum(
                            dist(mi, pts[i - 1], pts[i], w.covers[i])
                            for i in range(1, len(pts))
                        )
                        if rhs - lhs < 0:
                            found[mi] = True
                return found

            real = violated_over(enumerate_realizable(design, max_len, cap=400_000))
            irr = violated_over(enumerate_irreducible(design, max_len, cap=400_000))
            assert real == irr
            checked_any += sum(real)
        assert checked_any > 0  # the sample must exercise the violating branch


class TestTransformOutputs:
    def test_identity_relabeling_keeps_tables(self):
        design, tables = pr_box()
        new = transform_outputs(tables, lambda name, w, v: v)
        for old, fresh in zip(tables, new):
            assert old.probs == fresh.probs

    def test_constant_relabeling_kills_every_metric(self):
        design, tables = pr_box()
        new = transform_outputs(tables, lambda name, w, v: "z")
        metric = OrderDistance(OrderSpec({"z": 1}))
        suite = run_suite(design, new, [metric])
        assert suite.violations == ()

    def test_marginal_selectivity_preserved(self):
        rng = random.Random(61)
        design, tables = random_coupled_system(rng, n_inputs=2)
        relabel = lambda name, w, v: f"{v[-1] if v[-1] in '01' else v}-merged" if v.endswith("1") else v
        new = transform_outputs(tables, relabel)
        assert check_marginal_selectivity(design, new).passed

    def test_point_specific_flip_changes_p1_residuals(self):
        from test_probspace import symbolic_tables

        design = binary_design()
        tables = symbolic_tables(design)
        embed_plain = {"0": F(0), "1": F(1)}
        witness = next(iter(enumerate_irreducible(design, max_len=4)))
        before = chain_test(PDistance(embed_plain, 1), witness, tables).residual
        assert before == F(1)

        def flip(name, w, v):
            if (name, w) == ("1", "x"):
                return "1" if v == "0" else "0"
            return v

        flipped = transform_outputs(tables, flip)
        after = chain_test(PDistance(embed_plain, 1), witness, flipped).residual
        assert after == F(6, 5)
        assert before != after


class TestFloatTolerances:
    def test_jittered_sound_system_stays_clean(self):
        # float rounding noise far below the tolerance must not create
        # spurious violations or selectivity failures
        rng = random.Random(83)
        for _ in range(10):
            design, tables, _ = system_from_joint(rng, 2, 2, 2)
            noisy = []
            for t in tables:
                cells = {
                    o: float(p) * (1.0 + rng.uniform(-1e-13, 1e-13))
                    for o, p in t.probs.items()
                }
                noisy.append(
                    TreatmentTable(design, t.treatment, cells, axes=t.axes)
                )
            report = check_marginal_selectivity(design, noisy, eps=1e-9)
            assert report.passed
            assert 0 < report.max_discrepancy < 1e-11
            low, rev = canonical_order_specs(noisy)
            suite = run_suite(design, noisy, [OrderDistance(low), OrderDistance(rev)])
            assert suite.violations == ()


def treatment_centric_irreducible(points, design):
    """Independent oracle: scan treatments instead of index subsets.

    A sequence is reducible exactly when some treatment contains three or
    more of its members, or contains a member pair that is neither the
    closing pair nor adjacent.
    """
    l = len(points)
    if points[0] == points[-1]:
        return False
    allowed = {frozenset((0, l - 1))} | {
        frozenset((i - 1, i)) for i in range(1, l)
    }
    for t in design.iter_treatments():
        covered = [
            i
            for i, p in enumerate(points)
            if design.value_of(t, p.input) == p.value
        ]
        if len(covered) >= 3:
            return False
        if len(covered) == 2 and frozenset(covered) not in allowed:
            return False
    return True


class TestIrreducibleOracle:
    def test_subset_filter_matches_treatment_scan(self):
        rng = random.Random(89)
        total = irreducible_count = 0
        for _ in range(8):
            design, _ = random_coupled_system(
                rng, n_inputs=rng.choice([2, 3]), max_input_values=2
            )
            for w in enumerate_realizable(design, max_len=5, cap=200_000):
                total += 1
                mine = is_irreducible(w.points, design)
                oracle = treatment_centric_irreducible(w.points, design)
                assert mine == oracle, w.points
                irreducible_count += mine
        assert total > 100 and irreducible_count > 0
