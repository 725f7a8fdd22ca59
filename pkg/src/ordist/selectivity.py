"""Marginal selectivity, treatment-realizable sequences, and chain tests.

The question answered here: can the observed per-treatment joint output
distributions coexist as restrictions of one jointly distributed set with
one variable per input point?  That hypothetical joint carries every
p.q.-metric, so its chain inequality

    d(H_1, H_l) <= sum_i d(H_{i-1}, H_i)

must hold whenever each pair of adjacent points (and the closing pair) is
observable inside some allowable treatment — a *treatment-realizable*
sequence.  A single violated chain refutes the joint, hence refutes
selective influence.  Testing only *irreducible* sequences suffices: a
violated reducible chain always contains a violated subchain, because any
extra pair lying inside one treatment splits the chain into two shorter
realizable ones.  For full factorial designs the irreducible sequences are
exactly the alternating tetrads x, y, s, t over two distinct inputs.

All d-values are taken from the witnessing treatments' bivariate
marginals; under marginal selectivity (checked separately) they do not
depend on which witness covers a pair.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from .arith import EPS_TEST, Num, is_exact, num_to_json
from .errors import CapExceeded, SystemFormatError
from .metrics import Metric
from .probspace import (
    BivariateMarginal,
    Design,
    InputPoint,
    TreatmentTable,
    bivariate,
    diagonal_coupling,
    marginalize,
)

MAX_SEQUENCES = 1_000_000


@dataclass(frozen=True)
class SequenceWitness:
    """A treatment-realizable sequence of input points with covering
    treatments: covers[0] contains {points[0], points[-1]} and covers[i]
    contains {points[i-1], points[i]} for i >= 1."""

    points: tuple[InputPoint, ...]
    covers: tuple[tuple, ...]

    def __len__(self):
        return len(self.points)

    def as_json(self):
        return [p.as_json() for p in self.points]


@dataclass(frozen=True)
class ChainReport:
    """One chain-inequality evaluation: residual = sum(rhs_terms) - lhs,
    negative residual (beyond tolerance in float mode) means violation."""

    sequence: tuple[InputPoint, ...]
    metric: str
    lhs: Num
    rhs_terms: tuple[Num, ...]
    residual: Num
    violated: bool
    covers: Optional[tuple[tuple, ...]] = None

    def as_json(self):
        return {
            "sequence": [p.as_json() for p in self.sequence],
            "metric": self.metric,
            "lhs": num_to_json(self.lhs),
            "rhs_terms": [num_to_json(t) for t in self.rhs_terms],
            "residual": num_to_json(self.residual),
            "violated": self.violated,
        }


@dataclass(frozen=True, eq=False)
class MarginalSelectivityReport:
    """Worst disagreement between marginals that should coincide."""

    passed: bool
    max_discrepancy: Num
    witness: Optional[dict]
    classes: tuple = ()

    def as_json(self):
        out = {
            "passed": self.passed,
            "max_discrepancy": num_to_json(self.max_discrepancy),
        }
        if self.witness is not None:
            w = dict(self.witness)
            w["discrepancy"] = num_to_json(w["discrepancy"])
            out["witness"] = w
        else:
            out["witness"] = None
        return out


@dataclass(frozen=True, eq=False)
class SuiteReport:
    sequences_tested: int
    violations: tuple[ChainReport, ...]
    metrics: tuple[str, ...]
    truncated: bool = False

    def as_json(self):
        return {
            "sequences_tested": self.sequences_tested,
            "violations": [v.as_json() for v in self.violations],
            "metrics": list(self.metrics),
            "truncated": self.truncated,
        }


class _Covers:
    """Memoized treatment lookup for point sets (lexicographic witness)."""

    def __init__(self, design: Design):
        self.design = design
        self._cache: dict[frozenset, Optional[tuple]] = {}

    def of(self, points: frozenset) -> Optional[tuple]:
        try:
            return self._cache[points]
        except KeyError:
            t = self.design.cover(points)
            self._cache[points] = t
            return t

    def pair(self, x: InputPoint, y: InputPoint) -> Optional[tuple]:
        return self.of(frozenset((x, y)))


def pair_coverable(x: InputPoint, y: InputPoint, design: Design) -> Optional[tuple]:
    """Some allowable treatment containing both points, or None.

    Deterministic: the lexicographically first treatment (by value order)
    is returned.  Two distinct points of the same input are never covered.
    """
    return design.cover((x, y))


def enumerate_realizable(
    design: Design, max_len: int = 6, cap: int = MAX_SEQUENCES
) -> Iterator[SequenceWitness]:
    """All treatment-realizable sequences of length 3..max_len, shortest
    first, lexicographic within each length (design input order, declared
    value order).  Raises CapExceeded past `cap` yields."""
    if max_len < 3:
        raise ValueError("max_len must be at least 3")
    covers = _Covers(design)
    pts = [p for p in design.points() if covers.pair(p, p) is not None]
    adj = {x: [y for y in pts if covers.pair(x, y) is not None] for x in pts}
    count = 0
    for length in range(3, max_len + 1):
        stack: list[InputPoint] = []

        def emit() -> SequenceWitness:
            closing = covers.pair(stack[0], stack[-1])
            assert closing is not None
            step_covers = tuple(
                covers.pair(stack[i - 1], stack[i]) for i in range(1, length)
            )
            return SequenceWitness(tuple(stack), (closing, *step_covers))

        def walk() -> Iterator[SequenceWitness]:
            nonlocal count
            if len(stack) == length:
                if covers.pair(stack[0], stack[-1]) is not None:
                    count += 1
                    if count > cap:
                        raise CapExceeded(f"more than {cap} realizable sequences")
                    yield emit()
                return
            for y in adj[stack[-1]]:
                stack.append(y)
                yield from walk()
                stack.pop()

        for x in pts:
            stack.append(x)
            yield from walk()
            stack.pop()


def is_irreducible(points: Sequence[InputPoint], design: Design, _covers: Optional[_Covers] = None) -> bool:
    """True when the only index subsequences of size > 1 lying inside some
    treatment are the closing pair {first, last} and the adjacent pairs,
    and the endpoints differ.  Checked exhaustively over index subsets."""
    covers = _covers or _Covers(design)
    l = len(points)
    if points[0] == points[-1]:
        return False
    allowed = {frozenset((0, l - 1))}
    for i in range(1, l):
        allowed.add(frozenset((i - 1, i)))
    indices = range(l)
    for size in range(2, l + 1):
        for combo in itertools.combinations(indices, size):
            s = frozenset(combo)
            if s in allowed:
                continue
            pset = frozenset(points[i] for i in combo)
            if covers.of(pset) is not None:
                return False
    return True


def enumerate_irreducible(
    design: Design, max_len: int = 6, cap: int = MAX_SEQUENCES
) -> Iterator[SequenceWitness]:
    """Irreducible treatment-realizable sequences, same order as
    :func:`enumerate_realizable`.

    Full factorial designs skip straight to the alternating tetrads over
    two distinct inputs, the only irreducible shape they admit.
    """
    if design.is_full:
        if max_len < 4:
            return
        yield from _full_design_tetrads(design, cap)
        return
    covers = _Covers(design)
    count = 0
    for w in enumerate_realizable(design, max_len, cap):
        if is_irreducible(w.points, design, covers):
            count += 1
            if count > cap:
                raise CapExceeded(f"more than {cap} irreducible sequences")
            yield w


def _full_design_tetrads(design: Design, cap: int) -> Iterator[SequenceWitness]:
    pts = design.points()
    covers = _Covers(design)
    count = 0
    for x1 in pts:
        for x2 in pts:
            if x2.input == x1.input:
                continue
            for x3 in pts:
                if x3.input != x1.input or x3 == x1:
                    continue
                for x4 in pts:
                    if x4.input != x2.input or x4 == x2:
                        continue
                    seq = (x1, x2, x3, x4)
                    count += 1
                    if count > cap:
                        raise CapExceeded(f"more than {cap} irreducible sequences")
                    yield SequenceWitness(
                        seq,
                        (
                            covers.pair(x1, x4),
                            covers.pair(x1, x2),
                            covers.pair(x2, x3),
                            covers.pair(x3, x4),
                        ),
                    )


def _tables_by_treatment(tables: Iterable[TreatmentTable]) -> Mapping[tuple, TreatmentTable]:
    if isinstance(tables, Mapping):
        return tables
    return {t.treatment: t for t in tables}


def _pair_marginal(table: TreatmentTable, x: InputPoint, y: InputPoint) -> BivariateMarginal:
    if x == y:
        return diagonal_coupling(table.axis(x.input), table.univariate(x.input), x)
    return bivariate(table, x.input, y.input)


def chain_test(
    metric: Metric,
    witness: SequenceWitness,
    tables: Iterable[TreatmentTable],
    eps_test: float = EPS_TEST,
) -> ChainReport:
    """Evaluate the chain inequality for one sequence under one metric.

    lhs is the distance between the endpoint outputs inside the closing
    cover; each rhs term is the distance between adjacent outputs inside
    that step's cover.  A repeated point contributes its diagonal coupling
    (distance zero for any p.q.-metric)."""
    by_t = _tables_by_treatment(tables)
    pts = witness.points

    def dist(x: InputPoint, y: InputPoint, cover: tuple) -> Num:
        try:
            table = by_t[cover]
        except KeyError:
            raise SystemFormatError(f"no table for covering treatment {cover!r}") from None
        return metric.evaluate(_pair_marginal(table, x, y))

    lhs = dist(pts[0], pts[-1], witness.covers[0])
    rhs = tuple(
        dist(pts[i - 1], pts[i], witness.covers[i]) for i in range(1, len(pts))
    )
    residual = sum(rhs) - lhs
    violated = residual < 0 if is_exact(residual) else residual < -eps_test
    return ChainReport(
        sequence=pts,
        metric=metric.describe(),
        lhs=lhs,
        rhs_terms=rhs,
        residual=residual,
        violated=violated,
        covers=witness.covers,
    )


def run_suite(
    design: Design,
    tables: Iterable[TreatmentTable],
    metrics: Sequence[Metric],
    max_len: int = 6,
    cap: int = MAX_SEQUENCES,
    eps_test: float = EPS_TEST,
    on_cap: str = "raise",
) -> SuiteReport:
    """Chain-test every irreducible sequence under every metric.

    Assumes a validated, marginally selective system; distances are then
    witness-independent, so they are cached per (metric, ordered point
    pair).  ``on_cap="truncate"`` turns CapExceeded into a truncated
    report instead of an exception.
    """
    by_t = _tables_by_treatment(tables)
    metrics = list(metrics)
    caches: list[dict] = [{} for _ in metrics]
    violations: list[ChainReport] = []
    tested = 0
    truncated = False

    def dist(mi: int, x: InputPoint, y: InputPoint, cover: tuple) -> Num:
        key = (x, y)
        cache = caches[mi]
        try:
            return cache[key]
        except KeyError:
            d = metrics[mi].evaluate(_pair_marginal(by_t[cover], x, y))
            cache[key] = d
            return d

    stream = enumerate_irreducible(design, max_len, cap)
    try:
        for w in stream:
            tested += 1
            pts = w.points
            for mi, metric in enumerate(metrics):
                lhs = dist(mi, pts[0], pts[-1], w.covers[0])
                rhs = tuple(
                    dist(mi, pts[i - 1], pts[i], w.covers[i])
                    for i in range(1, len(pts))
                )
                residual = sum(rhs) - lhs
                violated = residual < 0 if is_exact(residual) else residual < -eps_test
                if violated:
                    violations.append(
                        ChainReport(pts, metric.describe(), lhs, rhs, residual, True, w.covers)
                    )
    except CapExceeded:
        if on_cap != "truncate":
            raise
        truncated = True
    return SuiteReport(
        sequences_tested=tested,
        violations=tuple(violations),
        metrics=tuple(m.describe() for m in metrics),
        truncated=truncated,
    )


def check_marginal_selectivity(
    design: Design,
    tables: Iterable[TreatmentTable],
    eps: float = EPS_TEST,
) -> MarginalSelectivityReport:
    """Compare marginals that must agree: for every single input and every
    input pair, treatments assigning the same values there must induce the
    same marginal over those outputs.  Exact comparison in the rational
    regime, entrywise |diff| <= eps otherwise."""
    tables = list(tables)
    worst: Num = 0
    witness = None
    classes = []
    subset_sizes = [1] + ([2] if len(design.inputs) >= 2 else [])
    for size in subset_sizes:
        for names in itertools.combinations(design.inputs, size):
            groups: dict[tuple, list[TreatmentTable]] = {}
            for t in tables:
                key = tuple(design.value_of(t.treatment, n) for n in names)
                groups.setdefault(key, []).append(t)
            for key, group in groups.items():
                if len(group) < 2:
                    continue
                ref = group[0]
                ref_m = marginalize(ref, names)
                class_worst: Num = 0
                for other in group[1:]:
                    m = marginalize(other, names)
                    # deterministic scan order so tied witnesses are stable
                    outcomes = list(ref_m) + [k for k in m if k not in ref_m]
                    for outcome in outcomes:
                        a = ref_m.get(outcome, 0)
                        b = m.get(outcome, 0)
                        diff = abs(a - b)
                        if diff > class_worst:
                            class_worst = diff
                        if diff > worst:
                            worst = diff
                            witness = {
                                "inputs": list(names),
                                "assignment": list(key),
                                "treatments": [list(ref.treatment), list(other.treatment)],
                                "outcome": list(outcome) if isinstance(outcome, tuple) else [outcome],
                                "discrepancy": diff,
                            }
                classes.append((names, key, class_worst))
    passed = worst == 0 if is_exact(worst) else worst <= eps
    return MarginalSelectivityReport(
        passed=passed, max_discrepancy=worst, witness=witness, classes=tuple(classes)
    )


def transform_outputs(tables: Iterable[TreatmentTable], relabel) -> list[TreatmentTable]:
    """Push every table through a per-input-point relabeling of outcomes.

    ``relabel(input, input_value, outcome_value)`` need not be injective;
    mass merges under the new labels.  Marginal selectivity survives
    because the relabeling depends only on the input point.
    """
    out = []
    for t in tables:
        design = t.design
        maps = []
        new_axes = []
        for pos, name in enumerate(design.inputs):
            w = t.treatment[pos]
            m = {}
            axis: list = []
            for v in t.axes[pos]:
                nv = relabel(name, w, v)
                m[v] = nv
                if nv not in axis:
                    axis.append(nv)
            maps.append(m)
            new_axes.append(tuple(axis))
        probs: dict[tuple, Num] = {}
        for outcome, p in t.probs.items():
            key = tuple(maps[pos][v] for pos, v in enumerate(outcome))
            if key in probs:
                probs[key] = probs[key] + p
            else:
                probs[key] = p
        out.append(TreatmentTable(design, t.treatment, probs, axes=new_axes))
    return out
