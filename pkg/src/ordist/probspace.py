"""Finite designs, treatments, and per-treatment joint output tables.

A *design* fixes an ordered family of deterministic inputs, the finite value
set of each input, and the set of allowable treatments (one value per
input).  A treatment set of ``None`` (the "full" marker in system files)
means every combination of input values is allowable; it is expanded
lazily.  For each allowable treatment the system holds a
:class:`TreatmentTable`: the joint distribution of the outputs observed
under that treatment, one output per input.

Outcome values are opaque labels.  Any numeric meaning is introduced
downstream through rank assignments or explicit embeddings.  All values are
immutable after construction and every operation here is a pure function,
so evaluation is safe to run in parallel across tables.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

from .arith import EPS_SUM, Num, is_exact, regime_of
from .errors import SameInput, SystemFormatError, UnknownInput

MAX_EXPLICIT_TREATMENTS = 100_000


class InputPoint(NamedTuple):
    """A pair (input identifier, input value)."""

    input: str
    value: object

    def as_json(self):
        return [self.input, self.value]


class Design:
    """Inputs with their value sets plus the allowable treatment set.

    ``treatments=None`` means all combinations are allowable (full
    factorial); explicit treatment sets are capped at
    MAX_EXPLICIT_TREATMENTS and are stored in the order given.
    """

    __slots__ = ("inputs", "values", "treatments", "_index", "_sorted_treatments")

    def __init__(self, inputs, values, treatments=None):
        self.inputs = tuple(inputs)
        if not self.inputs:
            raise SystemFormatError("design needs at least one input")
        if len(set(self.inputs)) != len(self.inputs):
            raise SystemFormatError("duplicate input identifiers")
        vals = {}
        for name in self.inputs:
            try:
                vs = tuple(values[name])
            except KeyError:
                raise SystemFormatError(f"no value set for input {name!r}") from None
            if not vs:
                raise SystemFormatError(f"empty value set for input {name!r}")
            if len(set(vs)) != len(vs):
                raise SystemFormatError(f"duplicate values for input {name!r}")
            vals[name] = vs
        self.values = vals
        self._index = {name: i for i, name in enumerate(self.inputs)}
        if treatments is None or treatments == "full":
            self.treatments = None
        else:
            ts = tuple(tuple(t) for t in treatments)
            if not ts:
                raise SystemFormatError("treatment set is empty")
            if len(ts) > MAX_EXPLICIT_TREATMENTS:
                raise SystemFormatError(
                    f"{len(ts)} treatments exceed the cap of {MAX_EXPLICIT_TREATMENTS}"
                )
            seen = set()
            for t in ts:
                if len(t) != len(self.inputs):
                    raise SystemFormatError(f"treatment {t!r} has wrong arity")
                for name, w in zip(self.inputs, t):
                    if w not in vals[name]:
                        raise SystemFormatError(
                            f"treatment {t!r} assigns unknown value {w!r} to {name!r}"
                        )
                if t in seen:
                    raise SystemFormatError(f"duplicate treatment {t!r}")
                seen.add(t)
            self.treatments = ts
        self._sorted_treatments = None

    @property
    def is_full(self) -> bool:
        return self.treatments is None

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownInput(f"unknown input {name!r}") from None

    def iter_treatments(self):
        if self.treatments is not None:
            yield from self.treatments
        else:
            yield from itertools.product(*(self.values[n] for n in self.inputs))

    def treatment_count(self) -> int:
        if self.treatments is not None:
            return len(self.treatments)
        n = 1
        for name in self.inputs:
            n *= len(self.values[name])
        return n

    def points(self) -> tuple[InputPoint, ...]:
        """All input points, inputs in design order, values in declared order."""
        return tuple(
            InputPoint(name, w) for name in self.inputs for w in self.values[name]
        )

    def value_of(self, treatment: tuple, name: str):
        return treatment[self.index(name)]

    def _value_index_key(self, treatment: tuple) -> tuple[int, ...]:
        return tuple(
            self.values[name].index(w) for name, w in zip(self.inputs, treatment)
        )

    def cover(self, points: Iterable[InputPoint]) -> Optional[tuple]:
        """Lexicographically first allowable treatment containing the points.

        Returns None when no treatment contains them (in particular when two
        points assign different values to one input).
        """
        assignment = {}
        for p in points:
            if p.input not in self._index:
                raise UnknownInput(f"unknown input {p.input!r}")
            if p.value not in self.values[p.input]:
                return None
            if assignment.get(p.input, p.value) != p.value:
                return None
            assignment[p.input] = p.value
        if self.is_full:
            return tuple(
                assignment.get(name, self.values[name][0]) for name in self.inputs
            )
        if self._sorted_treatments is None:
            self._sorted_treatments = sorted(
                self.treatments, key=self._value_index_key
            )
        for t in self._sorted_treatments:
            if all(t[self._index[n]] == w for n, w in assignment.items()):
                return t
        return None


@dataclass(frozen=True, eq=False)
class OutcomeSpace:
    """Outcome value sets per input point.

    Under marginal selectivity the value set of the output for input λ
    depends only on the input point (λ, w), so one axis per point suffices.
    The common case is one axis per input, shared by all of its points.
    """

    values: Mapping[InputPoint, tuple]

    @classmethod
    def per_input(cls, design: Design, values: Mapping[str, Sequence]) -> "OutcomeSpace":
        out = {}
        for name in design.inputs:
            vs = tuple(values[name])
            if not vs:
                raise SystemFormatError(f"empty outcome set for input {name!r}")
            for w in design.values[name]:
                out[InputPoint(name, w)] = vs
        return cls(out)

    @classmethod
    def from_tables(cls, design: Design, tables: Iterable["TreatmentTable"]) -> "OutcomeSpace":
        """Collect per-point axes from tables; axis order comes from the
        first table mentioning the point, later tables must agree as sets."""
        out: dict[InputPoint, tuple] = {}
        for t in tables:
            for pos, name in enumerate(design.inputs):
                pt = InputPoint(name, t.treatment[pos])
                axis = t.axes[pos]
                if pt not in out:
                    out[pt] = axis
                elif set(out[pt]) != set(axis):
                    raise SystemFormatError(
                        f"outcome sets for point {pt} disagree across tables"
                    )
        return cls(out)

    def axis(self, point: InputPoint) -> tuple:
        try:
            return self.values[point]
        except KeyError:
            raise SystemFormatError(f"no outcome set for point {point}") from None


class TreatmentTable:
    """Joint distribution of all outputs under one treatment.

    ``probs`` maps full outcome vectors (one value per input, in design
    order) to probabilities.  Missing vectors are filled with zero so the
    table is dense over the product of its axes.  Numeric validity (sums,
    signs) is checked by :func:`validate_system`, not at construction.
    """

    __slots__ = ("design", "treatment", "axes", "probs")

    def __init__(self, design: Design, treatment, probs: Mapping[tuple, Num], axes=None):
        self.design = design
        self.treatment = tuple(treatment)
        if len(self.treatment) != len(design.inputs):
            raise SystemFormatError(f"treatment {self.treatment!r} has wrong arity")
        for name, w in zip(design.inputs, self.treatment):
            if w not in design.values[name]:
                raise SystemFormatError(
                    f"treatment value {w!r} not allowed for input {name!r}"
                )
        probs = {tuple(k): v for k, v in probs.items()}
        if axes is None:
            seen: list[list] = [[] for _ in design.inputs]
            for outcome in probs:
                if len(outcome) != len(design.inputs):
                    raise SystemFormatError(f"outcome {outcome!r} has wrong arity")
                for pos, v in enumerate(outcome):
                    if v not in seen[pos]:
                        seen[pos].append(v)
            axes = tuple(tuple(vs) for vs in seen)
        else:
            axes = tuple(tuple(a) for a in axes)
            if len(axes) != len(design.inputs):
                raise SystemFormatError("one outcome axis per input required")
        for a in axes:
            if not a:
                raise SystemFormatError("empty outcome axis")
            if len(set(a)) != len(a):
                raise SystemFormatError("duplicate outcome values on one axis")
        zero = 0.0 if any(isinstance(v, float) for v in probs.values()) else Fraction(0)
        dense = {}
        for outcome in itertools.product(*axes):
            dense[outcome] = probs.pop(outcome, zero)
        if probs:
            bad = next(iter(probs))
            raise SystemFormatError(f"outcome {bad!r} outside the declared axes")
        self.axes = axes
        self.probs = dense

    def axis(self, name: str) -> tuple:
        return self.axes[self.design.index(name)]

    def prob(self, outcome: tuple) -> Num:
        return self.probs[tuple(outcome)]

    def total(self) -> Num:
        return sum(self.probs.values())

    def univariate(self, name: str) -> dict:
        """Marginal distribution of the single output for input `name`."""
        return marginalize(self, (name,))

    def point(self, name: str) -> InputPoint:
        return InputPoint(name, self.treatment[self.design.index(name)])

    def regime(self) -> str:
        return regime_of(self.probs.values())


@dataclass(frozen=True, eq=False)
class BivariateMarginal:
    """Ordered-pair marginal of two outputs, row variable first.

    The order of the axes matters: the distance functions evaluated on this
    are generally asymmetric.  ``row_point``/``col_point`` carry the input
    points the axes belong to when known, enabling per-point ranks,
    partitions and embeddings.
    """

    row_values: tuple
    col_values: tuple
    probs: tuple[tuple[Num, ...], ...]
    row_point: Optional[InputPoint] = None
    col_point: Optional[InputPoint] = None

    def cells(self):
        for i, a in enumerate(self.row_values):
            row = self.probs[i]
            for j, b in enumerate(self.col_values):
                yield a, b, row[j]

    def total(self) -> Num:
        return sum(sum(row) for row in self.probs)

    def transpose(self) -> "BivariateMarginal":
        probs = tuple(
            tuple(self.probs[i][j] for i in range(len(self.row_values)))
            for j in range(len(self.col_values))
        )
        return BivariateMarginal(
            self.col_values, self.row_values, probs, self.col_point, self.row_point
        )

    def col_marginal(self) -> dict:
        out = {}
        for j, b in enumerate(self.col_values):
            out[b] = sum(self.probs[i][j] for i in range(len(self.row_values)))
        return out


@dataclass(frozen=True, eq=False)
class JointDist:
    """Free-standing joint distribution over any number of axes.

    Used for trivariate constructions (triangle checks, separation
    distance) that are not tied to a design.  Missing cells count as zero.
    """

    axes: tuple[tuple, ...]
    probs: Mapping[tuple, Num]

    def total(self) -> Num:
        return sum(self.probs.values())

    def marginal(self, keep: Sequence[int]) -> "JointDist":
        keep = tuple(keep)
        out: dict[tuple, Num] = {}
        for outcome, p in self.probs.items():
            key = tuple(outcome[i] for i in keep)
            out[key] = out.get(key, p * 0) + p
        return JointDist(tuple(self.axes[i] for i in keep), out)

    def bivariate(self, i: int, j: int) -> BivariateMarginal:
        if i == j:
            raise SameInput("need two distinct axes")
        pair = self.marginal((i, j)).probs
        rows, cols = self.axes[i], self.axes[j]
        zero = Fraction(0) if regime_of(self.probs.values()) == "rational" else 0.0
        probs = tuple(
            tuple(pair.get((a, b), zero) for b in cols) for a in rows
        )
        return BivariateMarginal(rows, cols, probs)


def diagonal_coupling(values: Sequence, dist: Mapping, point: Optional[InputPoint] = None) -> BivariateMarginal:
    """Couple a variable with itself: all mass on the diagonal.

    This is the joint distribution of (A, A); every pseudo-quasi-metric
    must evaluate to zero on it.
    """
    values = tuple(values)
    zero = Fraction(0) if regime_of(dist.values()) == "rational" else 0.0
    probs = tuple(
        tuple(dist.get(a, zero) if a == b else zero for b in values) for a in values
    )
    return BivariateMarginal(values, values, probs, point, point)


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    message: str
    treatment: Optional[tuple] = None

    def as_json(self):
        out = {"code": self.code, "message": self.message}
        if self.treatment is not None:
            out["treatment"] = list(self.treatment)
        return out


@dataclass(frozen=True, eq=False)
class ValidationReport:
    ok: bool
    issues: tuple[ValidationIssue, ...]
    regime: str
    sum_errors: Mapping[tuple, Num]

    def raise_if_invalid(self):
        if not self.ok:
            lines = "; ".join(i.message for i in self.issues)
            raise SystemFormatError(f"invalid system: {lines}")

    def as_json(self):
        return {
            "ok": self.ok,
            "regime": self.regime,
            "issues": [i.as_json() for i in self.issues],
        }


def validate_system(design: Design, tables: Iterable[TreatmentTable], eps_sum: float = EPS_SUM) -> ValidationReport:
    """Check tables against the design: one table per treatment, probabilities
    nonnegative and summing to one (exactly in the rational regime), and
    outcome value sets consistent across tables sharing an input point."""
    tables = list(tables)
    issues: list[ValidationIssue] = []
    sum_errors: dict[tuple, Num] = {}
    by_treatment: dict[tuple, TreatmentTable] = {}
    for t in tables:
        if t.treatment in by_treatment:
            issues.append(
                ValidationIssue("DuplicateTable", f"two tables for treatment {t.treatment!r}", t.treatment)
            )
        by_treatment[t.treatment] = t

    wanted = set(design.iter_treatments()) if design.treatment_count() <= MAX_EXPLICIT_TREATMENTS else None
    if wanted is not None:
        for t in sorted(wanted - set(by_treatment), key=design._value_index_key):
            issues.append(
                ValidationIssue("MissingTreatment", f"no table for treatment {t!r}", t)
            )
        for t in by_treatment:
            if t not in wanted:
                issues.append(
                    ValidationIssue("ExtraTreatment", f"table for non-allowable treatment {t!r}", t)
                )

    exact = all(t.regime() == "rational" for t in tables)
    for t in tables:
        for outcome, p in t.probs.items():
            if p < 0:
                issues.append(
                    ValidationIssue(
                        "NegativeProbability",
                        f"negative probability {p} at {outcome!r} in treatment {t.treatment!r}",
                        t.treatment,
                    )
                )
                break
        total = t.total()
        delta = total - 1
        sum_errors[t.treatment] = delta
        bad = delta != 0 if is_exact(delta) else abs(delta) > eps_sum
        if bad:
            sign = "+" if delta >= 0 else ""
            issues.append(
                ValidationIssue(
                    "SumNotOne",
                    f"probabilities in treatment {t.treatment!r} sum to 1{sign}{delta}",
                    t.treatment,
                )
            )

    # outcome-set consistency per input point across tables
    seen_axes: dict[InputPoint, tuple] = {}
    for t in tables:
        for pos, name in enumerate(design.inputs):
            pt = InputPoint(name, t.treatment[pos])
            if pt not in seen_axes:
                seen_axes[pt] = t.axes[pos]
            elif set(seen_axes[pt]) != set(t.axes[pos]):
                issues.append(
                    ValidationIssue(
                        "ValueSetMismatch",
                        f"outcome sets for point {pt} disagree across tables",
                        t.treatment,
                    )
                )

    return ValidationReport(
        ok=not issues,
        issues=tuple(issues),
        regime="rational" if exact else "float",
        sum_errors=sum_errors,
    )


def marginalize(table: TreatmentTable, subset: Iterable[str]) -> dict:
    """Sum the table down to the outputs of `subset` (kept in design order).

    Keys of the result are outcome vectors over the subset; marginalizing
    over all inputs returns a dict equal to the full table.
    """
    names = set(subset)
    for name in names:
        if name not in table.design._index:
            raise UnknownInput(f"unknown input {name!r}")
    keep = [i for i, name in enumerate(table.design.inputs) if name in names]
    out: dict[tuple, Num] = {}
    for outcome, p in table.probs.items():
        key = tuple(outcome[i] for i in keep)
        if key in out:
            out[key] = out[key] + p
        else:
            out[key] = p
    if len(keep) == 1:
        return {k[0]: v for k, v in out.items()}
    return out


def bivariate(table: TreatmentTable, first: str, second: str) -> BivariateMarginal:
    """Ordered-pair marginal of the outputs for two distinct inputs.

    The argument order is preserved; swapping the inputs transposes the
    matrix, which matters because the distances are asymmetric.
    """
    if first == second:
        raise SameInput(f"bivariate marginal needs two distinct inputs, got {first!r} twice")
    i, j = table.design.index(first), table.design.index(second)
    pair = marginalize(table, (first, second))
    rows, cols = table.axes[i], table.axes[j]
    if i < j:
        get = lambda a, b: pair[(a, b)]
    else:
        get = lambda a, b: pair[(b, a)]
    probs = tuple(tuple(get(a, b) for b in cols) for a in rows)
    return BivariateMarginal(rows, cols, probs, table.point(first), table.point(second))
