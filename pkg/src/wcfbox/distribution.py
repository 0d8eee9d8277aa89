"""Finite probability distributions over labelled transcripts."""
from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .errors import DomainMismatch
from .fractions_io import fmt


class Distribution:
    """Map from outcome tuples (aligned with ``labels``) to probabilities.

    Probabilities are Fractions for classical systems and floats once a
    quantum measurement with irrational amplitudes is involved.
    """

    def __init__(self, labels: Sequence[str], probs: Mapping[tuple, object]):
        self.labels = tuple(labels)
        self.probs = {tuple(k): v for k, v in sorted(probs.items()) if v != 0}
        for k in self.probs:
            if len(k) != len(self.labels):
                raise ValueError(f"outcome {k} does not match labels {self.labels}")

    @classmethod
    def point(cls, labels, outcome) -> "Distribution":
        return cls(labels, {tuple(outcome): Fraction(1)})

    @classmethod
    def from_weights(cls, labels, weights: Mapping[tuple, object]) -> "Distribution":
        total = sum(weights.values())
        return cls(labels, {k: v / total for k, v in weights.items()})

    @property
    def exact(self) -> bool:
        return all(isinstance(v, (Fraction, int)) for v in self.probs.values())

    @property
    def support(self) -> list:
        return list(self.probs)

    def total(self):
        return sum(self.probs.values(), Fraction(0))

    def __getitem__(self, outcome) -> object:
        if not isinstance(outcome, tuple):
            outcome = (outcome,)
        return self.probs.get(outcome, Fraction(0))

    def prob(self, pred: Callable[[dict], bool] | None = None, **fixed) -> object:
        total = Fraction(0)
        for k, v in self.probs.items():
            row = dict(zip(self.labels, k))
            if all(row[name] == val for name, val in fixed.items()) and (pred is None or pred(row)):
                total += v
        return total

    def p(self, assignment: Mapping[str, int]) -> object:
        idx = [self.labels.index(n) for n in assignment]
        vals = list(assignment.values())
        return sum((v for k, v in self.probs.items() if all(k[i] == x for i, x in zip(idx, vals))),
                   Fraction(0))

    def marginal(self, labels: Iterable[str]) -> "Distribution":
        labels = tuple(labels)
        idx = [self.labels.index(n) for n in labels]
        out: dict = {}
        for k, v in self.probs.items():
            key = tuple(k[i] for i in idx)
            out[key] = out.get(key, 0) + v
        return Distribution(labels, out)

    def condition(self, assignment: Mapping[str, int]) -> "Distribution | None":
        """Conditional distribution; None when the event has probability zero."""
        idx = [self.labels.index(n) for n in assignment]
        vals = list(assignment.values())
        sel = {k: v for k, v in self.probs.items() if all(k[i] == x for i, x in zip(idx, vals))}
        mass = sum(sel.values(), Fraction(0))
        if mass == 0:
            return None
        return Distribution(self.labels, {k: v / mass for k, v in sel.items()})

    def relabel(self, mapping: Mapping[str, str]) -> "Distribution":
        return Distribution([mapping.get(n, n) for n in self.labels], self.probs)

    def close_to(self, other: "Distribution", tol: float = 1e-12) -> bool:
        return float(tv_distance(self, other)) <= tol

    def __eq__(self, other):
        return isinstance(other, Distribution) and self.labels == other.labels and self.probs == other.probs

    def __repr__(self):
        body = ", ".join(f"{k}: {fmt(v)}" for k, v in self.probs.items())
        return f"Distribution({list(self.labels)}, {{{body}}})"

    def to_json(self) -> dict:
        return {"labels": list(self.labels),
                "probs": [{"outcome": list(k), "p": fmt(v)} for k, v in self.probs.items()]}


def tv_distance(d1: Distribution, d2: Distribution):
    if d1.labels != d2.labels:
        if set(d1.labels) == set(d2.labels):
            d2 = d2.marginal(d1.labels)
        else:
            raise DomainMismatch(f"{d1.labels} vs {d2.labels}")
    keys = set(d1.probs) | set(d2.probs)
    return sum((abs(d1[k] - d2[k]) for k in keys), Fraction(0)) / 2
