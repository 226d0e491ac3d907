"""The six lexical semantic relations and their reverse/symmetric structure."""

from __future__ import annotations

from enum import Enum


class Relation(str, Enum):
    """Semantic relation label.

    HYP/HPO and HOL/MER form reverse pairs; ANT and SYN are their own
    reverses (symmetric relations).
    """

    HYP = "HYP"  # hypernymy: relatum is more general ("robin" -> "bird")
    HPO = "HPO"  # hyponymy: relatum is more specific
    HOL = "HOL"  # holonymy: relatum is the whole ("wall" -> "building")
    MER = "MER"  # meronymy: relatum is a part
    ANT = "ANT"  # antonymy
    SYN = "SYN"  # synonymy

    @property
    def reverse(self) -> "Relation":
        return _REVERSE[self]

    @property
    def symmetric(self) -> bool:
        return _REVERSE[self] is self

    def __str__(self) -> str:
        return self.value


_REVERSE = {
    Relation.HYP: Relation.HPO,
    Relation.HPO: Relation.HYP,
    Relation.HOL: Relation.MER,
    Relation.MER: Relation.HOL,
    Relation.ANT: Relation.ANT,
    Relation.SYN: Relation.SYN,
}

#: Canonical relation order used for matrices and reports.
RELATIONS: tuple[Relation, ...] = (
    Relation.HYP,
    Relation.HPO,
    Relation.HOL,
    Relation.MER,
    Relation.ANT,
    Relation.SYN,
)

#: Relations with a symmetry score (the symmetric ones).
SYMMETRIC_RELATIONS: tuple[Relation, ...] = (Relation.ANT, Relation.SYN)

#: Relations retained for the prototypicality evaluation.
PROTOTYPICALITY_RELATIONS: tuple[Relation, ...] = (
    Relation.HYP,
    Relation.HOL,
    Relation.ANT,
    Relation.SYN,
)

#: All ordered pairs (r, s) with r != s; 30 in total.
ORDERED_PAIRS: tuple[tuple[Relation, Relation], ...] = tuple(
    (r, s) for r in RELATIONS for s in RELATIONS if r is not s
)
