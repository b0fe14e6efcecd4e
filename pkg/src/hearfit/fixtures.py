"""Clinical fixture data: per-subject audiograms and gain sets.

Eight subjects, five bands each. Standard gains are the DSLv5 prescriptive
starting points; personalized gains are the settings the fitting procedure
arrived at. Used by the CLI, the service demo mode, and the UI fixture picker.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class SubjectFixture:
    subject: int
    audiogram_db: tuple[float, ...]
    standard_gains_db: tuple[float, ...]
    personalized_gains_db: tuple[float, ...]


SUBJECTS: tuple[SubjectFixture, ...] = (
    SubjectFixture(1, (10, 15, 25, 45, 45), (4, 2, 12, 30, 28), (10, 5, 21, 21, 22)),
    SubjectFixture(2, (10, 25, 20, 30, 35), (4, 9, 8, 22, 21), (7, 18, 8, 28, 12)),
    SubjectFixture(3, (0, 5, 10, 30, 30), (-3, -5, 1, 22, 19), (-3, 7, 1, 22, 25)),
    SubjectFixture(4, (20, 20, 25, 25, 45), (7, 6, 12, 21, 28), (16, 18, 18, 21, 22)),
    SubjectFixture(5, (5, 0, 5, 30, 40), (4, -4, -2, 22, 24), (10, 5, 10, 25, 33)),
    SubjectFixture(6, (10, 15, 30, 40, 55), (4, 2, 14, 27, 35), (10, -7, 20, 21, 38)),
    SubjectFixture(7, (10, 10, 20, 15, 30), (16, 0, 8, 13, 19), (19, 12, -1, 22, 31)),
    SubjectFixture(8, (0, 30, 60, 40, 30), (0, 11, 30, 27, 19), (-9, 14, 21, 30, 25)),
)


def subject(number: int) -> SubjectFixture:
    for s in SUBJECTS:
        if s.subject == number:
            return s
    raise KeyError(f"no fixture subject {number}")
