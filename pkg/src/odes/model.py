"""Domain types shared by every module, plus the intake validators.

Score arithmetic uses ``fractions.Fraction`` throughout so grading is
exact and reproducible; values are only rounded (half-up, 2 decimals)
when a final score is frozen or rendered.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from fractions import Fraction
from typing import Mapping, Optional, Union

from .errors import (
    BadCorrectIndex,
    BadCount,
    BadMaxRating,
    BadOptions,
    EmptyTitle,
    FieldTooLong,
    InvalidStudentDetails,
    MissingKind,
    NoCategory,
    NonPositiveWeight,
    NoQuestionsRequested,
    UnknownCategory,
)

TIME_FORMAT = "%Y-%m-%d %H:%M:%S"

TITLE_MAX = 500
DESCRIPTION_MAX = 64 * 1024
ANSWER_TEXT_MAX = 65535
MC_OPTION_COUNT = 4
MAX_RATINGS = (10, 100)

# field bounds of the results table, enforced at intake
FIRST_NAME_MAX = 50
SECOND_NAME_MAX = 50
AM_MAX = 10
ETOS_SPOUDON_MAX = 20
TMIMA_MAX = 100


class QuestionKind(str, Enum):
    MULTIPLE_CHOICE = "multiple_choice"
    ESSAY = "essay"


class SessionStatus(str, Enum):
    OPEN = "Open"
    FINALIZED = "Finalized"
    CHECKED = "Checked"


#: The only legal lifecycle transitions.
LEGAL_TRANSITIONS = frozenset(
    {
        (SessionStatus.OPEN, SessionStatus.FINALIZED),
        (SessionStatus.FINALIZED, SessionStatus.CHECKED),
    }
)

#: A stored answer: original option index for MC, free text for essay,
#: None when the question was left blank.
Answer = Union[int, str, None]


def format_timestamp(moment: datetime) -> str:
    return moment.strftime(TIME_FORMAT)


def parse_timestamp(text: str) -> datetime:
    return datetime.strptime(text, TIME_FORMAT)


def parse_points(value) -> Fraction:
    """Convert int/float/str/Fraction to an exact Fraction.

    Floats go through str() so "2.5" stays 5/2 instead of picking up
    binary representation dust.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError("points must be numeric")
    if isinstance(value, (int, str)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(str(value))
    raise ValueError(f"cannot interpret {value!r} as points")


def round_half_up(value: Fraction, places: int = 2) -> Fraction:
    """Round to `places` decimals, ties away from zero."""
    scale = 10**places
    shifted = value * scale
    if shifted >= 0:
        units = (shifted + Fraction(1, 2)).__floor__()
    else:
        units = (shifted - Fraction(1, 2)).__ceil__()
    return Fraction(units, scale)


def format_points(value: Fraction, places: int = 2) -> str:
    """Render a score with a fixed number of decimals ("7.00", "-10.00")."""
    rounded = round_half_up(value, places)
    scale = 10**places
    units = rounded.numerator * (scale // rounded.denominator)
    sign = "-" if units < 0 else ""
    whole, frac = divmod(abs(units), scale)
    return f"{sign}{whole}.{frac:0{places}d}"


def weight_str(value: Fraction) -> str:
    """Render a weight compactly: integer, short decimal, or n/d."""
    if value.denominator == 1:
        return str(value.numerator)
    for places in range(1, 7):
        scaled = value * 10**places
        if scaled.denominator == 1:
            return format_points(value, places)
    return f"{value.numerator}/{value.denominator}"


_SLUG_STRIP = re.compile(r"[^a-z0-9]+")


def slugify(name: str, fallback: str = "item") -> str:
    """Lowercase, collapse non-alphanumeric runs to '-', trim dashes."""
    slug = _SLUG_STRIP.sub("-", name.lower()).strip("-")
    return slug or fallback


@dataclass(frozen=True)
class Category:
    id: int
    name: str
    parent: Optional[int]
    slug: str


@dataclass(frozen=True)
class Question:
    """A bank item; ``id`` and ``created_at`` are unset on drafts."""

    title: str
    kind: Optional[QuestionKind]
    categories: frozenset[int]
    description: str = ""
    options: Optional[tuple[str, ...]] = None
    correct_index: Optional[int] = None
    published: bool = False
    id: Optional[int] = None
    created_at: Optional[datetime] = None


@dataclass(frozen=True)
class ExamSpec:
    """Recipe from which per-student exam instances are generated."""

    title: str
    source_category: int
    n_mc: int
    n_essay: int
    w_mc: Fraction = Fraction(1)
    penalty_mc: Fraction = Fraction(0)
    w_essay: Fraction = Fraction(1)
    max_rating: int = 10
    randomize: bool = True
    published: bool = False
    description: str = ""
    slug: Optional[str] = None
    id: Optional[int] = None

    @property
    def raw_max(self) -> Fraction:
        return self.n_mc * self.w_mc + self.n_essay * self.w_essay


@dataclass(frozen=True)
class StudentDetails:
    first_name: str
    second_name: str
    am: str
    etos_spoudon: str = ""
    tmima: str = ""


@dataclass(frozen=True)
class AssignedQuestion:
    """One slot of a session's fixed assignment.

    ``option_permutation`` maps display slot -> original option index;
    present only for multiple choice questions.
    """

    question_id: int
    display_order: int
    option_permutation: Optional[tuple[int, int, int, int]] = None

    def __post_init__(self):
        perm = self.option_permutation
        if perm is not None and sorted(perm) != [0, 1, 2, 3]:
            raise ValueError(f"option_permutation {perm} is not a bijection on 0..3")


@dataclass(frozen=True)
class QuestionSnapshot:
    """Copy of a question's content taken at session start.

    Keeps rendering and the answer key stable against later bank edits.
    """

    question_id: int
    title: str
    description: str
    kind: QuestionKind
    options: Optional[tuple[str, ...]] = None
    correct_index: Optional[int] = None


@dataclass(frozen=True)
class ExamSession:
    """One student's attempt, mirrored into the results table."""

    exam_id: int
    student: StudentDetails
    assignment: tuple[AssignedQuestion, ...]
    questions: Mapping[int, QuestionSnapshot]
    time_started: datetime
    answers: Mapping[int, Answer] = field(default_factory=dict)
    essay_grades: Mapping[int, Fraction] = field(default_factory=dict)
    status: SessionStatus = SessionStatus.OPEN
    time_submitted: Optional[datetime] = None
    successful: bool = False
    final_score: Optional[Fraction] = None
    result_id: Optional[int] = None

    def assigned_ids(self) -> tuple[int, ...]:
        return tuple(a.question_id for a in self.assignment)

    def essay_question_ids(self) -> tuple[int, ...]:
        return tuple(
            a.question_id
            for a in self.assignment
            if self.questions[a.question_id].kind is QuestionKind.ESSAY
        )

    def mc_question_ids(self) -> tuple[int, ...]:
        return tuple(
            a.question_id
            for a in self.assignment
            if self.questions[a.question_id].kind is QuestionKind.MULTIPLE_CHOICE
        )


@dataclass(frozen=True)
class ScoreReport:
    """Raw and normalized scoring breakdown for a session."""

    raw_earned: Fraction
    raw_max: Fraction
    max_rating: int
    normalized: Fraction
    per_question: tuple[tuple[int, Fraction, Fraction], ...]
    missing_essay_grades: tuple[int, ...] = ()


@dataclass(frozen=True)
class QuestionFilter:
    category: Optional[int] = None
    kind: Optional[QuestionKind] = None
    published_only: bool = False


def validate_question(draft: Question) -> Question:
    """Check every Question invariant; return the draft unchanged.

    Idempotent: validating an already-valid question is a no-op.
    """
    title = draft.title or ""
    if not title.strip():
        raise EmptyTitle("question title must not be empty", field="title")
    if len(title) > TITLE_MAX:
        raise FieldTooLong(f"title exceeds {TITLE_MAX} characters", field="title")
    if len(draft.description or "") > DESCRIPTION_MAX:
        raise FieldTooLong(
            f"description exceeds {DESCRIPTION_MAX} characters", field="description"
        )
    if draft.kind is None:
        raise MissingKind("no question type chosen", field="kind")
    if draft.kind is QuestionKind.MULTIPLE_CHOICE:
        options = draft.options
        if options is None or len(options) != MC_OPTION_COUNT:
            raise BadOptions(
                f"multiple choice needs exactly {MC_OPTION_COUNT} options",
                field="options",
            )
        if any(not (opt or "").strip() for opt in options):
            raise BadOptions("option text must not be empty", field="options")
        if any(len(opt) > TITLE_MAX for opt in options):
            raise FieldTooLong(
                f"option text exceeds {TITLE_MAX} characters", field="options"
            )
        if not isinstance(draft.correct_index, int) or not (
            0 <= draft.correct_index < MC_OPTION_COUNT
        ):
            raise BadCorrectIndex(
                f"correct_index must be an integer in [0,{MC_OPTION_COUNT - 1}]",
                field="correct_index",
            )
    else:
        if draft.options:
            raise BadOptions("essay questions carry no options", field="options")
        if draft.correct_index is not None:
            raise BadCorrectIndex(
                "essay questions carry no correct_index", field="correct_index"
            )
    if not draft.categories:
        raise NoCategory("question must belong to at least one category", field="categories")
    return draft


def validate_exam_spec(draft: ExamSpec, category_exists=None) -> ExamSpec:
    """Check every ExamSpec invariant; return the draft unchanged.

    ``category_exists`` is an optional predicate used to verify the
    source category against the bank.
    """
    if not (draft.title or "").strip():
        raise EmptyTitle("exam title must not be empty", field="title")
    if len(draft.title) > TITLE_MAX:
        raise FieldTooLong(f"title exceeds {TITLE_MAX} characters", field="title")
    if len(draft.description or "") > DESCRIPTION_MAX:
        raise FieldTooLong(
            f"description exceeds {DESCRIPTION_MAX} characters", field="description"
        )
    if draft.n_mc < 0:
        raise BadCount("n_mc must be non-negative", field="n_mc")
    if draft.n_essay < 0:
        raise BadCount("n_essay must be non-negative", field="n_essay")
    if draft.n_mc + draft.n_essay < 1:
        raise NoQuestionsRequested("exam must request at least one question")
    if draft.max_rating not in MAX_RATINGS:
        raise BadMaxRating(
            f"max_rating must be one of {MAX_RATINGS}", field="max_rating"
        )
    if draft.n_mc > 0 and draft.w_mc <= 0:
        raise NonPositiveWeight("w_mc must be positive", field="w_mc")
    if draft.n_essay > 0 and draft.w_essay <= 0:
        raise NonPositiveWeight("w_essay must be positive", field="w_essay")
    if draft.penalty_mc < 0:
        raise NonPositiveWeight("penalty_mc must be >= 0", field="penalty_mc")
    if category_exists is not None and not category_exists(draft.source_category):
        raise UnknownCategory(f"category {draft.source_category} does not exist")
    return draft


def validate_student_details(details: StudentDetails) -> StudentDetails:
    """Enforce the identity-field bounds of the results table."""
    bounds = (
        ("first_name", details.first_name, FIRST_NAME_MAX, True),
        ("second_name", details.second_name, SECOND_NAME_MAX, True),
        ("am", details.am, AM_MAX, True),
        ("etos_spoudon", details.etos_spoudon, ETOS_SPOUDON_MAX, False),
        ("tmima", details.tmima, TMIMA_MAX, False),
    )
    for name, value, limit, required in bounds:
        value = value or ""
        if required and not value.strip():
            raise InvalidStudentDetails(f"{name} must not be empty", field=name)
        if len(value) > limit:
            raise InvalidStudentDetails(
                f"{name} exceeds {limit} characters", field=name
            )
    return details
