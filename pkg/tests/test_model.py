from datetime import datetime
from fractions import Fraction

import pytest

from odes import errors, model
from odes.model import (
    AssignedQuestion,
    ExamSpec,
    Question,
    QuestionKind,
    SessionStatus,
    StudentDetails,
    format_points,
    parse_points,
    round_half_up,
    slugify,
    validate_exam_spec,
    validate_question,
    validate_student_details,
)


def mc_draft(**overrides) -> Question:
    base = dict(
        title="Which layer routes packets?",
        kind=QuestionKind.MULTIPLE_CHOICE,
        options=("Physical", "Data link", "Network", "Transport"),
        correct_index=2,
        categories=frozenset({1}),
    )
    base.update(overrides)
    return Question(**base)


class TestValidateQuestion:
    def test_valid_mc_draft_passes(self):
        draft = mc_draft()
        assert validate_question(draft) is draft

    def test_validation_is_idempotent(self):
        draft = mc_draft()
        assert validate_question(validate_question(draft)) == draft

    def test_missing_kind(self):
        with pytest.raises(errors.MissingKind):
            validate_question(mc_draft(kind=None))

    def test_three_options(self):
        with pytest.raises(errors.BadOptions):
            validate_question(mc_draft(options=("a", "b", "c")))

    def test_empty_option_text(self):
        with pytest.raises(errors.BadOptions):
            validate_question(mc_draft(options=("a", "  ", "c", "d")))

    def test_bad_correct_index(self):
        with pytest.raises(errors.BadCorrectIndex):
            validate_question(mc_draft(correct_index=4))
        with pytest.raises(errors.BadCorrectIndex):
            validate_question(mc_draft(correct_index=None))

    def test_no_category(self):
        with pytest.raises(errors.NoCategory):
            validate_question(mc_draft(categories=frozenset()))

    def test_empty_title(self):
        with pytest.raises(errors.EmptyTitle):
            validate_question(mc_draft(title="   "))

    def test_title_too_long(self):
        with pytest.raises(errors.FieldTooLong):
            validate_question(mc_draft(title="x" * (model.TITLE_MAX + 1)))

    def test_essay_with_options_rejected(self):
        draft = Question(
            title="Explain TCP handshakes",
            kind=QuestionKind.ESSAY,
            options=("a", "b", "c", "d"),
            categories=frozenset({1}),
        )
        with pytest.raises(errors.BadOptions):
            validate_question(draft)

    def test_essay_with_correct_index_rejected(self):
        draft = Question(
            title="Explain TCP handshakes",
            kind=QuestionKind.ESSAY,
            correct_index=0,
            categories=frozenset({1}),
        )
        with pytest.raises(errors.BadCorrectIndex):
            validate_question(draft)

    def test_valid_essay(self):
        draft = Question(
            title="Explain TCP handshakes",
            kind=QuestionKind.ESSAY,
            categories=frozenset({1}),
        )
        assert validate_question(draft) is draft


def spec_draft(**overrides) -> ExamSpec:
    base = dict(
        title="Networking basics",
        source_category=1,
        n_mc=4,
        n_essay=1,
        w_mc=Fraction(1),
        w_essay=Fraction(6),
        max_rating=10,
    )
    base.update(overrides)
    return ExamSpec(**base)


class TestValidateExamSpec:
    def test_valid_spec(self):
        draft = spec_draft()
        assert validate_exam_spec(draft) is draft
        assert draft.raw_max == Fraction(10)

    def test_no_questions_requested(self):
        with pytest.raises(errors.NoQuestionsRequested):
            validate_exam_spec(spec_draft(n_mc=0, n_essay=0))

    def test_bad_max_rating(self):
        with pytest.raises(errors.BadMaxRating):
            validate_exam_spec(spec_draft(max_rating=20))

    @pytest.mark.parametrize("rating", [10, 100])
    def test_allowed_ratings(self, rating):
        assert validate_exam_spec(spec_draft(max_rating=rating)).max_rating == rating

    def test_non_positive_weight(self):
        with pytest.raises(errors.NonPositiveWeight):
            validate_exam_spec(spec_draft(w_mc=Fraction(0)))
        with pytest.raises(errors.NonPositiveWeight):
            validate_exam_spec(spec_draft(n_essay=1, w_essay=Fraction(-1)))

    def test_negative_penalty(self):
        with pytest.raises(errors.NonPositiveWeight):
            validate_exam_spec(spec_draft(penalty_mc=Fraction(-1)))

    def test_unknown_category_via_predicate(self):
        with pytest.raises(errors.UnknownCategory):
            validate_exam_spec(spec_draft(), category_exists=lambda _: False)

    def test_negative_count(self):
        with pytest.raises(errors.BadCount):
            validate_exam_spec(spec_draft(n_mc=-1))

    def test_raw_max_positive_for_every_valid_spec(self):
        # normalization is always defined once validation passed
        for n_mc, n_essay in [(1, 0), (0, 1), (3, 2)]:
            draft = spec_draft(n_mc=n_mc, n_essay=n_essay)
            validate_exam_spec(draft)
            assert draft.raw_max > 0


class TestStudentDetails:
    def test_valid(self):
        details = StudentDetails("Anna", "Ioannou", "1234567890", "2", "Informatics")
        assert validate_student_details(details) is details

    @pytest.mark.parametrize("field", ["first_name", "second_name", "am"])
    def test_required_fields(self, field):
        details = StudentDetails("Anna", "Ioannou", "123")
        with pytest.raises(errors.InvalidStudentDetails):
            validate_student_details(
                StudentDetails(**{**details.__dict__, field: "  "})
            )

    def test_am_length_bound(self):
        with pytest.raises(errors.InvalidStudentDetails) as info:
            validate_student_details(StudentDetails("Anna", "Ioannou", "12345678901"))
        assert info.value.field == "am"

    def test_name_length_bound(self):
        with pytest.raises(errors.InvalidStudentDetails):
            validate_student_details(StudentDetails("A" * 51, "Ioannou", "123"))


class TestStatusMachineShape:
    def test_exactly_two_legal_transitions(self):
        assert len(model.LEGAL_TRANSITIONS) == 2

    def test_every_status_reachable(self):
        reachable = {SessionStatus.OPEN}
        while True:
            grown = reachable | {
                dst for src, dst in model.LEGAL_TRANSITIONS if src in reachable
            }
            if grown == reachable:
                break
            reachable = grown
        assert reachable == set(SessionStatus)


class TestAssignedQuestion:
    def test_permutation_must_be_bijection(self):
        with pytest.raises(ValueError):
            AssignedQuestion(question_id=1, display_order=0, option_permutation=(0, 1, 1, 3))

    def test_identity_permutation_accepted(self):
        a = AssignedQuestion(question_id=1, display_order=0, option_permutation=(0, 1, 2, 3))
        assert a.option_permutation == (0, 1, 2, 3)


class TestArithmeticHelpers:
    def test_parse_points_float_is_exact(self):
        assert parse_points(2.5) == Fraction(5, 2)
        assert parse_points("2.5") == Fraction(5, 2)
        assert parse_points(3) == Fraction(3)

    def test_round_half_up_ties_away_from_zero(self):
        assert round_half_up(Fraction("2.005")) == Fraction("2.01")
        assert round_half_up(Fraction("-2.005")) == Fraction("-2.01")
        assert round_half_up(Fraction("2.004")) == Fraction("2.00")

    @pytest.mark.parametrize(
        "value,rendered",
        [
            (Fraction(7), "7.00"),
            (Fraction(-10), "-10.00"),
            (Fraction(25, 4), "6.25"),
            (Fraction(1, 3), "0.33"),
            (Fraction(2, 3), "0.67"),
            (Fraction(0), "0.00"),
        ],
    )
    def test_format_points(self, value, rendered):
        assert format_points(value) == rendered

    def test_timestamp_round_trip(self):
        moment = datetime(2024, 3, 1, 9, 30, 5)
        assert model.parse_timestamp(model.format_timestamp(moment)) == moment
        assert model.format_timestamp(moment) == "2024-03-01 09:30:05"


class TestSlugify:
    @pytest.mark.parametrize(
        "name,slug",
        [
            ("Networks", "networks"),
            ("Computer Networks", "computer-networks"),
            ("  C++ & OOP!  ", "c-oop"),
            ("###", "item"),
        ],
    )
    def test_slugify(self, name, slug):
        assert slugify(name) == slug
