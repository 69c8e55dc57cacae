"""Exception types shared by every module.

Each error carries a stable machine-readable ``code`` and, for intake
errors, the offending ``field``. The HTTP layer maps the four base
classes to status codes (ValidationFailure -> 400, NotFound -> 404,
Conflict -> 409, Unauthorized -> 401, Forbidden -> 403).
"""

from __future__ import annotations


class OdesError(Exception):
    code = "error"

    def __init__(self, message: str = "", *, field: str | None = None):
        super().__init__(message or self.code)
        self.message = message or self.code
        self.field = field


class ValidationFailure(OdesError):
    """Rejected input."""

    code = "validation"


class NotFound(OdesError):
    """Referenced entity does not exist."""

    code = "not_found"


class Conflict(OdesError):
    """Operation is incompatible with current state."""

    code = "conflict"


class Unauthorized(OdesError):
    """Missing or unrecognized credential."""

    code = "unauthorized"


class Forbidden(OdesError):
    """Credential recognized but not allowed here."""

    code = "forbidden"


# --- question / exam validation -------------------------------------------

class EmptyTitle(ValidationFailure):
    code = "empty_title"


class MissingKind(ValidationFailure):
    code = "missing_kind"


class BadOptions(ValidationFailure):
    code = "bad_options"


class BadCorrectIndex(ValidationFailure):
    code = "bad_correct_index"


class NoCategory(ValidationFailure):
    code = "no_category"


class NoQuestionsRequested(ValidationFailure):
    code = "no_questions_requested"


class BadCount(ValidationFailure):
    code = "bad_count"


class BadMaxRating(ValidationFailure):
    code = "bad_max_rating"


class NonPositiveWeight(ValidationFailure):
    code = "non_positive_weight"


class InvalidStudentDetails(ValidationFailure):
    code = "invalid_student_details"


class EmptyName(ValidationFailure):
    code = "empty_name"


class FieldTooLong(ValidationFailure):
    code = "field_too_long"


class AnswerTypeMismatch(ValidationFailure):
    code = "answer_type_mismatch"


class UnknownAssignedQuestion(ValidationFailure):
    code = "unknown_assigned_question"


class PointsOutOfRange(ValidationFailure):
    code = "points_out_of_range"


class NotAnEssay(ValidationFailure):
    code = "not_an_essay"


class NotMultipleChoice(ValidationFailure):
    code = "not_multiple_choice"


class MalformedEscape(ValidationFailure):
    code = "malformed_escape"


class BadConfig(ValidationFailure):
    code = "bad_config"


class AddressInUse(OdesError):
    code = "address_in_use"


class StorageUnavailable(OdesError):
    code = "storage_unavailable"


# --- unknown references -----------------------------------------------------

class UnknownCategory(NotFound):
    code = "unknown_category"


class UnknownParent(NotFound):
    code = "unknown_parent"


class UnknownQuestion(NotFound):
    code = "unknown_question"


class UnknownExam(NotFound):
    code = "unknown_exam"


class UnknownResult(NotFound):
    code = "unknown_result"


class UnknownTeacher(NotFound):
    code = "unknown_teacher"


# --- state conflicts ---------------------------------------------------------

class CycleDetected(Conflict):
    code = "cycle_detected"


class CategoryInUse(Conflict):
    code = "category_in_use"


class QuestionInUse(Conflict):
    code = "question_in_use"


class DuplicateSlug(Conflict):
    code = "duplicate_slug"


class ExamNotPublished(Conflict):
    code = "exam_not_published"


class SessionNotOpen(Conflict):
    code = "session_not_open"


class AlreadyFinalized(Conflict):
    code = "already_finalized"


class WrongStatus(Conflict):
    code = "wrong_status"


class InsufficientQuestions(Conflict):
    code = "insufficient_questions"

    def __init__(self, kind, available: int, requested: int):
        self.kind = kind
        self.available = available
        self.requested = requested
        super().__init__(
            f"need {requested} {getattr(kind, 'value', kind)} questions, "
            f"only {available} available"
        )


class MissingEssayGrades(Conflict):
    code = "missing_essay_grades"

    def __init__(self, missing):
        self.missing = tuple(missing)
        super().__init__(
            "ungraded essay questions: " + ", ".join(str(q) for q in self.missing)
        )


class InvalidToken(Unauthorized):
    code = "invalid_token"
