"""Scoring and the Open -> Finalized -> Checked lifecycle.

All operations are pure: they take a session value and return an
updated copy (the store's ``update_session`` applies them atomically).
Multiple choice grading reads the answer-key snapshot taken at session
start, never the live bank, so later edits cannot move a grade.

Scoring model: each correct MC answer earns the MC weight, each wrong
one subtracts the exam's penalty (0 by default), blanks earn nothing;
essays earn the teacher's grade, bounded to [0, essay weight]. The raw
total is divided by the raw maximum and scaled to the exam's maximum
rating (10 or 100), which may come out negative under penalties.
"""

from __future__ import annotations

from dataclasses import replace
from datetime import datetime
from fractions import Fraction
from typing import Mapping

from .errors import (
    AlreadyFinalized,
    AnswerTypeMismatch,
    FieldTooLong,
    MissingEssayGrades,
    NotAnEssay,
    PointsOutOfRange,
    UnknownAssignedQuestion,
    WrongStatus,
)
from .model import (
    ANSWER_TEXT_MAX,
    Answer,
    ExamSession,
    ExamSpec,
    QuestionKind,
    ScoreReport,
    SessionStatus,
    parse_points,
    round_half_up,
)


def _require_status(session: ExamSession, *allowed: SessionStatus) -> None:
    if session.status not in allowed:
        raise WrongStatus(
            f"session {session.result_id} is {session.status.value}, "
            f"needs {' or '.join(s.value for s in allowed)}"
        )


def submit_answers(
    session: ExamSession,
    spec: ExamSpec,
    answers: Mapping[int, Answer],
    now: datetime,
) -> ExamSession:
    """Store the student's answers and finalize the session.

    Unanswered assigned questions are recorded as blank. MC answers are
    original option indices. When the assignment has no essay questions
    grading completes immediately and the session lands on Checked.
    """
    if session.status is not SessionStatus.OPEN:
        raise AlreadyFinalized(
            f"session {session.result_id} was already submitted"
        )
    assigned = set(session.assigned_ids())
    for question_id, answer in answers.items():
        if question_id not in assigned:
            raise UnknownAssignedQuestion(
                f"question {question_id} is not part of this session"
            )
        snap = session.questions[question_id]
        if answer is None:
            continue
        if snap.kind is QuestionKind.MULTIPLE_CHOICE:
            if not isinstance(answer, int) or isinstance(answer, bool):
                raise AnswerTypeMismatch(
                    f"question {question_id} takes an option index",
                    field=str(question_id),
                )
            if not 0 <= answer <= 3:
                raise AnswerTypeMismatch(
                    f"option index {answer} out of range for question {question_id}",
                    field=str(question_id),
                )
        else:
            if not isinstance(answer, str):
                raise AnswerTypeMismatch(
                    f"question {question_id} takes answer text",
                    field=str(question_id),
                )
            if len(answer.encode("utf-8")) > ANSWER_TEXT_MAX:
                raise FieldTooLong(
                    f"answer for question {question_id} exceeds {ANSWER_TEXT_MAX} bytes",
                    field=str(question_id),
                )
    full_answers: dict[int, Answer] = {
        qid: answers.get(qid) for qid in session.assigned_ids()
    }
    updated = replace(
        session,
        answers=full_answers,
        status=SessionStatus.FINALIZED,
        time_submitted=now.replace(microsecond=0),
    )
    if not session.essay_question_ids():
        updated = finalize_grading(updated, spec)
    return updated


def grade_mc(session: ExamSession, spec: ExamSpec) -> Fraction:
    """Raw multiple-choice points against the session's answer key."""
    _require_status(session, SessionStatus.FINALIZED, SessionStatus.CHECKED)
    total = Fraction(0)
    for question_id in session.mc_question_ids():
        answer = session.answers.get(question_id)
        if answer is None:
            continue
        if answer == session.questions[question_id].correct_index:
            total += spec.w_mc
        else:
            total -= spec.penalty_mc
    return total


def grade_essay(
    session: ExamSession, spec: ExamSpec, question_id: int, points
) -> ExamSession:
    """Record a teacher's grade for one essay; overwrites until finalized."""
    _require_status(session, SessionStatus.FINALIZED)
    if question_id not in session.assigned_ids():
        raise UnknownAssignedQuestion(
            f"question {question_id} is not part of this session"
        )
    if session.questions[question_id].kind is not QuestionKind.ESSAY:
        raise NotAnEssay(f"question {question_id} is not an essay")
    points = parse_points(points)
    if not 0 <= points <= spec.w_essay:
        raise PointsOutOfRange(
            f"essay points must lie in [0, {spec.w_essay}]", field=str(question_id)
        )
    grades = dict(session.essay_grades)
    grades[question_id] = points
    return replace(session, essay_grades=grades)


def compute_score(
    session: ExamSession, spec: ExamSpec, preview: bool = False
) -> ScoreReport:
    """Full scoring breakdown; exact arithmetic, no rounding.

    In preview mode missing essay grades count as 0 and are flagged in
    the report instead of failing.
    """
    _require_status(session, SessionStatus.FINALIZED, SessionStatus.CHECKED)
    missing = tuple(
        qid for qid in session.essay_question_ids() if qid not in session.essay_grades
    )
    if missing and not preview:
        raise MissingEssayGrades(missing)
    per_question: list[tuple[int, Fraction, Fraction]] = []
    raw_earned = Fraction(0)
    for assigned in session.assignment:
        qid = assigned.question_id
        snap = session.questions[qid]
        if snap.kind is QuestionKind.MULTIPLE_CHOICE:
            answer = session.answers.get(qid)
            if answer is None:
                awarded = Fraction(0)
            elif answer == snap.correct_index:
                awarded = spec.w_mc
            else:
                awarded = -spec.penalty_mc
            per_question.append((qid, awarded, spec.w_mc))
        else:
            awarded = session.essay_grades.get(qid, Fraction(0))
            per_question.append((qid, awarded, spec.w_essay))
        raw_earned += awarded
    raw_max = spec.raw_max
    return ScoreReport(
        raw_earned=raw_earned,
        raw_max=raw_max,
        max_rating=spec.max_rating,
        normalized=raw_earned / raw_max * spec.max_rating,
        per_question=tuple(per_question),
        missing_essay_grades=missing,
    )


def finalize_grading(session: ExamSession, spec: ExamSpec) -> ExamSession:
    """Freeze the final score and move the session to Checked."""
    _require_status(session, SessionStatus.FINALIZED)
    report = compute_score(session, spec)
    return replace(
        session,
        status=SessionStatus.CHECKED,
        final_score=round_half_up(report.normalized),
    )


def mark_successful(session: ExamSession, flag: bool) -> ExamSession:
    """Toggle the successful-participant flag on a Checked session."""
    _require_status(session, SessionStatus.CHECKED)
    return replace(session, successful=bool(flag))
