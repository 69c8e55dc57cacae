"""Exam assembly: seeded question selection, option shuffling, session start.

Selection is deterministic for a given (spec, bank snapshot, seed): the
eligible pool is put in canonical id order, Fisher-Yates shuffled, and
walked until the per-kind quotas are filled, so multiple choice and
essay questions mix in the display order while each kind is a uniform
sample without replacement. With randomization off, every student gets
the id-ascending MC block followed by the id-ascending essay block and
identity option order.

The questions chosen for a session are snapshotted into it at start, so
re-reads and later bank edits can never change what a student sees.
"""

from __future__ import annotations

from datetime import datetime
from typing import Optional, Sequence

from .bank import QuestionBank
from .errors import (
    ExamNotPublished,
    InsufficientQuestions,
    NotMultipleChoice,
    SessionNotOpen,
)
from .model import (
    AssignedQuestion,
    ExamSession,
    ExamSpec,
    Question,
    QuestionKind,
    QuestionSnapshot,
    SessionStatus,
    StudentDetails,
    format_timestamp,
    validate_student_details,
)
from .rng import SeededRng, fresh_seed
from .storage import Database

IDENTITY_PERMUTATION = (0, 1, 2, 3)


def shuffle_options(question: Question, rng) -> tuple[int, int, int, int]:
    """Draw a uniform option permutation (display slot -> original index)."""
    if question.kind is not QuestionKind.MULTIPLE_CHOICE:
        raise NotMultipleChoice(
            f"question {question.id} is not multiple choice"
        )
    return rng.permutation(4)


def select_questions(
    spec: ExamSpec,
    mc_pool: Sequence[Question],
    essay_pool: Sequence[Question],
    seed: int | SeededRng,
) -> tuple[AssignedQuestion, ...]:
    """Fix the question set, display order, and option permutations."""
    mc_sorted = sorted(mc_pool, key=lambda q: q.id)
    essay_sorted = sorted(essay_pool, key=lambda q: q.id)
    if len(mc_sorted) < spec.n_mc:
        raise InsufficientQuestions(
            QuestionKind.MULTIPLE_CHOICE, len(mc_sorted), spec.n_mc
        )
    if len(essay_sorted) < spec.n_essay:
        raise InsufficientQuestions(QuestionKind.ESSAY, len(essay_sorted), spec.n_essay)

    rng = SeededRng(seed) if isinstance(seed, int) else seed
    if spec.randomize:
        pool = sorted(mc_sorted + essay_sorted, key=lambda q: q.id)
        rng.shuffle(pool)
        chosen: list[Question] = []
        need_mc, need_essay = spec.n_mc, spec.n_essay
        for question in pool:
            if question.kind is QuestionKind.MULTIPLE_CHOICE and need_mc:
                chosen.append(question)
                need_mc -= 1
            elif question.kind is QuestionKind.ESSAY and need_essay:
                chosen.append(question)
                need_essay -= 1
            if not need_mc and not need_essay:
                break
    else:
        chosen = mc_sorted[: spec.n_mc] + essay_sorted[: spec.n_essay]

    assignment = []
    for position, question in enumerate(chosen):
        if question.kind is QuestionKind.MULTIPLE_CHOICE:
            perm = shuffle_options(question, rng) if spec.randomize else IDENTITY_PERMUTATION
        else:
            perm = None
        assignment.append(
            AssignedQuestion(
                question_id=question.id,
                display_order=position,
                option_permutation=perm,
            )
        )
    return tuple(assignment)


def snapshot_questions(questions: Sequence[Question]) -> dict[int, QuestionSnapshot]:
    return {
        q.id: QuestionSnapshot(
            question_id=q.id,
            title=q.title,
            description=q.description,
            kind=q.kind,
            options=q.options,
            correct_index=q.correct_index,
        )
        for q in questions
    }


def start_session(
    db: Database,
    bank: QuestionBank,
    spec: ExamSpec,
    student: StudentDetails,
    now: datetime,
    seed: Optional[int] = None,
) -> ExamSession:
    """Create and persist a fresh Open session with a fixed assignment."""
    if not spec.published:
        raise ExamNotPublished(f"exam {spec.id} is not published")
    validate_student_details(student)
    now = now.replace(microsecond=0)  # stored format has second resolution
    if seed is None:
        seed = fresh_seed()
    with db.lock:  # pool snapshot and insert are one atomic step
        mc_pool, essay_pool = bank.eligible_pools(spec.source_category)
        assignment = select_questions(spec, mc_pool, essay_pool, seed)
        by_id = {q.id: q for q in mc_pool + essay_pool}
        session = ExamSession(
            exam_id=spec.id,
            student=student,
            assignment=assignment,
            questions=snapshot_questions(
                [by_id[a.question_id] for a in assignment]
            ),
            time_started=now,
            status=SessionStatus.OPEN,
        )
        return db.create_session(session)


def render_assignment(session: ExamSession, exam_title: str = "") -> dict:
    """Student-facing view: questions in display order, options permuted.

    Never contains correct answers or weights.
    """
    if session.status is not SessionStatus.OPEN:
        raise SessionNotOpen(f"session {session.result_id} is {session.status.value}")
    questions = []
    for assigned in session.assignment:
        snap = session.questions[assigned.question_id]
        entry = {
            "question_id": snap.question_id,
            "position": assigned.display_order,
            "kind": snap.kind.value,
            "title": snap.title,
            "description": snap.description,
            "options": None,
        }
        if snap.kind is QuestionKind.MULTIPLE_CHOICE:
            perm = assigned.option_permutation
            entry["options"] = [snap.options[original] for original in perm]
        questions.append(entry)
    return {
        "result_id": session.result_id,
        "exam_id": session.exam_id,
        "exam_title": exam_title,
        "status": session.status.value,
        "time_started": format_timestamp(session.time_started),
        "questions": questions,
    }
