"""Shared builders: deterministic in-memory sessions and bank seeding."""

from __future__ import annotations

from datetime import datetime
from fractions import Fraction

from odes.bank import QuestionBank
from odes.model import (
    AssignedQuestion,
    ExamSession,
    ExamSpec,
    Question,
    QuestionKind,
    QuestionSnapshot,
    SessionStatus,
    StudentDetails,
)

STUDENT = StudentDetails(
    first_name="Maria",
    second_name="Papadaki",
    am="AM1234",
    etos_spoudon="3",
    tmima="Electrical Engineering",
)

T0 = datetime(2024, 3, 1, 10, 0, 0)
T1 = datetime(2024, 3, 1, 10, 45, 0)


def mc_snapshot(qid: int, correct: int = 0) -> QuestionSnapshot:
    return QuestionSnapshot(
        question_id=qid,
        title=f"Question {qid}",
        description="",
        kind=QuestionKind.MULTIPLE_CHOICE,
        options=tuple(f"q{qid} option {i}" for i in range(4)),
        correct_index=correct,
    )


def essay_snapshot(qid: int) -> QuestionSnapshot:
    return QuestionSnapshot(
        question_id=qid,
        title=f"Essay {qid}",
        description="",
        kind=QuestionKind.ESSAY,
    )


def make_spec(
    n_mc: int,
    n_essay: int,
    w_mc=1,
    penalty_mc=0,
    w_essay=1,
    max_rating: int = 10,
    randomize: bool = True,
    published: bool = True,
    source_category: int = 1,
    exam_id: int = 1,
) -> ExamSpec:
    return ExamSpec(
        id=exam_id,
        title="Sample exam",
        slug="sample-exam",
        source_category=source_category,
        n_mc=n_mc,
        n_essay=n_essay,
        w_mc=Fraction(w_mc),
        penalty_mc=Fraction(penalty_mc),
        w_essay=Fraction(w_essay),
        max_rating=max_rating,
        randomize=randomize,
        published=published,
    )


def make_session(
    spec: ExamSpec,
    correct: int = 0,
    status: SessionStatus = SessionStatus.OPEN,
    result_id: int = 1,
) -> ExamSession:
    """Session matching the spec's counts; MC ids 1..n_mc, essays after.

    Every MC question's correct answer is `correct`.
    """
    assignment = []
    questions = {}
    position = 0
    for qid in range(1, spec.n_mc + 1):
        assignment.append(
            AssignedQuestion(
                question_id=qid,
                display_order=position,
                option_permutation=(0, 1, 2, 3),
            )
        )
        questions[qid] = mc_snapshot(qid, correct=correct)
        position += 1
    for qid in range(spec.n_mc + 1, spec.n_mc + spec.n_essay + 1):
        assignment.append(
            AssignedQuestion(question_id=qid, display_order=position)
        )
        questions[qid] = essay_snapshot(qid)
        position += 1
    return ExamSession(
        result_id=result_id,
        exam_id=spec.id,
        student=STUDENT,
        assignment=tuple(assignment),
        questions=questions,
        time_started=T0,
        status=status,
        time_submitted=T1 if status is not SessionStatus.OPEN else None,
    )


def three_session_scenario(db, bank):
    """One exam with a session per status; fully deterministic inputs."""
    from odes.engine import start_session
    from odes.grading import (
        finalize_grading,
        grade_essay,
        mark_successful,
        submit_answers,
    )

    category, _ = seed_bank(bank, n_mc=2, n_essay=1)
    spec = db.create_exam(
        make_spec(
            n_mc=2, n_essay=1, w_mc=1, w_essay=6, randomize=False,
            source_category=category.id,
        )
    )

    start_session(
        db, bank, spec,
        StudentDetails("Nikos", "Papadopoulos", "123", "2", "Informatics"),
        now=datetime(2024, 3, 1, 9, 0, 0), seed=11,
    )

    s2 = start_session(
        db, bank, spec,
        StudentDetails("Ann", "O'Hara, Ann", "456", "3", "Electrical Engineering"),
        now=datetime(2024, 3, 1, 9, 5, 0), seed=12,
    )
    essay2 = s2.essay_question_ids()[0]
    mc2 = s2.mc_question_ids()
    db.update_session(
        s2.result_id,
        lambda s: submit_answers(
            s, spec,
            {mc2[0]: 0, mc2[1]: 1, essay2: 'He said "hello \\ world"'},
            datetime(2024, 3, 1, 9, 40, 0),
        ),
    )

    s3 = start_session(
        db, bank, spec,
        StudentDetails("Maria", "Papadaki", "AM1", "3", "Informatics"),
        now=datetime(2024, 3, 1, 9, 10, 0), seed=13,
    )
    essay3 = s3.essay_question_ids()[0]
    mc3 = s3.mc_question_ids()
    db.update_session(
        s3.result_id,
        lambda s: submit_answers(
            s, spec, {mc3[0]: 0, mc3[1]: 0, essay3: "Layered design."},
            datetime(2024, 3, 1, 9, 50, 0),
        ),
    )
    db.update_session(s3.result_id, lambda s: grade_essay(s, spec, essay3, 4))
    db.update_session(s3.result_id, lambda s: finalize_grading(s, spec))
    db.update_session(s3.result_id, lambda s: mark_successful(s, True))
    return spec


def seed_bank(
    bank: QuestionBank,
    category_name: str = "Networks",
    n_mc: int = 0,
    n_essay: int = 0,
    published: bool = True,
    correct: int = 0,
):
    """Create a category and a batch of questions inside it."""
    category = bank.create_category(category_name)
    created = []
    for i in range(n_mc):
        created.append(
            bank.create_question(
                Question(
                    title=f"{category_name} MC {i}",
                    kind=QuestionKind.MULTIPLE_CHOICE,
                    options=tuple(f"choice {j}" for j in range(4)),
                    correct_index=correct,
                    categories=frozenset({category.id}),
                    published=published,
                ),
                now=T0,
            )
        )
    for i in range(n_essay):
        created.append(
            bank.create_question(
                Question(
                    title=f"{category_name} essay {i}",
                    kind=QuestionKind.ESSAY,
                    categories=frozenset({category.id}),
                    published=published,
                ),
                now=T0,
            )
        )
    return category, created
