"""HTTP facade under /api/v1 with role-based access.

Three access levels: admin bearer tokens (teacher powers plus teacher
account management), teacher bearer tokens, and anonymous students who
hold a per-session capability token. Student-reachable responses never
carry correct answers, weights, or penalties.

Errors come back as ``{"code", "message", "field"?}`` with 400 for
rejected input, 401/403 for credential problems, 404 for unknown
resources, and 409 for state conflicts.
"""

from __future__ import annotations

from datetime import datetime
from typing import Callable, Optional, Union

from fastapi import Depends, FastAPI, Header, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse, Response
from pydantic import BaseModel

from . import __version__, errors
from .bank import QuestionBank
from .engine import render_assignment, start_session
from .grading import (
    compute_score,
    finalize_grading,
    grade_essay,
    mark_successful,
    submit_answers,
)
from .model import (
    ExamSession,
    ExamSpec,
    Question,
    QuestionFilter,
    QuestionKind,
    SessionStatus,
    StudentDetails,
    format_points,
    format_timestamp,
    parse_points,
    validate_exam_spec,
    weight_str,
)
from .storage import Database

_STATUS_BY_ERROR = (
    (errors.Unauthorized, 401),
    (errors.Forbidden, 403),
    (errors.NotFound, 404),
    (errors.Conflict, 409),
    (errors.ValidationFailure, 400),
)


# --- request bodies -----------------------------------------------------------

class CategoryIn(BaseModel):
    name: str
    parent: Optional[int] = None


class CategoryEdit(BaseModel):
    name: Optional[str] = None
    parent: Optional[int] = None


class QuestionIn(BaseModel):
    title: str = ""
    description: str = ""
    kind: Optional[str] = None
    options: Optional[list[str]] = None
    correct_index: Optional[int] = None
    categories: list[int] = []
    published: bool = False


class ExamIn(BaseModel):
    title: str = ""
    slug: Optional[str] = None
    description: str = ""
    source_category: int
    n_mc: int = 0
    n_essay: int = 0
    w_mc: Union[int, float, str] = 1
    penalty_mc: Union[int, float, str] = 0
    w_essay: Union[int, float, str] = 1
    max_rating: int = 10
    randomize: bool = True
    published: bool = False


class StudentDetailsIn(BaseModel):
    first_name: str = ""
    second_name: str = ""
    am: str = ""
    etos_spoudon: str = ""
    tmima: str = ""


class AnswerIn(BaseModel):
    choice: Optional[int] = None  # display slot, 0..3
    text: Optional[str] = None


class SubmitIn(BaseModel):
    answers: dict[int, Optional[AnswerIn]] = {}


class EssayGradeIn(BaseModel):
    question_id: int
    points: Union[int, float, str]


class SuccessfulIn(BaseModel):
    successful: bool


class TeacherIn(BaseModel):
    name: str
    admin: bool = False


# --- response shaping ---------------------------------------------------------

def category_out(category) -> dict:
    return {
        "id": category.id,
        "name": category.name,
        "parent": category.parent,
        "slug": category.slug,
    }


def question_out(question: Question) -> dict:
    return {
        "id": question.id,
        "title": question.title,
        "description": question.description,
        "kind": question.kind.value,
        "options": list(question.options) if question.options else None,
        "correct_index": question.correct_index,
        "categories": sorted(question.categories),
        "published": question.published,
        "created_at": format_timestamp(question.created_at),
    }


def exam_out(spec: ExamSpec) -> dict:
    return {
        "id": spec.id,
        "title": spec.title,
        "slug": spec.slug,
        "description": spec.description,
        "source_category": spec.source_category,
        "n_mc": spec.n_mc,
        "n_essay": spec.n_essay,
        "w_mc": weight_str(spec.w_mc),
        "penalty_mc": weight_str(spec.penalty_mc),
        "w_essay": weight_str(spec.w_essay),
        "max_rating": spec.max_rating,
        "randomize": spec.randomize,
        "published": spec.published,
    }


def receipt_out(session: ExamSession, exam_title: str) -> dict:
    return {
        "result_id": session.result_id,
        "exam_id": session.exam_id,
        "exam_title": exam_title,
        "status": session.status.value,
        "time_started": format_timestamp(session.time_started),
        "time_submitted": (
            format_timestamp(session.time_submitted)
            if session.time_submitted
            else None
        ),
        "final_score": (
            format_points(session.final_score)
            if session.status is SessionStatus.CHECKED
            and session.final_score is not None
            else None
        ),
    }


def _question_draft(body: QuestionIn) -> Question:
    kind = None
    if body.kind is not None:
        try:
            kind = QuestionKind(body.kind)
        except ValueError:
            raise errors.MissingKind(
                f"{body.kind!r} is not a question type", field="kind"
            )
    return Question(
        title=body.title,
        description=body.description,
        kind=kind,
        options=tuple(body.options) if body.options is not None else None,
        correct_index=body.correct_index,
        categories=frozenset(body.categories),
        published=body.published,
    )


def _exam_draft(body: ExamIn) -> ExamSpec:
    try:
        w_mc = parse_points(body.w_mc)
        penalty = parse_points(body.penalty_mc)
        w_essay = parse_points(body.w_essay)
    except (ValueError, ZeroDivisionError):
        raise errors.NonPositiveWeight("weights must be numeric")
    return ExamSpec(
        title=body.title,
        slug=body.slug,
        description=body.description,
        source_category=body.source_category,
        n_mc=body.n_mc,
        n_essay=body.n_essay,
        w_mc=w_mc,
        penalty_mc=penalty,
        w_essay=w_essay,
        max_rating=body.max_rating,
        randomize=body.randomize,
        published=body.published,
    )


def create_app(
    db: Database,
    clock: Optional[Callable[[], datetime]] = None,
    ui_dir: Optional[str] = None,
) -> FastAPI:
    bank = QuestionBank(db)
    now = clock or (lambda: datetime.now().replace(microsecond=0))

    app = FastAPI(title="ODES", version=__version__, docs_url=None, redoc_url=None)

    @app.exception_handler(errors.OdesError)
    def odes_error(request: Request, exc: errors.OdesError):
        status = 400
        for klass, mapped in _STATUS_BY_ERROR:
            if isinstance(exc, klass):
                status = mapped
                break
        body = {"code": exc.code, "message": exc.message}
        if exc.field is not None:
            body["field"] = exc.field
        return JSONResponse(status_code=status, content=body)

    @app.exception_handler(RequestValidationError)
    def body_error(request: Request, exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        loc = [str(part) for part in first.get("loc", ()) if part != "body"]
        return JSONResponse(
            status_code=400,
            content={
                "code": "validation",
                "message": first.get("msg", "invalid request body"),
                "field": ".".join(loc) or None,
            },
        )

    # --- auth ------------------------------------------------------------------

    def teacher_auth(authorization: Optional[str] = Header(default=None)) -> dict:
        if not authorization or not authorization.startswith("Bearer "):
            raise errors.Unauthorized("missing bearer token")
        teacher = db.teacher_by_token(authorization.removeprefix("Bearer "))
        if teacher is None:
            raise errors.Unauthorized("unknown bearer token")
        return teacher

    def admin_auth(teacher: dict = Depends(teacher_auth)) -> dict:
        if not teacher["is_admin"]:
            raise errors.Forbidden("admin credential required")
        return teacher

    def session_auth(
        result_id: int,
        x_session_token: Optional[str] = Header(default=None),
    ) -> ExamSession:
        if not x_session_token:
            raise errors.InvalidToken("missing session token")
        owner = db.session_id_for_token(x_session_token)
        if owner is None or owner != result_id:
            raise errors.InvalidToken("token does not grant access to this session")
        return db.load_session(result_id)

    # --- public ---------------------------------------------------------------

    @app.get("/api/v1/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.get("/api/v1/public/exams")
    def public_exams():
        return [
            {
                "id": spec.id,
                "slug": spec.slug,
                "title": spec.title,
                "description": spec.description,
            }
            for spec in db.list_exams(published_only=True)
        ]

    @app.post("/api/v1/exams/{exam_id}/sessions", status_code=201)
    def start(exam_id: int, body: StudentDetailsIn):
        spec = db.get_exam(exam_id)
        student = StudentDetails(
            first_name=body.first_name,
            second_name=body.second_name,
            am=body.am,
            etos_spoudon=body.etos_spoudon,
            tmima=body.tmima,
        )
        session = start_session(db, bank, spec, student, now=now())
        token = db.issue_session_token(session.result_id)
        return {
            "result_id": session.result_id,
            "token": token,
            "view": render_assignment(session, exam_title=spec.title),
        }

    @app.get("/api/v1/sessions/{result_id}")
    def session_view(session: ExamSession = Depends(session_auth)):
        spec = db.get_exam(session.exam_id)
        if session.status is SessionStatus.OPEN:
            return render_assignment(session, exam_title=spec.title)
        return receipt_out(session, spec.title)

    @app.post("/api/v1/sessions/{result_id}/answers")
    def submit(body: SubmitIn, session: ExamSession = Depends(session_auth)):
        spec = db.get_exam(session.exam_id)
        by_id = {a.question_id: a for a in session.assignment}

        def to_original(qid: int, answer: Optional[AnswerIn]):
            if answer is None or (answer.choice is None and answer.text is None):
                return None
            if answer.choice is not None and answer.text is not None:
                raise errors.AnswerTypeMismatch(
                    f"question {qid} got both a choice and text", field=str(qid)
                )
            if answer.text is not None:
                return answer.text
            assigned = by_id.get(qid)
            if assigned is None:
                raise errors.UnknownAssignedQuestion(
                    f"question {qid} is not part of this session"
                )
            if not 0 <= answer.choice <= 3:
                raise errors.AnswerTypeMismatch(
                    f"choice {answer.choice} out of range", field=str(qid)
                )
            perm = assigned.option_permutation
            return perm[answer.choice] if perm else answer.choice

        answers = {qid: to_original(qid, ans) for qid, ans in body.answers.items()}
        updated = db.update_session(
            session.result_id,
            lambda s: submit_answers(s, spec, answers, now()),
        )
        return receipt_out(updated, spec.title)

    # --- teacher: categories -----------------------------------------------------

    @app.post("/api/v1/categories", status_code=201)
    def create_category(body: CategoryIn, teacher=Depends(teacher_auth)):
        return category_out(bank.create_category(body.name, parent=body.parent))

    @app.get("/api/v1/categories")
    def list_categories(teacher=Depends(teacher_auth)):
        return [category_out(c) for c in bank.list_categories()]

    @app.get("/api/v1/categories/{category_id}")
    def get_category(category_id: int, teacher=Depends(teacher_auth)):
        return category_out(bank.get_category(category_id))

    @app.patch("/api/v1/categories/{category_id}")
    def edit_category(
        category_id: int, body: CategoryEdit, teacher=Depends(teacher_auth)
    ):
        kwargs = {}
        if "name" in body.model_fields_set:
            kwargs["new_name"] = body.name
        if "parent" in body.model_fields_set:
            kwargs["new_parent"] = body.parent
        return category_out(bank.edit_category(category_id, **kwargs))

    @app.delete("/api/v1/categories/{category_id}", status_code=204)
    def delete_category(category_id: int, teacher=Depends(teacher_auth)):
        bank.delete_category(category_id)
        return Response(status_code=204)

    # --- teacher: questions -------------------------------------------------------

    @app.post("/api/v1/questions", status_code=201)
    def create_question(body: QuestionIn, teacher=Depends(teacher_auth)):
        return question_out(bank.create_question(_question_draft(body), now=now()))

    @app.get("/api/v1/questions")
    def list_questions(
        category: Optional[int] = None,
        kind: Optional[str] = None,
        published_only: bool = False,
        teacher=Depends(teacher_auth),
    ):
        parsed_kind = None
        if kind is not None:
            try:
                parsed_kind = QuestionKind(kind)
            except ValueError:
                raise errors.MissingKind(f"{kind!r} is not a question type", field="kind")
        filt = QuestionFilter(
            category=category, kind=parsed_kind, published_only=published_only
        )
        return [question_out(q) for q in bank.list_questions(filt)]

    @app.get("/api/v1/questions/{question_id}")
    def get_question(question_id: int, teacher=Depends(teacher_auth)):
        return question_out(bank.get_question(question_id))

    @app.put("/api/v1/questions/{question_id}")
    def update_question(
        question_id: int, body: QuestionIn, teacher=Depends(teacher_auth)
    ):
        return question_out(bank.update_question(question_id, _question_draft(body)))

    @app.delete("/api/v1/questions/{question_id}", status_code=204)
    def delete_question(question_id: int, teacher=Depends(teacher_auth)):
        bank.delete_question(question_id)
        return Response(status_code=204)

    # --- teacher: exams ------------------------------------------------------------

    @app.post("/api/v1/exams", status_code=201)
    def create_exam(body: ExamIn, teacher=Depends(teacher_auth)):
        draft = validate_exam_spec(_exam_draft(body), bank.category_exists)
        return exam_out(db.create_exam(draft))

    @app.get("/api/v1/exams")
    def list_exams(teacher=Depends(teacher_auth)):
        return [exam_out(spec) for spec in db.list_exams()]

    @app.get("/api/v1/exams/{exam_id}")
    def get_exam(exam_id: int, teacher=Depends(teacher_auth)):
        return exam_out(db.get_exam(exam_id))

    @app.put("/api/v1/exams/{exam_id}")
    def update_exam(exam_id: int, body: ExamIn, teacher=Depends(teacher_auth)):
        draft = validate_exam_spec(_exam_draft(body), bank.category_exists)
        return exam_out(db.update_exam(exam_id, draft))

    # --- teacher: results and grading --------------------------------------------

    @app.get("/api/v1/exams/{exam_id}/results")
    def exam_results(
        exam_id: int, order: str = "result_id", teacher=Depends(teacher_auth)
    ):
        return {
            "exam_id": exam_id,
            "results": db.list_sessions(exam_id, order=order),
        }

    @app.get("/api/v1/exams/{exam_id}/attendance")
    def exam_attendance(exam_id: int, teacher=Depends(teacher_auth)):
        return [
            {
                "first_name": student.first_name,
                "second_name": student.second_name,
                "am": student.am,
                "etos_spoudon": student.etos_spoudon,
                "tmima": student.tmima,
                "time_started": started,
                "time_submitted": submitted,
                "status": status,
            }
            for student, started, submitted, status in db.attendance_log(exam_id)
        ]

    @app.get("/api/v1/exams/{exam_id}/results.csv")
    def exam_results_csv(exam_id: int, teacher=Depends(teacher_auth)):
        return PlainTextResponse(
            db.export_results_csv(exam_id), media_type="text/csv; charset=utf-8"
        )

    @app.get("/api/v1/sessions/{result_id}/grading")
    def grading_view(result_id: int, teacher=Depends(teacher_auth)):
        session = db.load_session(result_id)
        spec = db.get_exam(session.exam_id)
        report = None
        awarded = {}
        if session.status is not SessionStatus.OPEN:
            report = compute_score(session, spec, preview=True)
            awarded = {qid: points for qid, points, _ in report.per_question}
        questions = []
        for assigned in session.assignment:
            snap = session.questions[assigned.question_id]
            is_essay = snap.kind is QuestionKind.ESSAY
            questions.append(
                {
                    "question_id": snap.question_id,
                    "position": assigned.display_order,
                    "kind": snap.kind.value,
                    "title": snap.title,
                    "description": snap.description,
                    "options": list(snap.options) if snap.options else None,
                    "correct_index": snap.correct_index,
                    "answer": session.answers.get(snap.question_id),
                    "essay_grade": (
                        weight_str(session.essay_grades[snap.question_id])
                        if snap.question_id in session.essay_grades
                        else None
                    ),
                    "max_points": weight_str(spec.w_essay if is_essay else spec.w_mc),
                    "awarded": (
                        format_points(awarded[snap.question_id])
                        if snap.question_id in awarded
                        else None
                    ),
                }
            )
        return {
            "result_id": session.result_id,
            "exam_id": session.exam_id,
            "exam_title": spec.title,
            "status": session.status.value,
            "student": {
                "first_name": session.student.first_name,
                "second_name": session.student.second_name,
                "am": session.student.am,
                "etos_spoudon": session.student.etos_spoudon,
                "tmima": session.student.tmima,
            },
            "time_started": format_timestamp(session.time_started),
            "time_submitted": (
                format_timestamp(session.time_submitted)
                if session.time_submitted
                else None
            ),
            "questions": questions,
            "score_preview": (
                {
                    "raw_earned": format_points(report.raw_earned),
                    "raw_max": format_points(report.raw_max),
                    "normalized": format_points(report.normalized),
                    "max_rating": report.max_rating,
                    "missing_essay_grades": list(report.missing_essay_grades),
                }
                if report
                else None
            ),
            "final_score": (
                format_points(session.final_score)
                if session.final_score is not None
                else None
            ),
            "successful": session.successful,
        }

    @app.post("/api/v1/sessions/{result_id}/essay-grades")
    def post_essay_grade(
        result_id: int, body: EssayGradeIn, teacher=Depends(teacher_auth)
    ):
        session = db.load_session(result_id)
        spec = db.get_exam(session.exam_id)
        try:
            points = parse_points(body.points)
        except (ValueError, ZeroDivisionError):
            raise errors.PointsOutOfRange("points must be numeric", field="points")
        updated = db.update_session(
            result_id, lambda s: grade_essay(s, spec, body.question_id, points)
        )
        return {
            "result_id": result_id,
            "question_id": body.question_id,
            "points": weight_str(updated.essay_grades[body.question_id]),
        }

    @app.post("/api/v1/sessions/{result_id}/finalize")
    def post_finalize(result_id: int, teacher=Depends(teacher_auth)):
        session = db.load_session(result_id)
        spec = db.get_exam(session.exam_id)
        updated = db.update_session(result_id, lambda s: finalize_grading(s, spec))
        return {
            "result_id": result_id,
            "status": updated.status.value,
            "final_score": format_points(updated.final_score),
        }

    @app.post("/api/v1/sessions/{result_id}/successful")
    def post_successful(
        result_id: int, body: SuccessfulIn, teacher=Depends(teacher_auth)
    ):
        updated = db.update_session(
            result_id, lambda s: mark_successful(s, body.successful)
        )
        return {"result_id": result_id, "successful": updated.successful}

    # --- admin ---------------------------------------------------------------------

    @app.post("/api/v1/teachers", status_code=201)
    def create_teacher(body: TeacherIn, admin=Depends(admin_auth)):
        return db.add_teacher(body.name, is_admin=body.admin)

    @app.get("/api/v1/teachers")
    def list_teachers(admin=Depends(admin_auth)):
        return db.list_teachers()

    @app.delete("/api/v1/teachers/{teacher_id}", status_code=204)
    def delete_teacher(teacher_id: int, admin=Depends(admin_auth)):
        db.delete_teacher(teacher_id)
        return Response(status_code=204)

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
