"""Durable storage: results table, exam specs, teachers, session tokens.

The results table mirrors the classic single-table layout: identity
fields, a submission timestamp, a status string, and one big ``answers``
text column holding the whole session document (assignment, question
snapshots, answers, essay grades, start time) as escaped JSON. Quotes
and backslashes in the document are escaped with a leading backslash
before storage and restored on load.

Backend is embedded sqlite behind this module's interface; callers
never see SQL.
"""

from __future__ import annotations

import json
import secrets
import sqlite3
import threading
from contextlib import contextmanager
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional

from .errors import (
    DuplicateSlug,
    FieldTooLong,
    MalformedEscape,
    UnknownExam,
    UnknownResult,
    UnknownTeacher,
    ValidationFailure,
)
from .model import (
    AM_MAX,
    ANSWER_TEXT_MAX,
    ETOS_SPOUDON_MAX,
    FIRST_NAME_MAX,
    SECOND_NAME_MAX,
    TMIMA_MAX,
    AssignedQuestion,
    ExamSession,
    ExamSpec,
    QuestionKind,
    QuestionSnapshot,
    SessionStatus,
    StudentDetails,
    format_points,
    format_timestamp,
    parse_timestamp,
    slugify,
)

RESULT_ID_MAX = 10**9 - 1  # 9 digits
EXAM_ID_MAX = 10**11 - 1  # 11 digits
STATUS_MAX = 100
DOCUMENT_VERSION = 1

CSV_HEADER = (
    "result_id,diagonisma_id,first_name,second_name,am,etos_spoudon,tmima,"
    "time_submitted,status,final_score,successful"
)

_SCHEMA = """
CREATE TABLE IF NOT EXISTS categories (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    name TEXT NOT NULL,
    slug TEXT NOT NULL UNIQUE,
    parent_id INTEGER NULL REFERENCES categories(id)
);
CREATE TABLE IF NOT EXISTS questions (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    title TEXT NOT NULL,
    description TEXT NOT NULL DEFAULT '',
    kind TEXT NOT NULL,
    options TEXT NULL,
    correct_index INTEGER NULL,
    published INTEGER NOT NULL DEFAULT 0,
    created_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS question_categories (
    question_id INTEGER NOT NULL REFERENCES questions(id),
    category_id INTEGER NOT NULL REFERENCES categories(id),
    PRIMARY KEY (question_id, category_id)
);
CREATE TABLE IF NOT EXISTS exams (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    title TEXT NOT NULL,
    slug TEXT NOT NULL UNIQUE,
    description TEXT NOT NULL DEFAULT '',
    source_category INTEGER NOT NULL REFERENCES categories(id),
    n_mc INTEGER NOT NULL,
    n_essay INTEGER NOT NULL,
    w_mc TEXT NOT NULL,
    penalty_mc TEXT NOT NULL,
    w_essay TEXT NOT NULL,
    max_rating INTEGER NOT NULL,
    randomize INTEGER NOT NULL,
    published INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS results (
    result_id INTEGER PRIMARY KEY AUTOINCREMENT,
    diagonisma_id INTEGER NOT NULL REFERENCES exams(id),
    first_name TEXT NOT NULL,
    second_name TEXT NOT NULL,
    am TEXT NOT NULL,
    etos_spoudon TEXT NOT NULL DEFAULT '',
    tmima TEXT NOT NULL DEFAULT '',
    time_submitted TEXT NOT NULL DEFAULT '',
    status TEXT NOT NULL,
    answers TEXT NOT NULL,
    final_score TEXT NOT NULL DEFAULT '',
    successful INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS teachers (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    name TEXT NOT NULL UNIQUE,
    token TEXT NOT NULL UNIQUE,
    is_admin INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS session_tokens (
    result_id INTEGER PRIMARY KEY REFERENCES results(result_id),
    token TEXT NOT NULL UNIQUE
);
"""


def escape_answer_text(raw: str) -> str:
    """Escape backslashes then double quotes with a leading backslash."""
    return raw.replace("\\", "\\\\").replace('"', '\\"')


def unescape_answer_text(escaped: str) -> str:
    """Exact inverse of escape_answer_text."""
    out = []
    i = 0
    n = len(escaped)
    while i < n:
        ch = escaped[i]
        if ch == "\\":
            if i + 1 >= n:
                raise MalformedEscape("dangling backslash at end of text")
            nxt = escaped[i + 1]
            if nxt not in ('\\', '"'):
                raise MalformedEscape(f"invalid escape sequence \\{nxt} at offset {i}")
            out.append(nxt)
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


@dataclass(frozen=True)
class ResultsRow:
    """One row of the results table, exactly as persisted."""

    result_id: int
    diagonisma_id: int
    first_name: str
    second_name: str
    am: str
    etos_spoudon: str
    tmima: str
    time_submitted: str  # "" while Open
    status: str
    answers: str  # escaped session document
    final_score: str  # "" unless Checked; schema addition
    successful: bool  # schema addition


def validate_results_row(row: ResultsRow) -> ResultsRow:
    bounds = (
        ("first_name", row.first_name, FIRST_NAME_MAX),
        ("second_name", row.second_name, SECOND_NAME_MAX),
        ("am", row.am, AM_MAX),
        ("etos_spoudon", row.etos_spoudon, ETOS_SPOUDON_MAX),
        ("tmima", row.tmima, TMIMA_MAX),
        ("status", row.status, STATUS_MAX),
        ("answers", row.answers, ANSWER_TEXT_MAX),
    )
    for name, value, limit in bounds:
        if len(value) > limit:
            raise FieldTooLong(f"{name} exceeds {limit} characters", field=name)
    if not 0 < row.result_id <= RESULT_ID_MAX:
        raise FieldTooLong("result_id exceeds 9 digits", field="result_id")
    if not 0 < row.diagonisma_id <= EXAM_ID_MAX:
        raise FieldTooLong("diagonisma_id exceeds 11 digits", field="diagonisma_id")
    if row.status not in (s.value for s in SessionStatus):
        raise ValueError(f"status {row.status!r} is not a session status")
    return row


def build_session_document(session: ExamSession) -> str:
    """Serialize the session internals into the versioned answers document.

    Key order is fixed so equal sessions serialize byte-identically.
    """
    doc = {
        "v": DOCUMENT_VERSION,
        "time_started": format_timestamp(session.time_started),
        "assignment": [
            {
                "question_id": a.question_id,
                "display_order": a.display_order,
                "option_permutation": (
                    list(a.option_permutation)
                    if a.option_permutation is not None
                    else None
                ),
            }
            for a in session.assignment
        ],
        "questions": {
            str(qid): {
                "title": snap.title,
                "description": snap.description,
                "kind": snap.kind.value,
                "options": list(snap.options) if snap.options is not None else None,
                "correct_index": snap.correct_index,
            }
            for qid, snap in sorted(session.questions.items())
        },
        "answers": {str(qid): ans for qid, ans in sorted(session.answers.items())},
        "essay_grades": {
            str(qid): str(points)
            for qid, points in sorted(session.essay_grades.items())
        },
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def parse_session_document(text: str) -> dict:
    doc = json.loads(text)
    if doc.get("v") != DOCUMENT_VERSION:
        raise ValueError(f"unsupported session document version {doc.get('v')!r}")
    return doc


def session_to_row(session: ExamSession) -> ResultsRow:
    return validate_results_row(
        ResultsRow(
            result_id=session.result_id,
            diagonisma_id=session.exam_id,
            first_name=session.student.first_name,
            second_name=session.student.second_name,
            am=session.student.am,
            etos_spoudon=session.student.etos_spoudon,
            tmima=session.student.tmima,
            time_submitted=(
                format_timestamp(session.time_submitted)
                if session.time_submitted is not None
                else ""
            ),
            status=session.status.value,
            answers=escape_answer_text(build_session_document(session)),
            final_score=(
                format_points(session.final_score)
                if session.final_score is not None
                else ""
            ),
            successful=session.successful,
        )
    )


def row_to_session(row: ResultsRow) -> ExamSession:
    doc = parse_session_document(unescape_answer_text(row.answers))
    assignment = tuple(
        AssignedQuestion(
            question_id=entry["question_id"],
            display_order=entry["display_order"],
            option_permutation=(
                tuple(entry["option_permutation"])
                if entry["option_permutation"] is not None
                else None
            ),
        )
        for entry in doc["assignment"]
    )
    questions = {
        int(qid): QuestionSnapshot(
            question_id=int(qid),
            title=snap["title"],
            description=snap["description"],
            kind=QuestionKind(snap["kind"]),
            options=tuple(snap["options"]) if snap["options"] is not None else None,
            correct_index=snap["correct_index"],
        )
        for qid, snap in doc["questions"].items()
    }
    return ExamSession(
        result_id=row.result_id,
        exam_id=row.diagonisma_id,
        student=StudentDetails(
            first_name=row.first_name,
            second_name=row.second_name,
            am=row.am,
            etos_spoudon=row.etos_spoudon,
            tmima=row.tmima,
        ),
        assignment=assignment,
        questions=questions,
        answers={int(qid): ans for qid, ans in doc["answers"].items()},
        essay_grades={
            int(qid): Fraction(points)
            for qid, points in doc["essay_grades"].items()
        },
        status=SessionStatus(row.status),
        time_started=parse_timestamp(doc["time_started"]),
        time_submitted=(
            parse_timestamp(row.time_submitted) if row.time_submitted else None
        ),
        successful=row.successful,
        final_score=Fraction(row.final_score) if row.final_score else None,
    )


def csv_field(value: str) -> str:
    """Quote a CSV field iff it contains a comma, quote, or line break."""
    if any(ch in value for ch in ',"\n\r'):
        return '"' + value.replace('"', '""') + '"'
    return value


def dedupe_slug(base: str, taken: Callable[[str], bool]) -> str:
    """Append -2, -3, ... until the slug is free; give up after 1000 tries."""
    if not taken(base):
        return base
    for i in range(2, 1001):
        candidate = f"{base}-{i}"
        if not taken(candidate):
            return candidate
    raise DuplicateSlug(f"could not find a free slug for {base!r}")


class Database:
    """Embedded store; all access is serialized through one lock.

    Writes run inside explicit transactions so a session row is either
    fully persisted or absent.
    """

    def __init__(self, path: str | Path = ":memory:"):
        self.path = str(path)
        self.conn = sqlite3.connect(
            self.path, check_same_thread=False, isolation_level=None
        )
        self.conn.execute("PRAGMA foreign_keys = ON")
        self.lock = threading.RLock()
        with self.lock:
            self.conn.executescript(_SCHEMA)

    def close(self) -> None:
        self.conn.close()

    @contextmanager
    def transaction(self):
        with self.lock:
            self.conn.execute("BEGIN IMMEDIATE")
            try:
                yield self.conn
            except BaseException:
                self.conn.execute("ROLLBACK")
                raise
            self.conn.execute("COMMIT")

    # --- exams ---------------------------------------------------------------

    def create_exam(self, spec: ExamSpec) -> ExamSpec:
        with self.transaction() as conn:
            if spec.slug:
                slug = spec.slug
                if slugify(slug, fallback="") != slug:
                    raise ValidationFailure(
                        f"slug {slug!r} is not URL-safe", field="slug"
                    )
                if self._exam_slug_taken(slug):
                    raise DuplicateSlug(f"exam slug {slug!r} already exists")
            else:
                slug = dedupe_slug(
                    slugify(spec.title, fallback="exam"), self._exam_slug_taken
                )
            cur = conn.execute(
                "INSERT INTO exams (title, slug, description, source_category,"
                " n_mc, n_essay, w_mc, penalty_mc, w_essay, max_rating,"
                " randomize, published) VALUES (?,?,?,?,?,?,?,?,?,?,?,?)",
                (
                    spec.title,
                    slug,
                    spec.description,
                    spec.source_category,
                    spec.n_mc,
                    spec.n_essay,
                    str(spec.w_mc),
                    str(spec.penalty_mc),
                    str(spec.w_essay),
                    spec.max_rating,
                    int(spec.randomize),
                    int(spec.published),
                ),
            )
            return replace(spec, id=cur.lastrowid, slug=slug)

    def get_exam(self, exam_id: int) -> ExamSpec:
        with self.lock:
            row = self.conn.execute(
                "SELECT id, title, slug, description, source_category, n_mc,"
                " n_essay, w_mc, penalty_mc, w_essay, max_rating, randomize,"
                " published FROM exams WHERE id = ?",
                (exam_id,),
            ).fetchone()
        if row is None:
            raise UnknownExam(f"exam {exam_id} does not exist")
        return self._exam_from_row(row)

    def list_exams(self, published_only: bool = False) -> list[ExamSpec]:
        query = (
            "SELECT id, title, slug, description, source_category, n_mc, n_essay,"
            " w_mc, penalty_mc, w_essay, max_rating, randomize, published"
            " FROM exams"
        )
        if published_only:
            query += " WHERE published = 1"
        query += " ORDER BY id"
        with self.lock:
            rows = self.conn.execute(query).fetchall()
        return [self._exam_from_row(row) for row in rows]

    def update_exam(self, exam_id: int, spec: ExamSpec) -> ExamSpec:
        current = self.get_exam(exam_id)  # raises UnknownExam
        with self.transaction() as conn:
            conn.execute(
                "UPDATE exams SET title=?, description=?, source_category=?,"
                " n_mc=?, n_essay=?, w_mc=?, penalty_mc=?, w_essay=?,"
                " max_rating=?, randomize=?, published=? WHERE id=?",
                (
                    spec.title,
                    spec.description,
                    spec.source_category,
                    spec.n_mc,
                    spec.n_essay,
                    str(spec.w_mc),
                    str(spec.penalty_mc),
                    str(spec.w_essay),
                    spec.max_rating,
                    int(spec.randomize),
                    int(spec.published),
                    exam_id,
                ),
            )
        return replace(spec, id=exam_id, slug=current.slug)

    def exam_exists(self, exam_id: int) -> bool:
        with self.lock:
            row = self.conn.execute(
                "SELECT 1 FROM exams WHERE id = ?", (exam_id,)
            ).fetchone()
        return row is not None

    def _exam_slug_taken(self, slug: str) -> bool:
        return (
            self.conn.execute(
                "SELECT 1 FROM exams WHERE slug = ?", (slug,)
            ).fetchone()
            is not None
        )

    @staticmethod
    def _exam_from_row(row) -> ExamSpec:
        return ExamSpec(
            id=row[0],
            title=row[1],
            slug=row[2],
            description=row[3],
            source_category=row[4],
            n_mc=row[5],
            n_essay=row[6],
            w_mc=Fraction(row[7]),
            penalty_mc=Fraction(row[8]),
            w_essay=Fraction(row[9]),
            max_rating=row[10],
            randomize=bool(row[11]),
            published=bool(row[12]),
        )

    # --- sessions --------------------------------------------------------------

    def create_session(self, session: ExamSession) -> ExamSession:
        """Persist a new session atomically; assigns the result id."""
        with self.transaction() as conn:
            probe = replace(session, result_id=1)  # id unknown until insert
            row = session_to_row(probe)
            cur = conn.execute(
                "INSERT INTO results (diagonisma_id, first_name, second_name,"
                " am, etos_spoudon, tmima, time_submitted, status, answers,"
                " final_score, successful) VALUES (?,?,?,?,?,?,?,?,?,?,?)",
                (
                    row.diagonisma_id,
                    row.first_name,
                    row.second_name,
                    row.am,
                    row.etos_spoudon,
                    row.tmima,
                    row.time_submitted,
                    row.status,
                    row.answers,
                    row.final_score,
                    int(row.successful),
                ),
            )
            result_id = cur.lastrowid
            if result_id > RESULT_ID_MAX:
                raise FieldTooLong("results table exhausted 9-digit ids")
        return replace(session, result_id=result_id)

    def save_session(self, session: ExamSession) -> ResultsRow:
        if session.result_id is None:
            raise UnknownResult("session has no result id; create it first")
        row = session_to_row(session)
        with self.transaction() as conn:
            cur = conn.execute(
                "UPDATE results SET time_submitted=?, status=?, answers=?,"
                " final_score=?, successful=? WHERE result_id=?",
                (
                    row.time_submitted,
                    row.status,
                    row.answers,
                    row.final_score,
                    int(row.successful),
                    row.result_id,
                ),
            )
            if cur.rowcount == 0:
                raise UnknownResult(f"result {row.result_id} does not exist")
        return row

    def load_session(self, result_id: int) -> ExamSession:
        with self.lock:
            raw = self.conn.execute(
                "SELECT result_id, diagonisma_id, first_name, second_name, am,"
                " etos_spoudon, tmima, time_submitted, status, answers,"
                " final_score, successful FROM results WHERE result_id = ?",
                (result_id,),
            ).fetchone()
        if raw is None:
            raise UnknownResult(f"result {result_id} does not exist")
        row = ResultsRow(
            result_id=raw[0],
            diagonisma_id=raw[1],
            first_name=raw[2],
            second_name=raw[3],
            am=raw[4],
            etos_spoudon=raw[5],
            tmima=raw[6],
            time_submitted=raw[7],
            status=raw[8],
            answers=raw[9],
            final_score=raw[10],
            successful=bool(raw[11]),
        )
        return row_to_session(row)

    def update_session(self, result_id: int, mutate) -> ExamSession:
        """Load-mutate-save under the store lock.

        Per-session operations serialize here: of two racing submits,
        the second sees the first's Finalized state and fails.
        """
        with self.lock:
            session = self.load_session(result_id)
            updated = mutate(session)
            self.save_session(updated)
            return updated

    def list_sessions(self, exam_id: int, order: str = "result_id") -> list[dict]:
        """Row summaries for one exam (no answer documents)."""
        if not self.exam_exists(exam_id):
            raise UnknownExam(f"exam {exam_id} does not exist")
        with self.lock:
            rows = self.conn.execute(
                "SELECT result_id, diagonisma_id, first_name, second_name, am,"
                " etos_spoudon, tmima, time_submitted, status, answers,"
                " final_score, successful FROM results WHERE diagonisma_id = ?"
                " ORDER BY result_id",
                (exam_id,),
            ).fetchall()
        summaries = []
        for raw in rows:
            doc = parse_session_document(unescape_answer_text(raw[9]))
            summaries.append(
                {
                    "result_id": raw[0],
                    "exam_id": raw[1],
                    "first_name": raw[2],
                    "second_name": raw[3],
                    "am": raw[4],
                    "etos_spoudon": raw[5],
                    "tmima": raw[6],
                    "time_started": doc["time_started"],
                    "time_submitted": raw[7] or None,
                    "status": raw[8],
                    "final_score": raw[10] or None,
                    "successful": bool(raw[11]),
                }
            )
        if order == "time_started":
            summaries.sort(key=lambda s: (s["time_started"], s["result_id"]))
        return summaries

    def attendance_log(
        self, exam_id: int
    ) -> list[tuple[StudentDetails, str, Optional[str], str]]:
        """(student, time_started, time_submitted, status) per session,
        ordered by start time."""
        entries = [
            (
                StudentDetails(
                    first_name=s["first_name"],
                    second_name=s["second_name"],
                    am=s["am"],
                    etos_spoudon=s["etos_spoudon"],
                    tmima=s["tmima"],
                ),
                s["time_started"],
                s["time_submitted"],
                s["status"],
            )
            for s in self.list_sessions(exam_id, order="time_started")
        ]
        return entries

    def export_results_csv(self, exam_id: int) -> str:
        """UTF-8 CSV of the exam's result rows, ordered by result id."""
        if not self.exam_exists(exam_id):
            raise UnknownExam(f"exam {exam_id} does not exist")
        with self.lock:
            rows = self.conn.execute(
                "SELECT result_id, diagonisma_id, first_name, second_name, am,"
                " etos_spoudon, tmima, time_submitted, status, final_score,"
                " successful FROM results WHERE diagonisma_id = ?"
                " ORDER BY result_id",
                (exam_id,),
            ).fetchall()
        lines = [CSV_HEADER]
        for raw in rows:
            status = raw[8]
            final_score = raw[9] if status == SessionStatus.CHECKED.value else ""
            fields = [
                str(raw[0]),
                str(raw[1]),
                csv_field(raw[2]),
                csv_field(raw[3]),
                csv_field(raw[4]),
                csv_field(raw[5]),
                csv_field(raw[6]),
                csv_field(raw[7]),
                status,
                final_score,
                "true" if raw[10] else "false",
            ]
            lines.append(",".join(fields))
        return "\n".join(lines) + "\n"

    def question_in_use(self, question_id: int) -> bool:
        """True when any non-Checked session has the question assigned."""
        with self.lock:
            rows = self.conn.execute(
                "SELECT answers FROM results WHERE status != ?",
                (SessionStatus.CHECKED.value,),
            ).fetchall()
        for (answers,) in rows:
            doc = parse_session_document(unescape_answer_text(answers))
            if any(e["question_id"] == question_id for e in doc["assignment"]):
                return True
        return False

    # --- session tokens -------------------------------------------------------

    def issue_session_token(self, result_id: int) -> str:
        token = secrets.token_urlsafe(32)
        with self.transaction() as conn:
            conn.execute(
                "INSERT OR REPLACE INTO session_tokens (result_id, token)"
                " VALUES (?, ?)",
                (result_id, token),
            )
        return token

    def session_id_for_token(self, token: str) -> Optional[int]:
        with self.lock:
            row = self.conn.execute(
                "SELECT result_id FROM session_tokens WHERE token = ?", (token,)
            ).fetchone()
        return row[0] if row else None

    # --- teachers ----------------------------------------------------------------

    def add_teacher(self, name: str, is_admin: bool = False) -> dict:
        token = secrets.token_urlsafe(32)
        with self.transaction() as conn:
            cur = conn.execute(
                "INSERT INTO teachers (name, token, is_admin) VALUES (?,?,?)",
                (name, token, int(is_admin)),
            )
        return {"id": cur.lastrowid, "name": name, "token": token, "is_admin": is_admin}

    def ensure_admin(self, name: str, token: str) -> None:
        """Bootstrap credential from config; updates the token if the name exists."""
        with self.transaction() as conn:
            conn.execute(
                "INSERT INTO teachers (name, token, is_admin) VALUES (?,?,1)"
                " ON CONFLICT(name) DO UPDATE SET token=excluded.token, is_admin=1",
                (name, token),
            )

    def teacher_by_token(self, token: str) -> Optional[dict]:
        with self.lock:
            row = self.conn.execute(
                "SELECT id, name, is_admin FROM teachers WHERE token = ?", (token,)
            ).fetchone()
        if row is None:
            return None
        return {"id": row[0], "name": row[1], "is_admin": bool(row[2])}

    def list_teachers(self) -> list[dict]:
        with self.lock:
            rows = self.conn.execute(
                "SELECT id, name, is_admin FROM teachers ORDER BY id"
            ).fetchall()
        return [{"id": r[0], "name": r[1], "is_admin": bool(r[2])} for r in rows]

    def delete_teacher(self, teacher_id: int) -> None:
        with self.transaction() as conn:
            cur = conn.execute("DELETE FROM teachers WHERE id = ?", (teacher_id,))
            if cur.rowcount == 0:
                raise UnknownTeacher(f"teacher {teacher_id} does not exist")
