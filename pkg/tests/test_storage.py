import csv
import io
from dataclasses import replace
from datetime import datetime
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from odes import errors
from odes.engine import start_session
from odes.grading import finalize_grading, grade_essay, mark_successful, submit_answers
from odes.model import ExamSession, SessionStatus, StudentDetails
from odes.storage import (
    CSV_HEADER,
    ResultsRow,
    build_session_document,
    csv_field,
    escape_answer_text,
    row_to_session,
    session_to_row,
    unescape_answer_text,
    validate_results_row,
)
from support import T0, T1, make_spec, make_session, seed_bank, three_session_scenario


class TestEscaping:
    def test_quotes_get_backslash(self):
        assert escape_answer_text('say "hi"') == 'say \\"hi\\"'

    def test_backslash_escaped_first(self):
        assert escape_answer_text('a\\b"c') == 'a\\\\b\\"c'

    def test_empty_is_identity(self):
        assert escape_answer_text("") == ""
        assert unescape_answer_text("") == ""

    def test_unescape_inverts(self):
        raw = 'He wrote \\ and " together \\" done'
        assert unescape_answer_text(escape_answer_text(raw)) == raw

    def test_lone_trailing_backslash_rejected(self):
        with pytest.raises(errors.MalformedEscape):
            unescape_answer_text("abc\\")

    def test_invalid_escape_rejected(self):
        with pytest.raises(errors.MalformedEscape):
            unescape_answer_text("a\\nb")

    @given(st.text())
    @settings(max_examples=300)
    def test_round_trip_property(self, raw):
        assert unescape_answer_text(escape_answer_text(raw)) == raw


class TestResultsRowBounds:
    def make_row(self, **overrides):
        base = dict(
            result_id=1,
            diagonisma_id=1,
            first_name="Anna",
            second_name="Ioannou",
            am="123",
            etos_spoudon="2",
            tmima="Informatics",
            time_submitted="",
            status="Open",
            answers="{}",
            final_score="",
            successful=False,
        )
        base.update(overrides)
        return ResultsRow(**base)

    def test_valid_row(self):
        row = self.make_row()
        assert validate_results_row(row) is row

    @pytest.mark.parametrize(
        "field,value",
        [
            ("first_name", "x" * 51),
            ("second_name", "x" * 51),
            ("am", "x" * 11),
            ("etos_spoudon", "x" * 21),
            ("tmima", "x" * 101),
            ("answers", "x" * 65536),
        ],
    )
    def test_field_too_long(self, field, value):
        with pytest.raises(errors.FieldTooLong):
            validate_results_row(self.make_row(**{field: value}))

    def test_result_id_digit_bound(self):
        with pytest.raises(errors.FieldTooLong):
            validate_results_row(self.make_row(result_id=10**9))

    def test_exam_id_digit_bound(self):
        with pytest.raises(errors.FieldTooLong):
            validate_results_row(self.make_row(diagonisma_id=10**11))


class TestSessionRoundTrip:
    def test_open_session_row_shape(self):
        spec = make_spec(n_mc=2, n_essay=1)
        session = make_session(spec)
        row = session_to_row(session)
        assert row.status == "Open"
        assert row.time_submitted == ""
        assert row.final_score == ""

    def test_document_round_trip_is_lossless(self):
        spec = make_spec(n_mc=2, n_essay=1, w_essay=6)
        session = make_session(spec, status=SessionStatus.FINALIZED)
        session = replace(
            session,
            answers={1: 0, 2: 3, 3: 'quoted "text" with \\ backslash'},
            essay_grades={3: Fraction(7, 2)},
        )
        checked = replace(
            session, status=SessionStatus.CHECKED, final_score=Fraction(5)
        )
        assert row_to_session(session_to_row(checked)) == checked

    def test_db_save_load_checked_session(self, db, bank):
        category, _ = seed_bank(bank, n_mc=2, n_essay=1)
        spec = db.create_exam(
            make_spec(n_mc=2, n_essay=1, w_essay=6, randomize=False,
                      source_category=category.id)
        )
        student = StudentDetails("Anna", "Ioannou", "42", "1", "Physics")
        session = start_session(db, bank, spec, student, now=T0, seed=5)
        essay_id = session.essay_question_ids()[0]
        mc_ids = session.mc_question_ids()
        answers = {mc_ids[0]: 0, mc_ids[1]: 2, essay_id: 'adversarial \\ "essay"'}
        session = db.update_session(
            session.result_id, lambda s: submit_answers(s, spec, answers, T1)
        )
        session = db.update_session(
            session.result_id, lambda s: grade_essay(s, spec, essay_id, 4)
        )
        session = db.update_session(
            session.result_id, lambda s: finalize_grading(s, spec)
        )
        session = db.update_session(
            session.result_id, lambda s: mark_successful(s, True)
        )
        assert db.load_session(session.result_id) == session

    def test_load_missing_result(self, db):
        with pytest.raises(errors.UnknownResult):
            db.load_session(4711)

    def test_exam_slugs(self, db, bank):
        category, _ = seed_bank(bank, n_mc=1)
        base = make_spec(n_mc=1, n_essay=0, source_category=category.id)
        derived = db.create_exam(replace(base, slug=None))
        assert derived.slug == "sample-exam"
        second = db.create_exam(replace(base, slug=None))
        assert second.slug == "sample-exam-2"
        explicit = db.create_exam(replace(base, slug="midterm-2024"))
        assert explicit.slug == "midterm-2024"
        with pytest.raises(errors.DuplicateSlug):
            db.create_exam(replace(base, slug="midterm-2024"))
        with pytest.raises(errors.ValidationFailure):
            db.create_exam(replace(base, slug="Not URL Safe!"))

    def test_result_ids_never_reused(self, db, bank):
        category, _ = seed_bank(bank, n_mc=1)
        spec = db.create_exam(
            make_spec(n_mc=1, n_essay=0, source_category=category.id)
        )
        student = StudentDetails("A", "B", "1")
        first = start_session(db, bank, spec, student, now=T0, seed=1)
        second = start_session(db, bank, spec, student, now=T0, seed=2)
        with db.transaction() as conn:
            conn.execute("DELETE FROM results WHERE result_id = ?", (second.result_id,))
        third = start_session(db, bank, spec, student, now=T0, seed=3)
        assert third.result_id > second.result_id > first.result_id


class TestAttendanceLog:
    def test_empty_exam(self, db, bank):
        category, _ = seed_bank(bank, n_mc=1)
        spec = db.create_exam(
            make_spec(n_mc=1, n_essay=0, source_category=category.id)
        )
        assert db.attendance_log(spec.id) == []

    def test_unknown_exam(self, db):
        with pytest.raises(errors.UnknownExam):
            db.attendance_log(999)

    def test_ordered_by_start_time(self, db, bank):
        spec = three_session_scenario(db, bank)
        log = db.attendance_log(spec.id)
        starts = [entry[1] for entry in log]
        assert starts == sorted(starts)
        assert [entry[3] for entry in log] == ["Open", "Finalized", "Checked"]

    def test_log_length_matches_row_count(self, db, bank):
        spec = three_session_scenario(db, bank)
        # brute-force count straight off the table
        (count,) = db.conn.execute(
            "SELECT COUNT(*) FROM results WHERE diagonisma_id = ?", (spec.id,)
        ).fetchone()
        assert len(db.attendance_log(spec.id)) == count == 3


class TestCsvExport:
    def test_csv_field_quoting(self):
        assert csv_field("plain") == "plain"
        assert csv_field("O'Hara, Ann") == '"O\'Hara, Ann"'
        assert csv_field('say "hi"') == '"say ""hi"""'
        assert csv_field("two\nlines") == '"two\nlines"'

    def test_empty_exam_exports_header_only(self, db, bank):
        category, _ = seed_bank(bank, n_mc=1)
        spec = db.create_exam(
            make_spec(n_mc=1, n_essay=0, source_category=category.id)
        )
        assert db.export_results_csv(spec.id) == CSV_HEADER + "\n"

    def test_unknown_exam(self, db):
        with pytest.raises(errors.UnknownExam):
            db.export_results_csv(999)

    def test_golden_three_status_export(self, db, bank, request):
        spec = three_session_scenario(db, bank)
        golden = (
            request.path.parent / "golden" / "results.csv"
        ).read_bytes()
        assert db.export_results_csv(spec.id).encode("utf-8") == golden

    def test_standard_reader_recovers_fields(self, db, bank):
        spec = three_session_scenario(db, bank)
        text = db.export_results_csv(spec.id)
        rows = list(csv.reader(io.StringIO(text)))
        assert rows[0] == CSV_HEADER.split(",")
        by_id = {row[0]: row for row in rows[1:]}
        assert by_id["2"][3] == "O'Hara, Ann"
        assert by_id["3"][9] == "7.50"
        assert by_id["1"][8] == "Open"
        assert [row[10] for row in rows[1:]] == ["false", "false", "true"]


class TestQuestionInUse:
    def test_open_session_blocks(self, db, bank):
        category, questions = seed_bank(bank, n_mc=1)
        spec = db.create_exam(
            make_spec(n_mc=1, n_essay=0, source_category=category.id)
        )
        start_session(db, bank, spec, StudentDetails("A", "B", "1"), now=T0, seed=1)
        assert db.question_in_use(questions[0].id)

    def test_checked_session_releases(self, db, bank):
        category, questions = seed_bank(bank, n_mc=1)
        spec = db.create_exam(
            make_spec(n_mc=1, n_essay=0, source_category=category.id)
        )
        session = start_session(
            db, bank, spec, StudentDetails("A", "B", "1"), now=T0, seed=1
        )
        db.update_session(
            session.result_id,
            lambda s: submit_answers(s, spec, {questions[0].id: 0}, T1),
        )
        # zero-essay exams grade straight to Checked on submit
        assert not db.question_in_use(questions[0].id)
