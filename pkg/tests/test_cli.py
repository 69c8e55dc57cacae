import json
import socket

import pytest

from odes import errors
from odes.cli import load_config, main
from odes.storage import Database

MC_RECORD = {
    "title": "Which device forwards frames?",
    "kind": "multiple_choice",
    "options": ["Hub", "Switch", "Repeater", "Modem"],
    "correct_index": 1,
    "categories": ["Networks"],
    "published": True,
}

ESSAY_RECORD = {
    "title": "Describe the OSI model.",
    "kind": "essay",
    "categories": ["Networks"],
    "published": True,
}


@pytest.fixture
def env(tmp_path, monkeypatch):
    storage = tmp_path / "odes.sqlite3"
    monkeypatch.setenv("ODES_STORAGE", str(storage))
    monkeypatch.delenv("ODES_LISTEN", raising=False)
    monkeypatch.delenv("ODES_ADMIN_TOKEN", raising=False)
    return storage


def write_bank(tmp_path, records):
    path = tmp_path / "bank.jsonl"
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")
    return path


class TestConfig:
    def test_defaults(self):
        config = load_config(None)
        assert config["listen"] == "127.0.0.1:8600"
        assert config["storage"] == "odes.sqlite3"

    def test_file_values(self, tmp_path, monkeypatch):
        monkeypatch.delenv("ODES_LISTEN", raising=False)
        path = tmp_path / "odes.conf"
        path.write_text("# comment\nlisten = 0.0.0.0:9000\nstorage = /tmp/db\n")
        config = load_config(str(path))
        assert config["listen"] == "0.0.0.0:9000"
        assert config["storage"] == "/tmp/db"

    def test_env_overrides_file(self, tmp_path, monkeypatch):
        path = tmp_path / "odes.conf"
        path.write_text("listen = 0.0.0.0:9000\n")
        monkeypatch.setenv("ODES_LISTEN", "127.0.0.1:1234")
        assert load_config(str(path))["listen"] == "127.0.0.1:1234"

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "odes.conf"
        path.write_text("listne = 0.0.0.0:9000\n")
        with pytest.raises(errors.BadConfig) as info:
            load_config(str(path))
        assert "line" not in info.value.message or ":1:" in info.value.message

    def test_malformed_line_names_position(self, tmp_path):
        path = tmp_path / "odes.conf"
        path.write_text("listen = ok\nbroken-line\n")
        with pytest.raises(errors.BadConfig) as info:
            load_config(str(path))
        assert ":2:" in info.value.message

    def test_bad_config_exits_2(self, tmp_path, env):
        path = tmp_path / "odes.conf"
        path.write_text("nonsense\n")
        assert main(["--config", str(path), "list-results", "--exam", "1"]) == 2


class TestImportBank:
    def test_import_creates_questions_and_categories(self, tmp_path, env, capsys):
        records = [MC_RECORD] + [
            {**MC_RECORD, "title": f"Question {i}"} for i in range(4)
        ]
        assert main(["import-bank", str(write_bank(tmp_path, records))]) == 0
        assert "created 5, duplicates 0, errors 0" in capsys.readouterr().out
        db = Database(env)
        (count,) = db.conn.execute("SELECT COUNT(*) FROM questions").fetchone()
        (categories,) = db.conn.execute("SELECT COUNT(*) FROM categories").fetchone()
        assert count == 5
        assert categories == 1
        db.close()

    def test_reimport_reports_duplicates(self, tmp_path, env, capsys):
        records = [MC_RECORD, ESSAY_RECORD]
        path = write_bank(tmp_path, records)
        assert main(["import-bank", str(path)]) == 0
        assert main(["import-bank", str(path)]) == 0
        assert "created 0, duplicates 2, errors 0" in capsys.readouterr().out

    def test_bad_record_isolated(self, tmp_path, env, capsys):
        records = [
            MC_RECORD,
            {**MC_RECORD, "title": "Broken", "options": ["a", "b", "c"]},
            ESSAY_RECORD,
        ]
        code = main(["import-bank", str(write_bank(tmp_path, records))])
        captured = capsys.readouterr()
        assert code == 1  # record errors exit nonzero
        assert "created 2, duplicates 0, errors 1" in captured.out
        assert "bad_options" in captured.err

    def test_missing_file(self, env, capsys):
        assert main(["import-bank", "/nowhere/bank.jsonl"]) == 1
        assert "file_not_found" in capsys.readouterr().err

    def test_garbage_file(self, tmp_path, env, capsys):
        path = tmp_path / "bank.jsonl"
        path.write_text("not json\nalso not json\n")
        assert main(["import-bank", str(path)]) == 1
        assert "whole_file_unparseable" in capsys.readouterr().err


class TestCreateExam:
    def seed(self, tmp_path, env):
        main(["import-bank", str(write_bank(tmp_path, [MC_RECORD, ESSAY_RECORD]))])

    def test_create_by_slug(self, tmp_path, env, capsys):
        self.seed(tmp_path, env)
        code = main([
            "create-exam", "--title", "Basics", "--category", "networks",
            "--mc", "1", "--essay", "1", "--w-mc", "1", "--w-essay", "6",
        ])
        assert code == 0
        assert "created exam 1 slug=basics" in capsys.readouterr().out

    def test_bad_max_rating_exits_nonzero(self, tmp_path, env, capsys):
        self.seed(tmp_path, env)
        code = main([
            "create-exam", "--title", "Basics", "--category", "networks",
            "--mc", "1", "--max-rating", "20",
        ])
        assert code == 1
        assert "bad_max_rating" in capsys.readouterr().err

    def test_unknown_category(self, tmp_path, env, capsys):
        code = main(["create-exam", "--title", "X", "--category", "ghost", "--mc", "1"])
        assert code == 1
        assert "unknown_category" in capsys.readouterr().err


class TestResultsCommands:
    def seed_sessions(self, tmp_path, env):
        from datetime import datetime

        from odes.bank import QuestionBank
        from odes.engine import start_session
        from odes.grading import submit_answers

        main(["import-bank", str(write_bank(tmp_path, [MC_RECORD, ESSAY_RECORD]))])
        main([
            "create-exam", "--title", "Basics", "--category", "networks",
            "--mc", "1", "--essay", "1", "--w-essay", "6",
        ])
        db = Database(env)
        bank = QuestionBank(db)
        spec = db.get_exam(1)
        from odes.model import StudentDetails

        open_session = start_session(
            db, bank, spec, StudentDetails("Anna", "Ioannou", "1"),
            now=datetime(2024, 3, 1, 9, 0, 0), seed=1,
        )
        submitted = start_session(
            db, bank, spec, StudentDetails("Nikos", "Pappas", "2"),
            now=datetime(2024, 3, 1, 9, 1, 0), seed=2,
        )
        db.update_session(
            submitted.result_id,
            lambda s: submit_answers(s, spec, {}, datetime(2024, 3, 1, 9, 30, 0)),
        )
        db.close()

    def test_list_results_statuses(self, tmp_path, env, capsys):
        self.seed_sessions(tmp_path, env)
        capsys.readouterr()  # drain seeding output
        assert main(["list-results", "--exam", "1"]) == 0
        out = capsys.readouterr().out
        lines = out.strip().splitlines()
        assert lines[0].split()[:2] == ["result_id", "first_name"]
        statuses = {line.split()[4] for line in lines[1:]}
        assert statuses <= {"Open", "Finalized", "Checked"}
        assert statuses == {"Open", "Finalized"}

    def test_export_csv_matches_storage_bytes(self, tmp_path, env, capsys):
        self.seed_sessions(tmp_path, env)
        capsys.readouterr()  # drain seeding output
        assert main(["export-csv", "--exam", "1"]) == 0
        out = capsys.readouterr().out
        db = Database(env)
        assert out == db.export_results_csv(1)
        db.close()

    def test_unknown_exam_exits_nonzero(self, tmp_path, env, capsys):
        self.seed_sessions(tmp_path, env)
        assert main(["export-csv", "--exam", "99"]) == 1
        assert "unknown_exam" in capsys.readouterr().err


class TestServeErrors:
    def test_port_in_use(self, env, monkeypatch, capsys):
        blocker = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        blocker.bind(("127.0.0.1", 0))
        port = blocker.getsockname()[1]
        monkeypatch.setenv("ODES_LISTEN", f"127.0.0.1:{port}")
        try:
            assert main(["serve"]) == 1
            assert "address_in_use" in capsys.readouterr().err
        finally:
            blocker.close()

    def test_bad_listen_value(self, env, monkeypatch, capsys):
        monkeypatch.setenv("ODES_LISTEN", "nonsense")
        assert main(["serve"]) == 2
        assert "bad_config" in capsys.readouterr().err
