"""Operator command line.

Subcommands: serve | import-bank | create-exam | list-results | export-csv.
Configuration comes from a flat key=value file (--config) with
ODES_-prefixed environment variables taking precedence. Exit code is 0
only when the operation fully succeeded; a partial bank import keeps
its valid records but exits 1.
"""

from __future__ import annotations

import argparse
import errno
import json
import os
import socket
import sqlite3
import sys
from dataclasses import replace
from pathlib import Path

from . import errors
from .bank import QuestionBank
from .model import (
    ExamSpec,
    Question,
    QuestionKind,
    parse_points,
    slugify,
    validate_exam_spec,
    validate_question,
)
from .storage import Database

CONFIG_KEYS = ("listen", "storage", "admin_token", "ui")
DEFAULTS = {
    "listen": "127.0.0.1:8600",
    "storage": "odes.sqlite3",
    "admin_token": None,
    "ui": None,
}
ENV_PREFIX = "ODES_"


def load_config(path: str | None) -> dict:
    """File values under env overrides under defaults."""
    config = dict(DEFAULTS)
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise errors.OdesError(f"cannot read config {path}: {exc}") from exc
        for lineno, line in enumerate(text.splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise errors.BadConfig(f"{path}:{lineno}: expected key = value")
            key, _, value = stripped.partition("=")
            key = key.strip()
            if key not in CONFIG_KEYS:
                raise errors.BadConfig(f"{path}:{lineno}: unknown key {key!r}")
            config[key] = value.strip()
    for key in CONFIG_KEYS:
        env_value = os.environ.get(ENV_PREFIX + key.upper())
        if env_value is not None:
            config[key] = env_value
    return config


def _open_database(config: dict) -> Database:
    try:
        return Database(config["storage"])
    except sqlite3.OperationalError as exc:
        raise errors.StorageUnavailable(
            f"storage unavailable at {config['storage']}: {exc}"
        ) from exc


def _parse_listen(listen: str) -> tuple[str, int]:
    host, _, port = listen.rpartition(":")
    if not host or not port.isdigit():
        raise errors.BadConfig(f"listen must be host:port, got {listen!r}")
    return host, int(port)


def cmd_serve(config: dict) -> int:
    import uvicorn

    from .api import create_app

    host, port = _parse_listen(config["listen"])
    db = _open_database(config)
    if config["admin_token"]:
        db.ensure_admin("admin", config["admin_token"])
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((host, port))
    except OSError as exc:
        if exc.errno == errno.EADDRINUSE:
            raise errors.AddressInUse(f"address {host}:{port} already in use") from exc
        raise errors.StorageUnavailable(f"cannot bind {host}:{port}: {exc}") from exc
    finally:
        probe.close()
    app = create_app(db, ui_dir=config["ui"])
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


def _record_to_draft(record: dict) -> Question:
    kind_name = record.get("kind")
    kind = None
    if kind_name is not None:
        try:
            kind = QuestionKind(kind_name)
        except ValueError:
            raise errors.MissingKind(f"{kind_name!r} is not a question type")
    options = record.get("options")
    return Question(
        title=record.get("title", ""),
        description=record.get("description", ""),
        kind=kind,
        options=tuple(options) if options is not None else None,
        correct_index=record.get("correct_index"),
        categories=frozenset(),  # filled in after category resolution
        published=bool(record.get("published", False)),
    )


def cmd_import_bank(config: dict, file_path: str) -> int:
    path = Path(file_path)
    if not path.is_file():
        print(f"error: file_not_found: {file_path}", file=sys.stderr)
        return 1
    db = _open_database(config)
    bank = QuestionBank(db)

    existing = {
        (q.title, tuple(sorted(q.categories))): q.id for q in bank.list_questions()
    }
    created = 0
    duplicates = 0
    record_errors: list[tuple[int, str, str]] = []
    parsed_any = False
    lines = [
        (lineno, line)
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1)
        if line.strip()
    ]
    for lineno, line in lines:
        try:
            record = json.loads(line)
            if not isinstance(record, dict):
                raise ValueError("record must be a JSON object")
        except ValueError as exc:
            record_errors.append((lineno, "unparseable", str(exc)))
            continue
        parsed_any = True
        try:
            draft = _record_to_draft(record)
            names = record.get("categories") or []
            if not isinstance(names, list):
                raise errors.NoCategory("categories must be a list of names")
            category_ids = []
            for name in names:
                found = bank.category_by_slug(slugify(str(name), fallback="category"))
                if found is None:
                    found = bank.create_category(str(name))
                category_ids.append(found.id)
            draft = replace(draft, categories=frozenset(category_ids))
            validate_question(draft)
            key = (draft.title, tuple(sorted(draft.categories)))
            if key in existing:
                duplicates += 1
                continue
            stored = bank.create_question(draft)
            existing[key] = stored.id
            created += 1
        except errors.OdesError as exc:
            record_errors.append((lineno, exc.code, exc.message))
    if lines and not parsed_any:
        print("error: whole_file_unparseable: no line parsed as a question record",
              file=sys.stderr)
        return 1
    print(f"created {created}, duplicates {duplicates}, errors {len(record_errors)}")
    for lineno, code, message in record_errors:
        print(f"  line {lineno}: {code}: {message}", file=sys.stderr)
    return 0 if not record_errors else 1


def _resolve_category(bank: QuestionBank, value: str) -> int:
    if value.isdigit():
        return bank.get_category(int(value)).id
    found = bank.category_by_slug(value)
    if found is None:
        raise errors.UnknownCategory(f"no category with slug {value!r}")
    return found.id


def cmd_create_exam(config: dict, args: argparse.Namespace) -> int:
    db = _open_database(config)
    bank = QuestionBank(db)
    draft = ExamSpec(
        title=args.title,
        slug=args.slug,
        description=args.description,
        source_category=_resolve_category(bank, args.category),
        n_mc=args.mc,
        n_essay=args.essay,
        w_mc=parse_points(args.w_mc),
        penalty_mc=parse_points(args.penalty),
        w_essay=parse_points(args.w_essay),
        max_rating=args.max_rating,
        randomize=not args.no_randomize,
        published=not args.draft,
    )
    validate_exam_spec(draft, bank.category_exists)
    stored = db.create_exam(draft)
    print(f"created exam {stored.id} slug={stored.slug}")
    return 0


def cmd_list_results(config: dict, exam_id: int) -> int:
    db = _open_database(config)
    rows = db.list_sessions(exam_id)
    header = (
        "result_id", "first_name", "second_name", "am",
        "status", "final_score", "time_submitted",
    )
    table = [header] + [
        (
            str(r["result_id"]),
            r["first_name"],
            r["second_name"],
            r["am"],
            r["status"],
            r["final_score"] or "",
            r["time_submitted"] or "",
        )
        for r in rows
    ]
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    for row in table:
        print("  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip())
    return 0


def cmd_export_csv(config: dict, exam_id: int) -> int:
    db = _open_database(config)
    sys.stdout.write(db.export_results_csv(exam_id))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="odes", description="Online examination service operator tool."
    )
    parser.add_argument("--config", metavar="PATH", default=None,
                        help="flat key=value configuration file")
    commands = parser.add_subparsers(dest="command", required=True)

    commands.add_parser("serve", help="run the HTTP service")

    import_parser = commands.add_parser(
        "import-bank", help="bulk-load questions from a JSON-lines file"
    )
    import_parser.add_argument("file", help="one JSON question record per line")

    exam_parser = commands.add_parser("create-exam", help="store a new exam")
    exam_parser.add_argument("--title", required=True)
    exam_parser.add_argument("--slug", default=None)
    exam_parser.add_argument("--description", default="")
    exam_parser.add_argument("--category", required=True,
                             help="source category id or slug")
    exam_parser.add_argument("--mc", type=int, default=0,
                             help="number of multiple choice questions")
    exam_parser.add_argument("--essay", type=int, default=0,
                             help="number of essay questions")
    exam_parser.add_argument("--w-mc", default="1",
                             help="points per correct multiple choice answer")
    exam_parser.add_argument("--penalty", default="0",
                             help="points subtracted per wrong multiple choice answer")
    exam_parser.add_argument("--w-essay", default="1",
                             help="maximum points per essay")
    exam_parser.add_argument("--max-rating", type=int, default=10,
                             help="10 or 100")
    exam_parser.add_argument("--no-randomize", action="store_true",
                             help="same questions in the same order for everyone")
    exam_parser.add_argument("--draft", action="store_true",
                             help="store unpublished")

    results_parser = commands.add_parser("list-results", help="print the results table")
    results_parser.add_argument("--exam", type=int, required=True)

    csv_parser = commands.add_parser("export-csv", help="write results CSV to stdout")
    csv_parser.add_argument("--exam", type=int, required=True)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        if args.command == "serve":
            return cmd_serve(config)
        if args.command == "import-bank":
            return cmd_import_bank(config, args.file)
        if args.command == "create-exam":
            return cmd_create_exam(config, args)
        if args.command == "list-results":
            return cmd_list_results(config, args.exam)
        if args.command == "export-csv":
            return cmd_export_csv(config, args.exam)
        parser.error(f"unknown command {args.command}")
    except errors.BadConfig as exc:
        print(f"error: {exc.code}: {exc.message}", file=sys.stderr)
        return 2
    except (errors.OdesError, ValueError) as exc:
        code = getattr(exc, "code", "error")
        message = getattr(exc, "message", str(exc))
        print(f"error: {code}: {message}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
