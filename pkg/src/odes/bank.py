"""Question bank: category taxonomy and question CRUD.

Categories form a forest (parent links, no cycles); slug uniqueness and
cycle checks happen atomically with each write. Category filtering is
inclusive of descendants, so an exam drawing from a parent category
sees sub-category questions. Only published questions are eligible for
exam assembly.
"""

from __future__ import annotations

import json
from dataclasses import replace
from datetime import datetime
from typing import Iterable, Optional

from .errors import (
    CategoryInUse,
    CycleDetected,
    EmptyName,
    QuestionInUse,
    UnknownCategory,
    UnknownParent,
    UnknownQuestion,
)
from .model import (
    Category,
    Question,
    QuestionFilter,
    QuestionKind,
    format_timestamp,
    parse_timestamp,
    slugify,
    validate_question,
)
from .storage import Database, dedupe_slug

_UNSET = object()


class QuestionBank:
    def __init__(self, db: Database):
        self._db = db

    # --- categories ------------------------------------------------------------

    def create_category(self, name: str, parent: Optional[int] = None) -> Category:
        name = (name or "").strip()
        if not name:
            raise EmptyName("category name must not be empty", field="name")
        with self._db.transaction() as conn:
            if parent is not None and not self._category_row(parent):
                raise UnknownParent(f"parent category {parent} does not exist")
            slug = dedupe_slug(
                slugify(name, fallback="category"), self._category_slug_taken
            )
            cur = conn.execute(
                "INSERT INTO categories (name, slug, parent_id) VALUES (?,?,?)",
                (name, slug, parent),
            )
            return Category(id=cur.lastrowid, name=name, parent=parent, slug=slug)

    def get_category(self, category_id: int) -> Category:
        row = self._category_row(category_id)
        if row is None:
            raise UnknownCategory(f"category {category_id} does not exist")
        return Category(id=row[0], name=row[1], parent=row[2], slug=row[3])

    def category_exists(self, category_id: int) -> bool:
        return self._category_row(category_id) is not None

    def category_by_slug(self, slug: str) -> Optional[Category]:
        with self._db.lock:
            row = self._db.conn.execute(
                "SELECT id, name, parent_id, slug FROM categories WHERE slug = ?",
                (slug,),
            ).fetchone()
        if row is None:
            return None
        return Category(id=row[0], name=row[1], parent=row[2], slug=row[3])

    def list_categories(self) -> list[Category]:
        with self._db.lock:
            rows = self._db.conn.execute(
                "SELECT id, name, parent_id, slug FROM categories ORDER BY id"
            ).fetchall()
        return [Category(id=r[0], name=r[1], parent=r[2], slug=r[3]) for r in rows]

    def edit_category(
        self, category_id: int, new_name: Optional[str] = None, new_parent=_UNSET
    ) -> Category:
        """Rename and/or re-parent; slug never changes on rename.

        Pass ``new_parent=None`` to move a category to the root.
        """
        with self._db.transaction() as conn:
            current = self._category_row(category_id)
            if current is None:
                raise UnknownCategory(f"category {category_id} does not exist")
            name = current[1]
            parent = current[2]
            if new_name is not None:
                new_name = new_name.strip()
                if not new_name:
                    raise EmptyName("category name must not be empty", field="name")
                name = new_name
            if new_parent is not _UNSET:
                if new_parent is not None:
                    if not self._category_row(new_parent):
                        raise UnknownParent(
                            f"parent category {new_parent} does not exist"
                        )
                    if new_parent == category_id or category_id in self._ancestors(
                        new_parent
                    ):
                        raise CycleDetected(
                            f"category {new_parent} is {category_id} or its descendant"
                        )
                parent = new_parent
            conn.execute(
                "UPDATE categories SET name = ?, parent_id = ? WHERE id = ?",
                (name, parent, category_id),
            )
            return Category(id=category_id, name=name, parent=parent, slug=current[3])

    def delete_category(self, category_id: int) -> None:
        """Remove a category; children re-parent one level up.

        Fails with CategoryInUse if any question would be left with no
        category at all.
        """
        with self._db.transaction() as conn:
            row = self._category_row(category_id)
            if row is None:
                raise UnknownCategory(f"category {category_id} does not exist")
            sole_owners = conn.execute(
                "SELECT question_id FROM question_categories WHERE question_id IN"
                " (SELECT question_id FROM question_categories WHERE category_id = ?)"
                " GROUP BY question_id HAVING COUNT(*) = 1",
                (category_id,),
            ).fetchall()
            if sole_owners:
                ids = ", ".join(str(q[0]) for q in sole_owners)
                raise CategoryInUse(
                    f"questions {ids} have category {category_id} as their only category"
                )
            conn.execute(
                "UPDATE categories SET parent_id = ? WHERE parent_id = ?",
                (row[2], category_id),
            )
            conn.execute(
                "DELETE FROM question_categories WHERE category_id = ?",
                (category_id,),
            )
            conn.execute("DELETE FROM categories WHERE id = ?", (category_id,))

    def descendant_ids(self, category_id: int) -> set[int]:
        """The category and every category below it."""
        if not self.category_exists(category_id):
            raise UnknownCategory(f"category {category_id} does not exist")
        with self._db.lock:
            rows = self._db.conn.execute(
                "SELECT id, parent_id FROM categories"
            ).fetchall()
        children: dict[int, list[int]] = {}
        for cid, parent in rows:
            children.setdefault(parent, []).append(cid)
        found = {category_id}
        frontier = [category_id]
        while frontier:
            node = frontier.pop()
            for child in children.get(node, ()):
                if child not in found:
                    found.add(child)
                    frontier.append(child)
        return found

    def _ancestors(self, category_id: int) -> set[int]:
        seen: set[int] = set()
        node = self._category_row(category_id)
        while node is not None and node[2] is not None:
            parent = node[2]
            if parent in seen:  # defensive; the write path forbids cycles
                break
            seen.add(parent)
            node = self._category_row(parent)
        return seen

    def _category_row(self, category_id: int):
        with self._db.lock:
            return self._db.conn.execute(
                "SELECT id, name, parent_id, slug FROM categories WHERE id = ?",
                (category_id,),
            ).fetchone()

    def _category_slug_taken(self, slug: str) -> bool:
        return (
            self._db.conn.execute(
                "SELECT 1 FROM categories WHERE slug = ?", (slug,)
            ).fetchone()
            is not None
        )

    # --- questions --------------------------------------------------------------

    def create_question(
        self, draft: Question, now: Optional[datetime] = None
    ) -> Question:
        validate_question(draft)
        created_at = now or datetime.now()
        with self._db.transaction() as conn:
            self._check_categories(draft.categories)
            cur = conn.execute(
                "INSERT INTO questions (title, description, kind, options,"
                " correct_index, published, created_at) VALUES (?,?,?,?,?,?,?)",
                (
                    draft.title,
                    draft.description,
                    draft.kind.value,
                    json.dumps(list(draft.options)) if draft.options else None,
                    draft.correct_index,
                    int(draft.published),
                    format_timestamp(created_at),
                ),
            )
            question_id = cur.lastrowid
            for category_id in sorted(draft.categories):
                conn.execute(
                    "INSERT INTO question_categories (question_id, category_id)"
                    " VALUES (?,?)",
                    (question_id, category_id),
                )
        return replace(draft, id=question_id, created_at=created_at)

    def update_question(self, question_id: int, draft: Question) -> Question:
        """Replace a question's content; existing sessions keep their snapshots."""
        validate_question(draft)
        current = self.get_question(question_id)
        with self._db.transaction() as conn:
            self._check_categories(draft.categories)
            conn.execute(
                "UPDATE questions SET title=?, description=?, kind=?, options=?,"
                " correct_index=?, published=? WHERE id=?",
                (
                    draft.title,
                    draft.description,
                    draft.kind.value,
                    json.dumps(list(draft.options)) if draft.options else None,
                    draft.correct_index,
                    int(draft.published),
                    question_id,
                ),
            )
            conn.execute(
                "DELETE FROM question_categories WHERE question_id = ?",
                (question_id,),
            )
            for category_id in sorted(draft.categories):
                conn.execute(
                    "INSERT INTO question_categories (question_id, category_id)"
                    " VALUES (?,?)",
                    (question_id, category_id),
                )
        return replace(draft, id=question_id, created_at=current.created_at)

    def delete_question(self, question_id: int) -> None:
        if self._question_row(question_id) is None:
            raise UnknownQuestion(f"question {question_id} does not exist")
        if self._db.question_in_use(question_id):
            raise QuestionInUse(
                f"question {question_id} is assigned in a session that is not Checked"
            )
        with self._db.transaction() as conn:
            conn.execute(
                "DELETE FROM question_categories WHERE question_id = ?",
                (question_id,),
            )
            conn.execute("DELETE FROM questions WHERE id = ?", (question_id,))

    def get_question(self, question_id: int) -> Question:
        row = self._question_row(question_id)
        if row is None:
            raise UnknownQuestion(f"question {question_id} does not exist")
        return self._question_from_row(row)

    def list_questions(self, filt: Optional[QuestionFilter] = None) -> list[Question]:
        """Questions matching the filter, newest first (id breaks ties).

        A category filter matches the category itself or any descendant.
        """
        filt = filt or QuestionFilter()
        subtree: Optional[set[int]] = None
        if filt.category is not None:
            subtree = self.descendant_ids(filt.category)  # raises UnknownCategory
        with self._db.lock:
            rows = self._db.conn.execute(
                "SELECT id, title, description, kind, options, correct_index,"
                " published, created_at FROM questions"
            ).fetchall()
        questions = [self._question_from_row(row) for row in rows]
        out = []
        for q in questions:
            if filt.kind is not None and q.kind is not filt.kind:
                continue
            if filt.published_only and not q.published:
                continue
            if subtree is not None and not (q.categories & subtree):
                continue
            out.append(q)
        out.sort(key=lambda q: (q.created_at, -q.id), reverse=True)
        return out

    def count_available(self, category_id: int, kind: QuestionKind) -> int:
        """Published questions of the kind in the category subtree."""
        return len(
            self.list_questions(
                QuestionFilter(category=category_id, kind=kind, published_only=True)
            )
        )

    def eligible_pools(self, category_id: int) -> tuple[list[Question], list[Question]]:
        """(multiple choice, essay) pools eligible for exam assembly."""
        mc = self.list_questions(
            QuestionFilter(
                category=category_id,
                kind=QuestionKind.MULTIPLE_CHOICE,
                published_only=True,
            )
        )
        essay = self.list_questions(
            QuestionFilter(
                category=category_id, kind=QuestionKind.ESSAY, published_only=True
            )
        )
        return mc, essay

    def _check_categories(self, category_ids: Iterable[int]) -> None:
        for category_id in sorted(category_ids):
            if not self._category_row(category_id):
                raise UnknownCategory(f"category {category_id} does not exist")

    def _question_row(self, question_id: int):
        with self._db.lock:
            return self._db.conn.execute(
                "SELECT id, title, description, kind, options, correct_index,"
                " published, created_at FROM questions WHERE id = ?",
                (question_id,),
            ).fetchone()

    def _question_from_row(self, row) -> Question:
        with self._db.lock:
            cats = self._db.conn.execute(
                "SELECT category_id FROM question_categories WHERE question_id = ?",
                (row[0],),
            ).fetchall()
        return Question(
            id=row[0],
            title=row[1],
            description=row[2],
            kind=QuestionKind(row[3]),
            options=tuple(json.loads(row[4])) if row[4] else None,
            correct_index=row[5],
            published=bool(row[6]),
            created_at=parse_timestamp(row[7]),
            categories=frozenset(c[0] for c in cats),
        )
