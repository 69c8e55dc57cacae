// Teacher screens: credential prompt, dashboard with authoring forms,
// per-exam results table, and the essay grading view.

import { ApiError, GradingView, QuestionDraft } from "./api.js";
import { AppContext, TEACHER_KEY, teacherToken } from "./app.js";
import { clear, el } from "./dom.js";
import { validateEssayPoints } from "./validation.js";

function loginForm(ctx: AppContext, main: HTMLElement): void {
  main.append(el("h1", {}, ["Teacher sign-in"]));
  const input = el("input", {
    type: "password",
    name: "token",
    placeholder: "Access token",
  });
  const message = el("p", { class: "field-error", "data-field": "token" });
  const form = el("form", { class: "login-form" }, [
    el("label", {}, ["Access token", input]),
    el("button", { type: "submit" }, ["Sign in"]),
    message,
  ]);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void (async () => {
      try {
        await ctx.client.listExams(input.value);
        ctx.storage.setItem(TEACHER_KEY, input.value);
        await ctx.render("#/teacher");
      } catch (error) {
        message.textContent =
          error instanceof ApiError && error.status === 401
            ? "That token was not accepted."
            : String(error);
      }
    })();
  });
  main.append(form);
}

function mcOptionFields(): HTMLElement {
  const wrap = el("div", { class: "mc-options" });
  for (let i = 0; i < 4; i += 1) {
    wrap.append(
      el("label", {}, [
        `Option ${i + 1}`,
        el("input", { name: `option${i}`, maxlength: 500 }),
      ]),
    );
  }
  const correct = el("select", { name: "correct_index" });
  for (let i = 0; i < 4; i += 1) {
    correct.append(el("option", { value: i }, [`Option ${i + 1}`]));
  }
  wrap.append(el("label", {}, ["Correct answer", correct]));
  return wrap;
}

function questionForm(ctx: AppContext, token: string): HTMLElement {
  const section = el("section", { class: "panel question-form" }, [
    el("h2", {}, ["New question"]),
  ]);
  const title = el("input", { name: "title", maxlength: 500 });
  const description = el("textarea", { name: "description", rows: 3 });
  const kind = el("select", { name: "kind" }, [
    el("option", { value: "multiple_choice" }, ["Multiple choice"]),
    el("option", { value: "essay" }, ["Long answer (essay)"]),
  ]);
  const optionFields = mcOptionFields();
  const categories = el("select", { name: "categories" });
  const published = el("input", { type: "checkbox", name: "published" });
  const message = el("p", { class: "form-message" });

  void ctx.client.listCategories(token).then((list) => {
    for (const category of list) {
      categories.append(el("option", { value: category.id }, [category.name]));
    }
  });

  // the option inputs only exist for multiple choice; swapping the kind
  // swaps the visible fields
  kind.addEventListener("change", () => {
    optionFields.hidden = kind.value !== "multiple_choice";
  });

  const form = el("form", {}, [
    el("label", {}, ["Title", title]),
    el("label", {}, ["Description (optional)", description]),
    el("label", {}, ["Question type", kind]),
    optionFields,
    el("label", {}, ["Category", categories]),
    el("label", { class: "inline" }, [published, "Publish immediately"]),
    el("button", { type: "submit" }, ["Save question"]),
    message,
  ]);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const draft: QuestionDraft = {
      title: title.value,
      description: description.value,
      kind: kind.value,
      categories: categories.value ? [Number(categories.value)] : [],
      published: published.checked,
    };
    if (kind.value === "multiple_choice") {
      draft.options = [0, 1, 2, 3].map(
        (i) =>
          form.querySelector<HTMLInputElement>(`input[name="option${i}"]`)!
            .value,
      );
      draft.correct_index = Number(
        form.querySelector<HTMLSelectElement>('select[name="correct_index"]')!
          .value,
      );
    }
    void (async () => {
      try {
        const stored = await ctx.client.createQuestion(token, draft);
        message.textContent = `Saved question #${stored.id}.`;
        form.querySelectorAll("input, textarea").forEach((node) => {
          if (node instanceof HTMLInputElement && node.type === "checkbox") {
            node.checked = false;
          } else if (
            node instanceof HTMLInputElement ||
            node instanceof HTMLTextAreaElement
          ) {
            node.value = "";
          }
        });
      } catch (error) {
        message.textContent =
          error instanceof ApiError ? error.message : String(error);
      }
    })();
  });
  section.append(form);
  return section;
}

function categoryForm(ctx: AppContext, token: string): HTMLElement {
  const section = el("section", { class: "panel category-form" }, [
    el("h2", {}, ["New category"]),
  ]);
  const name = el("input", { name: "name" });
  const parent = el("select", { name: "parent" }, [
    el("option", { value: "" }, ["(top level)"]),
  ]);
  const message = el("p", { class: "form-message" });
  void ctx.client.listCategories(token).then((list) => {
    for (const category of list) {
      parent.append(el("option", { value: category.id }, [category.name]));
    }
  });
  const form = el("form", {}, [
    el("label", {}, ["Name", name]),
    el("label", {}, ["Parent category", parent]),
    el("button", { type: "submit" }, ["Add category"]),
    message,
  ]);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void (async () => {
      try {
        const created = await ctx.client.createCategory(
          token,
          name.value,
          parent.value ? Number(parent.value) : null,
        );
        message.textContent = `Added ${created.name} (${created.slug}).`;
        name.value = "";
      } catch (error) {
        message.textContent =
          error instanceof ApiError ? error.message : String(error);
      }
    })();
  });
  section.append(form);
  return section;
}

function examForm(ctx: AppContext, token: string): HTMLElement {
  const section = el("section", { class: "panel exam-form-panel" }, [
    el("h2", {}, ["New exam"]),
  ]);
  const title = el("input", { name: "title", maxlength: 500 });
  const category = el("select", { name: "source_category" });
  const nMc = el("input", { name: "n_mc", type: "number", min: 0, value: 0 });
  const wMc = el("input", { name: "w_mc", value: "1" });
  const penalty = el("input", { name: "penalty_mc", value: "0" });
  const nEssay = el("input", {
    name: "n_essay",
    type: "number",
    min: 0,
    value: 0,
  });
  const wEssay = el("input", { name: "w_essay", value: "1" });
  const maxRating = el("select", { name: "max_rating" }, [
    el("option", { value: 10 }, ["10"]),
    el("option", { value: 100 }, ["100"]),
  ]);
  const randomize = el("input", {
    type: "checkbox",
    name: "randomize",
    checked: true,
  });
  const published = el("input", { type: "checkbox", name: "published" });
  const message = el("p", { class: "form-message" });
  void ctx.client.listCategories(token).then((list) => {
    for (const entry of list) {
      category.append(el("option", { value: entry.id }, [entry.name]));
    }
  });
  const form = el("form", {}, [
    el("label", {}, ["Title", title]),
    el("label", {}, ["Question category", category]),
    el("label", {}, ["Multiple choice questions", nMc]),
    el("label", {}, ["Importance per correct answer", wMc]),
    el("label", {}, ["Penalty per wrong answer", penalty]),
    el("label", {}, ["Long answer questions", nEssay]),
    el("label", {}, ["Importance per long answer", wEssay]),
    el("label", {}, ["Maximum rating", maxRating]),
    el("label", { class: "inline" }, [randomize, "Randomize questions"]),
    el("label", { class: "inline" }, [published, "Publish immediately"]),
    el("button", { type: "submit" }, ["Save exam"]),
    message,
  ]);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void (async () => {
      try {
        const created = await ctx.client.createExam(token, {
          title: title.value,
          description: "",
          source_category: Number(category.value),
          n_mc: Number(nMc.value),
          n_essay: Number(nEssay.value),
          w_mc: wMc.value,
          penalty_mc: penalty.value,
          w_essay: wEssay.value,
          max_rating: Number(maxRating.value),
          randomize: randomize.checked,
          published: published.checked,
        });
        message.textContent = `Saved exam #${created.id} (${created.slug}).`;
        await ctx.render("#/teacher");
      } catch (error) {
        message.textContent =
          error instanceof ApiError ? error.message : String(error);
      }
    })();
  });
  section.append(form);
  return section;
}

export async function teacherScreen(
  ctx: AppContext,
  main: HTMLElement,
): Promise<void> {
  const token = teacherToken(ctx);
  if (!token) {
    loginForm(ctx, main);
    return;
  }
  let exams;
  try {
    exams = await ctx.client.listExams(token);
  } catch (error) {
    if (error instanceof ApiError && error.status === 401) {
      ctx.storage.removeItem(TEACHER_KEY);
      loginForm(ctx, main);
      return;
    }
    throw error;
  }
  main.append(el("h1", {}, ["Teacher dashboard"]));
  const table = el("table", { class: "exam-table" }, [
    el("thead", {}, [
      el("tr", {}, [
        el("th", {}, ["Exam"]),
        el("th", {}, ["Questions"]),
        el("th", {}, ["Published"]),
        el("th", {}, ["Results"]),
      ]),
    ]),
  ]);
  const body = el("tbody");
  for (const exam of exams) {
    body.append(
      el("tr", { "data-exam-id": exam.id }, [
        el("td", {}, [exam.title]),
        el("td", {}, [`${exam.n_mc} MC + ${exam.n_essay} essay`]),
        el("td", {}, [exam.published ? "yes" : "draft"]),
        el("td", {}, [
          el(
            "a",
            {
              href: `#/teacher/results/${exam.id}`,
              onclick: () => void ctx.navigate(`#/teacher/results/${exam.id}`),
            },
            ["Results"],
          ),
        ]),
      ]),
    );
  }
  table.append(body);
  main.append(el("section", { class: "panel" }, [el("h2", {}, ["Exams"]), table]));
  main.append(examForm(ctx, token));
  main.append(questionForm(ctx, token));
  main.append(categoryForm(ctx, token));
}

export async function resultsScreen(
  ctx: AppContext,
  main: HTMLElement,
  examId: number,
): Promise<void> {
  const token = teacherToken(ctx);
  if (!token) {
    loginForm(ctx, main);
    return;
  }
  const rows = await ctx.client.examResults(token, examId);
  main.append(el("h1", {}, [`Results for exam #${examId}`]));
  const downloadMessage = el("span", { class: "form-message" });
  const download = el(
    "button",
    { type: "button", class: "csv-download" },
    ["Download CSV"],
  );
  download.addEventListener("click", () => {
    void (async () => {
      const csv = await ctx.client.resultsCsv(token, examId);
      try {
        const url = URL.createObjectURL(
          new Blob([csv], { type: "text/csv" }),
        );
        const anchor = el("a", {
          href: url,
          download: `exam-${examId}-results.csv`,
        });
        anchor.click();
        URL.revokeObjectURL(url);
      } catch {
        downloadMessage.textContent = "CSV fetched; saving is not available here.";
      }
    })();
  });
  main.append(el("p", {}, [download, downloadMessage]));
  const table = el("table", { class: "results-table" }, [
    el("thead", {}, [
      el("tr", {}, [
        el("th", {}, ["Student"]),
        el("th", {}, ["Registry"]),
        el("th", {}, ["Status"]),
        el("th", {}, ["Grade"]),
        el("th", {}, ["Entry date"]),
        el("th", {}, ["Successful"]),
        el("th", {}, [""]),
      ]),
    ]),
  ]);
  const body = el("tbody");
  for (const row of rows) {
    const successToggle = el("input", {
      type: "checkbox",
      class: "successful-toggle",
      ...(row.successful ? { checked: true } : {}),
      ...(row.status !== "Checked" ? { disabled: true } : {}),
    });
    successToggle.addEventListener("change", () => {
      void ctx.client.markSuccessful(
        token,
        row.result_id,
        successToggle.checked,
      );
    });
    body.append(
      el("tr", { "data-result-id": row.result_id }, [
        el("td", {}, [`${row.first_name} ${row.second_name}`]),
        el("td", {}, [row.am]),
        el("td", { class: "status" }, [row.status]),
        el("td", { class: "grade" }, [row.final_score ?? ""]),
        el("td", {}, [row.time_started]),
        el("td", {}, [successToggle]),
        el("td", {}, [
          el(
            "a",
            {
              href: `#/teacher/grade/${row.result_id}`,
              onclick: () =>
                void ctx.navigate(`#/teacher/grade/${row.result_id}`),
            },
            ["Open"],
          ),
        ]),
      ]),
    );
  }
  table.append(body);
  main.append(table);
}

function gradingQuestionBlock(
  ctx: AppContext,
  token: string,
  view: GradingView,
  question: GradingView["questions"][number],
  refresh: () => Promise<void>,
): HTMLElement {
  const block = el(
    "section",
    { class: "grading-question", "data-question-id": question.question_id },
    [el("h2", {}, [`${question.position + 1}. ${question.title}`])],
  );
  if (question.kind === "multiple_choice") {
    const options = question.options ?? [];
    const list = el("ul", { class: "grading-options" });
    options.forEach((text, index) => {
      const marks: string[] = [];
      if (index === question.correct_index) {
        marks.push("correct answer");
      }
      if (index === question.answer) {
        marks.push("student's choice");
      }
      list.append(
        el("li", {}, [marks.length > 0 ? `${text} (${marks.join(", ")})` : text]),
      );
    });
    block.append(list);
    block.append(
      el("p", { class: "auto-grade" }, [
        question.answer === null
          ? "Not answered"
          : `Auto-graded: ${question.awarded ?? "0.00"} of ${question.max_points}`,
      ]),
    );
  } else {
    block.append(
      el("blockquote", { class: "essay-text" }, [
        typeof question.answer === "string" && question.answer !== ""
          ? question.answer
          : "(no answer given)",
      ]),
    );
    const points = el("input", {
      class: "essay-points",
      name: `points-${question.question_id}`,
      inputmode: "decimal",
      ...(question.essay_grade !== null ? { value: question.essay_grade } : {}),
      ...(view.status !== "Finalized" ? { disabled: true } : {}),
    });
    const message = el("span", { class: "field-error points-error" });
    const save = el(
      "button",
      {
        type: "button",
        class: "save-grade",
        ...(view.status !== "Finalized" ? { disabled: true } : {}),
      },
      ["Save grade"],
    );
    save.addEventListener("click", () => {
      const problem = validateEssayPoints(points.value, question.max_points);
      if (problem) {
        message.textContent = problem;
        return;
      }
      message.textContent = "";
      void (async () => {
        try {
          await ctx.client.gradeEssay(
            token,
            view.result_id,
            question.question_id,
            points.value.trim(),
          );
          await refresh();
        } catch (error) {
          message.textContent =
            error instanceof ApiError ? error.message : String(error);
        }
      })();
    });
    block.append(
      el("p", { class: "essay-grading" }, [
        `Points (0 to ${question.max_points}): `,
        points,
        save,
        message,
      ]),
    );
  }
  return block;
}

export async function gradeScreen(
  ctx: AppContext,
  main: HTMLElement,
  resultId: number,
): Promise<void> {
  const token = teacherToken(ctx);
  if (!token) {
    loginForm(ctx, main);
    return;
  }
  const view = await ctx.client.gradingView(token, resultId);
  const refresh = async () => {
    clear(main);
    await gradeScreen(ctx, main, resultId);
  };
  main.append(el("h1", {}, [`${view.exam_title} — attempt #${view.result_id}`]));
  main.append(
    el("p", { class: "student-line" }, [
      `${view.student.first_name} ${view.student.second_name}`,
      ` (${view.student.am})`,
      view.student.tmima ? `, ${view.student.tmima}` : "",
    ]),
  );
  main.append(
    el("p", { class: "status-line" }, [
      "Status: ",
      el("strong", { class: "status" }, [view.status]),
      view.final_score !== null ? ` — final score ${view.final_score}` : "",
    ]),
  );
  if (view.status === "Open") {
    main.append(el("p", {}, ["The student has not submitted yet."]));
    return;
  }
  for (const question of view.questions) {
    main.append(gradingQuestionBlock(ctx, token, view, question, refresh));
  }
  if (view.status === "Finalized") {
    const message = el("p", { class: "form-message finalize-message" });
    const finalize = el(
      "button",
      { type: "button", class: "finalize-grading" },
      ["Finalize grading"],
    );
    finalize.addEventListener("click", () => {
      void (async () => {
        try {
          await ctx.client.finalizeGrading(token, resultId);
          await refresh();
        } catch (error) {
          if (error instanceof ApiError && error.code === "missing_essay_grades") {
            message.textContent = "Grade every essay before finalizing.";
            main
              .querySelectorAll(".grading-question .essay-points")
              .forEach((node) => {
                const input = node as HTMLInputElement;
                if (input.value.trim() === "") {
                  input.closest(".grading-question")?.classList.add("missing");
                }
              });
          } else {
            message.textContent =
              error instanceof ApiError ? error.message : String(error);
          }
        }
      })();
    });
    main.append(finalize, message);
  }
}
