// Student flow: exam list -> details form -> question screen ->
// confirmation dialog -> receipt. The question order and option order
// come from the server and are re-fetched on every render, so a reload
// shows exactly the same exam instance.

import {
  ApiError,
  AnswerPayload,
  Receipt,
  SessionView,
  StudentDetails,
  isOpenView,
} from "./api.js";
import {
  AppContext,
  SESSION_KEY,
  storedSession,
} from "./app.js";
import { clear, el } from "./dom.js";
import { DETAIL_BOUNDS, DetailField, validateDetails } from "./validation.js";

export async function examListScreen(
  ctx: AppContext,
  main: HTMLElement,
): Promise<void> {
  const exams = await ctx.client.publicExams();
  main.append(el("h1", {}, ["Available exams"]));
  if (storedSession(ctx)) {
    main.append(
      el("p", { class: "notice" }, [
        "You have an exam in progress. ",
        el(
          "a",
          { href: "#/session", onclick: () => void ctx.navigate("#/session") },
          ["Return to it"],
        ),
        ".",
      ]),
    );
  }
  if (exams.length === 0) {
    main.append(el("p", {}, ["No exams are published right now."]));
    return;
  }
  const list = el("ul", { class: "exam-list" });
  for (const exam of exams) {
    list.append(
      el("li", { class: "exam-card", "data-exam-id": exam.id }, [
        el("h2", {}, [exam.title]),
        el("p", {}, [exam.description]),
        el(
          "button",
          {
            type: "button",
            class: "start-link",
            onclick: () => void ctx.navigate(`#/exam/${exam.id}/details`),
          },
          ["Start"],
        ),
      ]),
    );
  }
  main.append(list);
}

const DETAIL_FIELDS = Object.keys(DETAIL_BOUNDS) as DetailField[];

export async function detailsScreen(
  ctx: AppContext,
  main: HTMLElement,
  examId: number,
): Promise<void> {
  main.append(el("h1", {}, ["Your details"]));
  main.append(
    el("p", {}, [
      "Fill in your details to start. The questions are already reserved",
      " for you and will not change if you reload.",
    ]),
  );
  const form = el("form", { class: "details-form", novalidate: true });
  const inputs = {} as Record<DetailField, HTMLInputElement>;
  const errors = {} as Record<DetailField, HTMLElement>;
  for (const field of DETAIL_FIELDS) {
    const bound = DETAIL_BOUNDS[field];
    const input = el("input", {
      name: field,
      maxlength: bound.max,
      ...(bound.required ? { required: true } : {}),
    });
    const message = el("span", {
      class: "field-error",
      "data-field": field,
    });
    inputs[field] = input;
    errors[field] = message;
    form.append(
      el("label", {}, [
        `${bound.label}${bound.required ? " *" : ""}`,
        input,
        message,
      ]),
    );
  }
  const startButton = el("button", { type: "submit", class: "start" }, [
    "Start",
  ]);
  form.append(startButton);

  const currentDetails = (): StudentDetails => ({
    first_name: inputs.first_name.value,
    second_name: inputs.second_name.value,
    am: inputs.am.value,
    etos_spoudon: inputs.etos_spoudon.value,
    tmima: inputs.tmima.value,
  });

  const showProblems = (problems: Partial<Record<DetailField, string>>) => {
    for (const field of DETAIL_FIELDS) {
      errors[field].textContent = problems[field] ?? "";
    }
    startButton.disabled = Object.keys(problems).length > 0;
  };

  form.addEventListener("input", () => {
    showProblems(validateDetails(currentDetails()));
  });

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const details = currentDetails();
    const problems = validateDetails(details);
    if (Object.keys(problems).length > 0) {
      showProblems(problems);
      return;
    }
    void (async () => {
      try {
        const started = await ctx.client.startSession(examId, details);
        ctx.storage.setItem(
          SESSION_KEY,
          JSON.stringify({ result_id: started.result_id, token: started.token }),
        );
        await ctx.navigate("#/session");
      } catch (error) {
        if (error instanceof ApiError && error.field) {
          showProblems({ [error.field]: error.message });
        } else {
          form.prepend(
            el("p", { class: "error banner", role: "alert" }, [
              error instanceof Error ? error.message : String(error),
            ]),
          );
        }
      }
    })();
  });

  main.append(form);
}

function questionBlock(question: SessionView["questions"][number]): HTMLElement {
  const block = el(
    "section",
    { class: "question", "data-question-id": question.question_id },
    [el("h2", {}, [`${question.position + 1}. ${question.title}`])],
  );
  if (question.description) {
    block.append(el("p", { class: "description" }, [question.description]));
  }
  if (question.kind === "multiple_choice" && question.options) {
    const group = el("div", { class: "options", role: "radiogroup" });
    question.options.forEach((text, slot) => {
      const input = el("input", {
        type: "radio",
        name: `q${question.question_id}`,
        value: slot,
      });
      group.append(el("label", { class: "option" }, [input, text]));
    });
    block.append(group);
  } else {
    block.append(
      el("textarea", {
        name: `q${question.question_id}`,
        rows: 6,
        placeholder: "Write your answer here",
      }),
    );
  }
  return block;
}

function collectAnswers(
  view: SessionView,
  main: HTMLElement,
): Record<number, AnswerPayload> {
  const answers: Record<number, AnswerPayload> = {};
  for (const question of view.questions) {
    if (question.kind === "multiple_choice") {
      const picked = main.querySelector<HTMLInputElement>(
        `input[name="q${question.question_id}"]:checked`,
      );
      if (picked) {
        answers[question.question_id] = { choice: Number(picked.value) };
      }
    } else {
      const area = main.querySelector<HTMLTextAreaElement>(
        `textarea[name="q${question.question_id}"]`,
      );
      if (area && area.value.trim() !== "") {
        answers[question.question_id] = { text: area.value };
      }
    }
  }
  return answers;
}

function renderReceipt(
  ctx: AppContext,
  main: HTMLElement,
  receipt: Receipt,
): void {
  clear(main);
  main.append(
    el("section", { class: "receipt" }, [
      el("h1", {}, [receipt.exam_title]),
      el("p", { class: "status-line" }, [
        "Status: ",
        el("strong", { class: "status" }, [receipt.status]),
      ]),
      el("p", { class: "submitted-line" }, [
        receipt.time_submitted
          ? `Submitted at ${receipt.time_submitted}`
          : "Not submitted yet",
      ]),
      ...(receipt.final_score !== null
        ? [el("p", { class: "score-line" }, [`Final score: ${receipt.final_score}`])]
        : []),
      el("p", {}, ["Your answers are stored and can no longer be changed."]),
      el(
        "button",
        {
          type: "button",
          class: "done",
          onclick: () => {
            ctx.storage.removeItem(SESSION_KEY);
            void ctx.navigate("#/exams");
          },
        },
        ["Back to exams"],
      ),
    ]),
  );
}

export async function sessionScreen(
  ctx: AppContext,
  main: HTMLElement,
): Promise<void> {
  const stored = storedSession(ctx);
  if (!stored) {
    await ctx.navigate("#/exams");
    return;
  }
  const state = await ctx.client.sessionState(stored.result_id, stored.token);
  if (!isOpenView(state)) {
    renderReceipt(ctx, main, state);
    return;
  }

  main.append(el("h1", {}, [state.exam_title]));
  main.append(
    el("p", { class: "notice" }, [
      "Answer the questions below, then press Finalize. You will be asked",
      " to confirm before anything is sent.",
    ]),
  );
  const form = el("form", { class: "exam-form", novalidate: true });
  for (const question of state.questions) {
    form.append(questionBlock(question));
  }
  const finalizeButton = el(
    "button",
    { type: "button", class: "finalize" },
    ["Finalize"],
  );
  form.append(finalizeButton);
  main.append(form);

  finalizeButton.addEventListener("click", () => {
    openConfirmDialog(ctx, main, state, stored.token);
  });
}

function openConfirmDialog(
  ctx: AppContext,
  main: HTMLElement,
  view: SessionView,
  token: string,
): void {
  if (main.querySelector(".confirm-dialog")) {
    return; // already open
  }
  let submitting = false;
  const overlay = el("div", { class: "confirm-dialog overlay" });
  const submitButton = el(
    "button",
    { type: "button", class: "confirm-submit" },
    ["Submit exam"],
  );
  const cancelButton = el(
    "button",
    { type: "button", class: "confirm-cancel" },
    ["Keep editing"],
  );
  overlay.append(
    el("div", { class: "dialog", role: "dialog", "aria-modal": "true" }, [
      el("h2", {}, ["Submit your exam?"]),
      el("p", {}, [
        "After submitting you will not be able to change your answers.",
      ]),
      el("div", { class: "dialog-actions" }, [cancelButton, submitButton]),
    ]),
  );
  cancelButton.addEventListener("click", () => overlay.remove());
  submitButton.addEventListener("click", () => {
    if (submitting) {
      return;
    }
    submitting = true;
    submitButton.disabled = true;
    void (async () => {
      try {
        const receipt = await ctx.client.submitAnswers(
          view.result_id,
          token,
          collectAnswers(view, main),
        );
        overlay.remove();
        renderReceipt(ctx, main, receipt);
      } catch (error) {
        overlay.remove();
        if (error instanceof ApiError && error.code === "already_finalized") {
          // someone beat us to it; show the stored receipt instead
          const stored = storedSession(ctx);
          if (stored) {
            const state = await ctx.client.sessionState(
              stored.result_id,
              stored.token,
            );
            if (!isOpenView(state)) {
              renderReceipt(ctx, main, state);
              return;
            }
          }
        }
        main.prepend(
          el("p", { class: "error banner", role: "alert" }, [
            error instanceof Error ? error.message : String(error),
          ]),
        );
      }
    })();
  });
  main.append(overlay);
}
