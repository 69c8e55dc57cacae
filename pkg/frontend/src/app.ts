// Hash-routed shell. Screens render into <main>; the session token and
// teacher credential live in storage, never in the page content.

import { OdesClient } from "./api.js";
import { clear, el } from "./dom.js";
import { detailsScreen, examListScreen, sessionScreen } from "./student.js";
import { gradeScreen, resultsScreen, teacherScreen } from "./teacher.js";

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export const SESSION_KEY = "odes.session";
export const TEACHER_KEY = "odes.teacher";

export interface StoredSession {
  result_id: number;
  token: string;
}

export interface AppContext {
  client: OdesClient;
  storage: StorageLike;
  root: HTMLElement;
  navigate(hash: string): Promise<void>;
  render(hash: string): Promise<void>;
  /** Re-render only when the address bar moved (back/forward). */
  syncFromLocation(): Promise<void>;
}

export function storedSession(ctx: AppContext): StoredSession | null {
  const raw = ctx.storage.getItem(SESSION_KEY);
  return raw ? (JSON.parse(raw) as StoredSession) : null;
}

export function teacherToken(ctx: AppContext): string | null {
  return ctx.storage.getItem(TEACHER_KEY);
}

type Screen = (ctx: AppContext, main: HTMLElement) => Promise<void>;

function route(hash: string): Screen {
  const path = hash.replace(/^#\/?/, "").replace(/\/+$/, "");
  const parts = path === "" ? [] : path.split("/");
  if (parts[0] === "session") {
    return (ctx, main) => sessionScreen(ctx, main);
  }
  if (parts[0] === "exam" && parts.length === 3 && parts[2] === "details") {
    const examId = Number(parts[1]);
    return (ctx, main) => detailsScreen(ctx, main, examId);
  }
  if (parts[0] === "teacher") {
    if (parts[1] === "results" && parts.length === 3) {
      const examId = Number(parts[2]);
      return (ctx, main) => resultsScreen(ctx, main, examId);
    }
    if (parts[1] === "grade" && parts.length === 3) {
      const resultId = Number(parts[2]);
      return (ctx, main) => gradeScreen(ctx, main, resultId);
    }
    return (ctx, main) => teacherScreen(ctx, main);
  }
  return (ctx, main) => examListScreen(ctx, main);
}

function header(ctx: AppContext): HTMLElement {
  return el("header", { class: "topbar" }, [
    el(
      "a",
      {
        class: "brand",
        href: "#/exams",
        onclick: () => void ctx.navigate("#/exams"),
      },
      ["ODES"],
    ),
    el(
      "a",
      {
        class: "teacher-link",
        href: "#/teacher",
        onclick: () => void ctx.navigate("#/teacher"),
      },
      ["Teacher area"],
    ),
  ]);
}

export function mount(
  root: HTMLElement,
  client: OdesClient,
  storage: StorageLike,
): AppContext {
  let lastRendered: string | null = null;

  const ctx: AppContext = {
    client,
    storage,
    root,
    async navigate(hash: string) {
      const view = root.ownerDocument.defaultView;
      if (view) {
        view.location.hash = hash;
      }
      await ctx.render(hash);
    },
    async render(hash: string) {
      lastRendered = hash;
      clear(root);
      root.append(header(ctx));
      const main = el("main", { id: "screen" });
      root.append(main);
      try {
        await route(hash)(ctx, main);
      } catch (error) {
        clear(main);
        main.append(
          el("p", { class: "error banner", role: "alert" }, [
            error instanceof Error ? error.message : String(error),
          ]),
        );
      }
    },
    async syncFromLocation() {
      const view = root.ownerDocument.defaultView;
      if (view && view.location.hash !== lastRendered) {
        await ctx.render(view.location.hash);
      }
    },
  };
  return ctx;
}
