// Typed client for the /api/v1 service. Every screen goes through this
// module; nothing in the UI talks to the network directly.

export interface PublicExam {
  id: number;
  slug: string;
  title: string;
  description: string;
}

export interface StudentDetails {
  first_name: string;
  second_name: string;
  am: string;
  etos_spoudon: string;
  tmima: string;
}

export interface ViewQuestion {
  question_id: number;
  position: number;
  kind: "multiple_choice" | "essay";
  title: string;
  description: string;
  options: string[] | null; // already in display order
}

export interface SessionView {
  result_id: number;
  exam_id: number;
  exam_title: string;
  status: "Open";
  time_started: string;
  questions: ViewQuestion[];
}

export interface Receipt {
  result_id: number;
  exam_id: number;
  exam_title: string;
  status: "Finalized" | "Checked";
  time_started: string;
  time_submitted: string | null;
  final_score: string | null;
}

export type SessionState = SessionView | Receipt;

export function isOpenView(state: SessionState): state is SessionView {
  return state.status === "Open";
}

export interface SessionStart {
  result_id: number;
  token: string;
  view: SessionView;
}

export interface AnswerPayload {
  choice?: number; // display slot 0..3
  text?: string;
}

export interface Category {
  id: number;
  name: string;
  parent: number | null;
  slug: string;
}

export interface Question {
  id: number;
  title: string;
  description: string;
  kind: "multiple_choice" | "essay";
  options: string[] | null;
  correct_index: number | null;
  categories: number[];
  published: boolean;
  created_at: string;
}

export interface Exam {
  id: number;
  title: string;
  slug: string;
  description: string;
  source_category: number;
  n_mc: number;
  n_essay: number;
  w_mc: string;
  penalty_mc: string;
  w_essay: string;
  max_rating: number;
  randomize: boolean;
  published: boolean;
}

export interface ResultRow {
  result_id: number;
  exam_id: number;
  first_name: string;
  second_name: string;
  am: string;
  etos_spoudon: string;
  tmima: string;
  time_started: string;
  time_submitted: string | null;
  status: "Open" | "Finalized" | "Checked";
  final_score: string | null;
  successful: boolean;
}

export interface GradingQuestion {
  question_id: number;
  position: number;
  kind: "multiple_choice" | "essay";
  title: string;
  description: string;
  options: string[] | null; // original order
  correct_index: number | null;
  answer: number | string | null; // original option index or essay text
  essay_grade: string | null;
  max_points: string;
  awarded: string | null;
}

export interface ScorePreview {
  raw_earned: string;
  raw_max: string;
  normalized: string;
  max_rating: number;
  missing_essay_grades: number[];
}

export interface GradingView {
  result_id: number;
  exam_id: number;
  exam_title: string;
  status: "Open" | "Finalized" | "Checked";
  student: StudentDetails;
  time_started: string;
  time_submitted: string | null;
  questions: GradingQuestion[];
  score_preview: ScorePreview | null;
  final_score: string | null;
  successful: boolean;
}

export interface QuestionDraft {
  title: string;
  description: string;
  kind: string;
  options?: string[];
  correct_index?: number;
  categories: number[];
  published: boolean;
}

export interface ExamDraft {
  title: string;
  description: string;
  source_category: number;
  n_mc: number;
  n_essay: number;
  w_mc: string;
  penalty_mc: string;
  w_essay: string;
  max_rating: number;
  randomize: boolean;
  published: boolean;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly field: string | null = null,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class OdesClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (input, init) =>
      globalThis.fetch(input, init),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    options: { body?: unknown; headers?: Record<string, string> } = {},
  ): Promise<T> {
    const init: RequestInit = {
      method,
      headers: {
        ...(options.body !== undefined
          ? { "Content-Type": "application/json" }
          : {}),
        ...(options.headers ?? {}),
      },
    };
    if (options.body !== undefined) {
      init.body = JSON.stringify(options.body);
    }
    const response = await this.fetchImpl(`${this.base}/api/v1${path}`, init);
    if (!response.ok) {
      let code = "error";
      let message = `request failed with ${response.status}`;
      let field: string | null = null;
      try {
        const body = await response.json();
        code = body.code ?? code;
        message = body.message ?? message;
        field = body.field ?? null;
      } catch {
        // non-JSON error body; keep defaults
      }
      throw new ApiError(response.status, code, message, field);
    }
    if (response.status === 204) {
      return undefined as T;
    }
    return (await response.json()) as T;
  }

  private bearer(token: string): Record<string, string> {
    return { Authorization: `Bearer ${token}` };
  }

  // student surface -----------------------------------------------------------

  publicExams(): Promise<PublicExam[]> {
    return this.request("GET", "/public/exams");
  }

  startSession(examId: number, details: StudentDetails): Promise<SessionStart> {
    return this.request("POST", `/exams/${examId}/sessions`, { body: details });
  }

  sessionState(resultId: number, token: string): Promise<SessionState> {
    return this.request("GET", `/sessions/${resultId}`, {
      headers: { "X-Session-Token": token },
    });
  }

  submitAnswers(
    resultId: number,
    token: string,
    answers: Record<number, AnswerPayload>,
  ): Promise<Receipt> {
    return this.request("POST", `/sessions/${resultId}/answers`, {
      body: { answers },
      headers: { "X-Session-Token": token },
    });
  }

  // teacher surface ------------------------------------------------------------

  listExams(token: string): Promise<Exam[]> {
    return this.request("GET", "/exams", { headers: this.bearer(token) });
  }

  createExam(token: string, draft: ExamDraft): Promise<Exam> {
    return this.request("POST", "/exams", {
      body: draft,
      headers: this.bearer(token),
    });
  }

  listCategories(token: string): Promise<Category[]> {
    return this.request("GET", "/categories", { headers: this.bearer(token) });
  }

  createCategory(
    token: string,
    name: string,
    parent: number | null,
  ): Promise<Category> {
    return this.request("POST", "/categories", {
      body: { name, parent },
      headers: this.bearer(token),
    });
  }

  listQuestions(token: string): Promise<Question[]> {
    return this.request("GET", "/questions", { headers: this.bearer(token) });
  }

  createQuestion(token: string, draft: QuestionDraft): Promise<Question> {
    return this.request("POST", "/questions", {
      body: draft,
      headers: this.bearer(token),
    });
  }

  examResults(token: string, examId: number): Promise<ResultRow[]> {
    return this.request<{ exam_id: number; results: ResultRow[] }>(
      "GET",
      `/exams/${examId}/results`,
      { headers: this.bearer(token) },
    ).then((payload) => payload.results);
  }

  gradingView(token: string, resultId: number): Promise<GradingView> {
    return this.request("GET", `/sessions/${resultId}/grading`, {
      headers: this.bearer(token),
    });
  }

  gradeEssay(
    token: string,
    resultId: number,
    questionId: number,
    points: string,
  ): Promise<{ result_id: number; question_id: number; points: string }> {
    return this.request("POST", `/sessions/${resultId}/essay-grades`, {
      body: { question_id: questionId, points },
      headers: this.bearer(token),
    });
  }

  finalizeGrading(
    token: string,
    resultId: number,
  ): Promise<{ result_id: number; status: string; final_score: string }> {
    return this.request("POST", `/sessions/${resultId}/finalize`, {
      headers: this.bearer(token),
    });
  }

  markSuccessful(
    token: string,
    resultId: number,
    successful: boolean,
  ): Promise<{ result_id: number; successful: boolean }> {
    return this.request("POST", `/sessions/${resultId}/successful`, {
      body: { successful },
      headers: this.bearer(token),
    });
  }

  async resultsCsv(token: string, examId: number): Promise<string> {
    const response = await this.fetchImpl(
      `${this.base}/api/v1/exams/${examId}/results.csv`,
      { method: "GET", headers: this.bearer(token) },
    );
    if (!response.ok) {
      throw new ApiError(response.status, "error", "CSV export failed");
    }
    return response.text();
  }
}
