// Client-side duplicates of the server's intake rules, for inline UX.
// The server stays authoritative; these only pre-empt the round trip.

import type { StudentDetails } from "./api.js";

export type DetailField = keyof StudentDetails;

export const DETAIL_BOUNDS: Record<
  DetailField,
  { label: string; max: number; required: boolean }
> = {
  first_name: { label: "First name", max: 50, required: true },
  second_name: { label: "Last name", max: 50, required: true },
  am: { label: "Registry number", max: 10, required: true },
  etos_spoudon: { label: "Study year", max: 20, required: false },
  tmima: { label: "Department", max: 100, required: false },
};

export function validateDetails(
  details: StudentDetails,
): Partial<Record<DetailField, string>> {
  const problems: Partial<Record<DetailField, string>> = {};
  for (const field of Object.keys(DETAIL_BOUNDS) as DetailField[]) {
    const bound = DETAIL_BOUNDS[field];
    const value = details[field] ?? "";
    if (bound.required && value.trim() === "") {
      problems[field] = `${bound.label} is required`;
    } else if (value.length > bound.max) {
      problems[field] = `${bound.label} must be at most ${bound.max} characters`;
    }
  }
  return problems;
}

// Essay points must be a number within [0, max]; max comes from the exam.
export function validateEssayPoints(raw: string, max: string): string | null {
  const trimmed = raw.trim();
  if (trimmed === "") {
    return "Enter the points";
  }
  const value = Number(trimmed);
  if (!Number.isFinite(value)) {
    return "Points must be a number";
  }
  const bound = Number(max);
  if (value < 0 || value > bound) {
    return `Points must lie between 0 and ${max}`;
  }
  return null;
}
