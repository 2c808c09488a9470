/** Client-side annotation form validation, mirroring the service rules. */

import type { AnnotationBody } from "./api.js";
import { validInitials } from "./session.js";

export const DIAGNOSES = [
  "NormalSinusRhythm",
  "SinusTachycardia",
  "SVT",
  "EAT",
  "AF",
  "VT",
  "HeartBlock",
  "Other",
] as const;

export const QUALITIES = [
  "Uninterpretable",
  "PoorQuality",
  "Adequate",
  "Good",
  "Excellent",
] as const;

export interface AnnotationDraft {
  diagnosis: string;
  quality: string;
  diagnosisOtherText: string;
  notes: string;
}

export function emptyDraft(): AnnotationDraft {
  return { diagnosis: "", quality: "", diagnosisOtherText: "", notes: "" };
}

/** Problems preventing submission; empty means the draft may be posted. */
export function validateDraft(initials: string | null, draft: AnnotationDraft): string[] {
  const problems: string[] = [];
  if (initials === null || !validInitials(initials)) {
    problems.push("enter reviewer initials (2-4 uppercase letters) first");
  }
  if (!(DIAGNOSES as readonly string[]).includes(draft.diagnosis)) {
    problems.push("pick a diagnosis");
  }
  if (!(QUALITIES as readonly string[]).includes(draft.quality)) {
    problems.push("pick a quality rating");
  }
  if (draft.diagnosis === "Other" && draft.diagnosisOtherText.trim() === "") {
    problems.push("describe the diagnosis when choosing Other");
  }
  if (draft.diagnosis !== "Other" && draft.diagnosisOtherText.trim() !== "") {
    problems.push("free-text diagnosis is only allowed with Other");
  }
  return problems;
}

/** Build the POST body; call only after validateDraft returns no problems. */
export function draftToBody(initials: string, draft: AnnotationDraft): AnnotationBody {
  const body: AnnotationBody = {
    reviewerInitials: initials,
    diagnosis: draft.diagnosis,
    quality: draft.quality,
  };
  if (draft.diagnosis === "Other") body.diagnosisOtherText = draft.diagnosisOtherText.trim();
  if (draft.notes.trim() !== "") body.notes = draft.notes.trim();
  return body;
}
