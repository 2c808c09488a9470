/** Reviewer session: the initials gate and the active filter set. */

import type { FilterState } from "./filters.js";

// Same pattern the service enforces on reviewerInitials.
export const INITIALS_PATTERN = /^[A-Z]{2,4}$/;

export function validInitials(text: string): boolean {
  return INITIALS_PATTERN.test(text);
}

export class UiSession {
  reviewerInitials: string | null = null;
  filters: FilterState = {};

  /** Returns false (and stays signed out) when the initials are malformed. */
  signIn(initials: string): boolean {
    const trimmed = initials.trim();
    if (!validInitials(trimmed)) return false;
    this.reviewerInitials = trimmed;
    return true;
  }

  signOut(): void {
    this.reviewerInitials = null;
  }

  /** Annotation submission stays disabled until initials are entered. */
  get canAnnotate(): boolean {
    return this.reviewerInitials !== null;
  }
}
