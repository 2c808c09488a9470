import { describe, expect, it } from "vitest";

import { UiSession, validInitials } from "../src/session.js";

describe("initials pattern", () => {
  it.each(["AB", "JDO", "WXYZ"])("accepts %s", (text) => {
    expect(validInitials(text)).toBe(true);
  });

  it.each(["a", "ab", "A", "ABCDE", "A1", " AB", ""])("rejects %j", (text) => {
    expect(validInitials(text)).toBe(false);
  });
});

describe("UiSession", () => {
  it("annotation stays disabled until sign-in", () => {
    const session = new UiSession();
    expect(session.canAnnotate).toBe(false);
    expect(session.signIn("xy")).toBe(false);
    expect(session.canAnnotate).toBe(false);
    expect(session.signIn("XY")).toBe(true);
    expect(session.canAnnotate).toBe(true);
    expect(session.reviewerInitials).toBe("XY");
  });

  it("trims surrounding whitespace", () => {
    const session = new UiSession();
    expect(session.signIn("  AB ")).toBe(true);
    expect(session.reviewerInitials).toBe("AB");
  });

  it("sign-out clears the gate", () => {
    const session = new UiSession();
    session.signIn("AB");
    session.signOut();
    expect(session.canAnnotate).toBe(false);
  });
});
