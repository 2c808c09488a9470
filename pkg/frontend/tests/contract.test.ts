/** Contract tests against a live fixture-backed review service.
 *
 * Spawns the Python service over a throwaway three-recording store and
 * exercises the same client modules the dashboard uses. Tests in this file
 * run in order; the annotation test intentionally changes service state.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { validateDraft, emptyDraft } from "../src/validation.js";
import { durationSeconds, fullWindow, visibleRange } from "../src/waveform.js";

const SCRIPT = fileURLToPath(new URL("../scripts/serve_fixture.py", import.meta.url));

let service: ChildProcess;
let client: ApiClient;
let fixtureRoot: string;

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.once("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port assigned"));
        return;
      }
      probe.close(() => resolve(address.port));
    });
  });
}

async function waitUntilUp(base: string, deadlineMs: number): Promise<void> {
  const deadline = Date.now() + deadlineMs;
  let lastError: unknown = null;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${base}/api/recordings`);
      if (response.ok) return;
      lastError = new Error(`status ${response.status}`);
    } catch (err) {
      lastError = err;
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error(`service did not come up: ${String(lastError)}`);
}

beforeAll(async () => {
  const port = await freePort();
  fixtureRoot = mkdtempSync(join(tmpdir(), "fhirflow-contract-"));
  service = spawn("python3", [SCRIPT, "--port", String(port), "--root", fixtureRoot], {
    stdio: ["ignore", "pipe", "inherit"],
  });
  client = new ApiClient(`http://127.0.0.1:${port}`);
  await waitUntilUp(client.baseUrl, 30000);
}, 40000);

afterAll(() => {
  service?.kill();
  if (fixtureRoot) rmSync(fixtureRoot, { recursive: true, force: true });
});

describe("review queue", () => {
  it("shows the pending count over all three recordings", async () => {
    const page = await client.queue();
    expect(page.total).toBe(3);
    expect(page.pendingCount).toBe(3);
    expect(page.items.length).toBe(3);
    for (const item of page.items) expect(item.reviewStatus).toBe("Pending");
  });

  it("classification filter matches the server response", async () => {
    const page = await client.queue({ classification: "SVT" });
    expect(page.items.length).toBe(1);
    expect(page.items[0]!.ecgClassification).toBe("SVT");
    expect(page.items[0]!.heartRateBpm).toBe(190);
    // pendingCount stays global even under filters
    expect(page.pendingCount).toBe(3);
  });

  it("status=Reviewed starts out empty", async () => {
    const page = await client.queue({ status: "Reviewed" });
    expect(page.items).toEqual([]);
  });
});

describe("waveform view", () => {
  it("renders the full recording duration for the 512 Hz fixture", async () => {
    const page = await client.queue();
    const thirtySecond = page.items.find((item) => item.date.startsWith("2024-01-05"))!;
    const detail = await client.recording(thirtySecond.resourceId);
    const wf = {
      samples: detail.waveform.samples,
      samplingFrequencyHz: detail.waveform.samplingFrequencyHz,
    };
    expect(wf.samplingFrequencyHz).toBe(512);
    expect(wf.samples.length).toBe(15360);
    expect(durationSeconds(wf)).toBe(30);
    expect(fullWindow(wf)).toEqual({ start: 0, end: 30 });
    const oneSecond = visibleRange(wf, { start: 0, end: 1 });
    expect(oneSecond.last - oneSecond.first).toBe(512);
  });
});

describe("annotation round trip", () => {
  it("Other without text never reaches the service", async () => {
    const draft = { ...emptyDraft(), diagnosis: "Other", quality: "Good" };
    const problems = validateDraft("AB", draft);
    expect(problems.length).toBe(1);
    // and the service agrees, should a client bypass the form
    const page = await client.queue();
    const target = page.items.find((item) => item.reviewStatus === "Pending")!;
    const rejected = await client
      .annotate(target.resourceId, { reviewerInitials: "AB", diagnosis: "Other", quality: "Good" })
      .catch((e: unknown) => e);
    expect(rejected).toBeInstanceOf(ApiError);
    expect((rejected as ApiError).status).toBe(422);
  });

  it("a valid submission flips the recording to Reviewed", async () => {
    const before = await client.queue();
    const target = before.items.find((item) => item.ecgClassification === "SVT")!;
    expect(target.reviewStatus).toBe("Pending");

    const posted = await client.annotate(target.resourceId, {
      reviewerInitials: "AB",
      diagnosis: "SVT",
      quality: "Good",
      notes: "190 bpm, consistent with SVT",
    });
    expect(posted.diagnosis).toBe("SVT");

    const detail = await client.recording(target.resourceId);
    expect(detail.summary.reviewStatus).toBe("Reviewed");
    expect(detail.annotations[0]!.reviewerInitials).toBe("AB");

    const after = await client.queue();
    expect(after.pendingCount).toBe(2);
    const reviewed = await client.queue({ status: "Reviewed" });
    expect(reviewed.items.map((item) => item.resourceId)).toEqual([target.resourceId]);
  });
});

describe("explore views", () => {
  it("ecg-counts bar chart covers every subject", async () => {
    const chart = await client.ecgCounts();
    expect(chart.kind).toBe("bar");
    const points = chart.series[0]!.points;
    expect(points.length).toBe(3);
    for (const point of points) expect(point.y).toBe(1);
  });

  it("no raw identifier appears in any payload", async () => {
    const bodies = [
      JSON.stringify(await client.queue()),
      JSON.stringify(await client.ecgCounts()),
      JSON.stringify(await client.timeInStudy()),
    ];
    for (const body of bodies) {
      for (const raw of ["ecg-alpha", "ecg-beta", "ecg-gamma", "alice", "bob", "carol"]) {
        expect(body).not.toContain(raw);
      }
    }
  });
});
