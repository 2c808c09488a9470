/** Review dashboard single-page app: session gate, queue, waveform, explore. */

import { ApiClient, ApiError } from "./api.js";
import type { ChartDoc, RecordingDetail, RecordingSummary } from "./api.js";
import { layoutChart } from "./chart.js";
import type { FilterState } from "./filters.js";
import { UiSession } from "./session.js";
import { DIAGNOSES, QUALITIES, draftToBody, emptyDraft, validateDraft } from "./validation.js";
import {
  displaySegments,
  durationSeconds,
  fullWindow,
  panWindow,
  zoomWindow,
} from "./waveform.js";
import type { ViewWindow, Waveform } from "./waveform.js";

const SVG_NS = "http://www.w3.org/2000/svg";

declare global {
  interface Window {
    FHIRFLOW_API_BASE?: string;
  }
}

const api = new ApiClient(window.FHIRFLOW_API_BASE ?? "");
const session = new UiSession();

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  node.append(...children);
  return node;
}

function svgEl(tag: string, attrs: Record<string, string>): SVGElement {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  return node;
}

function app(): HTMLElement {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  return root;
}

function show(...nodes: (Node | string)[]): void {
  const root = app();
  root.replaceChildren(...nodes);
}

function errorBanner(err: unknown): HTMLElement {
  const text = err instanceof ApiError ? err.detail : String(err);
  return el("p", { class: "error" }, text);
}

// --- session gate ---------------------------------------------------------

function gateView(next: () => void): HTMLElement {
  const input = el("input", { placeholder: "Initials (e.g. AB)", maxlength: "4" });
  const note = el("p", { class: "hint" }, "2-4 uppercase letters, as recorded on annotations");
  const button = el("button", {}, "Start reviewing");
  button.addEventListener("click", () => {
    if (session.signIn(input.value)) {
      next();
    } else {
      note.textContent = "Initials must match 2-4 uppercase letters (e.g. AB, JDOE)";
      note.className = "error";
    }
  });
  input.addEventListener("keydown", (event) => {
    if (event.key === "Enter") button.click();
  });
  return el("section", { class: "gate" }, el("h1", {}, "Reviewer sign-in"), input, button, note);
}

// --- queue view ------------------------------------------------------------

function filterBar(onChange: (filters: FilterState) => void): HTMLElement {
  const status = el("select", {});
  status.append(el("option", { value: "" }, "any status"));
  status.append(el("option", { value: "Pending" }, "Pending"));
  status.append(el("option", { value: "Reviewed" }, "Reviewed"));
  const classification = el("input", { placeholder: "classification" });
  const user = el("input", { placeholder: "user (masked id)" });
  const from = el("input", { type: "date" });
  const to = el("input", { type: "date" });
  const ageGroup = el("select", {});
  ageGroup.append(el("option", { value: "" }, "any age"));
  for (const bucket of ["6-9", "10-13", "14-18", "Unknown"]) {
    ageGroup.append(el("option", { value: bucket }, bucket));
  }
  const apply = el("button", {}, "Apply");
  apply.addEventListener("click", () => {
    const filters: FilterState = {};
    if (status.value === "Pending" || status.value === "Reviewed") filters.status = status.value;
    if (classification.value.trim()) filters.classification = classification.value.trim();
    if (user.value.trim()) filters.user = user.value.trim();
    if (from.value) filters.from = from.value;
    if (to.value) filters.to = to.value;
    if (ageGroup.value) filters.ageGroup = ageGroup.value;
    onChange(filters);
  });
  return el("div", { class: "filters" }, status, classification, user, from, to, ageGroup, apply);
}

function queueRow(item: RecordingSummary): HTMLElement {
  const open = el("a", { href: `#recording/${item.resourceId}` }, item.resourceId);
  const rate = item.heartRateBpm === null ? "" : `${item.heartRateBpm} bpm`;
  return el(
    "tr",
    { class: item.reviewStatus === "Pending" ? "pending" : "reviewed" },
    el("td", {}, open),
    el("td", {}, item.maskedUserId),
    el("td", {}, item.date),
    el("td", {}, item.ecgClassification),
    el("td", {}, rate),
    el("td", {}, item.ageGroup),
    el("td", {}, item.reviewStatus),
  );
}

async function queueView(): Promise<void> {
  try {
    const page = await api.queue(session.filters);
    const banner = el(
      "p",
      { class: "banner" },
      `${page.pendingCount} recording${page.pendingCount === 1 ? "" : "s"} awaiting review`,
    );
    const head = el(
      "tr",
      {},
      ...["recording", "user", "date", "classification", "rate", "age", "status"].map((h) =>
        el("th", {}, h),
      ),
    );
    const table = el("table", {}, head, ...page.items.map(queueRow));
    const bar = filterBar((filters) => {
      session.filters = filters;
      void queueView();
    });
    const nav = el("p", {}, el("a", { href: "#explore" }, "Study stats"));
    show(el("h1", {}, `Recordings (${page.total})`), banner, bar, table, nav);
  } catch (err) {
    show(errorBanner(err));
  }
}

// --- recording detail ------------------------------------------------------

function waveformSvg(wf: Waveform, win: ViewWindow, width = 760, height = 240): SVGElement {
  const svg = svgEl("svg", {
    viewBox: `0 0 ${width} ${height}`,
    width: String(width),
    height: String(height),
    class: "waveform",
  });
  const segments = displaySegments(wf, win);
  let lo = Infinity;
  let hi = -Infinity;
  for (const segment of segments) {
    for (const point of segment) {
      lo = Math.min(lo, point.v);
      hi = Math.max(hi, point.v);
    }
  }
  if (!Number.isFinite(lo)) {
    lo = -1;
    hi = 1;
  }
  if (hi === lo) hi = lo + 1;
  const xFor = (t: number): number => ((t - win.start) / (win.end - win.start)) * width;
  const yFor = (v: number): number => height - ((v - lo) / (hi - lo)) * (height - 20) - 10;
  for (const segment of segments) {
    const points = segment.map((p) => `${xFor(p.t).toFixed(1)},${yFor(p.v).toFixed(1)}`);
    svg.append(
      svgEl("polyline", { points: points.join(" "), fill: "none", stroke: "#0a6", "stroke-width": "1" }),
    );
  }
  return svg;
}

function annotationForm(detail: RecordingDetail, refresh: () => void): HTMLElement {
  const draft = emptyDraft();
  const diagnosis = el("select", {});
  diagnosis.append(el("option", { value: "" }, "diagnosis..."));
  for (const d of DIAGNOSES) diagnosis.append(el("option", { value: d }, d));
  const quality = el("select", {});
  quality.append(el("option", { value: "" }, "quality..."));
  for (const q of QUALITIES) quality.append(el("option", { value: q }, q));
  const otherText = el("input", { placeholder: "diagnosis description (Other only)" });
  const notes = el("textarea", { placeholder: "notes" });
  const problems = el("ul", { class: "error" });
  const submit = el("button", {}, "Submit annotation");
  if (!session.canAnnotate) submit.setAttribute("disabled", "disabled");

  submit.addEventListener("click", async () => {
    draft.diagnosis = diagnosis.value;
    draft.quality = quality.value;
    draft.diagnosisOtherText = otherText.value;
    draft.notes = notes.value;
    const found = validateDraft(session.reviewerInitials, draft);
    problems.replaceChildren(...found.map((p) => el("li", {}, p)));
    if (found.length) return;
    try {
      await api.annotate(
        detail.summary.resourceId,
        draftToBody(session.reviewerInitials as string, draft),
      );
      refresh();
    } catch (err) {
      problems.replaceChildren(el("li", {}, err instanceof ApiError ? err.detail : String(err)));
    }
  });
  return el(
    "section",
    { class: "annotate" },
    el("h2", {}, "Annotate"),
    diagnosis,
    quality,
    otherText,
    notes,
    submit,
    problems,
  );
}

function annotationList(detail: RecordingDetail): HTMLElement {
  const entries = detail.annotations.map((a) => {
    const label = a.diagnosis === "Other" ? `Other: ${a.diagnosisOtherText ?? ""}` : a.diagnosis;
    return el(
      "li",
      {},
      `${a.annotatedAt ?? ""} ${a.reviewerInitials}: ${label} / ${a.quality}` +
        (a.notes ? ` — ${a.notes}` : ""),
    );
  });
  return el("ul", { class: "annotations" }, ...entries);
}

async function recordingView(resourceId: string): Promise<void> {
  try {
    const detail = await api.recording(resourceId);
    const wf: Waveform = {
      samples: detail.waveform.samples,
      samplingFrequencyHz: detail.waveform.samplingFrequencyHz,
    };
    const duration = durationSeconds(wf);
    let win = fullWindow(wf);

    const plotHolder = el("div", {});
    const windowLabel = el("span", {}, "");
    const redraw = (): void => {
      plotHolder.replaceChildren(waveformSvg(wf, win));
      windowLabel.textContent = ` ${win.start.toFixed(2)}s – ${win.end.toFixed(2)}s of ${duration.toFixed(1)}s`;
    };
    const control = (label: string, act: () => ViewWindow): HTMLElement => {
      const button = el("button", {}, label);
      button.addEventListener("click", () => {
        win = act();
        redraw();
      });
      return button;
    };
    const controls = el(
      "div",
      { class: "controls" },
      control("⟨ pan", () => panWindow(win, -0.25, duration)),
      control("pan ⟩", () => panWindow(win, 0.25, duration)),
      control("zoom in", () => zoomWindow(win, 2, 0.5, duration)),
      control("zoom out", () => zoomWindow(win, 0.5, 0.5, duration)),
      control("reset", () => fullWindow(wf)),
      windowLabel,
    );
    plotHolder.addEventListener("wheel", (event) => {
      event.preventDefault();
      const box = plotHolder.getBoundingClientRect();
      const focus = Math.min(1, Math.max(0, (event.clientX - box.left) / box.width));
      win = zoomWindow(win, event.deltaY < 0 ? 1.25 : 0.8, focus, duration);
      redraw();
    });
    redraw();

    const s = detail.summary;
    const rate = s.heartRateBpm === null ? "no rate" : `${s.heartRateBpm} bpm`;
    show(
      el("p", {}, el("a", { href: "#queue" }, "← queue")),
      el("h1", {}, `${s.ecgClassification || "Unclassified"} at ${rate}`),
      el("p", {}, `${s.maskedUserId} · ${s.date} · age ${s.ageGroup} · ${s.reviewStatus}`),
      controls,
      plotHolder,
      annotationForm(detail, () => void recordingView(resourceId)),
      el("h2", {}, "Annotations"),
      annotationList(detail),
    );
  } catch (err) {
    show(errorBanner(err));
  }
}

// --- explore view ----------------------------------------------------------

function chartSvg(doc: ChartDoc): SVGElement {
  const layout = layoutChart(doc);
  const svg = svgEl("svg", {
    viewBox: `0 0 ${layout.width} ${layout.height}`,
    width: String(layout.width),
    height: String(layout.height),
    class: "chart",
  });
  const title = svgEl("text", { x: "8", y: "18", "font-size": "13" });
  title.textContent = layout.title;
  svg.append(title);
  for (const bar of layout.bars) {
    svg.append(
      svgEl("rect", {
        x: bar.x.toFixed(1),
        y: bar.y.toFixed(1),
        width: bar.width.toFixed(1),
        height: bar.height.toFixed(1),
        fill: "#47a",
      }),
    );
  }
  for (const line of layout.lines) {
    svg.append(
      svgEl("polyline", {
        points: line.points.map((p) => `${p.x.toFixed(1)},${p.y.toFixed(1)}`).join(" "),
        fill: "none",
        stroke: "#47a",
        "stroke-width": "1.5",
      }),
    );
  }
  for (const dot of layout.dots) {
    svg.append(svgEl("circle", { cx: dot.x.toFixed(1), cy: dot.y.toFixed(1), r: "3", fill: "#47a" }));
  }
  for (const label of layout.xLabels) {
    const text = svgEl("text", {
      x: label.x.toFixed(1),
      y: String(layout.height - 8),
      "font-size": "10",
      "text-anchor": "middle",
    });
    text.textContent = label.text;
    svg.append(text);
  }
  return svg;
}

async function exploreView(): Promise<void> {
  try {
    const [counts, weeks, steps] = await Promise.all([
      api.ecgCounts(),
      api.timeInStudy(),
      api.series("steps", "sum"),
    ]);
    show(
      el("p", {}, el("a", { href: "#queue" }, "← queue")),
      el("h1", {}, "Study stats"),
      chartSvg(counts),
      chartSvg(weeks),
      chartSvg(steps),
    );
  } catch (err) {
    show(errorBanner(err));
  }
}

// --- routing ---------------------------------------------------------------

function route(): void {
  if (!session.canAnnotate && !location.hash.startsWith("#recording/")) {
    show(gateView(() => void queueView()));
    return;
  }
  const hash = location.hash || "#queue";
  if (hash.startsWith("#recording/")) {
    void recordingView(decodeURIComponent(hash.slice("#recording/".length)));
  } else if (hash === "#explore") {
    void exploreView();
  } else {
    void queueView();
  }
}

window.addEventListener("hashchange", route);
route();
