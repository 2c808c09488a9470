/** Waveform view math: time windows, pan/zoom, gap splitting, decimation.
 *
 * All functions are pure; the DOM layer only turns segments into SVG. The
 * decimation is display-only and never feeds back into API calls.
 */

export interface Waveform {
  samples: (number | null)[];
  samplingFrequencyHz: number;
}

export interface ViewWindow {
  start: number;
  end: number;
}

export interface SamplePoint {
  t: number;
  v: number;
}

export const MAX_VISIBLE_POINTS = 10000;
const MIN_SPAN_SECONDS = 0.01;

export function durationSeconds(wf: Waveform): number {
  return wf.samples.length / wf.samplingFrequencyHz;
}

export function fullWindow(wf: Waveform): ViewWindow {
  return { start: 0, end: durationSeconds(wf) };
}

export function clampWindow(win: ViewWindow, duration: number): ViewWindow {
  const span = Math.min(Math.max(win.end - win.start, MIN_SPAN_SECONDS), duration);
  const start = Math.min(Math.max(win.start, 0), duration - span);
  return { start, end: start + span };
}

/** factor > 1 zooms in; focus in [0, 1] is the anchor within the window. */
export function zoomWindow(
  win: ViewWindow,
  factor: number,
  focus: number,
  duration: number,
): ViewWindow {
  const span = (win.end - win.start) / factor;
  const anchor = win.start + (win.end - win.start) * focus;
  return clampWindow({ start: anchor - span * focus, end: anchor + span * (1 - focus) }, duration);
}

/** Shift by a fraction of the current span; positive pans right. */
export function panWindow(win: ViewWindow, fraction: number, duration: number): ViewWindow {
  const shift = (win.end - win.start) * fraction;
  return clampWindow({ start: win.start + shift, end: win.end + shift }, duration);
}

/** Half-open sample index range [first, last) visible in the window. */
export function visibleRange(wf: Waveform, win: ViewWindow): { first: number; last: number } {
  const fs = wf.samplingFrequencyHz;
  const first = Math.max(0, Math.ceil(win.start * fs - 1e-9));
  const last = Math.min(wf.samples.length, Math.ceil(win.end * fs - 1e-9));
  return { first, last: Math.max(first, last) };
}

/** Polyline segments inside the window, split wherever a sample is null. */
export function toSegments(wf: Waveform, win: ViewWindow): SamplePoint[][] {
  const { first, last } = visibleRange(wf, win);
  const fs = wf.samplingFrequencyHz;
  const segments: SamplePoint[][] = [];
  let current: SamplePoint[] = [];
  for (let i = first; i < last; i++) {
    const value = wf.samples[i];
    if (value === null || value === undefined) {
      if (current.length) {
        segments.push(current);
        current = [];
      }
      continue;
    }
    current.push({ t: i / fs, v: value });
  }
  if (current.length) segments.push(current);
  return segments;
}

/** Min/max-pair bucket decimation so spikes survive downsampling. */
export function decimate(points: SamplePoint[], maxPoints = MAX_VISIBLE_POINTS): SamplePoint[] {
  if (points.length <= maxPoints) return points;
  const buckets = Math.max(1, Math.floor(maxPoints / 2));
  const perBucket = points.length / buckets;
  const out: SamplePoint[] = [];
  for (let b = 0; b < buckets; b++) {
    const lo = Math.floor(b * perBucket);
    const hi = Math.min(points.length, Math.max(lo + 1, Math.floor((b + 1) * perBucket)));
    let min = points[lo]!;
    let max = points[lo]!;
    for (let i = lo + 1; i < hi; i++) {
      const p = points[i]!;
      if (p.v < min.v) min = p;
      if (p.v > max.v) max = p;
    }
    if (min === max) {
      out.push(min);
    } else if (min.t <= max.t) {
      out.push(min, max);
    } else {
      out.push(max, min);
    }
  }
  return out;
}

/** Segments decimated to the display budget, sharing it proportionally. */
export function displaySegments(
  wf: Waveform,
  win: ViewWindow,
  maxPoints = MAX_VISIBLE_POINTS,
): SamplePoint[][] {
  const segments = toSegments(wf, win);
  const total = segments.reduce((n, s) => n + s.length, 0);
  if (total <= maxPoints) return segments;
  return segments.map((segment) =>
    decimate(segment, Math.max(2, Math.floor((maxPoints * segment.length) / total))),
  );
}
