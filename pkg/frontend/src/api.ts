/** Typed client for the review service JSON API. */

import { toQuery, type FilterState, type PageRequest } from "./filters.js";

export interface AnnotationDoc {
  recordingResourceId: string;
  reviewerInitials: string;
  diagnosis: string;
  quality: string;
  diagnosisOtherText?: string;
  notes?: string;
  annotatedAt?: string;
}

export interface AnnotationBody {
  reviewerInitials: string;
  diagnosis: string;
  quality: string;
  diagnosisOtherText?: string;
  notes?: string;
}

export interface RecordingSummary {
  resourceId: string;
  maskedUserId: string;
  date: string;
  ecgClassification: string;
  heartRateBpm: number | null;
  ageGroup: string;
  reviewStatus: "Pending" | "Reviewed";
  latestAnnotation: AnnotationDoc | null;
}

export interface QueuePage {
  total: number;
  pendingCount: number;
  items: RecordingSummary[];
}

export interface WaveformPayload {
  samplingFrequencyHz: number;
  samples: (number | null)[];
}

export interface RecordingDetail {
  summary: RecordingSummary;
  waveform: WaveformPayload;
  annotations: AnnotationDoc[];
}

export interface ChartPoint {
  x: string | number;
  y: number | null;
}

export interface ChartSeries {
  name: string;
  points: ChartPoint[];
}

export interface ChartAxis {
  label: string;
  unit: string;
}

export interface ChartDoc {
  kind: string;
  title: string;
  series: ChartSeries[];
  xAxis: ChartAxis;
  yAxis: ChartAxis;
}

export class ApiError extends Error {
  status: number;
  detail: string;

  constructor(status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
    this.status = status;
    this.detail = detail;
  }
}

type FetchFn = typeof fetch;

async function errorDetail(response: Response): Promise<string> {
  try {
    const body = await response.json();
    if (typeof body.detail === "string") return body.detail;
    return JSON.stringify(body.detail ?? body);
  } catch {
    return response.statusText;
  }
}

export class ApiClient {
  readonly baseUrl: string;
  private fetchFn: FetchFn;
  private inflight = new Map<string, Promise<unknown>>();

  constructor(baseUrl = "", fetchFn: FetchFn = fetch) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.fetchFn = fetchFn;
  }

  /** GETs to the same URL share one in-flight request. */
  private getJson<T>(path: string): Promise<T> {
    const url = this.baseUrl + path;
    const pending = this.inflight.get(url);
    if (pending) return pending as Promise<T>;
    const request = (async () => {
      const response = await this.fetchFn(url);
      if (!response.ok) throw new ApiError(response.status, await errorDetail(response));
      return (await response.json()) as T;
    })().finally(() => this.inflight.delete(url));
    this.inflight.set(url, request);
    return request;
  }

  queue(filters: FilterState = {}, page?: PageRequest): Promise<QueuePage> {
    return this.getJson(`/api/recordings${toQuery(filters, page)}`);
  }

  recording(resourceId: string): Promise<RecordingDetail> {
    return this.getJson(`/api/recordings/${encodeURIComponent(resourceId)}`);
  }

  async annotate(resourceId: string, body: AnnotationBody): Promise<AnnotationDoc> {
    const url = `${this.baseUrl}/api/recordings/${encodeURIComponent(resourceId)}/annotations`;
    const response = await this.fetchFn(url, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) throw new ApiError(response.status, await errorDetail(response));
    return (await response.json()) as AnnotationDoc;
  }

  ecgCounts(): Promise<ChartDoc> {
    return this.getJson("/api/stats/ecg-counts");
  }

  timeInStudy(): Promise<ChartDoc> {
    return this.getJson("/api/stats/time-in-study");
  }

  series(metric: string, agg: "sum" | "mean" = "sum"): Promise<ChartDoc> {
    return this.getJson(`/api/series/${encodeURIComponent(metric)}?agg=${agg}`);
  }
}
