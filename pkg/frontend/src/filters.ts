/** Queue filter state and its query-string round trip. */

export interface FilterState {
  status?: "Pending" | "Reviewed";
  classification?: string;
  user?: string;
  from?: string;
  to?: string;
  ageGroup?: string;
}

export interface PageRequest {
  page: number;
  pageSize: number;
}

const FILTER_KEYS: (keyof FilterState)[] = [
  "status",
  "classification",
  "user",
  "from",
  "to",
  "ageGroup",
];

export function toQuery(filters: FilterState, page?: PageRequest): string {
  const params = new URLSearchParams();
  for (const key of FILTER_KEYS) {
    const value = filters[key];
    if (value) params.set(key, value);
  }
  if (page) {
    params.set("page", String(page.page));
    params.set("pageSize", String(page.pageSize));
  }
  const text = params.toString();
  return text ? `?${text}` : "";
}

export function fromQuery(query: string): FilterState {
  const params = new URLSearchParams(query.startsWith("?") ? query.slice(1) : query);
  const filters: FilterState = {};
  for (const key of FILTER_KEYS) {
    const value = params.get(key);
    if (!value) continue;
    if (key === "status") {
      if (value === "Pending" || value === "Reviewed") filters.status = value;
    } else {
      filters[key] = value;
    }
  }
  return filters;
}
