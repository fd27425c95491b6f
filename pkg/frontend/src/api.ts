import type {
  ApiErrorDetail,
  DecisionRequest,
  DecisionResponse,
  ExportResponse,
  GroupSummary,
  Page,
  SchemaRules,
  SessionSummary,
} from "./types";

export class ApiError extends Error {
  status: number;
  detail: ApiErrorDetail;

  constructor(status: number, detail: ApiErrorDetail) {
    super(detail.message ?? `HTTP ${status}`);
    this.status = status;
    this.detail = detail;
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(base + path, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  if (!response.ok) {
    let detail: ApiErrorDetail = { code: "http_error", message: `HTTP ${response.status}` };
    try {
      const body = await response.json();
      if (body && typeof body.detail === "object") detail = body.detail;
      else if (typeof body.detail === "string") detail = { code: "http_error", message: body.detail };
    } catch {
      // keep the generic detail
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

/** Thin typed client over the review service. */
export class ReviewApi {
  constructor(readonly base: string = "") {}

  getSession(): Promise<SessionSummary> {
    return request(this.base, "/api/session");
  }

  getGroups(): Promise<GroupSummary[]> {
    return request(this.base, "/api/groups");
  }

  getGroupPage(groupId: string, cursor = 0, limit = 50): Promise<Page> {
    return request(this.base, `/api/groups/${groupId}?cursor=${cursor}&limit=${limit}`);
  }

  getQueue(cursor = 0, limit = 50): Promise<Page> {
    return request(this.base, `/api/queue/unlabeled?cursor=${cursor}&limit=${limit}`);
  }

  getSchema(): Promise<SchemaRules> {
    return request(this.base, "/api/schema");
  }

  postDecision(decision: DecisionRequest): Promise<DecisionResponse> {
    return request(this.base, "/api/decisions", {
      method: "POST",
      body: JSON.stringify(decision),
    });
  }

  postExport(): Promise<ExportResponse> {
    return request(this.base, "/api/export", { method: "POST" });
  }
}
