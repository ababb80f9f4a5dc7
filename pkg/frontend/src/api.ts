// Typed client for the investigation service. Every request funnels through
// request() and is appended to requestLog, so tests can audit that the UI
// only ever talks to documented endpoints.

export type NodeDoc = { id: string; status: string; label: string };

export type EdgeDoc = {
  a: string;
  b: string;
  out: number;
  in: number;
  first: string;
  last: string;
  sms: number;
  kind: "call" | "proximity";
};

export type WebDoc = { nodes: NodeDoc[]; edges: EdgeDoc[] };

export type CaseDoc = {
  schema: string;
  case_id: string;
  index: string;
  web: WebDoc;
  pending_cdra: string[];
  cdra_done: string[];
  closed: boolean;
  test_log: unknown[];
  audit: unknown[];
};

export type GeoJsonDoc = {
  type: "FeatureCollection";
  features: Array<{
    type: "Feature";
    geometry: { type: string; coordinates: unknown };
    properties: Record<string, unknown>;
  }>;
};

export type AlertDoc = {
  seq: number;
  kind: string;
  subscriber: string;
  at: string;
  distance_m: number;
  radius_m: number;
  center: [number, number];
};

export type AdvisoryDoc = {
  advisory_id: string;
  valid_until: string;
  message: string;
  geojson: GeoJsonDoc;
};

export type RequestLogEntry = { method: string; path: string };

export const requestLog: RequestLogEntry[] = [];

export class ApiError extends Error {
  status: number;

  constructor(status: number, message: string) {
    super(message);
    this.status = status;
  }
}

export class Api {
  baseUrl: string;
  token: string;

  constructor(baseUrl = "", token = "") {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.token = token;
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    contentType = "application/json",
  ): Promise<T> {
    requestLog.push({ method, path });
    const headers: Record<string, string> = {};
    if (this.token) headers["X-API-Token"] = this.token;
    let payload: string | undefined;
    if (body !== undefined) {
      headers["Content-Type"] = contentType;
      payload = contentType === "application/json" ? JSON.stringify(body) : String(body);
    }
    const response = await fetch(this.baseUrl + path, { method, headers, body: payload });
    const text = await response.text();
    const doc = text ? JSON.parse(text) : {};
    if (!response.ok) {
      throw new ApiError(response.status, doc.error ?? `HTTP ${response.status}`);
    }
    return doc as T;
  }

  health(): Promise<{ status: string; cases: number }> {
    return this.request("GET", "/health");
  }

  listCases(): Promise<{ cases: string[] }> {
    return this.request("GET", "/cases");
  }

  getCase(caseId: string): Promise<CaseDoc> {
    return this.request("GET", `/cases/${encodeURIComponent(caseId)}`);
  }

  // CSV goes in the body; index/window/etc ride as query parameters
  openCase(opts: {
    index: string;
    csv: string;
    caseId?: string;
    window?: string;
    dialect?: string;
  }): Promise<{ case: CaseDoc; diagnostics: string[] }> {
    const params = new URLSearchParams({ index: opts.index });
    if (opts.caseId) params.set("case_id", opts.caseId);
    if (opts.window) params.set("window", opts.window);
    if (opts.dialect) params.set("dialect", opts.dialect);
    return this.request("POST", `/cases?${params}`, opts.csv, "text/csv");
  }

  confirm(caseId: string, patient: string, contacts: string[]): Promise<CaseDoc> {
    return this.request("POST", `/cases/${encodeURIComponent(caseId)}/confirm`, {
      patient,
      contacts,
    });
  }

  recordTest(
    caseId: string,
    subscriber: string,
    result: "Positive" | "Negative",
  ): Promise<CaseDoc> {
    return this.request("POST", `/cases/${encodeURIComponent(caseId)}/tests`, {
      subscriber,
      result,
    });
  }

  attachCdra(opts: {
    caseId: string;
    patient: string;
    csv: string;
    window?: string;
    dialect?: string;
  }): Promise<{ case: CaseDoc; diagnostics: string[] }> {
    const params = new URLSearchParams({ patient: opts.patient });
    if (opts.window) params.set("window", opts.window);
    if (opts.dialect) params.set("dialect", opts.dialect);
    return this.request(
      "POST",
      `/cases/${encodeURIComponent(opts.caseId)}/cdra?${params}`,
      opts.csv,
      "text/csv",
    );
  }

  getPath(caseId: string, subscriber: string): Promise<GeoJsonDoc> {
    return this.request(
      "GET",
      `/cases/${encodeURIComponent(caseId)}/paths/${encodeURIComponent(subscriber)}`,
    );
  }

  publishAdvisory(caseId: string, subscriber: string): Promise<AdvisoryDoc> {
    return this.request("POST", "/advisories", { case_id: caseId, subscriber });
  }

  listAdvisories(): Promise<{ advisories: AdvisoryDoc[] }> {
    return this.request("GET", "/advisories");
  }

  getAlerts(since: number): Promise<{ alerts: AlertDoc[]; cursor: number }> {
    return this.request("GET", `/alerts?since=${since}`);
  }
}
