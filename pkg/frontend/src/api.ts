/** Typed client for the annotation session service. Every datum shown in
 * the UI comes from these responses; nothing is computed client-side. */

export const SCHEMA_VERSION = 1;

export interface Predicate {
  feature: number;
  op: "<=" | ">";
  threshold: number;
}

export interface RuleJson {
  id: number;
  predicates: Predicate[];
  text: string[];
  label: number;
  coverage_size: number;
  precision: number | null;
  f1: number | null;
}

export interface ExplanationJson {
  v: number;
  fidelity: number;
  n_pool: number;
  rules: RuleJson[];
}

export interface MetricsJson {
  v: number;
  iterations: number[];
  test_macro_f1: number[];
  query_macro_f1: number[];
  nb_experimental: number[];
  nb_narrative: number[];
  fidelity: number[];
  n_rules: number[];
}

export interface InstanceJson {
  id: number;
  features: number[];
  rule_label: number;
  labeled: boolean;
  supervisor_label: number | null;
}

export interface SessionView {
  v: number;
  id: string;
  iteration: number;
  status: "active" | "exhausted";
  labeled_count: number;
  unlabeled_count: number;
  explanation: ExplanationJson;
  metrics: MetricsJson;
  feature_names: string[];
  dataset: string;
  instances_by_rule: Record<string, InstanceJson[]>;
}

export interface FeedbackStatus {
  id: number;
  accepted: boolean;
  reason: string;
}

export interface FeedbackResponse extends SessionView {
  statuses: FeedbackStatus[];
}

export interface CreateParams {
  dataset?: string;
  csv?: string;
  name?: string;
  model: { kind: string; hyperparameters?: Record<string, number> };
  seed: number;
  surrogate?: Record<string, number>;
  fold?: { train: number[]; test: number[]; initial: number[] };
}

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly retriable: boolean,
  ) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  let response: Response;
  try {
    response = await fetch(url, init);
  } catch (err) {
    throw new ApiError(`network failure: ${String(err)}`, 0, true);
  }
  if (!response.ok) {
    const body = await response.text();
    throw new ApiError(`${response.status}: ${body}`, response.status, response.status >= 500);
  }
  return (await response.json()) as T;
}

export class SessionApi {
  constructor(readonly baseUrl: string) {}

  createSession(params: CreateParams): Promise<SessionView> {
    return request<SessionView>(`${this.baseUrl}/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ v: SCHEMA_VERSION, ...params }),
    });
  }

  getSession(id: string): Promise<SessionView> {
    return request<SessionView>(`${this.baseUrl}/sessions/${id}`);
  }

  getMetrics(id: string): Promise<MetricsJson> {
    return request<MetricsJson>(`${this.baseUrl}/sessions/${id}/metrics`);
  }

  submitFeedback(
    id: string,
    instances: { id: number; label: number }[],
  ): Promise<FeedbackResponse> {
    return request<FeedbackResponse>(`${this.baseUrl}/sessions/${id}/feedback`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ v: SCHEMA_VERSION, instances }),
    });
  }
}
