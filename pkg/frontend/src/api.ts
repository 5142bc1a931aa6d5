// Typed client for the clpc what-if service (/v1). All model math happens
// server-side; this module only moves JSON.

export interface EditIn {
  concept_index: number;
  value: number;
}

export interface WhatIfRequest {
  scores: number[];
  edits?: EditIn[];
  target?: number | null;
  alpha_override?: number | null;
}

export interface PerConcept {
  concept_index: number;
  prototype_bit: number;
  score: number;
  contribution: number;
  band: string;
}

export interface Decomposition {
  class_index: number;
  class_name: string;
  total: number;
  per_concept: PerConcept[];
}

export interface Prediction {
  label_index: number;
  label: string;
  margin: number;
  distances?: number[];
  posterior?: number[];
}

export interface ConformalBlock {
  alpha: number;
  quantile: number | "inf";
  set: number[];
  set_names: string[];
  rejected: boolean;
}

export interface GainEntry {
  concept_index: number;
  gain: number;
}

export interface GainsBlock {
  strategy: string;
  target: number;
  ranked: GainEntry[];
}

export interface WhatIfResponse {
  prediction: Prediction;
  decomposition: { predicted: Decomposition; target: Decomposition | null } | null;
  conformal: ConformalBlock | null;
  gains: GainsBlock | null;
  applied_scores: number[];
}

export interface CalibrationInfo {
  alpha: number;
  n_calibration: number;
  quantile: number | "inf";
}

export interface ModelInfo {
  kind: string;
  K: number;
  L: number;
  class_names: string[];
  prototypes?: number[][];
  weights_shape?: number[];
  calibrated: boolean;
  calibration?: CalibrationInfo | null;
}

export interface HealthInfo {
  status: string;
  artifact_digest: string;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
  }
}

async function raiseForStatus(resp: Response): Promise<never> {
  let detail = `HTTP ${resp.status}`;
  try {
    const body = await resp.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(resp.status, detail);
}

export class Client {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path);
    if (!resp.ok) await raiseForStatus(resp);
    return resp.json() as Promise<T>;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) await raiseForStatus(resp);
    return resp.json() as Promise<T>;
  }

  model(): Promise<ModelInfo> {
    return this.getJson("/v1/model");
  }

  health(): Promise<HealthInfo> {
    return this.getJson("/v1/health");
  }

  whatif(req: WhatIfRequest): Promise<WhatIfResponse> {
    return this.postJson("/v1/whatif", req);
  }

  conformal(scores: number[], alphaOverride?: number): Promise<ConformalBlock> {
    const body: Record<string, unknown> = { scores };
    if (alphaOverride !== undefined) body.alpha_override = alphaOverride;
    return this.postJson("/v1/conformal", body);
  }
}
