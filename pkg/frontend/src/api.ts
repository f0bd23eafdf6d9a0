/**
 * Typed client for the session service HTTP/WS API.
 *
 * Every response is validated with zod before it reaches application code,
 * so schema drift between the service and the UI fails loudly.
 */
import { z } from "zod";

export const PHASES = [
  "idle",
  "happy",
  "sad",
  "neutral",
  "meditation",
  "predicting",
  "rating",
  "done",
] as const;

export const PhaseSchema = z.enum(PHASES);
export type Phase = z.infer<typeof PhaseSchema>;

export const PredictionSchema = z.object({
  trait: z.string().min(1),
  value: z.boolean(),
  probability: z.number().min(0).max(1),
});
export type Prediction = z.infer<typeof PredictionSchema>;

export const ReportSchema = z.object({
  session_id: z.string(),
  per_trait: z.array(
    z.object({
      trait: z.string(),
      prediction: z.boolean(),
      rating: z.union([z.literal(0), z.literal(1)]),
    }),
  ),
  accuracy: z.number().min(0).max(1),
  satisfaction: z.number().min(0).max(5),
});
export type Report = z.infer<typeof ReportSchema>;

export const SessionSnapshotSchema = z.object({
  session_id: z.string().min(1),
  phase: PhaseSchema,
  phase_order: z.array(PhaseSchema),
  source: z.string(),
  phase_duration_s: z.number().int().positive(),
  rows_per_second: z.number().int().positive(),
  rows_buffered: z.record(z.number().int().nonnegative()),
  total_rows: z.number().int().nonnegative(),
  predictions_ready: z.boolean(),
  report: ReportSchema.nullable(),
  external_port: z.number().int().nullable(),
});
export type SessionSnapshot = z.infer<typeof SessionSnapshotSchema>;

export const StreamRowSchema = z.object({
  t_ms: z.number().int().nonnegative(),
  bands: z.array(z.number().int().nonnegative()).length(8),
  phase: PhaseSchema,
});
export type StreamRow = z.infer<typeof StreamRowSchema>;

export const SummarySchema = z.object({
  n_sessions: z.number().int().nonnegative(),
  mean_satisfaction: z.number().nullable(),
  mean_accuracy: z.number().nullable(),
  per_trait_accuracy: z.record(z.number()),
});
export type Summary = z.infer<typeof SummarySchema>;

const ServiceErrorSchema = z.object({ code: z.string(), message: z.string() });

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface CreateSessionRequest {
  source?: { type: string; seed?: number; capture_path?: string; effect_scale?: number };
  phase_duration_s?: number;
  rows_per_second?: number;
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(
    schema: z.ZodType<T>,
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const res = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload: unknown = await res.json();
    if (!res.ok) {
      const err = ServiceErrorSchema.safeParse(payload);
      if (err.success) {
        throw new ApiError(err.data.code, err.data.message, res.status);
      }
      throw new ApiError("UnknownError", JSON.stringify(payload), res.status);
    }
    return schema.parse(payload);
  }

  createSession(req: CreateSessionRequest = {}): Promise<SessionSnapshot> {
    return this.request(SessionSnapshotSchema, "POST", "/sessions", req);
  }

  getSession(id: string): Promise<SessionSnapshot> {
    return this.request(SessionSnapshotSchema, "GET", `/sessions/${id}`);
  }

  advance(id: string): Promise<Phase> {
    return this.request(
      z.object({ phase: PhaseSchema }),
      "POST",
      `/sessions/${id}/advance`,
    ).then((r) => r.phase);
  }

  getPredictions(id: string): Promise<Prediction[]> {
    return this.request(
      z.object({ predictions: z.array(PredictionSchema).length(14) }),
      "GET",
      `/sessions/${id}/predictions`,
    ).then((r) => r.predictions);
  }

  submitRatings(
    id: string,
    ratings: (0 | 1)[],
    satisfaction: number,
  ): Promise<Report> {
    return this.request(ReportSchema, "POST", `/sessions/${id}/ratings`, {
      ratings,
      satisfaction,
    });
  }

  summary(): Promise<Summary> {
    return this.request(SummarySchema, "GET", "/reports/summary");
  }

  /** ws:// URL of the live row feed for a session. */
  streamUrl(id: string): string {
    return `${this.baseUrl.replace(/^http/, "ws")}/sessions/${id}/stream`;
  }
}
