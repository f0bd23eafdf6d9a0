/**
 * Single-store session state for the UI.
 *
 * All state changes are driven by the service API: the store performs a
 * request, replaces its snapshot from the response, and notifies
 * subscribers. Live band rows are kept in a bounded ring buffer.
 */
import {
  ApiClient,
  ApiError,
  CreateSessionRequest,
  Phase,
  Prediction,
  Report,
  SessionSnapshot,
  StreamRow,
} from "./api.js";
import { RatingForm } from "./rating.js";

export interface StoreState {
  session: SessionSnapshot | null;
  predictions: Prediction[] | null;
  report: Report | null;
  rows: StreamRow[];
  lastError: string | null;
  busy: boolean;
}

export type Listener = (state: StoreState) => void;

export class SessionStore {
  private state: StoreState = {
    session: null,
    predictions: null,
    report: null,
    rows: [],
    lastError: null,
    busy: false,
  };
  private listeners = new Set<Listener>();

  constructor(
    private readonly client: ApiClient,
    readonly ringSize = 120,
  ) {}

  getState(): StoreState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private setState(patch: Partial<StoreState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  private async run<T>(op: () => Promise<T>): Promise<T | null> {
    this.setState({ busy: true, lastError: null });
    try {
      return await op();
    } catch (err) {
      const message =
        err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
      this.setState({ lastError: message });
      return null;
    } finally {
      this.setState({ busy: false });
    }
  }

  get phase(): Phase {
    return this.state.session?.phase ?? "idle";
  }

  async start(request: CreateSessionRequest = {}): Promise<SessionSnapshot | null> {
    return this.run(async () => {
      const session = await this.client.createSession(request);
      this.setState({
        session,
        predictions: null,
        report: null,
        rows: [],
      });
      return session;
    });
  }

  async refresh(): Promise<void> {
    const id = this.state.session?.session_id;
    if (!id) return;
    await this.run(async () => {
      this.setState({ session: await this.client.getSession(id) });
    });
  }

  async advance(): Promise<Phase | null> {
    const id = this.state.session?.session_id;
    if (!id) return null;
    return this.run(async () => {
      const phase = await this.client.advance(id);
      this.setState({ session: await this.client.getSession(id) });
      if (phase === "predicting") {
        await this.loadPredictions();
      }
      return phase;
    });
  }

  async loadPredictions(): Promise<Prediction[] | null> {
    const id = this.state.session?.session_id;
    if (!id) return null;
    return this.run(async () => {
      const predictions = await this.client.getPredictions(id);
      this.setState({ predictions });
      return predictions;
    });
  }

  async submitRatings(form: RatingForm): Promise<Report | null> {
    const id = this.state.session?.session_id;
    if (!id) return null;
    return this.run(async () => {
      const { ratings, satisfaction } = form.payload();
      const report = await this.client.submitRatings(id, ratings, satisfaction);
      this.setState({ report, session: await this.client.getSession(id) });
      return report;
    });
  }

  /** Append a live row, evicting the oldest beyond the ring size. */
  pushRow(row: StreamRow): void {
    const rows = [...this.state.rows, row];
    if (rows.length > this.ringSize) rows.splice(0, rows.length - this.ringSize);
    this.setState({ rows });
  }

  /** The accuracy figure the report screen displays, e.g. "85.7%". */
  displayedAccuracy(): string | null {
    if (!this.state.report) return null;
    return formatAccuracy(this.state.report.accuracy);
  }
}

export function formatAccuracy(fraction: number): string {
  return `${(fraction * 100).toFixed(1)}%`;
}
