/**
 * Contract tests against the real session service (simulator-backed,
 * 5-second phases). A Python fixture process trains a quick selector and
 * serves the API; every assertion here exercises the same client code the
 * browser uses.
 */
import { ChildProcess, spawn } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { ApiClient, StreamRow, StreamRowSchema } from "../src/api.js";
import { RatingForm } from "../src/rating.js";
import { SessionStore, formatAccuracy } from "../src/store.js";

const PORT = 8900 + Math.floor(Math.random() * 100);
const BASE = `http://127.0.0.1:${PORT}`;

let service: ChildProcess;

function startService(): Promise<void> {
  return new Promise((resolve, reject) => {
    service = spawn("python3", ["scripts/serve_fixture.py", String(PORT)], {
      cwd: new URL("..", import.meta.url).pathname,
      stdio: ["ignore", "pipe", "inherit"],
    });
    service.on("exit", (code) =>
      reject(new Error(`service exited early with code ${code}`)),
    );
    service.stdout!.on("data", (chunk: Buffer) => {
      if (chunk.toString().includes("READY")) resolve();
    });
  });
}

beforeAll(async () => {
  await startService();
}, 120_000);

afterAll(() => {
  service?.removeAllListeners("exit");
  service?.kill();
});

const client = () => new ApiClient(BASE);

async function runToRating(store: SessionStore): Promise<void> {
  await store.start({
    source: { type: "simulator", seed: Math.floor(Math.random() * 1e6) },
    phase_duration_s: 5,
    rows_per_second: 1,
  });
  for (let i = 0; i < 6; i++) {
    await store.advance();
    expect(store.getState().lastError).toBeNull();
  }
  expect(store.phase).toBe("rating");
}

describe("service contract", () => {
  it("completes the full session flow with 5-second phases", async () => {
    const store = new SessionStore(client());
    await runToRating(store);
    const predictions = store.getState().predictions!;
    expect(predictions).toHaveLength(14);
    for (const p of predictions) {
      expect(p.probability).toBeGreaterThanOrEqual(0);
      expect(p.probability).toBeLessThanOrEqual(1);
    }
    const form = new RatingForm();
    for (let i = 0; i < 14; i++) form.setEntry(i, 1);
    form.setSatisfaction(5);
    const report = await store.submitRatings(form);
    expect(report?.accuracy).toBe(1);
    expect(store.phase).toBe("done");
  });

  it("mirrors the form's constraints: service rejects what the form rejects", async () => {
    const api = client();
    const store = new SessionStore(api);
    await runToRating(store);
    const id = store.getState().session!.session_id;
    // 13 ratings: the form cannot even build this payload; the service 400s it
    await expect(
      api.submitRatings(id, Array(13).fill(1) as (0 | 1)[], 4),
    ).rejects.toMatchObject({ code: "BadRatingCount", status: 400 });
    // satisfaction outside 0..5: invalid in the form, rejected by the service
    await expect(
      api.submitRatings(id, Array(14).fill(1) as (0 | 1)[], 5.5),
    ).rejects.toMatchObject({ code: "SatisfactionOutOfRange", status: 400 });
  });

  it("streams schema-valid band rows over the websocket", async () => {
    const api = client();
    const store = new SessionStore(api);
    const session = await store.start({
      source: { type: "simulator", seed: 7 },
      phase_duration_s: 5,
      rows_per_second: 1,
    });
    const rows: StreamRow[] = [];
    const ws = new WebSocket(api.streamUrl(session!.session_id));
    const gotRows = new Promise<void>((resolve) => {
      ws.on("message", (data) => {
        rows.push(StreamRowSchema.parse(JSON.parse(data.toString())));
        if (rows.length >= 5) resolve();
      });
    });
    await new Promise((resolve) => ws.on("open", resolve));
    await store.advance(); // happy phase fills 5 rows
    await gotRows;
    ws.close();
    expect(rows.slice(0, 5).map((r) => r.phase)).toEqual(Array(5).fill("happy"));
    expect(rows[0]!.bands).toHaveLength(8);
  });

  it("displayed accuracy matches the service report for 20 random rating vectors", async () => {
    for (let trial = 0; trial < 20; trial++) {
      const store = new SessionStore(client());
      await runToRating(store);
      const form = new RatingForm();
      let ones = 0;
      for (let i = 0; i < 14; i++) {
        const v = Math.random() < 0.5 ? 1 : 0;
        ones += v;
        form.setEntry(i, v as 0 | 1);
      }
      form.setSatisfaction(Math.round(Math.random() * 10) / 2);
      const report = await store.submitRatings(form);
      expect(report).not.toBeNull();
      expect(report!.accuracy).toBeCloseTo(ones / 14, 12);
      expect(store.displayedAccuracy()).toBe(formatAccuracy(ones / 14));
    }
  }, 120_000);

  it("aggregates completed sessions in the summary report", async () => {
    const summary = await client().summary();
    expect(summary.n_sessions).toBeGreaterThanOrEqual(21);
    expect(summary.mean_satisfaction).not.toBeNull();
    expect(Object.keys(summary.per_trait_accuracy)).toHaveLength(14);
  });
});
