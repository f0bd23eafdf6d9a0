/**
 * Pure render functions: store state in, HTML string out. The browser entry
 * point mounts these into the page; tests assert on the strings directly.
 */
import { Phase, Prediction, Report, StreamRow } from "./api.js";
import { StoreState } from "./store.js";
import { formatAccuracy } from "./store.js";

const RUNNING: Phase[] = ["happy", "sad", "neutral", "meditation"];

export function escapeHtml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderPhaseBar(current: Phase, order: readonly Phase[]): string {
  const items = order
    .map((p) => {
      const cls = p === current ? "phase current" : "phase";
      return `<li class="${cls}">${escapeHtml(p)}</li>`;
    })
    .join("");
  return `<ol class="phase-bar">${items}</ol>`;
}

export function renderRows(rows: StreamRow[]): string {
  if (rows.length === 0) {
    return `<p class="empty">waiting for band data…</p>`;
  }
  const last = rows[rows.length - 1]!;
  const cells = last.bands.map((v) => `<td>${v}</td>`).join("");
  return (
    `<table class="bands"><tr><th>t (ms)</th><td>${last.t_ms}</td></tr>` +
    `<tr><th>bands</th>${cells}</tr></table>` +
    `<p class="count">${rows.length} rows buffered</p>`
  );
}

export function renderPredictions(predictions: Prediction[]): string {
  const rows = predictions
    .map(
      (p, i) =>
        `<tr data-trait="${escapeHtml(p.trait)}">` +
        `<td>${i + 1}</td><td>${escapeHtml(p.trait)}</td>` +
        `<td>${p.value ? "yes" : "no"}</td>` +
        `<td>${(p.probability * 100).toFixed(1)}%</td></tr>`,
    )
    .join("");
  return (
    `<table class="predictions"><thead><tr>` +
    `<th>#</th><th>trait</th><th>predicted</th><th>confidence</th>` +
    `</tr></thead><tbody>${rows}</tbody></table>`
  );
}

export function renderReport(report: Report): string {
  return (
    `<section class="report">` +
    `<p class="accuracy">Accuracy: <strong>${formatAccuracy(report.accuracy)}</strong></p>` +
    `<p class="satisfaction">Satisfaction: <strong>${report.satisfaction}</strong> / 5</p>` +
    `</section>`
  );
}

export function renderApp(state: StoreState): string {
  const parts: string[] = [];
  if (state.lastError) {
    parts.push(`<p class="error">${escapeHtml(state.lastError)}</p>`);
  }
  if (!state.session) {
    parts.push(`<button id="start">Start session</button>`);
    return parts.join("\n");
  }
  const { session } = state;
  parts.push(renderPhaseBar(session.phase, session.phase_order as Phase[]));
  if (RUNNING.includes(session.phase)) {
    parts.push(renderRows(state.rows));
    parts.push(`<button id="advance">Next phase</button>`);
  } else if (session.phase === "idle") {
    parts.push(`<button id="advance">Begin first phase</button>`);
  } else if (session.phase === "predicting" && state.predictions) {
    parts.push(renderPredictions(state.predictions));
    parts.push(`<button id="advance">Rate the predictions</button>`);
  } else if (session.phase === "rating") {
    parts.push(`<div id="rating-form"></div>`);
  } else if (session.phase === "done" && state.report) {
    parts.push(renderReport(state.report));
  }
  return parts.join("\n");
}
