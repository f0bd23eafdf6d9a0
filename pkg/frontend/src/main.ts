/**
 * Browser entry point: wires the store, the WebSocket row feed, and the
 * rating form into the page. All numbers shown round-trip from the service.
 */
import { ApiClient, StreamRowSchema } from "./api.js";
import { RatingForm, satisfactionSteps, TRAIT_COUNT } from "./rating.js";
import { SessionStore } from "./store.js";
import { renderApp } from "./view.js";

const baseUrl =
  new URLSearchParams(window.location.search).get("service") ??
  "http://127.0.0.1:8000";

const client = new ApiClient(baseUrl);
const store = new SessionStore(client);
const form = new RatingForm();
let socket: WebSocket | null = null;

function openStream(sessionId: string): void {
  socket?.close();
  socket = new WebSocket(client.streamUrl(sessionId));
  socket.onmessage = (event) => {
    const parsed = StreamRowSchema.safeParse(JSON.parse(event.data));
    if (parsed.success) store.pushRow(parsed.data);
  };
  socket.onclose = () => {
    socket = null;
  };
}

function renderRatingForm(container: HTMLElement): void {
  const traits = store.getState().predictions ?? [];
  const rows = traits
    .map((p, i) => {
      const picked = form.entries[i];
      return (
        `<div class="rating-row">` +
        `<span>${p.trait}: predicted <strong>${p.value ? "yes" : "no"}</strong></span>` +
        `<label><input type="radio" name="r${i}" value="1" ${picked === 1 ? "checked" : ""}/> correct</label>` +
        `<label><input type="radio" name="r${i}" value="0" ${picked === 0 ? "checked" : ""}/> incorrect</label>` +
        `</div>`
      );
    })
    .join("");
  const options = satisfactionSteps()
    .map(
      (v) =>
        `<option value="${v}" ${form.satisfaction === v ? "selected" : ""}>${v}</option>`,
    )
    .join("");
  container.innerHTML =
    rows +
    `<label>Satisfaction (0–5): <select id="satisfaction">` +
    `<option value="">—</option>${options}</select></label>` +
    `<p class="form-errors">${form.errors().join("; ")}</p>` +
    `<button id="submit-ratings" ${form.isComplete() ? "" : "disabled"}>Submit</button>`;
  for (let i = 0; i < TRAIT_COUNT; i++) {
    container.querySelectorAll<HTMLInputElement>(`input[name=r${i}]`).forEach((el) => {
      el.addEventListener("change", () => {
        form.setEntry(i, Number(el.value) as 0 | 1);
        mount();
      });
    });
  }
  container
    .querySelector<HTMLSelectElement>("#satisfaction")
    ?.addEventListener("change", (e) => {
      const v = Number((e.target as HTMLSelectElement).value);
      if (!Number.isNaN(v)) form.setSatisfaction(v);
      mount();
    });
  container
    .querySelector<HTMLButtonElement>("#submit-ratings")
    ?.addEventListener("click", () => void store.submitRatings(form));
}

function mount(): void {
  const root = document.getElementById("app");
  if (!root) return;
  root.innerHTML = renderApp(store.getState());
  root.querySelector<HTMLButtonElement>("#start")?.addEventListener("click", () => {
    void store.start({ source: { type: "simulator", seed: Date.now() % 100000 } }).then((s) => {
      if (s) openStream(s.session_id);
    });
  });
  root
    .querySelector<HTMLButtonElement>("#advance")
    ?.addEventListener("click", () => void store.advance());
  const formHost = root.querySelector<HTMLElement>("#rating-form");
  if (formHost) renderRatingForm(formHost);
}

store.subscribe(() => mount());
mount();
