/** Browser stepper: render session state, fire steps and interrupts.
 *
 * All semantics live behind the JSON protocol; this file only draws
 * whatever state the server reports and posts the user's choices back.
 */

import { DEMOS } from "./demos.js";
import {
  exportBundle,
  historyRow,
  redexMarks,
  replayArgv,
  replayStdin,
  resultBadges,
  segments,
  signalLog,
} from "./model.js";
import {
  isStale,
  ProtocolError,
  StepClient,
  type StateView,
  type TreeNode,
} from "./protocol.js";

const client = new StepClient();

interface AppState {
  sessionId: string | null;
  source: string;
  state: StateView | null;
  history: string[];
  notice: string | null;
  error: ProtocolError | null;
  injectError: string | null;
}

const app: AppState = {
  sessionId: null,
  source: DEMOS[0]?.source ?? "run return ()",
  state: null,
  history: [],
  notice: null,
  error: null,
  injectError: null,
};

// One request at a time: step buttons stay disabled while one is in flight.
let busy = false;

function setBusy(b: boolean): void {
  busy = b;
  document.body.classList.toggle("busy", b);
  for (const btn of document.querySelectorAll<HTMLButtonElement>(
    "button.redex, #int-send, #step-first")) {
    btn.disabled = b;
  }
  const undo = document.getElementById("undo") as HTMLButtonElement | null;
  if (undo) undo.disabled = b || !(app.state?.canUndo ?? false);
}

function guard(run: () => Promise<void>): () => void {
  return () => {
    if (busy) return;
    setBusy(true);
    void run().finally(() => setBusy(false));
  };
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function escapeHtml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

// -- rendering ---------------------------------------------------------------

function renderTree(node: TreeNode): string {
  const badge: Record<string, string> = {
    par: "node-par", signal: "node-signal", interrupt: "node-interrupt",
    run: "node-run", unknown: "node-unknown",
  };
  const cls = badge[node.kind] ?? "node-unknown";
  const children = node.children.map(renderTree).join("");
  return `<li><span class="${cls}">${escapeHtml(node.label)}</span>` +
    (children ? `<ul>${children}</ul>` : "") + "</li>";
}

function renderTerm(state: StateView): string {
  const segs = segments(state.text, redexMarks(state));
  return segs.map((s) => {
    const inner = escapeHtml(s.text);
    if (s.ids.length === 0) return inner;
    const target = s.ids[s.ids.length - 1];
    return `<span class="redex-span" data-redex="${escapeHtml(target!)}"` +
      ` title="click to fire">${inner}</span>`;
  }).join("");
}

function renderRedexes(state: StateView): string {
  if (state.redexes.length === 0) {
    const badges = resultBadges(state) ?? [];
    const chips = badges.map((b) => `<span class="badge">${escapeHtml(b)}</span>`).join(" ");
    return `<p class="settled">no redexes: ${escapeHtml(state.processResult)}</p>` +
      `<p>${chips}</p>`;
  }
  return "<ol class='redex-list'>" + state.redexes.map((r) =>
    `<li><button class="redex" data-redex="${escapeHtml(r.id)}">` +
    `<code>${escapeHtml(r.rule)}</code> @ ${escapeHtml(r.path)}</button>` +
    `<div class="preview">${escapeHtml(r.preview)}</div></li>`).join("") + "</ol>";
}

function renderInterruptPanel(state: StateView): string {
  if (state.signature.length === 0) {
    return "<p class='muted'>this module declares no signals</p>";
  }
  const opts = state.signature.map((s) =>
    `<option value="${escapeHtml(s.op)}">${escapeHtml(s.op)} : ${escapeHtml(s.payload)}</option>`)
    .join("");
  const err = app.injectError
    ? `<p class="inline-error">${escapeHtml(app.injectError)}</p>` : "";
  return `<select id="int-op">${opts}</select>` +
    `<input id="int-payload" placeholder="payload literal, e.g. ()" value="()">` +
    `<button id="int-send">send interrupt</button>${err}`;
}

function render(): void {
  const s = app.state;
  el("notice").textContent = app.notice ?? "";
  const diag = el("diagnostics");
  if (app.error) {
    const loc = app.error.location
      ? ` at ${app.error.location.line}:${app.error.location.col}` : "";
    diag.innerHTML = `<strong>${escapeHtml(app.error.kind)}</strong>${loc}: ` +
      escapeHtml(app.error.message);
    diag.classList.remove("hidden");
  } else {
    diag.classList.add("hidden");
  }
  if (!s) {
    el("session-panels").classList.add("hidden");
    return;
  }
  el("session-panels").classList.remove("hidden");
  el("step-count").textContent = `${s.stepCount} steps`;
  el("tree").innerHTML = `<ul>${renderTree(s.processTree)}</ul>`;
  el("term").innerHTML = renderTerm(s);
  el("redexes").innerHTML = renderRedexes(s);
  el("interrupt-panel").innerHTML = renderInterruptPanel(s);
  el("signals").innerHTML = signalLog(s.processTree)
    .map((ln) => `<li><code>${escapeHtml(ln)}</code></li>`).join("");
  el("history").innerHTML = app.history
    .map((h) => `<li>${escapeHtml(h)}</li>`).join("");
  (el("undo") as HTMLButtonElement).disabled = !s.canUndo;

  for (const btn of document.querySelectorAll<HTMLElement>("[data-redex]")) {
    btn.addEventListener("click", guard(() => fireStep(btn.dataset["redex"]!)));
  }
  const send = document.getElementById("int-send");
  if (send) send.addEventListener("click", guard(fireInject));
}

// -- actions -----------------------------------------------------------------

async function refresh(reason?: string): Promise<void> {
  if (!app.sessionId) return;
  app.state = await client.state(app.sessionId);
  app.notice = reason ?? null;
  render();
}

async function startSession(): Promise<void> {
  app.source = (el("source") as HTMLTextAreaElement).value;
  app.error = null;
  app.injectError = null;
  app.history = [];
  app.notice = null;
  try {
    const created = await client.createSession(app.source);
    app.sessionId = created.sessionId;
    app.state = created.state;
  } catch (e) {
    if (e instanceof ProtocolError) {
      app.error = e;
      app.state = null;
      app.sessionId = null;
    } else throw e;
  }
  render();
}

async function fireStep(redexId: string): Promise<void> {
  if (!app.sessionId || !app.state) return;
  const chosen = app.state.redexes.find((r) => r.id === redexId);
  try {
    app.state = await client.applyStep(app.sessionId, redexId);
    if (chosen) app.history.push(`${chosen.rule} @ ${chosen.path}`);
    app.notice = null;
    app.error = null;
    render();
  } catch (e) {
    if (isStale(e)) {
      await refresh("the redex menu was stale; refreshed");
    } else if (e instanceof ProtocolError) {
      app.error = e;
      render();
    } else throw e;
  }
}

async function fireInject(): Promise<void> {
  if (!app.sessionId) return;
  const op = (el("int-op") as HTMLSelectElement).value;
  const payload = (el("int-payload") as HTMLInputElement).value;
  try {
    app.state = await client.inject(app.sessionId, op, payload);
    app.history.push(`inject ${op} ${payload}`);
    app.injectError = null;
    app.notice = null;
    render();
  } catch (e) {
    if (e instanceof ProtocolError) {
      app.injectError = `${e.kind}: ${e.message}`;
      render();
    } else throw e;
  }
}

async function fireUndo(): Promise<void> {
  if (!app.sessionId) return;
  const res = await client.undo(app.sessionId);
  app.state = res.state;
  if (res.undone && app.history.length) app.history.pop();
  app.notice = res.undone ? null : "nothing to undo";
  render();
}

function fireExport(): void {
  if (!app.state) return;
  const bundle = exportBundle(app.state, app.source);
  const argv = replayArgv(bundle.clicks, bundle.program);
  const stdin = replayStdin(bundle.clicks);
  const text = JSON.stringify(bundle, null, 2);
  const blob = new Blob([text], { type: "application/json" });
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = "replay.json";
  a.click();
  URL.revokeObjectURL(a.href);
  app.notice = `replay: aeff ${argv.join(" ")} with stdin ` +
    JSON.stringify(stdin);
  render();
}

// -- boot --------------------------------------------------------------------

function boot(): void {
  const picker = el<HTMLSelectElement>("demo");
  picker.innerHTML = DEMOS.map((d, i) =>
    `<option value="${i}">${escapeHtml(d.title)}</option>`).join("");
  picker.addEventListener("change", () => {
    const demo = DEMOS[Number(picker.value)];
    if (demo) {
      (el("source") as HTMLTextAreaElement).value = demo.source;
      el("blurb").textContent = demo.blurb;
    }
  });
  (el("source") as HTMLTextAreaElement).value = app.source;
  el("blurb").textContent = DEMOS[0]?.blurb ?? "";
  el("start").addEventListener("click", guard(startSession));
  el("undo").addEventListener("click", guard(fireUndo));
  el("refresh").addEventListener("click", guard(() => refresh()));
  el("export").addEventListener("click", fireExport);
  el("step-first").addEventListener("click", guard(async () => {
    const first = app.state?.redexes[0];
    if (first) await fireStep(first.id);
  }));
  void client.health().then((h) => {
    el("version").textContent = `server ${h.version}`;
  }).catch(() => {
    el("version").textContent = "server unreachable";
  });
}

boot();
