// Browser wiring: connects the explorer state to the page. All math lives
// in the service; this file only routes events and redraws.

import { Client, ModelInfo } from "./api";
import { renderDecomposition } from "./decomposition";
import { renderSuggestions } from "./suggestions";
import { Explorer } from "./state";
import { renderBanner, renderConformal, renderError, renderPrediction } from "./view";

const params = new URLSearchParams(location.search);
const baseUrl = params.get("service") ?? "http://127.0.0.1:8000";
const client = new Client(baseUrl);

const app = document.getElementById("app")!;

function el<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

function layout(model: ModelInfo, digest: string): void {
  const options = model.class_names
    .map((n, j) => `<option value="${j}">${n}</option>`)
    .join("");
  app.innerHTML = `
    <header>
      <h1>what-if explorer</h1>
      <div class="meta">${model.kind}, K=${model.K}, L=${model.L},
        artifact ${digest.slice(0, 12)}</div>
    </header>
    <section id="status"></section>
    <section id="bars"></section>
    <section class="controls">
      <label>target class <select id="target"><option value="">none</option>${options}</select></label>
      <button id="undo">undo</button>
      <button id="redo">redo</button>
      <button id="export">export history</button>
      <label class="import">import history <input id="import" type="file" accept=".csv"></label>
    </section>
    <section id="sliders"></section>
    <section id="panel"></section>
    <section id="errors"></section>`;
}

function renderSliders(scores: number[]): string {
  return scores
    .map(
      (v, k) => `
      <label class="slider">c${k + 1}
        <input type="range" min="0" max="1" step="0.01" value="${v}" data-concept="${k}">
        <span>${v.toFixed(2)}</span>
      </label>`,
    )
    .join("");
}

function redraw(explorer: Explorer): void {
  const resp = explorer.response;
  el("errors").innerHTML = renderError(explorer.lastError);
  if (resp === null) return;
  const dec = resp.decomposition;
  el("status").innerHTML =
    renderPrediction(resp.prediction) +
    renderConformal(resp.conformal) +
    renderBanner(resp, explorer.target);
  el("bars").innerHTML = dec
    ? renderDecomposition(dec.predicted) +
      (dec.target && dec.target.class_index !== dec.predicted.class_index
        ? renderDecomposition(dec.target)
        : "")
    : "";
  el("sliders").innerHTML = renderSliders(explorer.displayScores());
  el("panel").innerHTML = renderSuggestions(resp.gains);
  (el<HTMLButtonElement>("undo")).disabled = !explorer.canUndo();
  (el<HTMLButtonElement>("redo")).disabled = !explorer.canRedo();
}

function download(name: string, text: string): void {
  const a = document.createElement("a");
  a.href = URL.createObjectURL(new Blob([text], { type: "text/csv" }));
  a.download = name;
  a.click();
  URL.revokeObjectURL(a.href);
}

async function start(): Promise<void> {
  const [model, health] = await Promise.all([client.model(), client.health()]);
  layout(model, health.artifact_digest);

  let explorer = new Explorer(client, new Array(model.K).fill(0.5), { model });
  await explorer.refresh();
  redraw(explorer);

  el("target").addEventListener("change", async (ev) => {
    const raw = (ev.target as HTMLSelectElement).value;
    await explorer.setTarget(raw === "" ? null : Number(raw));
    redraw(explorer);
  });

  el("sliders").addEventListener("change", async (ev) => {
    const input = ev.target as HTMLInputElement;
    const k = input.dataset.concept;
    if (k === undefined) return;
    await explorer.applyEdit(Number(k), Number(input.value));
    redraw(explorer);
  });

  el("panel").addEventListener("click", async (ev) => {
    const btn = (ev.target as HTMLElement).closest<HTMLElement>(".suggestion");
    if (btn === null) return;
    await explorer.applySuggestion({
      conceptIndex: Number(btn.dataset.concept),
      gain: Number(btn.dataset.gain),
    });
    redraw(explorer);
  });

  el("undo").addEventListener("click", () => {
    explorer.undo();
    redraw(explorer);
  });
  el("redo").addEventListener("click", () => {
    explorer.redo();
    redraw(explorer);
  });

  el("export").addEventListener("click", () => {
    download("whatif-history.csv", explorer.exportHistory());
  });

  el("import").addEventListener("change", async (ev) => {
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (file === undefined) return;
    const replayed = await Explorer.replay(client, explorer.baseScores, await file.text(), {
      target: explorer.target,
      model,
    });
    explorer = replayed;
    redraw(explorer);
  });
}

start().catch((err) => {
  app.innerHTML = `<div class="error">cannot reach the service at ${baseUrl}: ${err}</div>`;
});
