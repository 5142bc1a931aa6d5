// Small string renderers for everything that is not the bar chart.

import { ConformalBlock, Prediction, WhatIfResponse } from "./api";
import { fmt } from "./decomposition";

export function renderPrediction(pred: Prediction): string {
  const tail = pred.distances
    ? `distance ${fmt(pred.distances[pred.label_index])}`
    : pred.posterior
      ? `posterior ${fmt(pred.posterior[pred.label_index])}`
      : "";
  return `
    <div class="prediction">
      predicted <strong>${pred.label}</strong>
      <span class="detail">${tail}, margin ${fmt(pred.margin)}</span>
    </div>`;
}

// conformal set as chips; an empty set is an explicit abstention
export function renderConformal(conf: ConformalBlock | null): string {
  if (conf === null) return `<div class="conformal none">no calibration loaded</div>`;
  const chips = conf.set_names.map((n) => `<span class="chip">${n}</span>`).join("");
  const badge = conf.rejected ? `<span class="chip rejected">rejected</span>` : chips;
  return `
    <div class="conformal">
      set (alpha ${conf.alpha}, quantile ${conf.quantile === "inf" ? "inf" : fmt(conf.quantile)}):
      ${badge}
    </div>`;
}

export function renderBanner(resp: WhatIfResponse, target: number | null): string {
  if (target === null) return "";
  if (resp.prediction.label_index === target) {
    return `<div class="banner success">prediction matches the target class</div>`;
  }
  return `<div class="banner pending">prediction differs from the target</div>`;
}

export function renderError(message: string | null): string {
  return message === null ? "" : `<div class="error">${message}</div>`;
}
