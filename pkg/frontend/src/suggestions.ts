// Suggestion panel: the server's gain ranking, rendered verbatim.
//
// The service already sorts gains descending with index tie-break; the
// client must not re-sort or filter, so the panel order is exactly the
// response order.

import { GainsBlock } from "./api";

export const CONSISTENT_MESSAGE = "prediction already consistent";

export interface Suggestion {
  conceptIndex: number;
  gain: number;
  rank: number;
}

export function toSuggestions(gains: GainsBlock): Suggestion[] {
  return gains.ranked.map((g, i) => ({
    conceptIndex: g.concept_index,
    gain: g.gain,
    rank: i + 1,
  }));
}

export function allGainsZero(gains: GainsBlock): boolean {
  return gains.ranked.every((g) => g.gain === 0);
}

export function renderSuggestions(gains: GainsBlock | null): string {
  if (gains === null) {
    return `<div class="suggestions empty">select a target class to rank edits</div>`;
  }
  if (allGainsZero(gains)) {
    return `<div class="suggestions consistent">${CONSISTENT_MESSAGE}</div>`;
  }
  const rows = toSuggestions(gains).map(
    (s) => `
      <button class="suggestion" data-concept="${s.conceptIndex}" data-gain="${s.gain}">
        <span class="rank">#${s.rank}</span>
        correct concept ${s.conceptIndex + 1}
        <span class="gain">gain ${s.gain}</span>
      </button>`,
  );
  return `<div class="suggestions" data-strategy="${gains.strategy}">${rows.join("")}</div>`;
}
