// Bar geometry for the per-concept distance decomposition.
//
// Prototype-one concepts are unit-height bars split green (matched score)
// over yellow (remaining gap); prototype-zero concepts are red bars whose
// height is the score itself. Yellow plus red area equals the served
// distance, so the picture IS the number. The client never recomputes
// contributions; it only stacks and scales what the service sent.

import { Decomposition, PerConcept } from "./api";

export interface Bar {
  conceptIndex: number;
  bit: number;
  green: number; // matched part, bit-1 bars only
  yellow: number; // gap part, bit-1 bars only
  red: number; // score, bit-0 bars only
  band: string;
}

// bit-1 concepts first, ascending contribution (best matches on the left),
// then bit-0 concepts descending contribution; ties keep index order
export function displayOrder(per: PerConcept[]): PerConcept[] {
  const present = per.filter((pc) => pc.prototype_bit === 1);
  const absent = per.filter((pc) => pc.prototype_bit === 0);
  present.sort((a, b) => a.contribution - b.contribution || a.concept_index - b.concept_index);
  absent.sort((a, b) => b.contribution - a.contribution || a.concept_index - b.concept_index);
  return present.concat(absent);
}

export function toBars(per: PerConcept[]): Bar[] {
  return displayOrder(per).map((pc) => ({
    conceptIndex: pc.concept_index,
    bit: pc.prototype_bit,
    green: pc.prototype_bit === 1 ? pc.score : 0,
    yellow: pc.prototype_bit === 1 ? pc.contribution : 0,
    red: pc.prototype_bit === 0 ? pc.score : 0,
    band: pc.band,
  }));
}

// total yellow+red area in data units (bar width 1)
export function coloredArea(bars: Bar[]): number {
  return bars.reduce((acc, b) => acc + b.yellow + b.red, 0);
}

const COLORS: Record<string, string> = {
  green: "#3a9e5f",
  yellow: "#e0b63a",
  red: "#c4533a",
};

function segment(color: string, height: number, scalePx: number, title: string): string {
  const px = height * scalePx;
  return `<div class="seg" title="${title}" style="height:${px}px;background:${COLORS[color]}"></div>`;
}

// Renders stacked bars bottom-aligned; numbers shown come verbatim from
// the response (display rounding only).
export function renderDecomposition(dec: Decomposition, scalePx = 120): string {
  const bars = toBars(dec.per_concept);
  const cells = bars.map((b) => {
    const segs =
      b.bit === 1
        ? segment("yellow", b.yellow, scalePx, `gap ${b.yellow}`) +
          segment("green", b.green, scalePx, `matched ${b.green}`)
        : segment("red", b.red, scalePx, `undesired ${b.red}`);
    return `
      <div class="bar" data-concept="${b.conceptIndex}" data-band="${b.band}">
        <div class="stack" style="height:${scalePx}px">${segs}</div>
        <div class="label">c${b.conceptIndex + 1}</div>
      </div>`;
  });
  return `
    <div class="decomposition" data-class="${dec.class_index}">
      <div class="dec-title">${dec.class_name}: distance ${fmt(dec.total)}</div>
      <div class="bars">${cells.join("")}</div>
    </div>`;
}

export function fmt(x: number): string {
  // display rounding for labels; tooltips keep full precision
  return Number.isInteger(x) ? String(x) : x.toFixed(3).replace(/0+$/, "").replace(/\.$/, "");
}
