import { describe, expect, it } from "vitest";

import { GainsBlock } from "../src/api";
import {
  CONSISTENT_MESSAGE,
  allGainsZero,
  renderSuggestions,
  toSuggestions,
} from "../src/suggestions";
import { FIXTURES } from "./stub";

const goldenGains = (FIXTURES.golden.response as any).gains as GainsBlock;
const zeroGains = (FIXTURES.exactPrototype.response as any).gains as GainsBlock;

describe("toSuggestions", () => {
  it("keeps the server order verbatim", () => {
    // In float64 |1 - 0.8| = 0.19999999999999996 < 0.2 = |0 - 0.2|, so
    // concept 7 genuinely outranks concept 5 (and 2 outranks 1): these are
    // strict float comparisons on the server, not index-broken ties.
    const order = toSuggestions(goldenGains).map((s) => s.conceptIndex);
    expect(order).toEqual([6, 0, 7, 5, 2, 1, 3, 4]);
    expect(toSuggestions(goldenGains)[0].gain).toBe(0.5);
  });

  it("does not re-sort even a deliberately shuffled ranking", () => {
    const shuffled: GainsBlock = {
      strategy: "clpc-gain",
      target: 0,
      ranked: [
        { concept_index: 2, gain: 0.1 },
        { concept_index: 4, gain: 0.9 },
        { concept_index: 0, gain: 0.4 },
      ],
    };
    expect(toSuggestions(shuffled).map((s) => s.conceptIndex)).toEqual([2, 4, 0]);
  });
});

describe("renderSuggestions", () => {
  it("renders buttons in response order with 1-based concept labels", () => {
    const html = renderSuggestions(goldenGains);
    const order = [...html.matchAll(/data-concept="(\d+)"/g)].map((m) => Number(m[1]));
    expect(order).toEqual([6, 0, 7, 5, 2, 1, 3, 4]);
    expect(html).toContain("correct concept 7");
    expect(html).toContain('data-gain="0.5"');
  });

  it("announces consistency when every gain is zero", () => {
    expect(allGainsZero(zeroGains)).toBe(true);
    expect(renderSuggestions(zeroGains)).toContain(CONSISTENT_MESSAGE);
  });

  it("asks for a target when gains are absent", () => {
    expect(renderSuggestions(null)).toContain("select a target");
  });
});
