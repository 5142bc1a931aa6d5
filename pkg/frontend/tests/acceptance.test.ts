// Explorer acceptance: bar-area fidelity, exact suggestion arithmetic, and
// history replay, all against responses captured from the real service.

import { describe, expect, it } from "vitest";

import { Client, Decomposition, ModelInfo } from "../src/api";
import { coloredArea, toBars } from "../src/decomposition";
import { Explorer } from "../src/state";
import { toSuggestions } from "../src/suggestions";
import { FIXTURES, fixtureFetch } from "./stub";

const GOLDEN_SCORES = [0.7, 0.9, 0.1, 1.0, 0.0, 0.8, 0.5, 0.2];
const model = FIXTURES.model as unknown as ModelInfo;

function makeExplorer(): Explorer {
  const client = new Client("http://stub", fixtureFetch());
  return new Explorer(client, GOLDEN_SCORES, { target: 0, model });
}

it("renders the golden state with yellow+red area 1.4 in data units", async () => {
  const explorer = makeExplorer();
  await explorer.refresh();
  const dec = explorer.response!.decomposition!.predicted as Decomposition;
  expect(dec.total).toBe(1.4);
  const area = coloredArea(toBars(dec.per_concept));
  expect(Math.abs(area - 1.4)).toBeLessThanOrEqual(1e-12);
});

it("top suggestion is concept 7 and its edit cuts the distance by exactly 0.5", async () => {
  const explorer = makeExplorer();
  await explorer.refresh();

  const suggestions = toSuggestions(explorer.response!.gains!);
  expect(suggestions[0].conceptIndex).toBe(6); // displayed as concept 7
  expect(suggestions[0].gain).toBe(0.5);

  const before = explorer.targetDistance()!;
  await explorer.applySuggestion(suggestions[0]);
  const after = explorer.targetDistance()!;
  expect(before).toBe(1.4);
  expect(before - after).toBe(0.5); // exact, not approximate
});

it("replaying an exported history reproduces the final state", async () => {
  const explorer = makeExplorer();
  await explorer.refresh();
  const top = toSuggestions(explorer.response!.gains!)[0];
  await explorer.applySuggestion(top);
  await explorer.applyEdit(0, 1);

  const csv = explorer.exportHistory();
  const replayed = await Explorer.replay(
    new Client("http://stub", fixtureFetch()),
    GOLDEN_SCORES,
    csv,
    { target: 0, model },
  );

  expect(replayed.displayScores()).toEqual(explorer.displayScores());
  expect(replayed.targetDistance()).toBe(explorer.targetDistance());
  expect(JSON.stringify(replayed.response)).toBe(JSON.stringify(explorer.response));
  expect(replayed.exportHistory()).toBe(csv);
});

describe("fixtures are faithful to the service contract", () => {
  it("keeps prediction and decomposition totals consistent", () => {
    for (const f of [FIXTURES.golden, FIXTURES.goldenEdit6, FIXTURES.goldenEdit6Edit0]) {
      const resp = f.response as any;
      const dec = resp.decomposition.target as Decomposition;
      expect(dec.total).toBe(resp.prediction.distances[dec.class_index]);
    }
  });
});
