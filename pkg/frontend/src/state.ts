// Explorer state: base scores, accumulated what-if edits, undo history,
// and the latest service response. Every displayed number comes from the
// response; edits are input state only.

import { ApiError, Client, EditIn, ModelInfo, WhatIfResponse } from "./api";
import { TraceRow, parseTraceCsv, toTraceCsv } from "./history";

export interface AppliedEdit {
  conceptIndex: number;
  value: number;
  old: number;
  gain: number; // served gain when applied from a suggestion, else 0
  strategy: string; // server strategy name, or "manual" for slider edits
  predictionAfter: number;
}

interface Snapshot {
  edits: AppliedEdit[];
  response: WhatIfResponse | null;
}

export interface ExplorerOptions {
  target?: number | null;
  alphaOverride?: number | null;
  sampleId?: string;
  model?: ModelInfo | null;
}

export class Explorer {
  target: number | null;
  alphaOverride: number | null;
  sampleId: string;
  model: ModelInfo | null;
  response: WhatIfResponse | null = null;
  lastError: string | null = null;

  private edits: AppliedEdit[] = [];
  private undoStack: Snapshot[] = [];
  private redoStack: Snapshot[] = [];
  private seq = 0;

  constructor(
    private client: Client,
    readonly baseScores: number[],
    opts: ExplorerOptions = {},
  ) {
    this.target = opts.target ?? null;
    this.alphaOverride = opts.alphaOverride ?? null;
    this.sampleId = opts.sampleId ?? "whatif";
    this.model = opts.model ?? null;
  }

  // scores as evaluated by the service (base scores before any response)
  displayScores(): number[] {
    return this.response ? [...this.response.applied_scores] : [...this.baseScores];
  }

  appliedEdits(): AppliedEdit[] {
    return this.edits.map((e) => ({ ...e }));
  }

  // displayed distance to the target class, straight from the response
  targetDistance(): number | null {
    if (this.response === null || this.target === null) return null;
    const t = this.response.decomposition?.target;
    if (t) return t.total;
    const d = this.response.prediction.distances;
    return d ? d[this.target] : null;
  }

  atTarget(): boolean {
    return (
      this.response !== null &&
      this.target !== null &&
      this.response.prediction.label_index === this.target
    );
  }

  canUndo(): boolean {
    return this.undoStack.length > 0;
  }

  canRedo(): boolean {
    return this.redoStack.length > 0;
  }

  // one request entry per concept; the latest edit of a concept wins
  private requestEdits(): EditIn[] {
    const latest = new Map<number, number>();
    for (const e of this.edits) latest.set(e.conceptIndex, e.value);
    return [...latest.entries()].map(([concept_index, value]) => ({ concept_index, value }));
  }

  private async send(): Promise<{ resp: WhatIfResponse; fresh: boolean }> {
    const id = ++this.seq;
    const resp = await this.client.whatif({
      scores: [...this.baseScores],
      edits: this.requestEdits(),
      target: this.target,
      alpha_override: this.alphaOverride,
    });
    const fresh = id === this.seq; // stale responses must not clobber state
    if (fresh) {
      this.response = resp;
      this.lastError = null;
    }
    return { resp, fresh };
  }

  // re-evaluates the current state; returns null if a newer request won
  async refresh(): Promise<WhatIfResponse | null> {
    const { resp, fresh } = await this.send();
    return fresh ? resp : null;
  }

  private snapshot(): Snapshot {
    return { edits: this.appliedEdits(), response: this.response };
  }

  private restore(s: Snapshot): void {
    this.edits = s.edits.map((e) => ({ ...e }));
    this.response = s.response;
  }

  async applyEdit(
    conceptIndex: number,
    value: number,
    meta: { strategy?: string; gain?: number } = {},
  ): Promise<WhatIfResponse | null> {
    const before = this.snapshot();
    const record: AppliedEdit = {
      conceptIndex,
      value,
      old: this.displayScores()[conceptIndex],
      gain: meta.gain ?? 0,
      strategy: meta.strategy ?? "manual",
      predictionAfter: -1,
    };
    this.edits.push(record);
    try {
      const { resp, fresh } = await this.send();
      record.predictionAfter = resp.prediction.label_index;
      this.undoStack.push(before);
      this.redoStack = [];
      return fresh ? resp : null;
    } catch (err) {
      // surface the failure without losing the pre-edit state
      this.restore(before);
      this.lastError = err instanceof ApiError ? err.message : String(err);
      return null;
    }
  }

  // one-click apply of a served suggestion: the correction value is the
  // target prototype bit, taken from model metadata (never recomputed)
  async applySuggestion(s: { conceptIndex: number; gain: number }): Promise<WhatIfResponse | null> {
    if (this.target === null) throw new Error("no target class selected");
    const protos = this.model?.prototypes;
    if (!protos) throw new Error("one-click corrections need prototype metadata");
    const bit = protos[this.target][s.conceptIndex];
    const strategy = this.response?.gains?.strategy ?? "manual";
    return this.applyEdit(s.conceptIndex, bit, { strategy, gain: s.gain });
  }

  undo(): boolean {
    const prev = this.undoStack.pop();
    if (prev === undefined) return false;
    this.redoStack.push(this.snapshot());
    this.restore(prev);
    return true;
  }

  redo(): boolean {
    const next = this.redoStack.pop();
    if (next === undefined) return false;
    this.undoStack.push(this.snapshot());
    this.restore(next);
    return true;
  }

  async setTarget(target: number | null): Promise<WhatIfResponse | null> {
    this.target = target;
    return this.refresh();
  }

  exportHistory(): string {
    const rows: TraceRow[] = this.edits.map((e, i) => ({
      sampleId: this.sampleId,
      strategy: e.strategy,
      step: i + 1,
      conceptIndex: e.conceptIndex,
      gain: e.gain,
      old: e.old,
      new: e.value,
      predictionAfter: e.predictionAfter,
    }));
    return toTraceCsv(rows);
  }

  // rebuilds an explorer by replaying an exported history file
  static async replay(
    client: Client,
    baseScores: number[],
    csv: string,
    opts: ExplorerOptions = {},
  ): Promise<Explorer> {
    const rows = parseTraceCsv(csv).sort((a, b) => a.step - b.step);
    const explorer = new Explorer(client, baseScores, {
      ...opts,
      sampleId: rows[0]?.sampleId ?? opts.sampleId,
    });
    await explorer.refresh();
    for (const row of rows) {
      await explorer.applyEdit(row.conceptIndex, row.new, {
        strategy: row.strategy,
        gain: row.gain,
      });
      if (explorer.lastError !== null) {
        throw new Error(`replay failed at step ${row.step}: ${explorer.lastError}`);
      }
    }
    return explorer;
  }
}
