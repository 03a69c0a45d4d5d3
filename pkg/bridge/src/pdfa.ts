/**
 * File-backed PDFA model: loads the JSON automaton format written by the
 * extraction toolkit (alphabet, initial state, per-state transitions and
 * next-step weights including the stop marker "$") and answers next-token
 * distribution queries by walking the transitions.
 */

import fs from "node:fs";

export const STOP = "$";

interface StateRecord {
  next: Record<string, string>;
  weights: Record<string, number>;
}

export interface PdfaFile {
  alphabet: string[];
  initial: string;
  states: Record<string, StateRecord>;
}

export interface ServableModel {
  alphabet(): string[];
  nextDist(prefix: string[]): Record<string, number>;
}

export class PdfaModel implements ServableModel {
  private readonly tokens: string[];
  private readonly initial: string;
  private readonly states: Record<string, StateRecord>;

  constructor(file: PdfaFile) {
    this.tokens = file.alphabet;
    this.initial = file.initial;
    this.states = file.states;
    this.validate();
  }

  private validate(): void {
    if (!Array.isArray(this.tokens) || this.tokens.length === 0) {
      throw new Error("model has no alphabet");
    }
    if (!(this.initial in this.states)) {
      throw new Error(`initial state ${JSON.stringify(this.initial)} is not defined`);
    }
    const expected = [...this.tokens, STOP].sort();
    for (const [name, state] of Object.entries(this.states)) {
      for (const token of this.tokens) {
        const target = state.next?.[token];
        if (typeof target !== "string" || !(target in this.states)) {
          throw new Error(`state ${name} has no transition on ${JSON.stringify(token)}`);
        }
      }
      const keys = Object.keys(state.weights ?? {}).sort();
      if (JSON.stringify(keys) !== JSON.stringify(expected)) {
        throw new Error(`state ${name} weights must cover the alphabet plus ${STOP}`);
      }
    }
  }

  alphabet(): string[] {
    return [...this.tokens];
  }

  /** Weights of the state reached by `prefix`, exactly as stored. */
  nextDist(prefix: string[]): Record<string, number> {
    let state = this.initial;
    for (const token of prefix) {
      const target = this.states[state].next[token];
      if (target === undefined) {
        throw new Error(`unknown token ${JSON.stringify(token)} in prefix`);
      }
      state = target;
    }
    return { ...this.states[state].weights };
  }
}

export function loadPdfa(path: string): PdfaModel {
  const raw = fs.readFileSync(path, "utf-8");
  return new PdfaModel(JSON.parse(raw) as PdfaFile);
}
