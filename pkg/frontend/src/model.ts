/** Pure view-model helpers between the protocol types and the DOM. */

import type { AppliedEntry, RedexView, StateView, TreeNode } from "./protocol.js";

/** Signal log lines from the hoisted spine at the process root, in the
 * same format the CLI prints, so recorded sessions compare byte for byte. */
export function signalLog(tree: TreeNode): string[] {
  const lines: string[] = [];
  let node: TreeNode | undefined = tree;
  while (node && node.kind === "signal") {
    lines.push(`signal ${node.op} ${node.payload}`);
    node = node.children[0];
  }
  return lines;
}

/** One badge per run leaf once the menu is empty; null while stepping. */
export function resultBadges(state: StateView): string[] | null {
  if (state.redexes.length > 0) return null;
  return state.resultStatus.map((kind, i) => `run #${i}: ${kind}`);
}

export interface ReplayBundle {
  program: string;
  source: string;
  clicks: AppliedEntry[];
  signals: string[];
}

/** The exportable recording of a session: feed it back through the CLI
 * (`aeff run --scheduler interactive`) to reproduce the signal output. */
export function exportBundle(
  state: StateView, source: string, program = "session.aeff",
): ReplayBundle {
  return {
    program,
    source,
    clicks: state.applied.slice(),
    signals: signalLog(state.processTree),
  };
}

/** Stdin script for the interactive scheduler: one redex index per step. */
export function replayStdin(clicks: AppliedEntry[]): string {
  return clicks
    .filter((c) => c.type === "step")
    .map((c) => `${c.redex}\n`)
    .join("");
}

/** Full CLI argv for a recorded session. Injections map onto --inject
 * with the step count at which they happened. */
export function replayArgv(clicks: AppliedEntry[], file: string): string[] {
  const argv = ["run", file, "--scheduler", "interactive"];
  let steps = 0;
  for (const c of clicks) {
    if (c.type === "step") {
      steps += 1;
    } else {
      argv.push("--inject", `${c.op}:${c.payload}@${steps}`);
    }
  }
  return argv;
}

/** History panel rows: the rule names actually fired, in click order. */
export function historyRow(entry: AppliedEntry, redexes: RedexView[]): string {
  if (entry.type === "inject") return `inject ${entry.op} ${entry.payload}`;
  const r = redexes[entry.redex];
  return r ? `${r.rule} @ ${r.path}` : `redex #${entry.redex}`;
}

/** Replaying a recorded state sequence through its click log names the
 * rule each click fired; the walkthrough demo shows hoist, broadcast,
 * propagate in that order. */
export function rulesFired(states: StateView[], clicks: AppliedEntry[]): string[] {
  const rules: string[] = [];
  clicks.forEach((c, i) => {
    const before = states[i];
    if (c.type === "inject" || !before) return;
    const r = before.redexes[c.redex];
    rules.push(r ? r.rule : `redex #${c.redex}`);
  });
  return rules;
}

export interface Segment {
  start: number;
  end: number;
  text: string;
  /** Redex ids covering this slice, outermost first. */
  ids: string[];
}

/** Split the pretty-printed term into segments by redex span boundaries.
 * Nested spans stack their ids; the last id is the innermost redex, which
 * is what a click on the segment should fire. */
export function segments(text: string, marks: { id: string; span: number[] }[]): Segment[] {
  const bounds = new Set<number>([0, text.length]);
  const usable = marks.filter((m) => {
    const [s, e] = m.span;
    return s !== undefined && e !== undefined && s < e && e <= text.length;
  });
  for (const m of usable) {
    bounds.add(m.span[0]!);
    bounds.add(m.span[1]!);
  }
  const cuts = Array.from(bounds).sort((a, b) => a - b);
  const out: Segment[] = [];
  for (let i = 0; i + 1 < cuts.length; i++) {
    const start = cuts[i]!;
    const end = cuts[i + 1]!;
    const covering = usable
      .filter((m) => m.span[0]! <= start && end <= m.span[1]!)
      .sort((a, b) => (b.span[1]! - b.span[0]!) - (a.span[1]! - a.span[0]!))
      .map((m) => m.id);
    out.push({ start, end, text: text.slice(start, end), ids: covering });
  }
  return out;
}

/** Marks for the current redex menu: resolve each redex path to its span. */
export function redexMarks(state: StateView): { id: string; span: number[] }[] {
  const marks: { id: string; span: number[] }[] = [];
  for (const r of state.redexes) {
    const span = state.spans[r.path];
    if (span) marks.push({ id: r.id, span });
  }
  return marks;
}
