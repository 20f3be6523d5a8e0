import { describe, expect, it } from "vitest";

import {
  exportBundle,
  historyRow,
  redexMarks,
  replayArgv,
  replayStdin,
  resultBadges,
  rulesFired,
  segments,
  signalLog,
} from "../src/model.js";
import type { AppliedEntry, StateView, TreeNode } from "../src/protocol.js";

const leaf = (n: number): TreeNode =>
  ({ kind: "run", label: `run #${n}`, span: [0, 0], children: [], leaf: n });

const sigNode = (op: string, payload: string, child: TreeNode): TreeNode =>
  ({ kind: "signal", label: `↑${op} ${payload}`, op, payload, span: [0, 0],
     children: [child] });

function stateWith(partial: Partial<StateView>): StateView {
  return {
    processTree: leaf(0),
    text: "",
    spans: {},
    redexes: [],
    signature: [],
    stepCount: 0,
    resultStatus: ["runResult"],
    processResult: "parResult",
    applied: [],
    canUndo: false,
    ...partial,
  };
}

describe("signalLog", () => {
  it("walks the hoisted spine outermost first, in CLI line format", () => {
    const tree = sigNode("ping", "21", sigNode("pong", "(1, 2)", leaf(0)));
    expect(signalLog(tree)).toEqual([
      "signal ping 21",
      "signal pong (1, 2)",
    ]);
  });

  it("is empty when nothing has hoisted", () => {
    expect(signalLog(leaf(0))).toEqual([]);
  });
});

describe("resultBadges", () => {
  it("stays hidden while redexes remain", () => {
    const s = stateWith({
      redexes: [{ id: "0:0", rule: "app", path: "run", preview: "" }],
    });
    expect(resultBadges(s)).toBeNull();
  });

  it("labels each leaf once the menu is empty", () => {
    const s = stateWith({ resultStatus: ["runResult", "awaiting"] });
    expect(resultBadges(s)).toEqual([
      "run #0: runResult",
      "run #1: awaiting",
    ]);
  });
});

describe("replay export", () => {
  const clicks: AppliedEntry[] = [
    { type: "step", redex: 0 },
    { type: "inject", op: "stop", payload: "()" },
    { type: "step", redex: 2 },
    { type: "step", redex: 0 },
  ];

  it("renders stdin as one index per step entry", () => {
    expect(replayStdin(clicks)).toBe("0\n2\n0\n");
  });

  it("maps injections to --inject at their step offset", () => {
    expect(replayArgv(clicks, "demo.aeff")).toEqual([
      "run", "demo.aeff", "--scheduler", "interactive",
      "--inject", "stop:()@1",
    ]);
  });

  it("bundles source, clicks and the current signal log", () => {
    const s = stateWith({
      processTree: sigNode("out", "3", leaf(0)),
      applied: clicks,
    });
    const bundle = exportBundle(s, "run return ()", "demo.aeff");
    expect(bundle).toEqual({
      program: "demo.aeff",
      source: "run return ()",
      clicks,
      signals: ["signal out 3"],
    });
  });
});

describe("history", () => {
  it("names the rule a click fired", () => {
    const redexes = [
      { id: "4:0", rule: "hoistSignal", path: "parL", preview: "" },
    ];
    expect(historyRow({ type: "step", redex: 0 }, redexes))
      .toBe("hoistSignal @ parL");
    expect(historyRow({ type: "inject", op: "go", payload: "()" }, redexes))
      .toBe("inject go ()");
  });

  it("replays a state sequence into fired rule names", () => {
    const mk = (rule: string) => stateWith({
      redexes: [{ id: "0:0", rule, path: "root", preview: "" }],
    });
    const states = [mk("hoistSignal"), mk("broadcastLeft"), mk("intIntoRun")];
    const clicks: AppliedEntry[] = [
      { type: "step", redex: 0 },
      { type: "step", redex: 0 },
      { type: "step", redex: 0 },
    ];
    expect(rulesFired(states, clicks))
      .toEqual(["hoistSignal", "broadcastLeft", "intIntoRun"]);
  });
});

describe("segments", () => {
  it("returns the whole text when nothing is marked", () => {
    expect(segments("return ()", [])).toEqual([
      { start: 0, end: 9, text: "return ()", ids: [] },
    ]);
  });

  it("splits at mark boundaries and stacks nested ids innermost last", () => {
    //            0123456789
    const text = "let x in y";
    const marks = [
      { id: "outer", span: [0, 10] },
      { id: "inner", span: [4, 6] },
    ];
    const segs = segments(text, marks);
    expect(segs.map((s) => s.text)).toEqual(["let ", "x ", "in y"]);
    expect(segs[0]!.ids).toEqual(["outer"]);
    expect(segs[1]!.ids).toEqual(["outer", "inner"]);
    expect(segs[2]!.ids).toEqual(["outer"]);
  });

  it("ignores marks that fall outside the text", () => {
    const segs = segments("ab", [{ id: "x", span: [0, 99] }]);
    expect(segs).toEqual([{ start: 0, end: 2, text: "ab", ids: [] }]);
  });
});

describe("redexMarks", () => {
  it("resolves redex paths through the span table", () => {
    const s = stateWith({
      text: "run (return ())",
      spans: { "parL": [0, 15], "parL.run": [5, 14] },
      redexes: [
        { id: "0:0", rule: "hoistSignal", path: "parL", preview: "" },
        { id: "0:1", rule: "innerComp(app)", path: "gone", preview: "" },
      ],
    });
    expect(redexMarks(s)).toEqual([{ id: "0:0", span: [0, 15] }]);
  });
});
