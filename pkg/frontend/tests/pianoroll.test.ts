import { describe, expect, it } from "vitest";

import { layoutPianoRoll } from "../src/pianoroll.js";
import type { ScoreEntryJson } from "../src/types.js";

const entries: ScoreEntryJson[] = [
  {
    syllable: "你",
    phonemes: ["你"],
    notes: [{ pitch: 60, start_s: 0.0, end_s: 0.5 }],
    sustained: [false],
  },
  {
    syllable: "好",
    phonemes: ["好"],
    notes: [
      { pitch: 64, start_s: 0.5, end_s: 1.0 },
      { pitch: 67, start_s: 1.0, end_s: 2.0 },
    ],
    sustained: [false, true],
  },
];

describe("layoutPianoRoll", () => {
  it("produces one rectangle per note", () => {
    const layout = layoutPianoRoll(entries, 800, 200);
    expect(layout.rects).toHaveLength(3);
  });

  it("labels only syllable onsets", () => {
    const layout = layoutPianoRoll(entries, 800, 200);
    expect(layout.rects.map((r) => r.label)).toEqual(["你", "好", ""]);
    expect(layout.rects.map((r) => r.sustained)).toEqual([false, false, true]);
  });

  it("maps time to x and pitch to y", () => {
    const layout = layoutPianoRoll(entries, 800, 200);
    const [first, second, third] = layout.rects;
    expect(first.x).toBeLessThan(second.x);
    expect(second.x).toBeLessThan(third.x);
    // higher pitch sits higher on the canvas (smaller y)
    expect(third.y).toBeLessThan(first.y);
    // double-length note is twice as wide
    expect(third.width / second.width).toBeCloseTo(2, 1);
  });

  it("handles empty scores", () => {
    const layout = layoutPianoRoll([], 800, 200);
    expect(layout.rects).toHaveLength(0);
  });

  it("rectangles stay inside the canvas", () => {
    const layout = layoutPianoRoll(entries, 300, 120);
    for (const rect of layout.rects) {
      expect(rect.x).toBeGreaterThanOrEqual(0);
      expect(rect.y).toBeGreaterThanOrEqual(0);
      expect(rect.x + rect.width).toBeLessThanOrEqual(300 + 1e-6);
      expect(rect.y + rect.height).toBeLessThanOrEqual(120 + 1e-6);
    }
  });
});
