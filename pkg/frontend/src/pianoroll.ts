// Piano-roll geometry: pitch/time rectangles with syllable labels.
// Pure layout here; canvas drawing lives in main.ts.

import type { ScoreEntryJson } from "./types.js";

export interface RollRect {
  x: number;
  y: number;
  width: number;
  height: number;
  label: string;
  sustained: boolean;
}

export interface RollLayout {
  rects: RollRect[];
  pitchMin: number;
  pitchMax: number;
  endSeconds: number;
}

export function layoutPianoRoll(
  entries: ScoreEntryJson[],
  canvasWidth: number,
  canvasHeight: number,
  padding = 4,
): RollLayout {
  const notes = entries.flatMap((entry) =>
    entry.notes.map((note, i) => ({
      note,
      label: i === 0 ? entry.syllable : "",
      sustained: entry.sustained[i],
    })),
  );
  if (notes.length === 0) {
    return { rects: [], pitchMin: 60, pitchMax: 72, endSeconds: 0 };
  }
  const pitches = notes.map((n) => n.note.pitch);
  const pitchMin = Math.min(...pitches) - 1;
  const pitchMax = Math.max(...pitches) + 1;
  const endSeconds = Math.max(...notes.map((n) => n.note.end_s));
  const usableWidth = canvasWidth - 2 * padding;
  const rowHeight = (canvasHeight - 2 * padding) / (pitchMax - pitchMin + 1);

  const rects = notes.map(({ note, label, sustained }) => ({
    x: padding + (note.start_s / endSeconds) * usableWidth,
    y: padding + (pitchMax - note.pitch) * rowHeight,
    width: Math.max(1, ((note.end_s - note.start_s) / endSeconds) * usableWidth),
    height: Math.max(1, rowHeight - 1),
    label,
    sustained,
  }));
  return { rects, pitchMin, pitchMax, endSeconds };
}
