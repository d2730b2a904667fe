// Pure view-model transitions. The UI never computes pipeline logic:
// every displayed value comes straight off a service response field.

import { ConnectionError, ServiceError } from "./api.js";
import type { TurnResultJson } from "./types.js";

export interface LyricLineView {
  text: string;
  syllables: number;
  constraintViolated: boolean;
}

export interface Banner {
  kind: "stage" | "connection";
  stage?: string;
  text: string;
}

export interface PanelState {
  transcript: string | null;
  lyricLines: LyricLineView[];
  lyricError: string | null;
  scoreEntries: TurnResultJson["score"]["entries"];
  audioB64: string | null;
  sampleRate: number | null;
  latencies: Record<string, number>;
  diagnostics: string[];
  banner: Banner | null;
  pending: boolean;
  controlsEnabled: boolean;
}

export function emptyPanels(): PanelState {
  return {
    transcript: null,
    lyricLines: [],
    lyricError: null,
    scoreEntries: [],
    audioB64: null,
    sampleRate: null,
    latencies: {},
    diagnostics: [],
    banner: null,
    pending: false,
    controlsEnabled: true,
  };
}

export function turnStarted(state: PanelState): PanelState {
  return { ...state, pending: true, controlsEnabled: false, banner: null };
}

export function turnSucceeded(turn: TurnResultJson): PanelState {
  const violated = turn.diagnostics.some((d) => d.includes("constraint"));
  return {
    transcript: turn.transcript,
    lyricLines: turn.lyric_lines.map((line) => ({
      text: line.raw,
      syllables: line.syllables.length,
      constraintViolated: violated,
    })),
    lyricError: null,
    scoreEntries: turn.score.entries,
    audioB64: turn.audio_b64,
    sampleRate: turn.sample_rate,
    latencies: turn.latencies,
    diagnostics: turn.diagnostics,
    banner: null,
    pending: false,
    controlsEnabled: true,
  };
}

export function turnFailed(error: unknown): PanelState {
  const state = emptyPanels();
  if (error instanceof ServiceError) {
    if (error.status === 422) {
      // lyrics came back empty: show it in the lyrics panel, clear the rest
      return { ...state, lyricError: error.message };
    }
    return {
      ...state,
      banner: {
        kind: "stage",
        stage: error.stage,
        text: error.stage
          ? `${error.stage} stage failed: ${error.message}`
          : `request failed: ${error.message}`,
      },
    };
  }
  if (error instanceof ConnectionError) {
    // service down: banner only, controls stay enabled
    return { ...state, banner: { kind: "connection", text: error.message } };
  }
  return { ...state, banner: { kind: "connection", text: String(error) } };
}

// PipelineConfig invariant mirrored in the UI: random melodies only take
// forced alignment; dataset melodies take the note- or lyric-based modes.
export function strategyOptions(melodyKind: "random" | "dataset", annotated: boolean): string[] {
  if (melodyKind === "random") return ["forced_random"];
  return annotated ? ["pitch_based", "lyric_aware"] : ["pitch_based"];
}

export interface LatencyBar {
  stage: string;
  seconds: number;
  fraction: number;
}

export function latencyBars(latencies: Record<string, number>): LatencyBar[] {
  const entries = Object.entries(latencies);
  const max = Math.max(...entries.map(([, s]) => s), 1e-9);
  return entries.map(([stage, seconds]) => ({ stage, seconds, fraction: seconds / max }));
}

export interface MetricRow {
  label: string;
  value: string;
}

export function evalMetricRows(aggregates: Record<string, number>): MetricRow[] {
  const rows: MetricRow[] = [];
  if ("per" in aggregates) rows.push({ label: "PER", value: aggregates.per.toFixed(4) });
  if ("jump_ratio" in aggregates) {
    rows.push({ label: "Jump ratio", value: aggregates.jump_ratio.toFixed(4) });
  }
  // scorer row appears only when a scorer backend produced a value
  if ("quality" in aggregates) {
    rows.push({ label: "Quality", value: aggregates.quality.toFixed(2) });
  }
  return rows;
}
