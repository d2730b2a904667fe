// Wire types mirroring the service's JSON bodies (docs/formats.md).

export interface NoteJson {
  pitch: number;
  start_s: number;
  end_s: number;
}

export interface ScoreEntryJson {
  syllable: string;
  phonemes: string[];
  notes: NoteJson[];
  sustained: boolean[];
}

export interface ScoreJson {
  entries: ScoreEntryJson[];
}

export interface LyricLineJson {
  raw: string;
  syllables: string[];
}

export interface TurnResultJson {
  transcript: string;
  reply: string;
  lyric_lines: LyricLineJson[];
  score: ScoreJson;
  audio_b64: string;
  sample_rate: number;
  latencies: Record<string, number>;
  diagnostics: string[];
  config: Record<string, unknown>;
  seed: number;
  melody_id: string;
  timestamp: number;
}

export interface CharacterJson {
  id: string;
  display_name: string;
  language: string;
}

export interface MelodyListingJson {
  id: string;
  notes: number;
  phrases: number;
  annotated: boolean;
}

export type BackendListingJson = Record<string, string[]>;

export interface EvalRowJson {
  id: string;
  per: number | null;
  jump_ratio: number | null;
  latencies: Record<string, number>;
  normalized_latencies: Record<string, number>;
  quality: number | null;
  error: string | null;
}

export interface EvalReportJson {
  rows: EvalRowJson[];
  aggregates: Record<string, number>;
  failures: number;
  config: Record<string, unknown>;
}

export interface ServiceErrorBody {
  code: string;
  message: string;
  stage?: string;
  field?: string;
}

// Partial pipeline config sent as overrides on each turn.
export interface ConfigOverrides {
  character_id?: string;
  language?: string;
  seed?: number;
  alignment_strategy?: string;
  use_phrase_constraints?: boolean;
  melody_source?: {
    kind: string;
    melody_id?: string | null;
    window_phrases?: number | null;
  };
  asr?: BackendOverride;
  llm?: BackendOverride;
  svs?: BackendOverride;
}

export interface BackendOverride {
  name: string;
  endpoint?: string;
  timeout_s?: number;
  retries?: number;
}
