// DOM wiring: binds the registries to the dropdowns, runs turns, and
// renders the panels. All pipeline values come from service responses.

import { ConnectionError, CroonClient } from "./api.js";
import { layoutPianoRoll } from "./pianoroll.js";
import { MicRecorder } from "./recorder.js";
import type { ConfigOverrides } from "./types.js";
import {
  emptyPanels,
  evalMetricRows,
  latencyBars,
  PanelState,
  strategyOptions,
  turnFailed,
  turnStarted,
  turnSucceeded,
} from "./viewmodel.js";
import { base64ToBytes, bytesToBase64, encodeWav, resampleTo16k } from "./wav.js";

const baseUrl = new URLSearchParams(location.search).get("service") ?? "http://127.0.0.1:8080";
const client = new CroonClient(baseUrl);
const sessionId = `web-${Date.now()}-${Math.floor(Math.random() * 1e6)}`;
const recorder = new MicRecorder();

let state: PanelState = emptyPanels();
let lastAudioB64: string | null = null;

const el = (id: string) => document.getElementById(id)!;
const select = (id: string) => el(id) as HTMLSelectElement;

function currentConfig(): ConfigOverrides {
  const melody = select("melody").value;
  const config: ConfigOverrides = {
    character_id: select("character").value,
    alignment_strategy: select("strategy").value,
    melody_source:
      melody === "random"
        ? { kind: "random" }
        : { kind: "dataset", melody_id: melody },
  };
  const constrain = (el("constraints") as HTMLInputElement).checked;
  if (constrain) config.use_phrase_constraints = true;
  return config;
}

function render(): void {
  el("transcript").textContent = state.transcript ?? "—";
  const lyrics = el("lyrics");
  lyrics.innerHTML = "";
  if (state.lyricError) {
    const div = document.createElement("div");
    div.className = "lyric-error";
    div.textContent = `lyrics error: ${state.lyricError}`;
    lyrics.appendChild(div);
  }
  for (const line of state.lyricLines) {
    const div = document.createElement("div");
    div.className = "lyric-line";
    const badge = line.constraintViolated ? "✗" : "✓";
    div.textContent = `${line.text}  [${line.syllables}${line.constraintViolated ? ` ${badge}` : ""}]`;
    lyrics.appendChild(div);
  }

  drawRoll();
  renderLatencies();

  const banner = el("banner");
  if (state.banner) {
    banner.textContent =
      state.banner.kind === "stage" && state.banner.stage
        ? `[${state.banner.stage}] ${state.banner.text}`
        : state.banner.text;
    banner.className = `banner ${state.banner.kind}`;
  } else {
    banner.textContent = "";
    banner.className = "banner hidden";
  }

  const player = el("player") as HTMLAudioElement;
  if (state.audioB64 && state.audioB64 !== lastAudioB64) {
    const bytes = base64ToBytes(state.audioB64);
    player.src = URL.createObjectURL(new Blob([bytes.buffer as ArrayBuffer], { type: "audio/wav" }));
    lastAudioB64 = state.audioB64;
  }

  for (const id of ["record", "upload", "character", "melody", "strategy", "eval"]) {
    (el(id) as HTMLButtonElement | HTMLSelectElement).disabled = state.pending;
  }
}

function drawRoll(): void {
  const canvas = el("roll") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const layout = layoutPianoRoll(state.scoreEntries, canvas.width, canvas.height);
  for (const rect of layout.rects) {
    ctx.fillStyle = rect.sustained ? "#9ec3e6" : "#4878a8";
    ctx.fillRect(rect.x, rect.y, rect.width, rect.height);
    if (rect.label) {
      ctx.fillStyle = "#222";
      ctx.font = "11px sans-serif";
      ctx.fillText(rect.label, rect.x + 1, Math.max(10, rect.y - 2));
    }
  }
}

function renderLatencies(): void {
  const container = el("latencies");
  container.innerHTML = "";
  for (const bar of latencyBars(state.latencies)) {
    const row = document.createElement("div");
    row.className = "latency-row";
    const label = document.createElement("span");
    label.textContent = `${bar.stage}: ${bar.seconds.toFixed(3)}s`;
    const track = document.createElement("div");
    track.className = "latency-track";
    const fill = document.createElement("div");
    fill.className = "latency-fill";
    fill.style.width = `${Math.round(bar.fraction * 100)}%`;
    track.appendChild(fill);
    row.append(label, track);
    container.appendChild(row);
  }
}

async function runTurn(samples: Float32Array, sourceRate: number): Promise<void> {
  state = turnStarted(state);
  render();
  try {
    const downsampled = resampleTo16k(samples, sourceRate);
    const wav = encodeWav(downsampled, 16000);
    const turn = await client.postTurn(sessionId, bytesToBase64(wav), currentConfig());
    state = turnSucceeded(turn);
  } catch (err) {
    state = turnFailed(err);
  }
  render();
}

async function populateRegistries(): Promise<void> {
  try {
    const [characters, melodies] = await Promise.all([
      client.getCharacters(),
      client.getMelodies(),
    ]);
    const charSel = select("character");
    charSel.innerHTML = "";
    for (const c of characters) {
      const opt = document.createElement("option");
      opt.value = c.id;
      opt.textContent = `${c.display_name} (${c.language})`;
      charSel.appendChild(opt);
    }
    const melodySel = select("melody");
    melodySel.innerHTML = "<option value='random'>random</option>";
    for (const m of melodies) {
      const opt = document.createElement("option");
      opt.value = m.id;
      opt.textContent = `${m.id} (${m.notes} notes${m.annotated ? ", annotated" : ""})`;
      opt.dataset.annotated = String(m.annotated);
      melodySel.appendChild(opt);
    }
    refreshStrategies();
  } catch (err) {
    state = { ...state, banner: { kind: "connection", text: `registry load failed: ${err}` } };
    render();
  }
}

function refreshStrategies(): void {
  const melodySel = select("melody");
  const kind = melodySel.value === "random" ? "random" : "dataset";
  const annotated = melodySel.selectedOptions[0]?.dataset.annotated === "true";
  const stratSel = select("strategy");
  stratSel.innerHTML = "";
  for (const name of strategyOptions(kind, annotated)) {
    const opt = document.createElement("option");
    opt.value = name;
    opt.textContent = name;
    stratSel.appendChild(opt);
  }
}

function wire(): void {
  el("record").addEventListener("click", async () => {
    const button = el("record") as HTMLButtonElement;
    if (!recorder.active) {
      await recorder.start();
      button.textContent = "stop";
    } else {
      button.textContent = "record";
      const recording = await recorder.stop();
      await runTurn(recording.samples, recording.sampleRate);
    }
  });

  el("upload").addEventListener("change", async (event) => {
    const input = event.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    const bytes = new Uint8Array(await file.arrayBuffer());
    const { decodeWav } = await import("./wav.js");
    const decoded = decodeWav(bytes);
    const floats = new Float32Array(decoded.samples.length);
    for (let i = 0; i < floats.length; i++) floats[i] = decoded.samples[i] / 32767;
    await runTurn(floats, decoded.sampleRate);
    input.value = "";
  });

  el("melody").addEventListener("change", refreshStrategies);

  el("eval").addEventListener("click", async () => {
    if (!lastAudioB64) return;
    try {
      const report = await client.postEval(
        [{ id: "current-turn", audio_b64: lastAudioB64 }],
        currentConfig(),
      );
      const rows = evalMetricRows(report.aggregates);
      el("metrics").textContent = rows.map((r) => `${r.label}: ${r.value}`).join("   ");
    } catch (err) {
      state = turnFailed(err instanceof ConnectionError ? err : err);
      render();
    }
  });
}

populateRegistries();
wire();
render();
