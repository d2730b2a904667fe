// Microphone capture via Web Audio: collects Float32 chunks so the
// upload is a real 16-bit PCM WAV (MediaRecorder would give webm/opus).

export function mergeChunks(chunks: Float32Array[]): Float32Array {
  const total = chunks.reduce((n, c) => n + c.length, 0);
  const out = new Float32Array(total);
  let offset = 0;
  for (const chunk of chunks) {
    out.set(chunk, offset);
    offset += chunk.length;
  }
  return out;
}

export interface Recording {
  samples: Float32Array;
  sampleRate: number;
}

export class MicRecorder {
  private chunks: Float32Array[] = [];
  private context: AudioContext | null = null;
  private stream: MediaStream | null = null;
  private processor: ScriptProcessorNode | null = null;

  get active(): boolean {
    return this.context !== null;
  }

  async start(): Promise<void> {
    this.stream = await navigator.mediaDevices.getUserMedia({ audio: true });
    this.context = new AudioContext();
    const source = this.context.createMediaStreamSource(this.stream);
    this.processor = this.context.createScriptProcessor(4096, 1, 1);
    this.chunks = [];
    this.processor.onaudioprocess = (event) => {
      this.chunks.push(new Float32Array(event.inputBuffer.getChannelData(0)));
    };
    source.connect(this.processor);
    this.processor.connect(this.context.destination);
  }

  async stop(): Promise<Recording> {
    if (!this.context) throw new Error("recorder is not running");
    const sampleRate = this.context.sampleRate;
    this.processor?.disconnect();
    this.stream?.getTracks().forEach((track) => track.stop());
    await this.context.close();
    this.context = null;
    this.processor = null;
    this.stream = null;
    return { samples: mergeChunks(this.chunks), sampleRate };
  }
}
