// Built-in browser synthesizer: one oscillator per note with a short gain
// envelope, drums rendered as fast-decaying square blips. The audio context
// is injected so tests can drive a stub.

import { ScheduledNote, pitchToFrequency } from "./schedule.js";

type OscType = "square" | "sawtooth" | "triangle" | "sine";

const TRACK_VOICES: { type: OscType; gain: number }[] = [
  { type: "square", gain: 0.25 }, // drums: percussive blip
  { type: "triangle", gain: 0.4 }, // bass
  { type: "sawtooth", gain: 0.22 }, // guitar
  { type: "sine", gain: 0.28 }, // strings
];

export interface SynthContext {
  currentTime: number;
  destination: AudioNode;
  createOscillator(): OscillatorNode;
  createGain(): GainNode;
}

export class Player {
  private active: { osc: OscillatorNode; gain: GainNode }[] = [];
  private startedAt = 0;
  private durationSec = 0;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(private ctx: SynthContext) {}

  get playing(): boolean {
    return this.timer !== null;
  }

  /** Seconds since play() started, clamped to the scheduled length. */
  position(): number {
    if (this.timer === null) return 0;
    return Math.min(this.ctx.currentTime - this.startedAt, this.durationSec);
  }

  play(notes: ScheduledNote[], durationSec: number, onTick?: (pos: number) => void, onDone?: () => void): void {
    this.stop();
    this.startedAt = this.ctx.currentTime + 0.05;
    this.durationSec = durationSec;
    for (const note of notes) {
      const voice = TRACK_VOICES[note.track];
      const osc = this.ctx.createOscillator();
      const gain = this.ctx.createGain();
      osc.type = voice.type;
      osc.frequency.value = pitchToFrequency(note.pitch);
      const start = this.startedAt + note.startSec;
      const isDrums = note.track === 0;
      const stop = start + (isDrums ? Math.min(0.08, note.durationSec) : note.durationSec);
      gain.gain.setValueAtTime(0, start);
      gain.gain.linearRampToValueAtTime(voice.gain, start + 0.01);
      gain.gain.setTargetAtTime(0, Math.max(start + 0.01, stop - 0.03), 0.02);
      osc.connect(gain);
      gain.connect(this.ctx.destination);
      osc.start(start);
      osc.stop(stop + 0.1);
      this.active.push({ osc, gain });
    }
    this.timer = setInterval(() => {
      const pos = this.position();
      onTick?.(pos);
      if (pos >= durationSec) {
        this.stop();
        onDone?.();
      }
    }, 33);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
    for (const { osc, gain } of this.active) {
      try {
        osc.stop();
        osc.disconnect();
        gain.disconnect();
      } catch {
        // already stopped
      }
    }
    this.active = [];
  }
}
