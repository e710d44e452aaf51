// Pianoroll geometry and canvas rendering: four stacked lanes, pitch on the
// vertical axis; an onset cell starts a bar that hold cells extend.

import { HOLD, NUM_TRACKS, TokenGrid, TRACK_NAMES } from "./tokens.js";

export interface NoteRect {
  track: number;
  pitch: number;
  startCell: number;
  lengthCells: number;
}

export function noteRects(tokens: TokenGrid): NoteRect[] {
  const rects: NoteRect[] = [];
  const timesteps = tokens.length;
  for (let track = 0; track < NUM_TRACKS; track++) {
    let step = 0;
    while (step < timesteps) {
      const token = tokens[step][track];
      if (token <= 127) {
        let length = 1;
        while (step + length < timesteps && tokens[step + length][track] === HOLD) {
          length += 1;
        }
        rects.push({ track, pitch: token, startCell: step, lengthCells: length });
        step += length;
      } else {
        step += 1; // silence, or an orphan hold with no preceding onset
      }
    }
  }
  return rects;
}

export interface LaneRange {
  low: number;
  high: number;
}

/** Per-track pitch window with padding; at least an octave tall. */
export function laneRanges(rects: NoteRect[]): LaneRange[] {
  const ranges: LaneRange[] = [];
  for (let track = 0; track < NUM_TRACKS; track++) {
    const pitches = rects.filter((r) => r.track === track).map((r) => r.pitch);
    if (pitches.length === 0) {
      ranges.push({ low: 48, high: 72 });
      continue;
    }
    let low = Math.min(...pitches) - 2;
    let high = Math.max(...pitches) + 2;
    while (high - low < 12) {
      low -= 1;
      high += 1;
    }
    ranges.push({ low: Math.max(0, low), high: Math.min(129, high) });
  }
  return ranges;
}

const LANE_COLORS = ["#d08770", "#a3be8c", "#5e81ac", "#b48ead"];

export interface RenderOptions {
  width: number;
  height: number;
  cursorCell?: number | null;
}

export function renderPianoroll(
  ctx: CanvasRenderingContext2D,
  tokens: TokenGrid,
  options: RenderOptions,
): void {
  const { width, height } = options;
  const timesteps = tokens.length;
  const rects = noteRects(tokens);
  const ranges = laneRanges(rects);
  const laneHeight = height / NUM_TRACKS;
  const cellWidth = width / timesteps;

  ctx.clearRect(0, 0, width, height);
  ctx.font = "10px sans-serif";
  for (let track = 0; track < NUM_TRACKS; track++) {
    const top = track * laneHeight;
    ctx.fillStyle = track % 2 === 0 ? "#2e3440" : "#343b49";
    ctx.fillRect(0, top, width, laneHeight);
    ctx.strokeStyle = "#4c566a";
    for (let bar = 0; bar <= timesteps / 16; bar++) {
      const x = bar * 16 * cellWidth;
      ctx.beginPath();
      ctx.moveTo(x, top);
      ctx.lineTo(x, top + laneHeight);
      ctx.stroke();
    }
    ctx.fillStyle = "#d8dee9";
    ctx.fillText(TRACK_NAMES[track], 4, top + 12);
  }

  for (const rect of rects) {
    const range = ranges[rect.track];
    const span = range.high - range.low || 1;
    const rowHeight = Math.max(2, laneHeight / span);
    const top = rect.track * laneHeight;
    const y = top + (1 - (rect.pitch - range.low) / span) * (laneHeight - rowHeight);
    ctx.fillStyle = LANE_COLORS[rect.track];
    ctx.fillRect(rect.startCell * cellWidth + 0.5, y, rect.lengthCells * cellWidth - 1, rowHeight);
  }

  if (options.cursorCell != null) {
    ctx.strokeStyle = "#ebcb8b";
    ctx.lineWidth = 2;
    const x = options.cursorCell * cellWidth;
    ctx.beginPath();
    ctx.moveTo(x, 0);
    ctx.lineTo(x, height);
    ctx.stroke();
    ctx.lineWidth = 1;
  }
}

/** Map a canvas click back to (cell, track, pitch) for grid editing. */
export function locateCell(
  x: number,
  y: number,
  tokens: TokenGrid,
  options: RenderOptions,
): { cell: number; track: number; pitch: number } {
  const timesteps = tokens.length;
  const laneHeight = options.height / NUM_TRACKS;
  const cell = Math.max(0, Math.min(timesteps - 1, Math.floor((x / options.width) * timesteps)));
  const track = Math.max(0, Math.min(NUM_TRACKS - 1, Math.floor(y / laneHeight)));
  const ranges = laneRanges(noteRects(tokens));
  const range = ranges[track];
  const span = range.high - range.low || 1;
  const within = (y - track * laneHeight) / laneHeight;
  const pitch = Math.round(range.low + (1 - within) * span);
  return { cell, track, pitch: Math.max(0, Math.min(127, pitch)) };
}
