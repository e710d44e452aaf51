import { describe, expect, it } from "vitest";

import { laneRanges, locateCell, noteRects } from "../src/pianoroll.js";
import { HOLD, SILENCE, TokenGrid } from "../src/tokens.js";

function gridWithTrack(values: number[], track = 0, timesteps = 32): TokenGrid {
  const grid: TokenGrid = [];
  for (let t = 0; t < timesteps; t++) {
    grid.push([SILENCE, SILENCE, SILENCE, SILENCE]);
  }
  values.forEach((v, i) => {
    grid[i][track] = v;
  });
  return grid;
}

describe("noteRects", () => {
  it("draws [60, hold, hold, silence] as one three-cell note", () => {
    const rects = noteRects(gridWithTrack([60, HOLD, HOLD, SILENCE]));
    expect(rects).toEqual([{ track: 0, pitch: 60, startCell: 0, lengthCells: 3 }]);
  });

  it("renders nothing for an all-silence lane", () => {
    expect(noteRects(gridWithTrack([]))).toEqual([]);
  });

  it("skips orphan holds that continue nothing", () => {
    const grid = gridWithTrack([SILENCE, HOLD, HOLD, 64]);
    expect(noteRects(grid)).toEqual([{ track: 0, pitch: 64, startCell: 3, lengthCells: 1 }]);
  });

  it("separates back-to-back notes", () => {
    const rects = noteRects(gridWithTrack([60, HOLD, 62, HOLD]));
    expect(rects).toEqual([
      { track: 0, pitch: 60, startCell: 0, lengthCells: 2 },
      { track: 0, pitch: 62, startCell: 2, lengthCells: 2 },
    ]);
  });

  it("keeps tracks independent", () => {
    const grid = gridWithTrack([36], 0);
    grid[0][2] = 70;
    const rects = noteRects(grid);
    expect(rects).toHaveLength(2);
    expect(rects.map((r) => r.track).sort()).toEqual([0, 2]);
  });
});

describe("laneRanges", () => {
  it("pads around observed pitches with at least an octave", () => {
    const ranges = laneRanges(noteRects(gridWithTrack([60, HOLD, 64])));
    expect(ranges[0].low).toBeLessThanOrEqual(58);
    expect(ranges[0].high).toBeGreaterThanOrEqual(66);
    expect(ranges[0].high - ranges[0].low).toBeGreaterThanOrEqual(12);
  });

  it("gives empty lanes a sensible default window", () => {
    const ranges = laneRanges([]);
    expect(ranges).toHaveLength(4);
    expect(ranges[1]).toEqual({ low: 48, high: 72 });
  });
});

describe("locateCell", () => {
  it("maps canvas coordinates to cell and track", () => {
    const grid = gridWithTrack([60]);
    const options = { width: 320, height: 400 };
    const hit = locateCell(5, 5, grid, options);
    expect(hit.cell).toBe(0);
    expect(hit.track).toBe(0);
    const far = locateCell(319, 399, grid, options);
    expect(far.cell).toBe(31);
    expect(far.track).toBe(3);
  });
});
