import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { debounce } from "../src/debounce.js";

describe("debounce", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("collapses a burst into one trailing call with the last arguments", () => {
    const calls: number[] = [];
    const fn = debounce((v: number) => calls.push(v), 150);
    for (let i = 0; i <= 10; i++) {
      fn(i / 10);
      vi.advanceTimersByTime(10);
    }
    expect(calls).toEqual([]);
    vi.advanceTimersByTime(150);
    expect(calls).toEqual([1.0]);
  });

  it("issues at most one call per 150 ms window while dragging", () => {
    const calls: number[] = [];
    const fn = debounce((v: number) => calls.push(v), 150);
    // drag events every 40ms for 1.2s, then release
    for (let t = 0; t < 1200; t += 40) {
      fn(t);
      vi.advanceTimersByTime(40);
    }
    vi.advanceTimersByTime(200);
    expect(calls.length).toBeLessThanOrEqual(Math.ceil(1400 / 150));
    expect(calls[calls.length - 1]).toBe(1160);
  });

  it("cancel drops the pending call", () => {
    const calls: number[] = [];
    const fn = debounce((v: number) => calls.push(v), 150);
    fn(1);
    fn.cancel();
    vi.advanceTimersByTime(500);
    expect(calls).toEqual([]);
  });

  it("flush fires the pending call immediately", () => {
    const calls: number[] = [];
    const fn = debounce((v: number) => calls.push(v), 150);
    fn(7);
    fn.flush();
    expect(calls).toEqual([7]);
    vi.advanceTimersByTime(500);
    expect(calls).toEqual([7]);
  });
});
