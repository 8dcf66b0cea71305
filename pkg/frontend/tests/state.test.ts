import { describe, expect, it } from 'vitest';

import type { SessionPayload } from '../src/api.js';
import { GapToggleState } from '../src/state.js';

function payload(nItems: number): SessionPayload {
  return {
    session_id: 's1',
    items: Array.from({ length: nItems }, (_, k) => ({
      id: `i${k}`,
      title: `item ${k}`,
      brand: 'acme',
      price: 100 + k,
    })),
    gap_count: nItems - 1,
  };
}

describe('GapToggleState', () => {
  it('creates one toggle per gap, all off', () => {
    const state = new GapToggleState(payload(4));
    expect(state.gapCount).toBe(3);
    expect(state.labels()).toEqual([0, 0, 0]);
    expect(state.allZero()).toBe(true);
    expect(state.dirty).toBe(false);
  });

  it('toggling flips exactly one gap and marks dirty', () => {
    const state = new GapToggleState(payload(4));
    state.toggle(1);
    expect(state.labels()).toEqual([0, 1, 0]);
    expect(state.dirty).toBe(true);
    state.toggle(1);
    expect(state.labels()).toEqual([0, 0, 0]);
    expect(state.allZero()).toBe(true);
  });

  it('ignores out-of-range toggles', () => {
    const state = new GapToggleState(payload(3));
    state.toggle(-1);
    state.toggle(2);
    state.toggle(99);
    expect(state.labels()).toEqual([0, 0]);
  });

  it('labels length always equals gap count', () => {
    for (const n of [2, 3, 5, 9]) {
      const state = new GapToggleState(payload(n));
      state.toggle(0);
      expect(state.labels()).toHaveLength(n - 1);
    }
  });

  it('rejects inconsistent payloads', () => {
    const broken = { ...payload(3), gap_count: 5 };
    expect(() => new GapToggleState(broken)).toThrow(/gap_count/);
  });

  it('fresh state per payload: nothing carries over', () => {
    const first = new GapToggleState(payload(4));
    first.toggle(0);
    first.toggle(2);
    const second = new GapToggleState(payload(4));
    expect(second.labels()).toEqual([0, 0, 0]);
    expect(second.dirty).toBe(false);
  });
});
