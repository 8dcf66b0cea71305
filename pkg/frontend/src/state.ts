/**
 * Gap-toggle state for one session: which inter-item gaps the annotator
 * marked as segmentation points.  A fresh instance is created per loaded
 * session so nothing leaks between sessions.
 */

import type { SessionPayload } from './api.js';

export class GapToggleState {
  readonly payload: SessionPayload;
  private toggles: boolean[];
  private touched = false;

  constructor(payload: SessionPayload) {
    if (payload.gap_count !== payload.items.length - 1) {
      throw new Error(
        `payload gap_count ${payload.gap_count} does not match ` +
          `${payload.items.length} items`,
      );
    }
    this.payload = payload;
    this.toggles = new Array<boolean>(payload.gap_count).fill(false);
  }

  get gapCount(): number {
    return this.toggles.length;
  }

  /** True once the annotator interacted with any gap marker. */
  get dirty(): boolean {
    return this.touched;
  }

  isOn(index: number): boolean {
    return this.toggles[index] ?? false;
  }

  toggle(index: number): void {
    if (index < 0 || index >= this.toggles.length) {
      return;
    }
    this.toggles[index] = !this.toggles[index];
    this.touched = true;
  }

  /** The 0/1 array the server expects; always gap_count long. */
  labels(): number[] {
    return this.toggles.map((on) => (on ? 1 : 0));
  }

  allZero(): boolean {
    return this.toggles.every((on) => !on);
  }
}
