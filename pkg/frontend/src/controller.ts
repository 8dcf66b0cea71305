/**
 * Annotation flow: load a session, collect gap toggles, submit, repeat.
 *
 * Submit outcomes:
 *  - ack        -> auto-load the next session (fresh toggle state)
 *  - 409        -> someone (or this tab) already labeled it: message + next
 *  - 400        -> validation problem: keep state so nothing is lost
 *  - network    -> keep state and offer a retry
 * An all-zero submission (no segmentation points) must be confirmed once,
 * since "no split needed" is a common but deliberate answer.
 */

import { AnnotationApi, ApiError } from './api.js';
import { GapToggleState } from './state.js';

export type Phase = 'idle' | 'loading' | 'ready' | 'submitting' | 'done' | 'error';

export interface ControllerView {
  /** Re-render everything from the controller's current state. */
  update(): void;
}

export class AnnotationController {
  phase: Phase = 'idle';
  state: GapToggleState | null = null;
  message = '';
  needsConfirm = false;
  canRetry = false;
  submitted = 0;

  private view: ControllerView | null = null;

  constructor(private readonly api: AnnotationApi) {}

  attach(view: ControllerView): void {
    this.view = view;
  }

  private render(): void {
    this.view?.update();
  }

  get canSubmit(): boolean {
    return (
      (this.phase === 'ready' || this.phase === 'error') && this.state !== null
    );
  }

  async loadNext(): Promise<void> {
    this.phase = 'loading';
    this.state = null;
    this.needsConfirm = false;
    this.canRetry = false;
    this.render();
    try {
      const payload = await this.api.nextSession();
      if (payload === null) {
        this.phase = 'done';
        this.message = 'No unlabeled sessions left. Thank you!';
      } else {
        this.state = new GapToggleState(payload);
        this.phase = 'ready';
        this.message = '';
      }
    } catch (err) {
      this.phase = 'error';
      this.message = err instanceof Error ? err.message : String(err);
      this.canRetry = true;
    }
    this.render();
  }

  toggle(index: number): void {
    if (!this.state || this.phase !== 'ready') {
      return;
    }
    this.state.toggle(index);
    this.needsConfirm = false;
    this.render();
  }

  async submit(): Promise<void> {
    if (!this.state || !this.canSubmit) {
      return;
    }
    if (this.state.allZero() && !this.state.dirty && !this.needsConfirm) {
      this.needsConfirm = true;
      this.message =
        'No segmentation points marked. Press submit again to confirm.';
      this.render();
      return;
    }
    const sessionId = this.state.payload.session_id;
    const labels = this.state.labels();
    this.phase = 'submitting';
    this.render();
    try {
      await this.api.submitLabels(sessionId, labels);
      this.submitted += 1;
      this.needsConfirm = false;
      await this.loadNext();
    } catch (err) {
      if (err instanceof ApiError && err.isConflict) {
        await this.loadNext();
        if (this.state !== null) {
          // keep the notice visible on the freshly loaded session
          this.message = `Session ${sessionId} was already labeled; showing the next one.`;
          this.render();
        }
      } else if (err instanceof ApiError && err.isValidation) {
        // keep the toggle state so the annotator's work is not lost
        this.phase = 'ready';
        this.message = `Rejected: ${err.message}`;
        this.render();
      } else {
        this.phase = 'error';
        this.canRetry = true;
        this.message =
          err instanceof Error
            ? `Could not submit (${err.message}). Your marks are preserved.`
            : String(err);
        this.render();
      }
    }
  }

  /** Retry after a network failure; toggle state is untouched. */
  async retrySubmit(): Promise<void> {
    if (this.state && this.canRetry) {
      this.canRetry = false;
      this.phase = 'ready';
      await this.submit();
    }
  }

  /** Keyboard shortcuts: digits toggle gaps, Enter submits. */
  handleKey(key: string): void {
    if (key === 'Enter') {
      void this.submit();
      return;
    }
    const digit = Number.parseInt(key, 10);
    if (!Number.isNaN(digit) && digit >= 1) {
      this.toggle(digit - 1);
    }
  }
}
