/**
 * DOM rendering for the annotation form: the session's items in order
 * with a clickable gap marker between each pair.
 */

import { AnnotationController } from './controller.js';
import type { ItemView } from './api.js';

export function formatPrice(price: number | null, currency = 'JPY'): string {
  if (price === null || price === undefined) {
    return '(no price)';
  }
  try {
    return new Intl.NumberFormat(undefined, {
      style: 'currency',
      currency,
    }).format(price);
  } catch {
    return price.toFixed(2);
  }
}

function itemCard(item: ItemView, position: number): HTMLElement {
  const card = document.createElement('div');
  card.className = 'item-card';
  card.dataset.itemId = item.id;
  const title = document.createElement('div');
  title.className = 'item-title';
  title.textContent = `${position + 1}. ${item.title}`;
  const meta = document.createElement('div');
  meta.className = 'item-meta';
  const brand = item.brand ? item.brand : '(no brand)';
  meta.textContent = `${brand} · ${formatPrice(item.price)}`;
  card.append(title, meta);
  return card;
}

export class AnnotationView {
  private readonly root: HTMLElement;

  constructor(
    root: HTMLElement,
    private readonly controller: AnnotationController,
  ) {
    this.root = root;
    controller.attach(this);
    document.addEventListener('keydown', (event) => {
      if (event.target instanceof HTMLInputElement) {
        return;
      }
      controller.handleKey(event.key);
    });
  }

  update(): void {
    const { controller } = this;
    this.root.replaceChildren();

    const status = document.createElement('div');
    status.className = `status status-${controller.phase}`;
    status.id = 'status';
    status.textContent =
      controller.message ||
      {
        idle: 'Ready.',
        loading: 'Loading session…',
        ready: 'Click the markers between items where the interest shifts '
          + '(keys 1-9 toggle, Enter submits).',
        submitting: 'Submitting…',
        done: 'All sessions labeled.',
        error: 'Something went wrong.',
      }[controller.phase];
    this.root.append(status);

    if (controller.state) {
      const list = document.createElement('div');
      list.className = 'session';
      list.dataset.sessionId = controller.state.payload.session_id;
      controller.state.payload.items.forEach((item, position) => {
        list.append(itemCard(item, position));
        if (position < controller.state!.gapCount) {
          const gap = document.createElement('button');
          gap.type = 'button';
          gap.className = controller.state!.isOn(position)
            ? 'gap-marker on'
            : 'gap-marker';
          gap.dataset.gapIndex = String(position);
          gap.textContent = controller.state!.isOn(position)
            ? `✂ boundary ${position + 1}`
            : `· gap ${position + 1}`;
          gap.addEventListener('click', () => controller.toggle(position));
          list.append(gap);
        }
      });
      this.root.append(list);
    }

    const actions = document.createElement('div');
    actions.className = 'actions';
    const submit = document.createElement('button');
    submit.type = 'button';
    submit.id = 'submit';
    submit.textContent = controller.needsConfirm
      ? 'Confirm: no segmentation points'
      : 'Submit labels';
    submit.disabled = !controller.canSubmit;
    submit.addEventListener('click', () => void controller.submit());
    actions.append(submit);

    if (controller.canRetry) {
      const retry = document.createElement('button');
      retry.type = 'button';
      retry.id = 'retry';
      retry.textContent = 'Retry submit';
      retry.addEventListener('click', () => void controller.retrySubmit());
      actions.append(retry);
    }

    const counter = document.createElement('span');
    counter.className = 'counter';
    counter.textContent = `${controller.submitted} submitted this sitting`;
    actions.append(counter);
    this.root.append(actions);
  }
}
