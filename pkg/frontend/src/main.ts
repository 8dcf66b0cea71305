/**
 * Entry point: read annotator credentials from the query string, wire the
 * API client, controller, and view, and load the first session.
 */

import { AnnotationApi } from './api.js';
import { AnnotationController } from './controller.js';
import { AnnotationView } from './view.js';

export function bootstrap(
  root: HTMLElement,
  baseUrl: string,
  annotator: string,
  token: string,
): AnnotationController {
  const api = new AnnotationApi(baseUrl, { annotator, token });
  const controller = new AnnotationController(api);
  new AnnotationView(root, controller);
  void controller.loadNext();
  return controller;
}

function fromQuery(): void {
  const params = new URLSearchParams(window.location.search);
  const annotator = params.get('annotator') ?? '';
  const token = params.get('token') ?? '';
  const root = document.getElementById('app');
  if (!root) {
    return;
  }
  if (!annotator) {
    root.textContent =
      'Missing ?annotator=<id>&token=<token> in the URL. Ask the study '
      + 'operator for your link.';
    return;
  }
  bootstrap(root, '', annotator, token);
}

if (typeof window !== 'undefined' && document.getElementById('app')) {
  fromQuery();
}
