const TOAST_MS = 4000;

/** Non-blocking corner notification. Used for 409 conflicts (someone else
 * saved first, or a recompute is already running) so the analyst keeps
 * their draft instead of being interrupted by a modal. */
export function showToast(message: string, kind: 'info' | 'error' = 'info'): HTMLElement {
  let host = document.getElementById('toasts');
  if (!host) {
    host = document.createElement('div');
    host.id = 'toasts';
    document.body.appendChild(host);
  }
  const el = document.createElement('div');
  el.className = `toast toast-${kind}`;
  el.textContent = message;
  host.appendChild(el);
  setTimeout(() => el.remove(), TOAST_MS);
  return el;
}
