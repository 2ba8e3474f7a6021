/** Session history in browser local storage: append-only, user-clearable,
 * ordered by timestamp. Nothing here talks to the service. */

import type { Attempt } from "./types.js";

const STORAGE_KEY = "voicefem.attempts.v1";

export class SessionHistory {
  constructor(private storage: Storage = window.localStorage) {}

  list(): Attempt[] {
    const raw = this.storage.getItem(STORAGE_KEY);
    if (!raw) return [];
    try {
      const parsed = JSON.parse(raw) as Attempt[];
      return parsed.sort((a, b) => a.timestamp - b.timestamp);
    } catch {
      return [];
    }
  }

  append(attempt: Attempt): void {
    const attempts = this.list();
    attempts.push(attempt);
    this.storage.setItem(STORAGE_KEY, JSON.stringify(attempts));
  }

  clear(): void {
    this.storage.removeItem(STORAGE_KEY);
  }
}
