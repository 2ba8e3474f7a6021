/** Page bootstrap: service health badge + controller wiring. */

import { ApiClient } from "./api.js";
import { AppController, ControllerElements } from "./controller.js";
import { SessionHistory } from "./history.js";
import { MicSource } from "./recorder.js";

function required<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

async function boot(): Promise<void> {
  const api = new ApiClient("");
  const elements: ControllerElements = {
    recordButton: required<HTMLButtonElement>("record"),
    clearButton: required<HTMLButtonElement>("clear-history"),
    status: required("status"),
    gauge: required("gauge"),
    timeline: required("timeline"),
    trend: required("trend"),
    diagnostics: required("diagnostics"),
  };
  new AppController(api, new SessionHistory(), elements, () => new MicSource());

  const healthBadge = required("health");
  try {
    const health = await api.health();
    healthBadge.textContent = health.status === "ok"
      ? `service ok (model ${health.model_version ?? "?"})`
      : `service: ${health.status}`;
  } catch {
    healthBadge.textContent = "service unreachable";
  }
}

void boot();
