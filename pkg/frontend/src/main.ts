import { ApiClient } from "./api.js";
import { DrawioFrame } from "./drawioFrame.js";
import { highlightXml, escapeHtml } from "./highlight.js";
import { UiStore } from "./store.js";
import type { Settings } from "./types.js";

declare global {
  interface Window {
    DRAWGEN_API?: string;
  }
}

const api = new ApiClient(window.DRAWGEN_API ?? "http://127.0.0.1:8000");
const store = new UiStore();

function element<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

const messagesBox = element<HTMLDivElement>("messages");
const streamBox = element<HTMLPreElement>("stream-box");
const banner = element<HTMLDivElement>("banner");
const input = element<HTMLTextAreaElement>("chat-input");
const sendButton = element<HTMLButtonElement>("send");
const stopButton = element<HTMLButtonElement>("stop");
const historyDialog = element<HTMLDialogElement>("history-dialog");
const historyList = element<HTMLUListElement>("history-list");
const settingsDialog = element<HTMLDialogElement>("settings-dialog");
const settingsForm = element<HTMLFormElement>("settings-form");
const settingsError = element<HTMLDivElement>("settings-error");

let sessionId = "";
let lastLoadedXml = "";
const canvas = new DrawioFrame(element("canvas"), (xml) => {
  void importEdit(xml);
});

async function importEdit(xml: string): Promise<void> {
  if (!sessionId || store.state.generating) return;
  try {
    await api.importDiagram(sessionId, xml);
    // Trust the server copy, never the frame's, as the source of truth.
    const serverXml = await api.getDiagram(sessionId);
    lastLoadedXml = serverXml; // frame already shows the edit
    store.seedDiagram(serverXml);
    store.setHistory(await api.getHistory(sessionId));
  } catch (error) {
    store.connectionLost(String(error));
  }
}

function render(): void {
  const { state } = store;
  messagesBox.replaceChildren(
    ...state.messages.map((message) => {
      const item = document.createElement("div");
      item.className = `message ${message.role} ${message.kind}`;
      if (message.kind === "xml") {
        const details = document.createElement("details");
        const summary = document.createElement("summary");
        summary.textContent = "generated diagram XML";
        const pre = document.createElement("pre");
        pre.innerHTML = highlightXml(message.text);
        details.append(summary, pre);
        item.append(details);
      } else {
        item.textContent = message.text;
      }
      return item;
    }),
  );

  const textualLive = state.generating && state.phase === "textual";
  const frozenText = state.phase === "stopped" || state.phase === "failed";
  streamBox.hidden = !(textualLive || (frozenText && state.streamBuffer.length > 0));
  streamBox.innerHTML = highlightXml(state.streamBuffer);
  streamBox.classList.toggle("frozen", frozenText);
  element("canvas").hidden = !streamBox.hidden;

  banner.hidden = state.banner === null;
  banner.textContent = state.banner ?? "";
  sendButton.disabled = state.generating;
  stopButton.disabled = !state.generating;

  if (state.currentXml && state.currentXml !== lastLoadedXml && !textualLive) {
    lastLoadedXml = state.currentXml;
    canvas.load(state.currentXml);
  }

  historyList.replaceChildren(
    ...state.historyLog.map((entry) => {
      const item = document.createElement("li");
      const label = document.createElement("span");
      label.textContent = `v${entry.version} [${entry.origin}] ${entry.summary}`;
      const restore = document.createElement("button");
      restore.textContent = "restore";
      restore.addEventListener("click", () => void restoreVersion(entry.version));
      item.append(label, restore);
      return item;
    }),
  );
}

store.subscribe(render);

async function restoreVersion(version: number): Promise<void> {
  try {
    const result = await api.restore(sessionId, version);
    store.applyRestore(result.version, result.xml);
    store.setHistory(await api.getHistory(sessionId));
  } catch (error) {
    store.connectionLost(String(error));
  }
}

async function send(): Promise<void> {
  const text = input.value.trim();
  if (!text || store.state.generating) return;
  input.value = "";
  store.beginGeneration(text);
  try {
    await api.chat(sessionId, text, (event) => store.applyServerEvent(event));
    store.setHistory(await api.getHistory(sessionId));
  } catch (error) {
    store.connectionLost(String(error));
  }
}

sendButton.addEventListener("click", () => void send());
input.addEventListener("keydown", (event) => {
  if (event.key === "Enter" && !event.shiftKey) {
    event.preventDefault();
    void send();
  }
});
stopButton.addEventListener("click", () => void api.stop(sessionId));

element("open-history").addEventListener("click", () => {
  void api.getHistory(sessionId).then((entries) => {
    store.setHistory(entries);
    historyDialog.showModal();
  });
});
element("close-history").addEventListener("click", () => historyDialog.close());

element("open-settings").addEventListener("click", () => {
  void api.getSettings().then((settings) => {
    store.setSettings(settings);
    fillSettingsForm(settings);
    settingsError.textContent = "";
    settingsDialog.showModal();
  });
});
element("close-settings").addEventListener("click", () => settingsDialog.close());

function fillSettingsForm(settings: Settings): void {
  (settingsForm.elements.namedItem("model_id") as HTMLInputElement).value =
    settings.provider.model_id;
  (settingsForm.elements.namedItem("temperature") as HTMLInputElement).value = String(
    settings.provider.temperature,
  );
  (settingsForm.elements.namedItem("endpoint_url") as HTMLInputElement).value =
    settings.provider.endpoint_url;
  // Credentials are write-only: the env-var *name* is editable, values never appear.
  (settingsForm.elements.namedItem("api_key_env_var_name") as HTMLInputElement).value =
    settings.provider.api_key_env_var_name;
  (settingsForm.elements.namedItem("orientation") as HTMLSelectElement).value =
    settings.layout.orientation;
}

settingsForm.addEventListener("submit", (event) => {
  event.preventDefault();
  const current = store.state.settings;
  if (!current) return;
  const read = (name: string) =>
    (settingsForm.elements.namedItem(name) as HTMLInputElement).value;
  const updated: Settings = {
    ...current,
    provider: {
      ...current.provider,
      model_id: read("model_id"),
      temperature: Number(read("temperature")),
      endpoint_url: read("endpoint_url"),
      api_key_env_var_name: read("api_key_env_var_name"),
    },
    layout: {
      ...current.layout,
      orientation: read("orientation") as "horizontal" | "vertical",
    },
  };
  api
    .putSettings(updated)
    .then(() => {
      store.setSettings(updated);
      settingsDialog.close();
    })
    .catch((error) => {
      settingsError.textContent = String(error);
    });
});

async function boot(): Promise<void> {
  try {
    sessionId = await api.createSession();
    store.seedDiagram(await api.getDiagram(sessionId));
    store.setHistory(await api.getHistory(sessionId));
  } catch (error) {
    banner.hidden = false;
    banner.textContent = `cannot reach the drawgen service: ${escapeHtml(String(error))}`;
  }
}

void boot();
