import type {
  DiagramPayload,
  DonePayload,
  ErrorPayload,
  HistoryEntry,
  RepairPayload,
  ServerEvent,
  Settings,
  TextPayload,
} from "./types.js";

export type PhaseName = "idle" | "textual" | "visual" | "failed" | "stopped";

export interface ChatMessage {
  role: "user" | "assistant";
  kind: "text" | "xml" | "notice" | "error";
  text: string;
}

export interface UiState {
  messages: ChatMessage[];
  streamBuffer: string;
  phase: PhaseName;
  currentXml: string;
  historyLog: HistoryEntry[];
  settings: Settings | null;
  banner: string | null;
  generating: boolean;
  lastVersion: number | null;
}

/**
 * Single UI state store. The two-phase discipline lives here: streamed
 * fragments only grow the buffer while the textual phase is live, the
 * buffer is cleared on the transition to the visual phase, and the canvas
 * source (currentXml) changes only on `diagram` events, restores and
 * server-confirmed imports. The UI never parses XML itself.
 */
export class UiStore {
  readonly state: UiState = {
    messages: [],
    streamBuffer: "",
    phase: "idle",
    currentXml: "",
    historyLog: [],
    settings: null,
    banner: null,
    generating: false,
    lastVersion: null,
  };

  private listeners: Array<() => void> = [];

  subscribe(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  beginGeneration(userText: string): void {
    this.state.messages.push({ role: "user", kind: "text", text: userText });
    this.state.streamBuffer = "";
    this.state.phase = "textual";
    this.state.generating = true;
    this.state.banner = null;
    this.notify();
  }

  applyServerEvent(event: ServerEvent): void {
    const { state } = this;
    switch (event.name) {
      case "text": {
        if (state.phase === "textual") {
          state.streamBuffer += (event.data as TextPayload).text;
        }
        break;
      }
      case "phase": {
        state.phase = "visual";
        state.streamBuffer = "";
        break;
      }
      case "repair": {
        const repair = event.data as RepairPayload;
        const details = repair.issues.map((issue) => issue.detail).join("; ");
        state.messages.push({
          role: "assistant",
          kind: "notice",
          text: `auto-repaired output (${repair.passes_applied.join(", ")}): ${details}`,
        });
        break;
      }
      case "diagram": {
        const diagram = event.data as DiagramPayload;
        state.currentXml = diagram.xml;
        state.lastVersion = diagram.version;
        state.messages.push({ role: "assistant", kind: "xml", text: diagram.xml });
        break;
      }
      case "error": {
        const error = event.data as ErrorPayload;
        state.phase = "failed";
        state.banner = error.message;
        state.messages.push({ role: "assistant", kind: "error", text: error.message });
        break;
      }
      case "done": {
        const done = event.data as DonePayload;
        state.generating = false;
        if (done.status === "stopped") {
          state.phase = "stopped"; // partial text stays frozen on screen
        }
        break;
      }
    }
    this.notify();
  }

  connectionLost(message: string): void {
    this.state.generating = false;
    this.state.phase = "failed";
    this.state.banner = `${message} (retry the request)`;
    this.notify();
  }

  applyRestore(version: number, xml: string): void {
    this.state.currentXml = xml;
    this.state.lastVersion = version;
    this.state.messages.push({
      role: "assistant",
      kind: "notice",
      text: `restored an earlier version as v${version}`,
    });
    this.notify();
  }

  seedDiagram(xml: string): void {
    this.state.currentXml = xml;
    this.notify();
  }

  setHistory(entries: HistoryEntry[]): void {
    this.state.historyLog = entries;
    this.notify();
  }

  setSettings(settings: Settings): void {
    this.state.settings = settings;
    this.notify();
  }
}
