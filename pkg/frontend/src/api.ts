import { readSseStream } from "./sse.js";
import type { HistoryEntry, ServerEvent, Settings } from "./types.js";

/** Thin client over the service's HTTP+SSE contract (the UI's only backend). */
export class ApiClient {
  constructor(private readonly baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.url(path), init);
    if (!response.ok) {
      const body = await response.text().catch(() => "");
      throw new Error(`HTTP ${response.status}: ${body.slice(0, 200)}`);
    }
    return (await response.json()) as T;
  }

  async createSession(): Promise<string> {
    const body = await this.json<{ session_id: string }>("/api/sessions", { method: "POST" });
    return body.session_id;
  }

  /** POST chat and deliver SSE events in order until the stream closes. */
  async chat(
    sessionId: string,
    text: string,
    onEvent: (event: ServerEvent) => void,
    image?: string,
  ): Promise<void> {
    const response = await fetch(this.url(`/api/sessions/${sessionId}/chat`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(image ? { text, image } : { text }),
    });
    await readSseStream(response, onEvent);
  }

  async stop(sessionId: string): Promise<void> {
    await fetch(this.url(`/api/sessions/${sessionId}/chat`), { method: "DELETE" });
  }

  async getDiagram(sessionId: string): Promise<string> {
    const response = await fetch(this.url(`/api/sessions/${sessionId}/diagram`));
    if (!response.ok) throw new Error(`HTTP ${response.status}`);
    return await response.text();
  }

  async importDiagram(sessionId: string, xml: string): Promise<number> {
    const body = await this.json<{ version: number }>(`/api/sessions/${sessionId}/diagram`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ xml }),
    });
    return body.version;
  }

  async getHistory(sessionId: string): Promise<HistoryEntry[]> {
    const body = await this.json<{ entries: HistoryEntry[] }>(
      `/api/sessions/${sessionId}/history`,
    );
    return body.entries;
  }

  async restore(sessionId: string, version: number): Promise<{ version: number; xml: string }> {
    return await this.json(`/api/sessions/${sessionId}/history/${version}/restore`, {
      method: "POST",
    });
  }

  async getSettings(): Promise<Settings> {
    return await this.json("/api/settings");
  }

  async putSettings(settings: Settings): Promise<void> {
    const response = await fetch(this.url("/api/settings"), {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(settings),
    });
    if (response.status === 422) {
      const detail = await response.text().catch(() => "");
      throw new Error(`invalid settings: ${detail.slice(0, 200)}`);
    }
    if (!response.ok) throw new Error(`HTTP ${response.status}`);
  }
}
