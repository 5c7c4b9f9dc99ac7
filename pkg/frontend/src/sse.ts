import type { ServerEvent, SseEventName } from "./types.js";

const EVENT_NAMES: SseEventName[] = ["text", "phase", "repair", "diagram", "error", "done"];

/**
 * Incremental server-sent-events parser. Frames may arrive split across
 * arbitrary chunk boundaries; push() returns every event completed so far.
 */
export class SseParser {
  private buffer = "";

  push(chunk: string): ServerEvent[] {
    this.buffer += chunk;
    const events: ServerEvent[] = [];
    let boundary: number;
    while ((boundary = this.buffer.indexOf("\n\n")) !== -1) {
      const frame = this.buffer.slice(0, boundary);
      this.buffer = this.buffer.slice(boundary + 2);
      const event = parseFrame(frame);
      if (event) events.push(event);
    }
    return events;
  }
}

function parseFrame(frame: string): ServerEvent | null {
  let name = "";
  const dataLines: string[] = [];
  for (const rawLine of frame.split("\n")) {
    const line = rawLine.replace(/\r$/, "");
    if (line.startsWith("event:")) {
      name = line.slice("event:".length).trim();
    } else if (line.startsWith("data:")) {
      dataLines.push(line.slice("data:".length).trim());
    }
    // comment lines (":" prefix) and unknown fields are ignored
  }
  if (!dataLines.length || !(EVENT_NAMES as string[]).includes(name)) return null;
  try {
    return { name: name as SseEventName, data: JSON.parse(dataLines.join("\n")) };
  } catch {
    return null;
  }
}

/** Read a streamed fetch Response and deliver each SSE event in order. */
export async function readSseStream(
  response: Response,
  onEvent: (event: ServerEvent) => void,
): Promise<void> {
  if (!response.ok || !response.body) {
    throw new Error(`stream request failed: HTTP ${response.status}`);
  }
  const reader = response.body.getReader();
  const decoder = new TextDecoder();
  const parser = new SseParser();
  while (true) {
    const { done, value } = await reader.read();
    if (done) break;
    for (const event of parser.push(decoder.decode(value, { stream: true }))) {
      onEvent(event);
    }
  }
}
