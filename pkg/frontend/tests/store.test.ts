import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { SseParser } from "../src/sse.js";
import { UiStore } from "../src/store.js";
import type { DiagramPayload, ServerEvent, TextPayload } from "../src/types.js";

function loadTranscript(name: string): ServerEvent[] {
  const raw = readFileSync(new URL(`./fixtures/${name}`, import.meta.url), "utf-8");
  return new SseParser().push(raw);
}

describe("playback of a recorded successful generation", () => {
  const events = loadTranscript("success.sse");

  it("shows every fragment in order while the textual phase is live", () => {
    const store = new UiStore();
    store.beginGeneration("Draw the small webshop architecture");
    let expected = "";
    for (const event of events) {
      if (event.name === "phase") break;
      store.applyServerEvent(event);
      if (event.name === "text") {
        expected += (event.data as TextPayload).text;
        expect(store.state.streamBuffer).toBe(expected);
      }
    }
    expect(expected.length).toBeGreaterThan(0);
  });

  it("updates the canvas only after the diagram event", () => {
    const store = new UiStore();
    store.beginGeneration("draw");
    for (const event of events) {
      const before = store.state.currentXml;
      store.applyServerEvent(event);
      if (event.name === "diagram") {
        expect(store.state.currentXml).toBe((event.data as DiagramPayload).xml);
      } else {
        expect(store.state.currentXml).toBe(before);
      }
    }
    expect(store.state.currentXml).toContain("Load Balancer");
    expect(store.state.generating).toBe(false);
  });

  it("clears the stream buffer on the visual transition", () => {
    const store = new UiStore();
    store.beginGeneration("draw");
    for (const event of events) store.applyServerEvent(event);
    expect(store.state.phase).toBe("visual");
    expect(store.state.streamBuffer).toBe("");
  });
});

describe("playback of a recorded stopped generation", () => {
  const events = loadTranscript("stopped.sse");

  it("freezes the partial output without a canvas swap", () => {
    const store = new UiStore();
    store.beginGeneration("slow request");
    let expected = "";
    for (const event of events) {
      store.applyServerEvent(event);
      if (event.name === "text") expected += (event.data as TextPayload).text;
    }
    expect(events[events.length - 1].name).toBe("done");
    expect(store.state.phase).toBe("stopped");
    expect(store.state.streamBuffer).toBe(expected); // frozen, not cleared
    expect(store.state.currentXml).toBe(""); // no diagram swap
    expect(store.state.generating).toBe(false);
  });
});

describe("error handling", () => {
  it("renders a banner and re-enables input on error events", () => {
    const store = new UiStore();
    store.beginGeneration("draw");
    store.applyServerEvent({ name: "text", data: { text: "partial" } });
    store.applyServerEvent({
      name: "error",
      data: { message: "provider unavailable", kind: "transport" },
    });
    store.applyServerEvent({
      name: "done",
      data: { status: "error", correction_iterations: 0, version: null, tokens: { input: 0, output: 0 } },
    });
    expect(store.state.banner).toBe("provider unavailable");
    expect(store.state.phase).toBe("failed");
    expect(store.state.generating).toBe(false);
    expect(store.state.currentXml).toBe("");
  });

  it("marks lost connections as retryable", () => {
    const store = new UiStore();
    store.beginGeneration("draw");
    store.connectionLost("network gone");
    expect(store.state.banner).toContain("retry");
    expect(store.state.generating).toBe(false);
  });
});

describe("repair notices", () => {
  it("renders repair events as a notice message", () => {
    const store = new UiStore();
    store.beginGeneration("draw");
    store.applyServerEvent({
      name: "repair",
      data: {
        issues: [{ category: "MismatchedTag", detail: "closed unclosed <mxfile>", repaired: true }],
        passes_applied: ["tag_repair"],
      },
    });
    const notice = store.state.messages.at(-1);
    expect(notice?.kind).toBe("notice");
    expect(notice?.text).toContain("tag_repair");
  });
});

describe("history restore", () => {
  it("redraws the older snapshot", () => {
    const store = new UiStore();
    store.beginGeneration("draw");
    for (const event of loadTranscript("success.sse")) store.applyServerEvent(event);
    const generated = store.state.currentXml;
    const older = "<mxfile>\n  <diagram name=\"Page-1\"/>\n</mxfile>\n";
    store.applyRestore(2, older);
    expect(store.state.currentXml).toBe(older);
    expect(store.state.currentXml).not.toBe(generated);
    expect(store.state.lastVersion).toBe(2);
  });
});
