// Embedded draw.io canvas: the official embed page in an iframe, driven via
// its JSON postMessage protocol. Falls back to a raw-XML view when the
// frame never reports ready (offline, blocked, slow).

const EMBED_URL =
  "https://embed.diagrams.net/?embed=1&ui=min&spin=1&proto=json&libraries=0&noSaveBtn=1&noExitBtn=1";

const READY_TIMEOUT_MS = 8000;

export class DrawioFrame {
  private frame: HTMLIFrameElement;
  private fallback: HTMLPreElement;
  private ready = false;
  private pendingXml: string | null = null;

  constructor(
    container: HTMLElement,
    private readonly onEdit: (xml: string) => void,
    embedUrl: string = EMBED_URL,
  ) {
    this.frame = document.createElement("iframe");
    this.frame.className = "drawio-frame";
    this.frame.src = embedUrl;
    this.fallback = document.createElement("pre");
    this.fallback.className = "drawio-fallback";
    this.fallback.hidden = true;
    container.append(this.frame, this.fallback);

    window.addEventListener("message", (event) => this.onMessage(event));
    window.setTimeout(() => {
      if (!this.ready) this.showFallback();
    }, READY_TIMEOUT_MS);
  }

  /** Load (or queue) diagram XML into the canvas. */
  load(xml: string): void {
    this.pendingXml = xml;
    if (this.ready) {
      this.post({ action: "load", xml, autosave: 1 });
    } else if (!this.fallback.hidden) {
      this.fallback.textContent = xml;
    }
  }

  private onMessage(event: MessageEvent): void {
    if (event.source !== this.frame.contentWindow || typeof event.data !== "string") return;
    let message: { event?: string; xml?: string };
    try {
      message = JSON.parse(event.data);
    } catch {
      return;
    }
    if (message.event === "init") {
      this.ready = true;
      this.fallback.hidden = true;
      this.frame.hidden = false;
      if (this.pendingXml !== null) {
        this.post({ action: "load", xml: this.pendingXml, autosave: 1 });
      }
    } else if ((message.event === "autosave" || message.event === "save") && message.xml) {
      // User edit inside the frame; the service decides whether it sticks.
      this.onEdit(message.xml);
    }
  }

  private post(message: object): void {
    this.frame.contentWindow?.postMessage(JSON.stringify(message), "*");
  }

  private showFallback(): void {
    this.frame.hidden = true;
    this.fallback.hidden = false;
    this.fallback.textContent = this.pendingXml ?? "(no diagram yet)";
  }
}
