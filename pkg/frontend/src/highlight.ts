// Lexical tag/attribute coloring for the streaming text box. Presentation
// only; no parsing happens here.

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function highlightXml(text: string): string {
  return escapeHtml(text)
    .replace(/(&lt;\/?)([\w.:-]+)/g, '$1<span class="hl-tag">$2</span>')
    .replace(
      /([\w.:-]+)=(&quot;[^&]*?&quot;)/g,
      '<span class="hl-attr">$1</span>=<span class="hl-val">$2</span>',
    );
}
