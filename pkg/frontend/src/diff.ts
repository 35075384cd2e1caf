// Sentence-level diff between the draft and a morphed rewrite. A sentence
// counts as changed only when its normalized text differs, so masking-safe
// whitespace shuffles never light up the view.

export interface DiffSpan {
  text: string;
  changed: boolean;
}

export function splitSentences(text: string): string[] {
  const out: string[] = [];
  let current = "";
  for (const ch of text) {
    current += ch;
    if (ch === "." || ch === "!" || ch === "?") {
      out.push(current);
      current = "";
    }
  }
  if (current.trim().length > 0) out.push(current);
  return out.map((s) => s.trim()).filter((s) => s.length > 0);
}

export function normalizeSentence(s: string): string {
  return s.replace(/\s+/g, " ").trim().toLowerCase();
}

// Pair sentences positionally; a length mismatch marks the tail as changed.
export function diffSentences(original: string, morphed: string): DiffSpan[] {
  const a = splitSentences(original).map(normalizeSentence);
  const b = splitSentences(morphed);
  return b.map((sentence, i) => ({
    text: sentence,
    changed: i >= a.length || normalizeSentence(sentence) !== a[i],
  }));
}
