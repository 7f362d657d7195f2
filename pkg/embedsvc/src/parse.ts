// Deterministic rule-lexicon dependency parsing. Heads are 1-based token
// indices across the whole text with 0 marking a sentence root, so every
// sentence span contains exactly one root and head chains never cycle:
// apart from the dedicated forward attachments (determiners, adjectives,
// compounds, subjects of a root verb), tokens attach backwards or to the
// sentence root.

import {
  ADJECTIVES,
  AUXILIARIES,
  CONJUNCTIONS,
  DETERMINERS,
  LEXICON_VERSION,
  PREPOSITIONS,
  PRONOUNS,
  isVerbToken,
  stripVerbSuffix,
} from "./lexicon.js";

export const PARSE_MODEL_ID = `rule-lexicon-v${LEXICON_VERSION}`;

export interface Parse {
  tokens: string[];
  lemmas: string[];
  pos: string[];
  heads: number[];
  deprels: string[];
}

const TOKEN_RE = /[A-Za-z0-9_]+|[^A-Za-z0-9_\s]/g;
const SENTENCE_END = new Set([".", "!", "?"]);

function tagToken(token: string): string {
  if (!/[A-Za-z0-9_]/.test(token)) return "PUNCT";
  if (/^[0-9]+([.][0-9]+)?$/.test(token)) return "NUM";
  const lower = token.toLowerCase();
  if (DETERMINERS.has(lower)) return "DET";
  if (PREPOSITIONS.has(lower)) return "ADP";
  if (PRONOUNS.has(lower)) return "PRON";
  if (CONJUNCTIONS.has(lower)) return "CCONJ";
  if (AUXILIARIES.has(lower)) return "AUX";
  if (isVerbToken(lower)) return "VERB";
  if (ADJECTIVES.has(lower) || lower.endsWith("ly")) return lower.endsWith("ly") ? "ADV" : "ADJ";
  return "NOUN";
}

function lemmaOf(token: string, pos: string): string {
  const lower = token.toLowerCase();
  if (pos === "VERB") return stripVerbSuffix(lower);
  if (pos === "NOUN" && lower.endsWith("s") && !lower.endsWith("ss") && lower.length > 3) {
    return lower.slice(0, -1);
  }
  return lower;
}

interface Tok {
  text: string;
  pos: string;
}

// Attach one sentence; indices are sentence-local 0-based, output heads are
// sentence-local 1-based with 0 for the root.
function attachSentence(toks: Tok[]): { heads: number[]; deprels: string[] } {
  const n = toks.length;
  const heads = new Array<number>(n).fill(0);
  const deprels = new Array<string>(n).fill("dep");

  const firstVerb = toks.findIndex((t) => t.pos === "VERB");
  const firstNoun = toks.findIndex((t) => t.pos === "NOUN" || t.pos === "PRON");
  let root: number;
  if (firstVerb >= 0 && (firstNoun < 0 || firstVerb < firstNoun)) {
    root = firstVerb;
  } else if (firstNoun >= 0) {
    root = firstNoun;
  } else {
    root = 0;
  }
  heads[root] = 0;
  deprels[root] = "root";

  const nextOf = (i: number, want: (t: Tok) => boolean): number => {
    for (let j = i + 1; j < n; j += 1) if (want(toks[j])) return j;
    return -1;
  };
  const prevOf = (i: number, want: (t: Tok) => boolean): number => {
    for (let j = i - 1; j >= 0; j -= 1) if (want(toks[j])) return j;
    return -1;
  };
  const attach = (i: number, head: number, rel: string) => {
    heads[i] = head + 1;
    deprels[i] = rel;
  };
  const attachRoot = (i: number, rel: string) => {
    if (i !== root) attach(i, root, rel);
  };

  // noun runs: consecutive NOUN tokens; leading members attach forward to
  // the run's last noun as compounds
  const runEnd = new Array<number>(n).fill(-1);
  for (let i = 0; i < n; i += 1) {
    if (toks[i].pos !== "NOUN") continue;
    let j = i;
    while (j + 1 < n && toks[j + 1].pos === "NOUN") j += 1;
    for (let k = i; k <= j; k += 1) runEnd[k] = j;
    i = j;
  }

  for (let i = 0; i < n; i += 1) {
    if (i === root) continue;
    const { pos } = toks[i];
    if (pos === "PUNCT") {
      attachRoot(i, "punct");
    } else if (pos === "DET") {
      const noun = nextOf(i, (t) => t.pos === "NOUN");
      noun >= 0 ? attach(i, noun, "det") : attachRoot(i, "dep");
    } else if (pos === "ADJ") {
      const noun = nextOf(i, (t) => t.pos === "NOUN");
      noun >= 0 ? attach(i, noun, "amod") : attachRoot(i, "dep");
    } else if (pos === "NUM") {
      const noun = nextOf(i, (t) => t.pos === "NOUN");
      noun >= 0 ? attach(i, noun, "nummod") : attachRoot(i, "dep");
    } else if (pos === "ADP") {
      const noun = nextOf(i, (t) => t.pos === "NOUN");
      noun >= 0 ? attach(i, noun, "case") : attachRoot(i, "dep");
    } else if (pos === "AUX") {
      const verb = nextOf(i, (t) => t.pos === "VERB");
      verb >= 0 ? attach(i, verb, "aux") : attachRoot(i, "dep");
    } else if (pos === "ADV") {
      const verb = prevOf(i, (t) => t.pos === "VERB");
      const fwd = nextOf(i, (t) => t.pos === "VERB");
      const target = verb >= 0 ? verb : fwd;
      target >= 0 ? attach(i, target, "advmod") : attachRoot(i, "dep");
    } else if (pos === "CCONJ") {
      const next = nextOf(i, (t) => t.pos === "NOUN" || t.pos === "VERB");
      next >= 0 ? attach(i, next, "cc") : attachRoot(i, "dep");
    } else if (pos === "VERB") {
      const prev = prevOf(i, (t) => t.pos === "NOUN" || t.pos === "VERB");
      prev >= 0 ? attach(i, prev, "acl") : attachRoot(i, "dep");
    } else if (pos === "PRON") {
      const verb = prevOf(i, (t) => t.pos === "VERB");
      verb >= 0 ? attach(i, verb, "obj") : attachRoot(i, "dep");
    } else if (pos === "NOUN") {
      if (runEnd[i] !== i) {
        attach(i, runEnd[i], "compound");
        continue;
      }
      const runStart = (() => {
        let k = i;
        while (k - 1 >= 0 && toks[k - 1].pos === "NOUN") k -= 1;
        return k;
      })();
      const prevContent = prevOf(runStart, (t) => t.pos === "NOUN" || t.pos === "VERB" || t.pos === "PUNCT");
      let sawAdp = false;
      for (let k = prevContent + 1; k < runStart; k += 1) {
        if (toks[k].pos === "ADP") sawAdp = true;
      }
      const prevVerb = prevOf(i, (t) => t.pos === "VERB");
      const prevNoun = prevOf(runStart, (t) => t.pos === "NOUN");
      if (sawAdp) {
        if (prevVerb >= 0) attach(i, prevVerb, "obl");
        else if (prevNoun >= 0) attach(i, prevNoun, "nmod");
        else attachRoot(i, "dep");
      } else if (toks[root].pos === "VERB" && i < root) {
        attach(i, root, "nsubj");
      } else if (prevVerb >= 0) {
        attach(i, prevVerb, "obj");
      } else if (prevNoun >= 0) {
        attach(i, prevNoun, "nmod");
      } else {
        attachRoot(i, "dep");
      }
    } else {
      attachRoot(i, "dep");
    }
  }
  return { heads, deprels };
}

export function parseText(text: string): Parse {
  const tokens = text.match(TOKEN_RE) ?? [];
  const pos = tokens.map(tagToken);
  const lemmas = tokens.map((t, i) => lemmaOf(t, pos[i]));
  const heads = new Array<number>(tokens.length).fill(0);
  const deprels = new Array<string>(tokens.length).fill("dep");

  // sentence spans: break after sentence-final punctuation
  let start = 0;
  for (let i = 0; i < tokens.length; i += 1) {
    const isEnd = pos[i] === "PUNCT" && SENTENCE_END.has(tokens[i]);
    const isLast = i === tokens.length - 1;
    if (!isEnd && !isLast) continue;
    const end = i + 1;
    const sentence = tokens.slice(start, end).map((t, k) => ({ text: t, pos: pos[start + k] }));
    if (sentence.length > 0) {
      const attached = attachSentence(sentence);
      for (let k = 0; k < sentence.length; k += 1) {
        heads[start + k] = attached.heads[k] === 0 ? 0 : attached.heads[k] + start;
        deprels[start + k] = attached.deprels[k];
      }
    }
    start = end;
  }
  return { tokens, lemmas, pos, heads, deprels };
}

export function parseBatch(texts: string[]): Parse[] {
  return texts.map(parseText);
}
