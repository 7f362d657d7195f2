// Frozen lexical resources for tagging and lemmatization. Versioned with
// the service; bump LEXICON_VERSION when editing.

export const LEXICON_VERSION = "1";

export const VERB_LEMMAS = new Set(
  `add aggregate align analyze append apply assign attach build calculate call
   change check clean combine compare compute concatenate construct convert copy
   count create decode delete describe detect display downcast draw drop dump
   encode estimate evaluate explore export extract fill filter find fit flatten
   generate get give group handle impute include insert inspect join keep learn
   load look make map merge normalize obtain optimize persist pick plot
   predict prepare preprocess print process read reduce remove rename replace
   resample resize return run save scale score search select set show shuffle
   sort split stack standardize start store submit sum summarize test tokenize
   train transform try tune update use validate visualize write`.split(/\s+/).filter(Boolean),
);

export const DETERMINERS = new Set(["a", "an", "the", "this", "that", "these", "those", "each", "every", "some", "any", "no"]);

export const PREPOSITIONS = new Set([
  "of", "in", "on", "with", "for", "to", "from", "by", "into", "onto", "over",
  "under", "between", "through", "along", "across", "against", "at", "as",
  "within", "without", "about", "after", "before", "during", "via",
]);

export const PRONOUNS = new Set([
  "i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us", "them",
  "my", "your", "his", "its", "our", "their", "mine", "yours",
]);

export const CONJUNCTIONS = new Set(["and", "or", "but", "nor", "so", "yet"]);

export const AUXILIARIES = new Set([
  "is", "are", "was", "were", "be", "been", "being", "am", "do", "does", "did",
  "has", "have", "had", "will", "would", "can", "could", "shall", "should",
  "may", "might", "must",
]);

export const ADJECTIVES = new Set([
  "new", "final", "first", "last", "best", "specified", "arbitrary", "exhaustive",
  "random", "numerical", "categorical", "missing", "mean", "evenly", "spaced",
  "descriptive", "iterative", "cross", "trained", "simple", "different",
]);

const DOUBLED = new Set("bdgklmnprt".split(""));

// Reduce an inflected verb to a candidate lemma: -s/-es, -ed, -ing with
// doubled-consonant repair (fitting -> fit, dropped -> drop).
export function stripVerbSuffix(token: string): string {
  const w = token.toLowerCase();
  for (const suffix of ["ing", "ed"]) {
    if (w.endsWith(suffix) && w.length > suffix.length + 1) {
      let stem = w.slice(0, -suffix.length);
      if (stem.length >= 3 && stem[stem.length - 1] === stem[stem.length - 2] && DOUBLED.has(stem[stem.length - 1])) {
        stem = stem.slice(0, -1);
      }
      if (VERB_LEMMAS.has(stem)) return stem;
      if (VERB_LEMMAS.has(stem + "e")) return stem + "e";
    }
  }
  if (w.endsWith("es") && VERB_LEMMAS.has(w.slice(0, -2))) return w.slice(0, -2);
  if (w.endsWith("s") && !w.endsWith("ss") && VERB_LEMMAS.has(w.slice(0, -1))) return w.slice(0, -1);
  return w;
}

export function isVerbToken(token: string): boolean {
  return VERB_LEMMAS.has(stripVerbSuffix(token));
}
