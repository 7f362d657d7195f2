// Deterministic sentence embedding: hashed character-trigram counts over
// lowercased, '#'-padded words (64-bit FNV-1a into 1024 bins), L2-normalized.
// Texts without any word byte map to the first basis vector so every
// response vector has unit norm.

export const EMBED_MODEL_ID = "trigram-fnv1a-1024-v1";
export const EMBED_DIM = 1024;

const FNV_OFFSET = 14695981039346656037n;
const FNV_PRIME = 1099511628211n;
const MASK64 = (1n << 64n) - 1n;
const PAD = 0x23; // '#'

function isWordByte(b: number): boolean {
  return (b >= 0x61 && b <= 0x7a) || (b >= 0x30 && b <= 0x39) || b === 0x5f || b >= 0x80;
}

function fnv1a3(b0: number, b1: number, b2: number): number {
  let h = FNV_OFFSET;
  h = ((h ^ BigInt(b0)) * FNV_PRIME) & MASK64;
  h = ((h ^ BigInt(b1)) * FNV_PRIME) & MASK64;
  h = ((h ^ BigInt(b2)) * FNV_PRIME) & MASK64;
  return Number(h & BigInt(EMBED_DIM - 1));
}

export function trigramCounts(text: string): number[] {
  const counts = new Array<number>(EMBED_DIM).fill(0);
  const data = Buffer.from(text.toLowerCase(), "utf8");
  let i = 0;
  while (i < data.length) {
    if (!isWordByte(data[i])) {
      i += 1;
      continue;
    }
    let j = i;
    while (j < data.length && isWordByte(data[j])) j += 1;
    let prev2 = -1;
    let prev1 = PAD;
    for (let k = i; k < j; k += 1) {
      const cur = data[k];
      if (prev2 >= 0) counts[fnv1a3(prev2, prev1, cur)] += 1;
      prev2 = prev1;
      prev1 = cur;
    }
    counts[fnv1a3(prev2, prev1, PAD)] += 1;
    i = j;
  }
  return counts;
}

export function embedText(text: string): number[] {
  const counts = trigramCounts(text);
  let normSq = 0;
  for (const c of counts) normSq += c * c;
  if (normSq === 0) {
    const basis = new Array<number>(EMBED_DIM).fill(0);
    basis[0] = 1;
    return basis;
  }
  const norm = Math.sqrt(normSq);
  return counts.map((c) => c / norm);
}

export function embedBatch(texts: string[]): number[][] {
  return texts.map(embedText);
}
