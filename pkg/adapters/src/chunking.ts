/**
 * Lexicon-driven noun-chunk extraction, ported from the Python gateway
 * stub so both sides chunk fixture captions identically. The lexicon JSON
 * files are shared with the Python package (VIDEOGROUND_DATA_DIR
 * overrides their location); spans are byte offsets into the UTF-8
 * caption.
 */
import { readFileSync } from 'fs';
import * as path from 'path';

const CORE_RE = /[0-9A-Za-z][0-9A-Za-z'\-]*/;

export interface Lexicon {
  nouns: Set<string>;
  adjectives: Set<string>;
  determiners: Set<string>;
  possessives: Set<string>;
  abstract: Set<string>;
}

export interface WireChunk {
  text: string;
  start: number;
  end: number;
  chunk_id: number;
}

function dataDir(): string {
  return (
    process.env.VIDEOGROUND_DATA_DIR ||
    path.resolve(__dirname, '..', '..', 'src', 'videoground', 'gateway', 'data')
  );
}

let cachedLexicon: Lexicon | null = null;

export function defaultLexicon(): Lexicon {
  if (cachedLexicon) return cachedLexicon;
  const lex = JSON.parse(readFileSync(path.join(dataDir(), 'noun_lexicon.json'), 'utf8'));
  const abstract = JSON.parse(readFileSync(path.join(dataDir(), 'abstract_nouns.json'), 'utf8'));
  cachedLexicon = {
    nouns: new Set(lex.nouns),
    adjectives: new Set(lex.adjectives),
    determiners: new Set(lex.determiners),
    possessives: new Set(lex.possessives),
    abstract: new Set(abstract),
  };
  return cachedLexicon;
}

function isModifier(word: string, lex: Lexicon): boolean {
  return lex.adjectives.has(word) || lex.determiners.has(word) || lex.possessives.has(word);
}

interface Token {
  raw: string;
  start: number; // char offset of the raw token
  core: string; // alphanumeric core, lowercased for lookups
  coreStart: number;
  coreEnd: number;
}

function cleanTail(tok: Token): boolean {
  // True when nothing (e.g. a comma) trails the core.
  return tok.start + tok.raw.length === tok.coreEnd;
}

function tokenize(caption: string): Token[] {
  const out: Token[] = [];
  const wordRe = /\S+/g;
  let m: RegExpExecArray | null;
  while ((m = wordRe.exec(caption)) !== null) {
    const coreMatch = CORE_RE.exec(m[0]);
    if (coreMatch === null) continue; // pure punctuation, never part of a chunk
    out.push({
      raw: m[0],
      start: m.index,
      core: coreMatch[0].toLowerCase(),
      coreStart: m.index + coreMatch.index,
      coreEnd: m.index + coreMatch.index + coreMatch[0].length,
    });
  }
  return out;
}

/** Match a word against a vocab set, tolerating plain plural forms. */
function lemma(word: string, vocab: Set<string>): string | null {
  if (vocab.has(word)) return word;
  if (word.endsWith('es') && vocab.has(word.slice(0, -2))) return word.slice(0, -2);
  if (word.endsWith('s') && vocab.has(word.slice(0, -1))) return word.slice(0, -1);
  return null;
}

function byteLength(s: string): number {
  return Buffer.byteLength(s, 'utf8');
}

/**
 * Extract concrete noun chunks in span order, already in wire shape
 * (byte-offset start/end, 1-based chunk_id).
 */
export function extractChunks(caption: string, lexicon?: Lexicon): WireChunk[] {
  const lex = lexicon ?? defaultLexicon();
  const tokens = tokenize(caption);
  const consumed: boolean[] = new Array(tokens.length).fill(false);
  const found: Array<[number, number]> = []; // (char_start, char_end) of kept chunks

  for (let j = 0; j < tokens.length; j++) {
    if (consumed[j]) continue;
    const tok = tokens[j];
    const isAbstract = lemma(tok.core, lex.abstract) !== null;
    if (!isAbstract && lemma(tok.core, lex.nouns) === null) continue;
    // Extend left over adjacent modifiers (a/the/her/red/golden/...).
    let first = j;
    while (first > 0) {
      const prev = tokens[first - 1];
      if (consumed[first - 1] || !isModifier(prev.core, lex) || !cleanTail(prev)) break;
      first -= 1;
    }
    for (let k = first; k <= j; k++) consumed[k] = true;
    if (!isAbstract) found.push([tokens[first].coreStart, tok.coreEnd]);
  }

  return found.map(([cstart, cend], i) => {
    const text = caption.slice(cstart, cend);
    const bstart = byteLength(caption.slice(0, cstart));
    return { text, start: bstart, end: bstart + byteLength(text), chunk_id: i + 1 };
  });
}

/** Normalize a phrase for detection-style lookups: "A girl" -> "girl". */
export function stripLeadingDeterminers(phrase: string, lexicon?: Lexicon): string {
  const lex = lexicon ?? defaultLexicon();
  let words = phrase.toLowerCase().split(/\s+/).filter((w) => w.length > 0);
  while (words.length > 0 && (lex.determiners.has(words[0]) || lex.possessives.has(words[0]))) {
    words = words.slice(1);
  }
  return words.join(' ');
}
