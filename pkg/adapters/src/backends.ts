/**
 * Deterministic reference backends, one per service.
 *
 * A production deployment swaps these for real model wrappers; the
 * reference set exists so the service can run, be health-checked, and be
 * conformance-tested end to end with no model weights. Every output is a
 * pure function of (config.seed, request), and the embedding, chunking
 * and tracking backends reproduce the Python stub gateway bit for bit.
 */
import { AdapterConfig, ServiceName } from './config';
import { extractChunks } from './chunking';
import { hashUnitVector, stableU64, unitDraw } from './seeding';

export const EMBED_DIM = 16;
const MAX_CAPTION_TOKENS = 16;

export class BackendError extends Error {}

export type Handler = (payload: any) => unknown;

interface WireFrame {
  index: number;
  uri: string;
  width: number;
  height: number;
}

interface WireBox {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  confidence: number;
}

// ---------------------------------------------------------------------------
// Bigram language model (same table as the Python stub's default)
// ---------------------------------------------------------------------------

const EOS = '<eos>';

const START: Record<string, number> = { a: 0.6, the: 0.4 };

const TRANSITIONS: Record<string, Record<string, number>> = {
  a: { brown: 0.5, small: 0.3, fluffy: 0.2 },
  the: { green: 0.5, quiet: 0.5 },
  brown: { dog: 1.0 },
  small: { dog: 0.6, cat: 0.4 },
  fluffy: { cat: 1.0 },
  green: { park: 1.0 },
  quiet: { garden: 1.0 },
  dog: { running: 0.7, sitting: 0.3 },
  cat: { sleeping: 1.0 },
  running: { on: 1.0 },
  sitting: { on: 1.0 },
  sleeping: { on: 1.0 },
  on: { grass: 0.5, sand: 0.5 },
  grass: { under: 0.6, '<eos>': 0.4 },
  sand: { '<eos>': 1.0 },
  under: { sunlight: 1.0 },
  sunlight: { '<eos>': 1.0 },
  park: { '<eos>': 1.0 },
  garden: { '<eos>': 1.0 },
};

function buildVocab(): string[] {
  const tokens = new Set<string>([EOS, ...Object.keys(START)]);
  for (const [tok, row] of Object.entries(TRANSITIONS)) {
    tokens.add(tok);
    for (const next of Object.keys(row)) tokens.add(next);
  }
  return [...tokens].sort();
}

const VOCAB = buildVocab();
const TOKEN_IDS = new Map(VOCAB.map((t, i) => [t, i]));
const EOS_ID = TOKEN_IDS.get(EOS)!;

function nextRow(prefix: number[]): Record<string, number> {
  if (prefix.length === 0) return START;
  const lastId = prefix[prefix.length - 1];
  if (lastId < 0 || lastId >= VOCAB.length) {
    throw new BackendError(`token id ${lastId} outside vocabulary of size ${VOCAB.length}`);
  }
  const last = VOCAB[lastId];
  if (last === EOS || !(last in TRANSITIONS)) return { [EOS]: 1.0 };
  return TRANSITIONS[last];
}

/** Pick one token from a row using a single unit draw (CDF scan in sorted-token order). */
function drawToken(row: Record<string, number>, u: number): string {
  const entries = Object.entries(row).sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0));
  let acc = 0;
  for (const [tok, p] of entries) {
    acc += p;
    if (u < acc) return tok;
  }
  return entries[entries.length - 1][0];
}

// ---------------------------------------------------------------------------
// Handlers
// ---------------------------------------------------------------------------

export function buildBackends(config: AdapterConfig): Record<ServiceName, Handler> {
  const seed = config.seed;

  const caption: Handler = (payload: { frame: WireFrame }) => {
    // Walk the bigram table, one keyed draw per step, until eos.
    const uri = payload.frame.uri;
    const words: string[] = [];
    let row = START;
    for (let step = 0; step < MAX_CAPTION_TOKENS; step++) {
      const tok = drawToken(row, unitDraw(seed, 'caption', uri, step));
      if (tok === EOS) break;
      words.push(tok);
      row = nextRow([TOKEN_IDS.get(tok)!]);
    }
    return { caption: words.join(' ') };
  };

  const nounChunks: Handler = (payload: { caption: string }) => {
    return { chunks: extractChunks(payload.caption) };
  };

  const detect: Handler = (payload: { frame: WireFrame; phrase: string }) => {
    const { uri } = payload.frame;
    const phrase = payload.phrase;
    const count = 1 + Number(stableU64(seed, 'detect', uri, phrase, 'count') % 2n);
    const boxes: WireBox[] = [];
    for (let i = 0; i < count; i++) {
      const x1 = Number(stableU64(seed, 'detect', uri, phrase, i, 'x1') % 900n);
      const y1 = Number(stableU64(seed, 'detect', uri, phrase, i, 'y1') % 900n);
      const x2 = x1 + 1 + Number(stableU64(seed, 'detect', uri, phrase, i, 'x2') % BigInt(999 - x1));
      const y2 = y1 + 1 + Number(stableU64(seed, 'detect', uri, phrase, i, 'y2') % BigInt(999 - y1));
      const confidence = 0.5 + unitDraw(seed, 'detect', uri, phrase, i, 'conf') / 2;
      boxes.push({ x1, y1, x2, y2, confidence });
    }
    boxes.sort((a, b) => b.confidence - a.confidence);
    return { detections: boxes };
  };

  const track: Handler = (payload: {
    video: { video_id: string; frames: WireFrame[] };
    chunk: { chunk_id: number };
    init: { frame_index: number; box: WireBox };
  }) => {
    const { video, chunk, init } = payload;
    const frameCount = video.frames.length;
    if (init.frame_index < 1 || init.frame_index > frameCount) {
      throw new BackendError(
        `init frame ${init.frame_index} outside video ${JSON.stringify(video.video_id)} (1..${frameCount})`
      );
    }
    const entries = [];
    for (let idx = init.frame_index; idx <= frameCount; idx++) {
      entries.push({
        frame_index: idx,
        box: init.box,
        segment_uri: `${video.video_id}/${chunk.chunk_id}/${idx}.png`,
      });
    }
    return { entries, lost_frames: [] };
  };

  const ocr: Handler = () => ({ ratio: 0.0 });

  const motion: Handler = (payload: { frame_a: WireFrame; frame_b: WireFrame }) => {
    // Symmetric in the two frames, like a real difference metric.
    const [lo, hi] = [payload.frame_a.uri, payload.frame_b.uri].sort();
    return { score: unitDraw(seed, 'motion', lo, hi) };
  };

  const aesthetic: Handler = (payload: { frame: WireFrame }) => {
    return { score: 10 * unitDraw(seed, 'aesthetic', payload.frame.uri) };
  };

  const embed: Handler = (payload: { payload: string; space: string }) => {
    return { vector: hashUnitVector(EMBED_DIM, seed, payload.space, payload.payload) };
  };

  const perceptual: Handler = (payload: { a_uri: string; b_uri: string }) => {
    if (payload.a_uri === payload.b_uri) return { distance: 0.0 };
    const [lo, hi] = [payload.a_uri, payload.b_uri].sort();
    return { distance: unitDraw(seed, 'perceptual', lo, hi) };
  };

  const lm: Handler = (payload: { prefix: number[]; conditioning: string }) => {
    const row = nextRow(payload.prefix);
    const probs = new Array(VOCAB.length).fill(0.0);
    for (const [tok, p] of Object.entries(row)) probs[TOKEN_IDS.get(tok)!] = p;
    return {
      probs,
      vocab_ids: VOCAB.map((_, i) => i),
      tokens: [...VOCAB],
      eos_id: EOS_ID,
    };
  };

  return {
    caption,
    noun_chunks: nounChunks,
    detect,
    track,
    ocr,
    motion,
    aesthetic,
    embed,
    perceptual,
    lm,
  };
}
