/**
 * Deterministic randomness derivation, byte-compatible with the Python
 * package. Key parts are stringified, joined with the unit separator,
 * hashed with SHA-256 and mapped to 64-bit integers or unit floats, so
 * both languages draw identical values for identical keys.
 */
import { createHash } from 'crypto';

const SEP = '\x1f';

export type KeyPart = string | number | bigint;

function stringify(part: KeyPart): string {
  // Must match Python's str() for the part types we use: strings pass
  // through, integers print without separators or exponent.
  if (typeof part === 'number') {
    if (!Number.isInteger(part)) {
      throw new Error(`non-integer numeric key part: ${part}`);
    }
    return part.toString();
  }
  return part.toString();
}

function digest(parts: KeyPart[]): Buffer {
  const joined = parts.map(stringify).join(SEP);
  return createHash('sha256').update(joined, 'utf8').digest();
}

/** Collapse key parts to a uniform unsigned 64-bit integer. */
export function stableU64(...parts: KeyPart[]): bigint {
  return digest(parts).readBigUInt64BE(0);
}

/** Deterministic draw in [0, 1) keyed by the parts (counter-free). */
export function unitDraw(...parts: KeyPart[]): number {
  return Number(stableU64(...parts)) / 2 ** 64;
}

/** Derive a child seed (63 bits, non-negative). */
export function deriveSeed(...parts: KeyPart[]): bigint {
  return stableU64(...parts) >> 1n;
}

/** Deterministic byte stream of length n, counter-extended SHA-256. */
export function hashBytes(n: number, ...parts: KeyPart[]): Buffer {
  if (n < 0) throw new Error('n must be >= 0');
  const chunks: Buffer[] = [];
  let total = 0;
  let counter = 0;
  while (total < n) {
    const c = digest([...parts, counter]);
    chunks.push(c);
    total += c.length;
    counter += 1;
  }
  return Buffer.concat(chunks).subarray(0, n);
}

/**
 * Expand key parts into an L2-normalized vector: each counter digest
 * yields four big-endian 64-bit lanes mapped affinely onto [-1, 1).
 */
export function hashUnitVector(dim: number, ...parts: KeyPart[]): number[] {
  if (dim < 1) throw new Error(`dim must be >= 1, got ${dim}`);
  const vals: number[] = [];
  let counter = 0;
  while (vals.length < dim) {
    const d = digest([...parts, counter]);
    for (let i = 0; i < 32; i += 8) {
      const u = d.readBigUInt64BE(i);
      vals.push(Number(u) / 2 ** 63 - 1.0);
    }
    counter += 1;
  }
  const vec = vals.slice(0, dim);
  let norm = Math.sqrt(vec.reduce((s, v) => s + v * v, 0));
  if (norm === 0) {
    vec.fill(0);
    vec[0] = 1.0;
    norm = 1.0;
  }
  return vec.map((v) => v / norm);
}
