import { describe, expect, it } from 'vitest';

import { deriveSeed, hashBytes, hashUnitVector, stableU64, unitDraw } from '../src/seeding';

// Frozen from the Python implementation; both sides must derive the exact
// same values or cross-language corpus runs diverge silently.
const HUV4 = [0.40382163546059074, -0.27977118540263707, -0.4513043077173864, 0.744970195637428];
const HUV16 = [
  -0.3021167147656384, -0.18027149813280188, -0.1381535125790498, -0.2982919614868345,
  0.025778231948362235, 0.36088303423477086, -0.29889946393083694, -0.10202306130574176,
  0.2996800366329915, -0.3339851811071667, 0.2548204755203307, 0.3667138024787968,
  0.2105268802610637, -0.0912903509957695, 0.2889124583654148, 0.024897725856531192,
];

describe('cross-language parity', () => {
  it('stableU64 matches the reference value', () => {
    expect(stableU64(0, 'dino', 'x')).toBe(0xf06e0875759c6cb2n);
  });

  it('unitDraw matches the reference value exactly', () => {
    expect(unitDraw(7, 'drop', 'vid-3', 2, 'box')).toBe(0.5315102180429606);
  });

  it('deriveSeed matches the reference value', () => {
    expect(deriveSeed(0, 'case-001', 3)).toBe(4883379040966429485n);
  });

  it('hashBytes matches the reference hex', () => {
    expect(hashBytes(8, 'image', 'gen', 1).toString('hex')).toBe('7bb49b4530619238');
  });

  it('hashUnitVector matches the reference vectors exactly', () => {
    const got4 = hashUnitVector(4, 0, 'dino', 'x');
    expect(got4).toHaveLength(4);
    got4.forEach((v, i) => expect(v).toBe(HUV4[i]));

    const got16 = hashUnitVector(16, 0, 'dino', 'frames/anno01/3.png');
    got16.forEach((v, i) => expect(v).toBe(HUV16[i]));
  });
});

describe('stableU64 / unitDraw', () => {
  it('is deterministic and key-sensitive', () => {
    expect(stableU64('a', 'b')).toBe(stableU64('a', 'b'));
    expect(stableU64('a', 'b')).not.toBe(stableU64('a', 'c'));
    expect(stableU64('a', 'b')).not.toBe(stableU64('ab'));
  });

  it('unitDraw stays in [0, 1)', () => {
    for (let i = 0; i < 200; i++) {
      const u = unitDraw('range-check', i);
      expect(u).toBeGreaterThanOrEqual(0);
      expect(u).toBeLessThan(1);
    }
  });

  it('deriveSeed is non-negative and fits 63 bits', () => {
    for (let i = 0; i < 50; i++) {
      const s = deriveSeed('seed-check', i);
      expect(s >= 0n).toBe(true);
      expect(s < 1n << 63n).toBe(true);
    }
  });

  it('rejects non-integer numeric key parts', () => {
    expect(() => unitDraw(0.5, 'x')).toThrow(/non-integer/);
  });
});

describe('hashBytes', () => {
  it('produces the requested length', () => {
    expect(hashBytes(0, 'k')).toHaveLength(0);
    expect(hashBytes(7, 'k')).toHaveLength(7);
    expect(hashBytes(32, 'k')).toHaveLength(32);
    expect(hashBytes(33, 'k')).toHaveLength(33);
  });

  it('shorter streams are prefixes of longer ones', () => {
    const long = hashBytes(80, 'prefix', 'check');
    expect(hashBytes(8, 'prefix', 'check').equals(long.subarray(0, 8))).toBe(true);
    expect(hashBytes(40, 'prefix', 'check').equals(long.subarray(0, 40))).toBe(true);
  });

  it('rejects negative lengths', () => {
    expect(() => hashBytes(-1, 'k')).toThrow(/>= 0/);
  });
});

describe('hashUnitVector', () => {
  it('is L2-normalized for many dims', () => {
    for (const dim of [1, 2, 3, 4, 5, 16, 33]) {
      const v = hashUnitVector(dim, 'norm', dim);
      const norm = Math.sqrt(v.reduce((s, x) => s + x * x, 0));
      expect(Math.abs(norm - 1)).toBeLessThan(1e-12);
    }
  });

  it('rejects dim < 1', () => {
    expect(() => hashUnitVector(0, 'x')).toThrow(/dim must be >= 1/);
  });
});
