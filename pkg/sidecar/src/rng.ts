/**
 * Seeded randomness matching the workbench's generator bit-for-bit:
 * splitmix64 streams, FNV-1a string hashing, and rejection-sampled
 * bounded draws. All arithmetic is 64-bit via BigInt.
 */

const MASK64 = (1n << 64n) - 1n;
const FNV_OFFSET = 0xcbf29ce484222325n;
const FNV_PRIME = 0x100000001b3n;

export function fnv1a64(text: string): bigint {
  let h = FNV_OFFSET;
  for (const byte of Buffer.from(text, "utf8")) {
    h ^= BigInt(byte);
    h = (h * FNV_PRIME) & MASK64;
  }
  return h;
}

export class SplitMix64 {
  private state: bigint;

  constructor(seed: bigint) {
    this.state = seed & MASK64;
  }

  nextU64(): bigint {
    this.state = (this.state + 0x9e3779b97f4a7c15n) & MASK64;
    let z = this.state;
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
    return (z ^ (z >> 31n)) & MASK64;
  }

  /** Uniform integer in [0, n), exact (rejection sampling). */
  randBelow(n: number): number {
    if (n <= 0) {
      throw new Error("randBelow needs n >= 1");
    }
    const big = BigInt(n);
    const limit = (1n << 64n) - ((1n << 64n) % big);
    for (;;) {
      const r = this.nextU64();
      if (r < limit) {
        return Number(r % big);
      }
    }
  }
}

export function maskU64(value: bigint): bigint {
  return BigInt.asUintN(64, value);
}

export { MASK64 };
